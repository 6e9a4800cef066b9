//! Exhaustive bit-parallel simulation helpers.

use super::{Netlist, NetlistError};

/// Largest input count accepted by exhaustive enumeration.
pub const MAX_EXHAUSTIVE_INPUTS: usize = 24;

const LOW_MASKS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Input words for minterms `64*word .. 64*word + 63` of an `n`-input
/// function. Input `i` takes bit `i` of the minterm index.
pub fn exhaustive_input_words(n: usize, word: usize) -> Vec<u64> {
    (0..n)
        .map(|i| {
            if i < 6 {
                LOW_MASKS[i]
            } else if (word >> (i - 6)) & 1 == 1 {
                !0
            } else {
                0
            }
        })
        .collect()
}

/// Number of 64-bit words covering all minterms of an `n`-input function.
pub fn words_for(n: usize) -> usize {
    if n <= 6 {
        1
    } else {
        1 << (n - 6)
    }
}

/// Mask of meaningful bits in the single word used when `n < 6`.
pub fn tail_mask(n: usize) -> u64 {
    if n >= 6 {
        !0
    } else {
        (1u64 << (1 << n)) - 1
    }
}

/// Truth table of a single-output function; minterm `m` sets bit `i` of
/// the input vector from bit `i` of `m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    num_vars: usize,
    words: Vec<u64>,
}

impl TruthTable {
    pub fn from_words(num_vars: usize, mut words: Vec<u64>) -> Self {
        assert_eq!(words.len(), words_for(num_vars));
        if num_vars < 6 {
            words[0] &= tail_mask(num_vars);
        }
        Self { num_vars, words }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, minterm: usize) -> bool {
        (self.words[minterm / 64] >> (minterm % 64)) & 1 == 1
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }
}

pub(super) fn truth_tables(n: &Netlist) -> Result<Vec<TruthTable>, NetlistError> {
    let vars = n.num_inputs();
    if vars > MAX_EXHAUSTIVE_INPUTS {
        return Err(NetlistError::TooManyInputs(vars));
    }
    let words = words_for(vars);
    let mut tables = vec![Vec::with_capacity(words); n.outputs().len()];
    for w in 0..words {
        let out = n.simulate_words(&exhaustive_input_words(vars, w));
        for (t, v) in tables.iter_mut().zip(out) {
            t.push(v);
        }
    }
    Ok(tables
        .into_iter()
        .map(|t| TruthTable::from_words(vars, t))
        .collect())
}

/// Exhaustive functional equivalence. Inputs are matched by name and
/// outputs by position.
pub fn equivalent(a: &Netlist, b: &Netlist) -> Result<bool, NetlistError> {
    if a.outputs().len() != b.outputs().len() || a.num_inputs() != b.num_inputs() {
        return Ok(false);
    }
    let vars = a.num_inputs();
    if vars > MAX_EXHAUSTIVE_INPUTS {
        return Err(NetlistError::TooManyInputs(vars));
    }
    let mut perm = Vec::with_capacity(vars);
    for name in b.input_names() {
        let id = a
            .id_of(name)
            .filter(|id| a.node(*id).is_input())
            .ok_or_else(|| NetlistError::UnknownInput(name.to_string()))?;
        perm.push(id.index());
    }
    let mask = tail_mask(vars);
    for w in 0..words_for(vars) {
        let xa = exhaustive_input_words(vars, w);
        let xb: Vec<u64> = perm.iter().map(|&i| xa[i]).collect();
        let oa = a.simulate_words(&xa);
        let ob = b.simulate_words(&xb);
        if oa.iter().zip(&ob).any(|(p, q)| (p ^ q) & mask != 0) {
            return Ok(false);
        }
    }
    Ok(true)
}
