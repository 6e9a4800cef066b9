//! Measurements: recovered key bits and their significance, output
//! corruptibility, overheads, and the campaign driver that ties them to the
//! attack.

mod campaign;
pub mod generate;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{sim, Metrics, Netlist};
use crate::key::{Key, KeyError};
use crate::locking::LockedNetlist;
use crate::rng;

pub use campaign::{run_campaign, CampaignConfig, CellReport, ExperimentReport, RunRecord, REPORT_SCHEMA};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("recovered count {count} outside 0..={r}")]
    CountOutOfRange { count: usize, r: usize },
    #[error("baseline has zero {0}")]
    ZeroBaseline(&'static str),
    #[error("{0} inputs are too many for exhaustive evaluation")]
    TooManyInputs(usize),
    #[error(transparent)]
    Key(#[from] KeyError),
}

/// Number of bit positions where `guess` agrees with `truth`.
pub fn recovered_bits(guess: &Key, truth: &Key) -> Result<usize, EvalError> {
    Ok(truth.len() - guess.hamming(truth)?)
}

/// `P[X >= k]` for `X ~ Binomial(n, 1/2)`, exactly.
pub fn binomial_tail(n: u64, k: u64) -> BigRational {
    if k == 0 {
        return BigRational::one();
    }
    if k > n {
        return BigRational::zero();
    }
    let mut c = BigUint::one();
    let mut sum = BigUint::zero();
    for j in 0..=n {
        if j >= k {
            sum += &c;
        }
        c = c * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    let den = BigUint::one() << n;
    BigRational::new(sum.into(), den.into())
}

/// One-sided p-value of the observed recovered-bit counts under the null
/// that every key bit is guessed right with probability 1/2: the chance
/// that `Binomial(runs * r, 1/2)` reaches the observed total.
pub fn binomial_pvalue(observations: &[usize], r: usize) -> Result<f64, EvalError> {
    for &count in observations {
        if count > r {
            return Err(EvalError::CountOutOfRange { count, r });
        }
    }
    let total: u64 = observations.iter().map(|&c| c as u64).sum();
    let n = (observations.len() * r) as u64;
    Ok(binomial_tail(n, total).to_f64().unwrap_or(0.0).clamp(0.0, 1.0))
}

/// Monte Carlo budget for corruptibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub inputs: usize,
    pub keys: usize,
    /// Exhaustive evaluation is used when `2^n * 2^r` is at most this.
    pub exhaustive_limit: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            inputs: 4096,
            keys: 256,
            exhaustive_limit: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corruptibility {
    /// Mean fraction of input patterns on which some output is wrong.
    pub estimate: f64,
    pub std_error: f64,
    /// Mean fraction of output bits that are wrong.
    pub bit_fraction: f64,
    pub exhaustive: bool,
    pub keys: usize,
}

struct KeyedSim<'a> {
    locked: &'a LockedNetlist,
    slots: Vec<Option<usize>>,
    regular: usize,
}

impl<'a> KeyedSim<'a> {
    fn new(locked: &'a LockedNetlist) -> Self {
        KeyedSim {
            locked,
            slots: locked.key_slots(),
            regular: locked.regular_inputs().len(),
        }
    }

    /// Output words for 64 patterns of the regular inputs under `key`.
    fn run(&self, x: &[u64], key: &Key) -> Vec<u64> {
        let mut it = x.iter();
        let words: Vec<u64> = self
            .slots
            .iter()
            .map(|s| match s {
                Some(i) => {
                    if key.bit(*i) {
                        !0
                    } else {
                        0
                    }
                }
                None => *it.next().expect("one word per regular input"),
            })
            .collect();
        self.locked.netlist().simulate_words(&words)
    }

    /// (patterns with any output wrong, wrong output bits) over `x` under
    /// `mask`.
    fn diff(&self, x: &[u64], mask: u64, kstar: &Key, k: &Key) -> (u64, u64) {
        let a = self.run(x, kstar);
        let b = self.run(x, k);
        let mut any = 0u64;
        let mut bits = 0u64;
        for (p, q) in a.iter().zip(&b) {
            let d = (p ^ q) & mask;
            any |= d;
            bits += u64::from(d.count_ones());
        }
        (u64::from(any.count_ones()), bits)
    }

    /// Exact (any, bit) error fractions of key `k` over all inputs.
    fn exact(&self, kstar: &Key, k: &Key) -> (f64, f64) {
        let n = self.regular;
        let words = sim::words_for(n);
        let mut any = 0u64;
        let mut bits = 0u64;
        for w in 0..words {
            let x = sim::exhaustive_input_words(n, w);
            let mask = if w + 1 == words { sim::tail_mask(n) } else { !0 };
            let (a, b) = self.diff(&x, mask, kstar, k);
            any += a;
            bits += b;
        }
        let total = (1u64 << n) as f64;
        let outs = self.locked.netlist().outputs().len().max(1) as f64;
        (any as f64 / total, bits as f64 / (total * outs))
    }

    /// Sampled (any, bit) error fractions of key `k`.
    fn sampled<R: Rng>(&self, kstar: &Key, k: &Key, inputs: usize, g: &mut R) -> (f64, f64) {
        let words = inputs.div_ceil(64).max(1);
        let mut any = 0u64;
        let mut bits = 0u64;
        for _ in 0..words {
            let x: Vec<u64> = (0..self.regular).map(|_| g.gen()).collect();
            let (a, b) = self.diff(&x, !0, kstar, k);
            any += a;
            bits += b;
        }
        let total = (words * 64) as f64;
        let outs = self.locked.netlist().outputs().len().max(1) as f64;
        (any as f64 / total, bits as f64 / (total * outs))
    }
}

/// Fraction of input patterns on which `k` and `kstar` make some output
/// differ, over all inputs.
pub fn key_corruptibility(locked: &LockedNetlist, kstar: &Key, k: &Key) -> Result<f64, EvalError> {
    check_key(locked, kstar)?;
    check_key(locked, k)?;
    let sim = KeyedSim::new(locked);
    if sim.regular > sim::MAX_EXHAUSTIVE_INPUTS {
        return Err(EvalError::TooManyInputs(sim.regular));
    }
    Ok(sim.exact(kstar, k).0)
}

fn check_key(locked: &LockedNetlist, k: &Key) -> Result<(), EvalError> {
    if k.len() != locked.key_len() {
        return Err(KeyError::LengthMismatch {
            expected: locked.key_len(),
            got: k.len(),
        }
        .into());
    }
    Ok(())
}

/// Average corruptibility over incorrect keys. Exhaustive over keys and
/// inputs when the instance is small enough, sampled otherwise.
pub fn output_corruptibility(locked: &LockedNetlist, kstar: &Key, sampling: &Sampling, seed: u64) -> Result<Corruptibility, EvalError> {
    check_key(locked, kstar)?;
    let r = kstar.len();
    let sim = KeyedSim::new(locked);
    let n = sim.regular;
    let space = n.saturating_add(r);
    if space < 63 && (1u64 << space) <= sampling.exhaustive_limit {
        let mut any = 0.0;
        let mut bits = 0.0;
        let mut keys = 0;
        for k in Key::all(r).filter(|k| k != kstar) {
            let (a, b) = sim.exact(kstar, &k);
            any += a;
            bits += b;
            keys += 1;
        }
        return Ok(Corruptibility {
            estimate: any / keys as f64,
            std_error: 0.0,
            bit_fraction: bits / keys as f64,
            exhaustive: true,
            keys,
        });
    }
    sampled_corruptibility(&sim, kstar, sampling, seed)
}

/// Monte Carlo estimate, ignoring the exhaustive shortcut.
pub fn sampled_output_corruptibility(locked: &LockedNetlist, kstar: &Key, sampling: &Sampling, seed: u64) -> Result<Corruptibility, EvalError> {
    check_key(locked, kstar)?;
    sampled_corruptibility(&KeyedSim::new(locked), kstar, sampling, seed)
}

fn sampled_corruptibility(sim: &KeyedSim<'_>, kstar: &Key, sampling: &Sampling, seed: u64) -> Result<Corruptibility, EvalError> {
    let r = kstar.len();
    let mut g = rng::seeded(seed);
    let keys = sampling.keys.max(2);
    let exact_inputs = sim.regular <= sim::MAX_EXHAUSTIVE_INPUTS && (1usize << sim.regular) <= sampling.inputs;
    let mut fr = Vec::with_capacity(keys);
    let mut bits = 0.0;
    for _ in 0..keys {
        let k = loop {
            let k = Key::random(r, &mut g)?;
            if &k != kstar {
                break k;
            }
        };
        let (a, b) = if exact_inputs {
            sim.exact(kstar, &k)
        } else {
            sim.sampled(kstar, &k, sampling.inputs, &mut g)
        };
        fr.push(a);
        bits += b;
    }
    let m = fr.len() as f64;
    let mean = fr.iter().sum::<f64>() / m;
    let var = fr.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(Corruptibility {
        estimate: mean,
        std_error: (var / m).sqrt(),
        bit_fraction: bits / m,
        exhaustive: false,
        keys,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overhead {
    pub area: f64,
    pub depth: f64,
    pub locked: Metrics,
    pub baseline: Metrics,
}

/// Area and depth of `locked` relative to `baseline`.
pub fn overhead(locked: &Netlist, baseline: &Netlist) -> Result<Overhead, EvalError> {
    let l = locked.metrics();
    let b = baseline.metrics();
    if b.area == 0 {
        return Err(EvalError::ZeroBaseline("area"));
    }
    if b.depth == 0 {
        return Err(EvalError::ZeroBaseline("depth"));
    }
    Ok(Overhead {
        area: l.area as f64 / b.area as f64,
        depth: l.depth as f64 / b.depth as f64,
        locked: l,
        baseline: b,
    })
}
