//! Desynthesis attack: greedy local search over keys, scoring each guess by
//! how far the resynthesized unlocked function is from the locked netlist.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{GateHistogram, GateKind, Netlist, NetlistBuilder, NetlistError, NodeId};
use crate::key::{Key, KeyError};
use crate::locking::{KeyGate, LockedNetlist};
use crate::rng;
use crate::synth::{synthesized_histogram, SynthConfig, SynthError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttackError {
    #[error("restarts must be at least 1")]
    NoRestarts,
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// `Σ_g (h1[g] - h2[g])²` over all gate kinds.
pub fn dissimilarity(h1: &GateHistogram, h2: &GateHistogram) -> u64 {
    GateKind::ALL
        .iter()
        .map(|&g| {
            let d = h1.get(g).abs_diff(h2.get(g)) as u64;
            d * d
        })
        .sum()
}

/// How the locked netlist is compared against a resynthesized candidate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewMode {
    /// Each key gate is resolved under the guessed key: an inverting
    /// resolution leaves an INV, the other leaves a wire.
    #[default]
    Resolved,
    /// Key gates are removed and their data input reconnected, whatever
    /// the guess.
    Stripped,
}

/// The locked netlist with key gates removed. With `key`, gates that
/// invert under it become INVs; without, every key gate becomes a wire.
/// An output driven by a key gate that becomes a wire keeps its name on a BUF.
pub fn strip_key_gates(locked: &LockedNetlist, key: Option<&Key>) -> Result<Netlist, AttackError> {
    if let Some(k) = key {
        check_len(locked, k)?;
    }
    let n = locked.netlist();
    let gates = locked.key_gates();
    let mut resolve: Vec<Option<(NodeId, bool)>> = vec![None; n.len()];
    for g in &gates {
        let invert = key.is_some_and(|k| k.bit(g.bit) == g.inverts_on_one);
        resolve[g.gate.index()] = Some((g.data, invert));
    }
    let slots = locked.key_slots();
    let mut is_output = vec![false; n.len()];
    for o in n.outputs() {
        is_output[o.index()] = true;
    }

    let mut b = NetlistBuilder::new();
    let mut map: Vec<Option<NodeId>> = vec![None; n.len()];
    for id in n.inputs() {
        if slots[id.index()].is_none() {
            map[id.index()] = Some(b.add_input(n.name(id))?);
        }
    }
    for id in n.gate_ids() {
        let name = n.name(id);
        let new = match resolve[id.index()] {
            Some((data, invert)) => {
                let d = map[data.index()].expect("data precedes key gate");
                if invert {
                    b.add_gate(GateKind::Inv, &[d], name)?
                } else if is_output[id.index()] {
                    b.add_gate(GateKind::Buf, &[d], name)?
                } else {
                    d
                }
            }
            None => {
                let node = n.node(id);
                let kind = node.gate().expect("gate");
                let fanins: Vec<NodeId> = node
                    .fanins()
                    .iter()
                    .map(|f| map[f.index()].expect("key inputs only feed key gates"))
                    .collect();
                b.add_gate(kind, &fanins, name)?
            }
        };
        map[id.index()] = Some(new);
    }
    for o in n.outputs() {
        b.add_named_output(map[o.index()].expect("mapped"), n.name(*o))?;
    }
    Ok(b.build())
}

fn check_len(locked: &LockedNetlist, k: &Key) -> Result<(), KeyError> {
    if k.len() != locked.key_len() {
        return Err(KeyError::LengthMismatch {
            expected: locked.key_len(),
            got: k.len(),
        });
    }
    Ok(())
}

/// Scores keys against one locked netlist. The view histogram is derived
/// from a fixed base plus per-gate corrections, so no netlist is rebuilt.
pub struct Scorer<'a> {
    locked: &'a LockedNetlist,
    synth: SynthConfig,
    view: ViewMode,
    base: GateHistogram,
    gates: Vec<(KeyGate, bool)>,
    slots: Vec<Option<usize>>,
}

impl<'a> Scorer<'a> {
    pub fn new(locked: &'a LockedNetlist, synth: &SynthConfig, view: ViewMode) -> Result<Self, AttackError> {
        synth.validate()?;
        let n = locked.netlist();
        let mut base = n.gate_histogram();
        let mut is_output = vec![false; n.len()];
        for o in n.outputs() {
            is_output[o.index()] = true;
        }
        let gates: Vec<(KeyGate, bool)> = locked
            .key_gates()
            .into_iter()
            .map(|g| (g, is_output[g.gate.index()]))
            .collect();
        for (g, drives_output) in &gates {
            base.remove(n.node(g.gate).gate().expect("key gate"), 1);
            if *drives_output && view == ViewMode::Stripped {
                base.add(GateKind::Buf, 1);
            }
        }
        Ok(Scorer {
            locked,
            synth: synth.clone(),
            view,
            base,
            gates,
            slots: locked.key_slots(),
        })
    }

    pub fn locked(&self) -> &LockedNetlist {
        self.locked
    }

    /// Histogram of the locked netlist as seen under `k`.
    pub fn view_histogram(&self, k: &Key) -> GateHistogram {
        let mut h = self.base;
        if self.view == ViewMode::Resolved {
            for (g, drives_output) in &self.gates {
                if k.bit(g.bit) == g.inverts_on_one {
                    h.add(GateKind::Inv, 1);
                } else if *drives_output {
                    h.add(GateKind::Buf, 1);
                }
            }
        }
        h
    }

    pub fn score(&self, k: &Key) -> Result<u64, AttackError> {
        check_len(self.locked, k)?;
        let pins: Vec<Option<bool>> = self.slots.iter().map(|s| s.map(|i| k.bit(i))).collect();
        let resynth = synthesized_histogram(self.locked.netlist(), &pins, &self.synth);
        Ok(dissimilarity(&self.view_histogram(k), &resynth))
    }
}

/// Dissimilarity between the locked netlist seen under `k` and the
/// synthesized form of the function it computes with `k` applied.
pub fn score_key(locked: &LockedNetlist, k: &Key, synth: &SynthConfig) -> Result<u64, AttackError> {
    Scorer::new(locked, synth, ViewMode::default())?.score(k)
}

/// `k` followed by its Hamming-distance-1 neighbours, lowest flipped bit first.
pub fn neighborhood(k: &Key) -> Vec<Key> {
    std::iter::once(k.clone()).chain((0..k.len()).map(|i| k.with_flipped(i))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub restarts: usize,
    pub seed: u64,
    pub synth: SynthConfig,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
    pub view: ViewMode,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            restarts: 20,
            seed: 0,
            synth: SynthConfig::default(),
            jobs: 0,
            view: ViewMode::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RestartTrace {
    pub initial: Key,
    #[serde(rename = "final")]
    pub final_key: Key,
    pub score: u64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackResult {
    pub best_guess: Key,
    pub best_score: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<RestartTrace>,
    pub wall_seconds: f64,
}

impl AttackResult {
    /// Drops the per-restart trace and the timing, leaving only the
    /// deterministic outcome.
    pub fn summary(&self) -> AttackResult {
        AttackResult {
            best_guess: self.best_guess.clone(),
            best_score: self.best_score,
            trace: Vec::new(),
            wall_seconds: 0.0,
        }
    }
}

/// One greedy descent from `initial`.
pub fn local_search(scorer: &Scorer<'_>, initial: Key) -> Result<RestartTrace, AttackError> {
    let mut k0 = initial.clone();
    let mut s0 = scorer.score(&k0)?;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut best = (s0, None);
        for i in 0..k0.len() {
            let s = scorer.score(&k0.with_flipped(i))?;
            if s < best.0 {
                best = (s, Some(i));
            }
        }
        match best {
            (_, None) => break,
            (s, Some(i)) => {
                k0 = k0.with_flipped(i);
                s0 = s;
            }
        }
    }
    Ok(RestartTrace {
        initial,
        final_key: k0,
        score: s0,
        iterations,
    })
}

/// Runs `config.restarts` independent descents from uniform random keys
/// and returns the best final key (lowest score, then lowest key).
pub fn desynthesis_attack(locked: &LockedNetlist, config: &AttackConfig) -> Result<AttackResult, AttackError> {
    if config.restarts == 0 {
        return Err(AttackError::NoRestarts);
    }
    let start = Instant::now();
    let scorer = Scorer::new(locked, &config.synth, config.view)?;
    let r = locked.key_len();
    let run = |i: usize| -> Result<RestartTrace, AttackError> {
        let mut g = rng::substream(config.seed, i as u64);
        let initial = Key::new((0..r).map(|_| g.gen::<bool>()).collect())?;
        local_search(&scorer, initial)
    };
    let trace: Vec<RestartTrace> = if config.jobs == 0 {
        (0..config.restarts).into_par_iter().map(run).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| AttackError::Pool(e.to_string()))?;
        pool.install(|| (0..config.restarts).into_par_iter().map(run).collect::<Result<_, _>>())?
    };
    let best = trace
        .iter()
        .min_by(|a, b| (a.score, &a.final_key).cmp(&(b.score, &b.final_key)))
        .expect("restarts >= 1");
    Ok(AttackResult {
        best_guess: best.final_key.clone(),
        best_score: best.score,
        wall_seconds: start.elapsed().as_secs_f64(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_bench;
    use crate::locking::Provenance;

    /// Locked NAND/NOR example: the inverter after the NAND became a key gate
    /// on bit 0, and bit 1 sits on the NOR-to-NOR wire.
    pub(crate) fn nand_nor_locked() -> LockedNetlist {
        let n = parse_bench(
            "INPUT(A)\nINPUT(B)\nINPUT(C)\nINPUT(keyinput0)\nINPUT(keyinput1)\nOUTPUT(f)\n\
             n1 = NAND(A, B)\nx1 = XOR(n1, keyinput0)\nn3 = NOR(B, C)\nx2 = XOR(n3, keyinput1)\nf = NOR(x1, x2)\n",
        )
        .unwrap();
        LockedNetlist::from_key_input_names(n, Provenance { scheme: "epic".into(), seed: 0 }).unwrap()
    }

    fn hist(pairs: &[(GateKind, usize)]) -> GateHistogram {
        pairs.iter().copied().collect()
    }

    #[test]
    fn dissimilarity_formula() {
        let h1 = hist(&[(GateKind::Nand2, 2), (GateKind::Inv, 1)]);
        let h2 = hist(&[(GateKind::Nand2, 1), (GateKind::Inv, 1)]);
        assert_eq!(dissimilarity(&h1, &h2), 1);
        assert_eq!(dissimilarity(&h2, &h1), 1);
        assert_eq!(dissimilarity(&h1, &h1), 0);
    }

    #[test]
    fn neighborhood_order() {
        let k = Key::from_bitstr("10").unwrap();
        let n: Vec<String> = neighborhood(&k).iter().map(Key::to_bitstr).collect();
        assert_eq!(n, ["10", "00", "11"]);
    }

    #[test]
    fn nand_nor_scores() {
        let l = nand_nor_locked();
        let cfg = SynthConfig::default();
        let s = |b: &str| score_key(&l, &Key::from_bitstr(b).unwrap(), &cfg).unwrap();
        assert_eq!(s("10"), 0);
        assert!(s("00") > 0);
        assert!(s("01") > 0);
        assert!(s("11") > 0);
    }

    #[test]
    fn nand_nor_attack_recovers_key() {
        let l = nand_nor_locked();
        let cfg = AttackConfig {
            restarts: 4,
            seed: 1,
            ..AttackConfig::default()
        };
        let res = desynthesis_attack(&l, &cfg).unwrap();
        assert_eq!(res.best_guess.to_bitstr(), "10");
        assert_eq!(res.best_score, 0);
        assert_eq!(res.trace.len(), 4);
    }

    #[test]
    fn fast_view_matches_rebuilt_netlist() {
        let l = nand_nor_locked();
        for view in [ViewMode::Resolved, ViewMode::Stripped] {
            let scorer = Scorer::new(&l, &SynthConfig::default(), view).unwrap();
            for k in Key::all(2) {
                let key = (view == ViewMode::Resolved).then_some(&k);
                let slow = strip_key_gates(&l, key).unwrap().gate_histogram();
                assert_eq!(scorer.view_histogram(&k), slow, "{view:?} {k}");
            }
        }
    }

    #[test]
    fn local_minimum_is_fixed_point() {
        let l = nand_nor_locked();
        let scorer = Scorer::new(&l, &SynthConfig::default(), ViewMode::Resolved).unwrap();
        let t = local_search(&scorer, Key::from_bitstr("10").unwrap()).unwrap();
        assert_eq!(t.final_key.to_bitstr(), "10");
        assert_eq!(t.iterations, 1);
    }

    #[test]
    fn zero_restarts_rejected() {
        let cfg = AttackConfig {
            restarts: 0,
            ..AttackConfig::default()
        };
        assert_eq!(desynthesis_attack(&nand_nor_locked(), &cfg).unwrap_err(), AttackError::NoRestarts);
    }
}
