//! ROBDD locking with key nodes.
//!
//! For key bit `i` a host node `d = (v, H, L)` is drawn uniformly among the
//! reachable decision nodes that have no complementary partner, and two key
//! nodes testing bit `i` are spliced under it: `p` in the low slot and `q`
//! in the high slot. With the correct bit `p` leads to `L` and `q` to `H`;
//! with the wrong bit they swap, which is the same as exchanging the
//! children of `d`.

mod audit;

use std::collections::HashSet;

use rand::Rng;
use thiserror::Error;

use crate::bdd::{bdd_from_netlist, complementary_pairs, Bdd, BddError, DecisionDiagram, Label, RobddForest};
use crate::circuit::{GateKind, Netlist, NetlistBuilder, NetlistError, NodeId};
use crate::key::{key_input_index, key_input_name, Key, KeyError};
use crate::locking::{LockedNetlist, Provenance};
use crate::synth::{synthesize, SynthConfig, SynthError};

pub use audit::{
    epic_security_audit, security_audit, AuditCounterexample, AuditEntry, AuditReport, Probability, Verdict,
    DEFAULT_AUDIT_BUDGET,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeerkatError {
    #[error("only {eligible} eligible BDD nodes for a {r}-bit key")]
    TooFewEligible { eligible: usize, r: usize },
    #[error("input `{0}` collides with a key input name")]
    NameClash(String),
    #[error("audit enumeration budget of {0} exceeded")]
    BudgetExceeded(u64),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Bdd(#[from] BddError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Lock(#[from] Box<crate::locking::LockError>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyRecord {
    pub bit: usize,
    pub host: Bdd,
}

/// A forest with key nodes spliced under `r` host nodes.
#[derive(Debug)]
pub struct LockedBdd {
    forest: RobddForest,
    records: Vec<KeyRecord>,
    key: Key,
    seed: u64,
}

/// Reachable decision nodes outside complementary pairs, by index.
pub fn eligible_nodes(forest: &RobddForest) -> Vec<Bdd> {
    let excluded: HashSet<Bdd> = complementary_pairs(forest)
        .into_iter()
        .flat_map(|(a, b)| [a, b])
        .collect();
    forest
        .decision_nodes()
        .into_iter()
        .filter(|d| !excluded.contains(d))
        .collect()
}

pub fn meerkat_lock(forest: RobddForest, key: &Key, seed: u64) -> Result<LockedBdd, MeerkatError> {
    let mut rng = crate::rng::seeded(seed);
    meerkat_lock_with(forest, key, seed, &mut rng)
}

pub fn meerkat_lock_with<R: Rng + ?Sized>(
    forest: RobddForest,
    key: &Key,
    seed: u64,
    rng: &mut R,
) -> Result<LockedBdd, MeerkatError> {
    let mut pool = eligible_nodes(&forest);
    if pool.len() < key.len() {
        return Err(MeerkatError::TooFewEligible {
            eligible: pool.len(),
            r: key.len(),
        });
    }
    let mut hosts = Vec::with_capacity(key.len());
    for _ in 0..key.len() {
        let i = rng.gen_range(0..pool.len());
        hosts.push(pool.remove(i));
    }
    meerkat_lock_at(forest, key, seed, &hosts)
}

/// Locks with explicitly chosen hosts, one per key bit in order.
pub fn meerkat_lock_at(forest: RobddForest, key: &Key, seed: u64, hosts: &[Bdd]) -> Result<LockedBdd, MeerkatError> {
    if hosts.len() != key.len() {
        return Err(KeyError::LengthMismatch {
            expected: hosts.len(),
            got: key.len(),
        }
        .into());
    }
    let eligible: HashSet<Bdd> = eligible_nodes(&forest).into_iter().collect();
    let mut seen = HashSet::new();
    for h in hosts {
        if !eligible.contains(h) || !seen.insert(*h) {
            return Err(MeerkatError::TooFewEligible {
                eligible: eligible.len(),
                r: key.len(),
            });
        }
    }
    let records = hosts
        .iter()
        .enumerate()
        .map(|(bit, &host)| KeyRecord { bit, host })
        .collect();
    Ok(LockedBdd {
        forest,
        records,
        key: key.clone(),
        seed,
    })
}

impl LockedBdd {
    pub fn forest(&self) -> &RobddForest {
        &self.forest
    }

    pub fn records(&self) -> &[KeyRecord] {
        &self.records
    }

    pub fn key(&self) -> &Key {
        &self.key
    }

    pub fn key_len(&self) -> usize {
        self.key.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The locked graph with its `2r` key nodes.
    pub fn diagram(&self) -> DecisionDiagram {
        let hosts: Vec<Bdd> = self.records.iter().map(|r| r.host).collect();
        lock_diagram(&self.forest, &self.key, &hosts)
    }

    /// The forest with `k` applied node by node, before any reduction:
    /// hosts whose bit is wrong get their children exchanged.
    pub fn apply_key_raw(&self, k: &Key) -> Result<DecisionDiagram, MeerkatError> {
        self.check_len(k)?;
        let (mut dd, map) = DecisionDiagram::from_forest_with_map(&self.forest);
        for rec in &self.records {
            if k.bit(rec.bit) != self.key.bit(rec.bit) {
                let d = map[&rec.host.index()];
                let node = dd.node(d);
                dd.set_children(d, node.lo, node.hi);
            }
        }
        Ok(dd)
    }

    fn check_len(&self, k: &Key) -> Result<(), KeyError> {
        if k.len() != self.key.len() {
            return Err(KeyError::LengthMismatch {
                expected: self.key.len(),
                got: k.len(),
            });
        }
        Ok(())
    }

    pub fn to_dot(&self) -> String {
        self.diagram().to_dot()
    }
}

/// Applies `k` and re-canonicalizes into the base manager; returns one root
/// per output.
pub fn bdd_apply_key(locked: &mut LockedBdd, k: &Key) -> Result<Vec<Bdd>, MeerkatError> {
    let raw = locked.apply_key_raw(k)?;
    Ok(raw.import(locked.forest.manager_mut())?)
}

/// Splices the key nodes for `key` under `hosts[i]` for bit `i`.
pub fn lock_diagram(forest: &RobddForest, key: &Key, hosts: &[Bdd]) -> DecisionDiagram {
    let (mut dd, map) = DecisionDiagram::from_forest_with_map(forest);
    dd.set_num_keys(key.len());
    for (bit, host) in hosts.iter().enumerate() {
        let d = map[&host.index()];
        let node = dd.node(d);
        let (h, l) = (node.hi, node.lo);
        let b = key.bit(bit);
        let k = Label::Key(bit as u32);
        let p = if b { dd.push(k, l, h) } else { dd.push(k, h, l) };
        let q = if b { dd.push(k, h, l) } else { dd.push(k, l, h) };
        dd.set_children(d, q, p);
    }
    dd
}

/// One MUX per decision or key node: `MUX2(var, lo, hi)`.
pub fn mux_synthesize(locked: &LockedBdd) -> Result<LockedNetlist, MeerkatError> {
    let dd = locked.diagram();
    let netlist = diagram_to_mux_netlist(&dd)?;
    let key_inputs = (0..locked.key_len()).map(key_input_name).collect();
    Ok(LockedNetlist::new(
        netlist,
        key_inputs,
        Provenance {
            scheme: "meerkat".into(),
            seed: locked.seed,
        },
    )
    .map_err(Box::new)?)
}

/// MUX netlist over the diagram's inputs followed by `keyinput0..`.
pub fn diagram_to_mux_netlist(dd: &DecisionDiagram) -> Result<Netlist, MeerkatError> {
    for name in dd.input_names() {
        if key_input_index(name).is_some() {
            return Err(MeerkatError::NameClash(name.clone()));
        }
    }
    let mut b = NetlistBuilder::new();
    for name in dd.output_names() {
        b.reserve_name(name);
    }
    let mut inputs = Vec::with_capacity(dd.input_names().len());
    for name in dd.input_names() {
        inputs.push(b.add_input(name.clone())?);
    }
    let mut keys = Vec::with_capacity(dd.num_keys());
    for i in 0..dd.num_keys() {
        keys.push(b.add_input(key_input_name(i))?);
    }
    let mut sig: Vec<Option<NodeId>> = vec![None; dd.nodes().len()];
    let terminal = |b: &mut NetlistBuilder, sig: &mut Vec<Option<NodeId>>, t: u32| -> Result<NodeId, NetlistError> {
        if let Some(id) = sig[t as usize] {
            return Ok(id);
        }
        let (kind, prefix) = if t == 1 { (GateKind::Const1, "const1_") } else { (GateKind::Const0, "const0_") };
        let id = b.add_gate_fresh(kind, &[], prefix)?;
        sig[t as usize] = Some(id);
        Ok(id)
    };
    for n in dd.postorder() {
        let node = dd.node(n);
        let sel = match node.label {
            Label::Input(i) => inputs[i as usize],
            Label::Key(i) => keys[i as usize],
            _ => unreachable!("postorder skips terminals"),
        };
        let lo = match sig[node.lo as usize] {
            Some(id) => id,
            None => terminal(&mut b, &mut sig, node.lo)?,
        };
        let hi = match sig[node.hi as usize] {
            Some(id) => id,
            None => terminal(&mut b, &mut sig, node.hi)?,
        };
        sig[n as usize] = Some(b.add_gate_fresh(GateKind::Mux2, &[sel, lo, hi], "m")?);
    }
    for (name, &r) in dd.output_names().iter().zip(dd.roots()) {
        let id = match sig[r as usize] {
            Some(id) => id,
            None => terminal(&mut b, &mut sig, r)?,
        };
        b.add_named_output(id, name)?;
    }
    Ok(b.build())
}

/// ROBDD construction, locking, MUX synthesis and a final synthesis pass
/// with the key inputs left free.
pub fn meerkat_flow(netlist: &Netlist, key: &Key, seed: u64, synth: &SynthConfig) -> Result<LockedNetlist, MeerkatError> {
    let forest = bdd_from_netlist(netlist, None)?;
    let locked = meerkat_lock(forest, key, seed)?;
    let mux = mux_synthesize(&locked)?;
    let synthesized = synthesize(mux.netlist(), synth)?;
    Ok(LockedNetlist::new(synthesized, mux.key_inputs().to_vec(), mux.provenance().clone()).map_err(Box::new)?)
}
