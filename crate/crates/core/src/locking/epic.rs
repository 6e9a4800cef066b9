//! XOR key-gate insertion into a synthesized netlist.
//!
//! Key bit `i` set to 1 replaces an inverter by `XOR(in, keyinput{i})`;
//! a 0 bit cuts a gate-to-gate wire and inserts `XOR(wire, keyinput{i})`.
//! When inverters run out, a 1 bit goes on a wire as `XOR(INV(wire), k)`.
//! Sites are drawn one bit at a time, uniformly among the sites left.

use rand::Rng;

use crate::circuit::{GateKind, Netlist, NetlistBuilder, NodeId, NodeKind};
use crate::key::{key_input_name, Key};

use super::{LockError, LockedNetlist, Provenance};

/// A place where one key gate can go.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Inverter(usize),
    /// Fanin `slot` of `sink`.
    Wire { sink: usize, slot: usize },
    /// Wire site taking an INV+XOR pair for a 1 bit.
    InvertedWire { sink: usize, slot: usize },
}

#[derive(Clone)]
struct WNode {
    kind: NodeKind,
    fanins: Vec<usize>,
    name: Option<String>,
    /// Key gate, key input, or inverter inserted next to a key gate.
    locked: bool,
}

/// Working copy of a netlist being locked.
#[derive(Clone)]
pub struct EpicState<'a> {
    source: &'a Netlist,
    nodes: Vec<WNode>,
    key_nodes: Vec<usize>,
    key: Key,
    step: usize,
}

impl<'a> EpicState<'a> {
    pub fn new(netlist: &'a Netlist, key: &Key) -> Self {
        let nodes = netlist
            .ids()
            .map(|id| {
                let n = netlist.node(id);
                WNode {
                    kind: n.kind(),
                    fanins: n.fanins().iter().map(|f| f.index()).collect(),
                    name: Some(netlist.name(id).to_string()),
                    locked: false,
                }
            })
            .collect();
        EpicState {
            source: netlist,
            nodes,
            key_nodes: Vec::with_capacity(key.len()),
            key: key.clone(),
            step: 0,
        }
    }

    pub fn is_done(&self) -> bool {
        self.step == self.key.len()
    }

    /// The error for a state whose next bit has no candidate site.
    pub fn no_sites(&self) -> LockError {
        LockError::InsufficientSites {
            bit: self.step,
            value: self.key.bit(self.step),
        }
    }

    fn wires(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (v, node) in self.nodes.iter().enumerate() {
            if node.locked || node.kind == NodeKind::Input {
                continue;
            }
            for (slot, &u) in node.fanins.iter().enumerate() {
                let src = &self.nodes[u];
                if !src.locked && src.kind != NodeKind::Input {
                    out.push((v, slot));
                }
            }
        }
        out
    }

    /// Sites available for the next key bit, in a fixed order.
    pub fn candidates(&self) -> Vec<Site> {
        let bit = self.key.bit(self.step);
        if bit {
            let invs: Vec<Site> = self
                .nodes
                .iter()
                .enumerate()
                .filter(|(_, n)| !n.locked && n.kind == NodeKind::Gate(GateKind::Inv))
                .map(|(i, _)| Site::Inverter(i))
                .collect();
            if !invs.is_empty() {
                return invs;
            }
            self.wires()
                .into_iter()
                .map(|(sink, slot)| Site::InvertedWire { sink, slot })
                .collect()
        } else {
            self.wires()
                .into_iter()
                .map(|(sink, slot)| Site::Wire { sink, slot })
                .collect()
        }
    }

    fn push(&mut self, kind: NodeKind, fanins: Vec<usize>) -> usize {
        self.nodes.push(WNode {
            kind,
            fanins,
            name: None,
            locked: true,
        });
        self.nodes.len() - 1
    }

    /// Locks the next key bit at `site`, which must come from [`Self::candidates`].
    pub fn apply(&mut self, site: Site) {
        let k = self.push(NodeKind::Input, Vec::new());
        self.key_nodes.push(k);
        let xor = NodeKind::Gate(GateKind::Xor2);
        match site {
            Site::Inverter(v) => {
                let n = &mut self.nodes[v];
                n.kind = xor;
                n.fanins.push(k);
                n.locked = true;
            }
            Site::Wire { sink, slot } => {
                let u = self.nodes[sink].fanins[slot];
                let x = self.push(xor, vec![u, k]);
                self.nodes[sink].fanins[slot] = x;
            }
            Site::InvertedWire { sink, slot } => {
                let u = self.nodes[sink].fanins[slot];
                let w = self.push(NodeKind::Gate(GateKind::Inv), vec![u]);
                let x = self.push(xor, vec![w, k]);
                self.nodes[sink].fanins[slot] = x;
            }
        }
        self.step += 1;
    }

    pub fn finish(self, provenance: Provenance) -> Result<LockedNetlist, LockError> {
        assert!(self.is_done(), "every key bit needs a site");
        let mut b = NetlistBuilder::new();
        for n in &self.nodes {
            if let Some(name) = &n.name {
                b.reserve_name(name);
            }
        }
        let mut ids: Vec<Option<NodeId>> = vec![None; self.nodes.len()];
        for id in self.source.inputs() {
            ids[id.index()] = Some(b.add_input(self.source.name(id))?);
        }
        let mut key_inputs = Vec::with_capacity(self.key_nodes.len());
        for (i, &k) in self.key_nodes.iter().enumerate() {
            let name = key_input_name(i);
            if b.contains_name(&name) {
                return Err(LockError::NameClash(name));
            }
            ids[k] = Some(b.add_input(name.clone())?);
            key_inputs.push(name);
        }
        for v in self.source.gate_ids() {
            self.emit(v.index(), &mut b, &mut ids)?;
        }
        for &o in self.source.outputs() {
            b.add_output(ids[o.index()].expect("emitted"))?;
        }
        LockedNetlist::new(b.build(), key_inputs, provenance)
    }

    fn emit(&self, v: usize, b: &mut NetlistBuilder, ids: &mut Vec<Option<NodeId>>) -> Result<NodeId, LockError> {
        if let Some(id) = ids[v] {
            return Ok(id);
        }
        let node = &self.nodes[v];
        let mut fanins = Vec::with_capacity(node.fanins.len());
        for &f in &node.fanins {
            fanins.push(self.emit(f, b, ids)?);
        }
        let NodeKind::Gate(kind) = node.kind else {
            unreachable!("inputs are placed first")
        };
        let id = match &node.name {
            Some(name) => b.add_gate(kind, &fanins, name.clone())?,
            None => {
                let prefix = if kind == GateKind::Xor2 { "keygate" } else { "keyinv" };
                b.add_gate_fresh(kind, &fanins, prefix)?
            }
        };
        ids[v] = Some(id);
        Ok(id)
    }
}

/// Locks `netlist` with `key`, drawing sites from `rng`.
pub fn epic_lock_with<R: Rng + ?Sized>(
    netlist: &Netlist,
    key: &Key,
    rng: &mut R,
    provenance: Provenance,
) -> Result<LockedNetlist, LockError> {
    let mut state = EpicState::new(netlist, key);
    while !state.is_done() {
        let c = state.candidates();
        if c.is_empty() {
            return Err(state.no_sites());
        }
        let pick = rng.gen_range(0..c.len());
        state.apply(c[pick]);
    }
    state.finish(provenance)
}

pub fn epic_lock(netlist: &Netlist, key: &Key, seed: u64) -> Result<LockedNetlist, LockError> {
    let mut rng = crate::rng::seeded(seed);
    epic_lock_with(
        netlist,
        key,
        &mut rng,
        Provenance {
            scheme: "epic".into(),
            seed,
        },
    )
}
