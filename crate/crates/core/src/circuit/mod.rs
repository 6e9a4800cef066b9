//! Gate-level netlist IR over a fixed cell library.
//!
//! A [`Netlist`] is a DAG stored in topological order: every fanin id is
//! smaller than the id of the gate that reads it, and primary inputs occupy
//! the lowest ids. Netlists are immutable once built; transformations
//! construct new ones through [`NetlistBuilder`].

mod bench;
mod random;
pub mod sim;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bench::{parse_bench, write_bench, ParseError, ParseErrorKind};
pub use random::{random_netlist, RandomSpec};
pub use sim::{equivalent, exhaustive_input_words, TruthTable};

/// Cells available to netlists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    #[serde(rename = "INV")]
    Inv,
    #[serde(rename = "BUF")]
    Buf,
    #[serde(rename = "AND2")]
    And2,
    #[serde(rename = "OR2")]
    Or2,
    #[serde(rename = "NAND2")]
    Nand2,
    #[serde(rename = "NOR2")]
    Nor2,
    #[serde(rename = "XOR2")]
    Xor2,
    #[serde(rename = "XNOR2")]
    Xnor2,
    /// `MUX2(sel, in0, in1)`: `in0` when `sel` is 0.
    #[serde(rename = "MUX2")]
    Mux2,
    #[serde(rename = "CONST0")]
    Const0,
    #[serde(rename = "CONST1")]
    Const1,
}

impl GateKind {
    pub const COUNT: usize = 11;

    pub const ALL: [GateKind; GateKind::COUNT] = [
        GateKind::Inv,
        GateKind::Buf,
        GateKind::And2,
        GateKind::Or2,
        GateKind::Nand2,
        GateKind::Nor2,
        GateKind::Xor2,
        GateKind::Xnor2,
        GateKind::Mux2,
        GateKind::Const0,
        GateKind::Const1,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Const0 | GateKind::Const1 => 0,
            GateKind::Inv | GateKind::Buf => 1,
            GateKind::Mux2 => 3,
            _ => 2,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Name used in BENCH files.
    pub fn bench_name(self) -> &'static str {
        match self {
            GateKind::Inv => "INV",
            GateKind::Buf => "BUF",
            GateKind::And2 => "AND",
            GateKind::Or2 => "OR",
            GateKind::Nand2 => "NAND",
            GateKind::Nor2 => "NOR",
            GateKind::Xor2 => "XOR",
            GateKind::Xnor2 => "XNOR",
            GateKind::Mux2 => "MUX",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
        }
    }

    /// Parses a BENCH cell name, accepting the common ISCAS aliases.
    pub fn from_bench_name(name: &str) -> Option<GateKind> {
        let kind = match name.to_ascii_uppercase().as_str() {
            "INV" | "NOT" => GateKind::Inv,
            "BUF" | "BUFF" => GateKind::Buf,
            "AND" | "AND2" => GateKind::And2,
            "OR" | "OR2" => GateKind::Or2,
            "NAND" | "NAND2" => GateKind::Nand2,
            "NOR" | "NOR2" => GateKind::Nor2,
            "XOR" | "XOR2" => GateKind::Xor2,
            "XNOR" | "XNOR2" => GateKind::Xnor2,
            "MUX" | "MUX2" => GateKind::Mux2,
            "CONST0" | "GND" => GateKind::Const0,
            "CONST1" | "VDD" => GateKind::Const1,
            _ => return None,
        };
        Some(kind)
    }

    /// Evaluates the cell on 64 patterns at once.
    #[inline]
    pub fn eval_words(self, a: u64, b: u64, c: u64) -> u64 {
        match self {
            GateKind::Inv => !a,
            GateKind::Buf => a,
            GateKind::And2 => a & b,
            GateKind::Or2 => a | b,
            GateKind::Nand2 => !(a & b),
            GateKind::Nor2 => !(a | b),
            GateKind::Xor2 => a ^ b,
            GateKind::Xnor2 => !(a ^ b),
            GateKind::Mux2 => (!a & b) | (a & c),
            GateKind::Const0 => 0,
            GateKind::Const1 => !0,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.bench_name())
    }
}

/// Dense node index; also the node's position in topological order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Input,
    Gate(GateKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Node {
    kind: NodeKind,
    fanins: [NodeId; 3],
}

impl Node {
    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn gate(&self) -> Option<GateKind> {
        match self.kind {
            NodeKind::Gate(g) => Some(g),
            NodeKind::Input => None,
        }
    }

    pub fn is_input(&self) -> bool {
        self.kind == NodeKind::Input
    }

    pub fn fanins(&self) -> &[NodeId] {
        match self.kind {
            NodeKind::Input => &[],
            NodeKind::Gate(g) => &self.fanins[..g.arity()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetlistError {
    #[error("unknown node id {0}")]
    UnknownNode(u32),
    #[error("fanin {fanin} of `{gate}` does not precede it")]
    NotTopological { gate: String, fanin: u32 },
    #[error("{kind} expects {expected} fanins, got {got}")]
    ArityMismatch {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("duplicate signal name `{0}`")]
    DuplicateName(String),
    #[error("input `{0}` declared after a gate")]
    InputAfterGate(String),
    #[error("no value for input `{0}`")]
    MissingInput(String),
    #[error("unknown input `{0}`")]
    UnknownInput(String),
    #[error("netlist has {0} inputs, too many for exhaustive enumeration")]
    TooManyInputs(usize),
}

/// Input (or output) valuation keyed by signal name.
pub type Assignment = BTreeMap<String, bool>;

/// Number of gates of each cell type. Inputs are not counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct GateHistogram {
    counts: [usize; GateKind::COUNT],
}

impl GateHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, kind: GateKind) -> usize {
        self.counts[kind.index()]
    }

    pub fn set(&mut self, kind: GateKind, count: usize) {
        self.counts[kind.index()] = count;
    }

    pub fn add(&mut self, kind: GateKind, count: usize) {
        self.counts[kind.index()] += count;
    }

    /// Decrements a count, saturating at zero.
    pub fn remove(&mut self, kind: GateKind, count: usize) {
        let c = &mut self.counts[kind.index()];
        *c = c.saturating_sub(count);
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (GateKind, usize)> + '_ {
        GateKind::ALL.iter().map(move |&k| (k, self.counts[k.index()]))
    }

    pub fn to_map(&self) -> BTreeMap<GateKind, usize> {
        self.iter().filter(|&(_, c)| c > 0).collect()
    }
}

impl FromIterator<(GateKind, usize)> for GateHistogram {
    fn from_iter<I: IntoIterator<Item = (GateKind, usize)>>(iter: I) -> Self {
        let mut h = GateHistogram::new();
        for (k, c) in iter {
            h.add(k, c);
        }
        h
    }
}

impl Serialize for GateHistogram {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for GateHistogram {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<GateKind, usize>::deserialize(d)?;
        Ok(map.into_iter().collect())
    }
}

/// Area in gates and depth in gate levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub area: usize,
    pub depth: usize,
}

/// Combinational netlist.
#[derive(Debug, Clone)]
pub struct Netlist {
    nodes: Vec<Node>,
    names: Vec<String>,
    index: HashMap<String, NodeId>,
    num_inputs: usize,
    outputs: Vec<NodeId>,
}

impl PartialEq for Netlist {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.names == other.names
            && self.num_inputs == other.num_inputs
            && self.outputs == other.outputs
    }
}

impl Eq for Netlist {}

impl Netlist {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id.index()]
    }

    pub fn id_of(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    /// Input ids, in declaration order.
    pub fn inputs(&self) -> impl ExactSizeIterator<Item = NodeId> {
        (0..self.num_inputs as u32).map(NodeId)
    }

    pub fn input_names(&self) -> impl Iterator<Item = &str> {
        self.names[..self.num_inputs].iter().map(String::as_str)
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn output_names(&self) -> impl Iterator<Item = &str> {
        self.outputs.iter().map(|&o| self.name(o))
    }

    pub fn gate_ids(&self) -> impl Iterator<Item = NodeId> {
        (self.num_inputs as u32..self.nodes.len() as u32).map(NodeId)
    }

    pub fn num_gates(&self) -> usize {
        self.nodes.len() - self.num_inputs
    }

    /// Fanout lists, indexed by node.
    pub fn fanouts(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for id in self.gate_ids() {
            for &f in self.node(id).fanins() {
                out[f.index()].push(id);
            }
        }
        out
    }

    pub fn gate_histogram(&self) -> GateHistogram {
        let mut h = GateHistogram::new();
        for n in &self.nodes[self.num_inputs..] {
            if let NodeKind::Gate(g) = n.kind {
                h.add(g, 1);
            }
        }
        h
    }

    /// Per-node logic level. Inputs and constants sit at level 0.
    pub fn levels(&self) -> Vec<usize> {
        let mut level = vec![0usize; self.nodes.len()];
        for id in self.gate_ids() {
            let n = self.node(id);
            level[id.index()] = match n.kind {
                NodeKind::Gate(GateKind::Const0 | GateKind::Const1) | NodeKind::Input => 0,
                NodeKind::Gate(_) => 1 + n.fanins().iter().map(|f| level[f.index()]).max().unwrap_or(0),
            };
        }
        level
    }

    pub fn metrics(&self) -> Metrics {
        let level = self.levels();
        Metrics {
            area: self.num_gates(),
            depth: self.outputs.iter().map(|o| level[o.index()]).max().unwrap_or(0),
        }
    }

    /// Evaluates the netlist on one named assignment.
    pub fn simulate(&self, x: &Assignment) -> Result<Assignment, NetlistError> {
        let mut words = Vec::with_capacity(self.num_inputs);
        for name in self.input_names() {
            let bit = *x
                .get(name)
                .ok_or_else(|| NetlistError::MissingInput(name.to_string()))?;
            words.push(if bit { !0u64 } else { 0 });
        }
        let out = self.simulate_words(&words);
        Ok(self
            .output_names()
            .zip(out)
            .map(|(n, w)| (n.to_string(), w & 1 == 1))
            .collect())
    }

    /// Evaluates 64 patterns at once. `inputs` holds one word per input,
    /// in declaration order; returns one word per output.
    pub fn simulate_words(&self, inputs: &[u64]) -> Vec<u64> {
        let values = self.node_words(inputs);
        self.outputs.iter().map(|o| values[o.index()]).collect()
    }

    /// Word values of every node for 64 patterns.
    pub fn node_words(&self, inputs: &[u64]) -> Vec<u64> {
        assert_eq!(inputs.len(), self.num_inputs, "one word per input");
        let mut v = Vec::with_capacity(self.nodes.len());
        v.extend_from_slice(inputs);
        for n in &self.nodes[self.num_inputs..] {
            let g = match n.kind {
                NodeKind::Gate(g) => g,
                NodeKind::Input => unreachable!("inputs precede gates"),
            };
            let f = &n.fanins;
            let a = if g.arity() > 0 { v[f[0].index()] } else { 0 };
            let b = if g.arity() > 1 { v[f[1].index()] } else { 0 };
            let c = if g.arity() > 2 { v[f[2].index()] } else { 0 };
            v.push(g.eval_words(a, b, c));
        }
        v
    }

    /// Exhaustive truth table of every output. Inputs beyond 24 are refused.
    pub fn truth_tables(&self) -> Result<Vec<TruthTable>, NetlistError> {
        sim::truth_tables(self)
    }
}

/// Incremental netlist construction. Inputs must be added before gates and
/// gates may only reference existing nodes, so the result is acyclic and
/// topologically ordered by construction.
#[derive(Debug, Default)]
pub struct NetlistBuilder {
    nodes: Vec<Node>,
    names: Vec<String>,
    index: HashMap<String, NodeId>,
    num_inputs: usize,
    outputs: Vec<NodeId>,
    is_output: Vec<bool>,
    fresh: usize,
    reserved: HashSet<String>,
}

impl NetlistBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains_name(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn id_of(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id.index()]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    fn push(&mut self, node: Node, name: String) -> Result<NodeId, NetlistError> {
        if self.index.contains_key(&name) {
            return Err(NetlistError::DuplicateName(name));
        }
        let id = NodeId(self.nodes.len() as u32);
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.nodes.push(node);
        self.is_output.push(false);
        Ok(id)
    }

    pub fn add_input(&mut self, name: impl Into<String>) -> Result<NodeId, NetlistError> {
        let name = name.into();
        if self.nodes.len() != self.num_inputs {
            return Err(NetlistError::InputAfterGate(name));
        }
        let id = self.push(
            Node {
                kind: NodeKind::Input,
                fanins: [NodeId(0); 3],
            },
            name,
        )?;
        self.num_inputs += 1;
        Ok(id)
    }

    pub fn add_gate(
        &mut self,
        kind: GateKind,
        fanins: &[NodeId],
        name: impl Into<String>,
    ) -> Result<NodeId, NetlistError> {
        let name = name.into();
        if fanins.len() != kind.arity() {
            return Err(NetlistError::ArityMismatch {
                kind,
                expected: kind.arity(),
                got: fanins.len(),
            });
        }
        let mut f = [NodeId(0); 3];
        for (slot, &id) in f.iter_mut().zip(fanins) {
            if id.index() >= self.nodes.len() {
                return Err(NetlistError::NotTopological {
                    gate: name,
                    fanin: id.0,
                });
            }
            *slot = id;
        }
        self.push(
            Node {
                kind: NodeKind::Gate(kind),
                fanins: f,
            },
            name,
        )
    }

    /// Keeps `name` out of the names handed out by [`Self::fresh_name`].
    pub fn reserve_name(&mut self, name: &str) {
        self.reserved.insert(name.to_string());
    }

    /// Adds a gate under a generated name starting with `prefix`.
    pub fn add_gate_fresh(&mut self, kind: GateKind, fanins: &[NodeId], prefix: &str) -> Result<NodeId, NetlistError> {
        let name = self.fresh_name(prefix);
        self.add_gate(kind, fanins, name)
    }

    /// A name not yet used in this builder, of the form `{prefix}{n}`.
    pub fn fresh_name(&mut self, prefix: &str) -> String {
        loop {
            let candidate = format!("{prefix}{}", self.fresh);
            self.fresh += 1;
            if !self.index.contains_key(&candidate) && !self.reserved.contains(&candidate) {
                return candidate;
            }
        }
    }

    /// Marks `id` as a primary output. Inputs, and nodes that already drive
    /// an output, get a BUF so every output has its own gate driver.
    pub fn add_output(&mut self, id: NodeId) -> Result<NodeId, NetlistError> {
        if id.index() >= self.nodes.len() {
            return Err(NetlistError::UnknownNode(id.0));
        }
        let driver = if self.nodes[id.index()].is_input() || self.is_output[id.index()] {
            let base = format!("{}_out", self.names[id.index()]);
            let name = if self.index.contains_key(&base) {
                self.fresh_name(&format!("{base}_"))
            } else {
                base
            };
            self.add_gate(GateKind::Buf, &[id], name)?
        } else {
            id
        };
        self.is_output[driver.index()] = true;
        self.outputs.push(driver);
        Ok(driver)
    }

    /// Adds an output named `name` driven by `id`. If `id` is a free gate it
    /// is renamed; otherwise a BUF named `name` is inserted.
    pub fn add_named_output(&mut self, id: NodeId, name: &str) -> Result<NodeId, NetlistError> {
        if id.index() >= self.nodes.len() {
            return Err(NetlistError::UnknownNode(id.0));
        }
        if self.names[id.index()] == name && !self.nodes[id.index()].is_input() && !self.is_output[id.index()] {
            self.is_output[id.index()] = true;
            self.outputs.push(id);
            return Ok(id);
        }
        let free = !self.nodes[id.index()].is_input() && !self.is_output[id.index()];
        if free && !self.index.contains_key(name) {
            let old = std::mem::replace(&mut self.names[id.index()], name.to_string());
            self.index.remove(&old);
            self.index.insert(name.to_string(), id);
            self.is_output[id.index()] = true;
            self.outputs.push(id);
            return Ok(id);
        }
        let buf = self.add_gate(GateKind::Buf, &[id], name)?;
        self.is_output[buf.index()] = true;
        self.outputs.push(buf);
        Ok(buf)
    }

    pub fn build(self) -> Netlist {
        Netlist {
            nodes: self.nodes,
            names: self.names,
            index: self.index,
            num_inputs: self.num_inputs,
            outputs: self.outputs,
        }
    }
}
