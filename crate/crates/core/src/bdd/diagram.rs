//! Decision diagrams outside any manager: locked graphs with key nodes,
//! graphs with flipped children, and anything else that need not be
//! canonical.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{BddError, BddManager, RobddForest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Zero,
    One,
    /// Regular input by position in the variable order.
    Input(u32),
    /// Key bit.
    Key(u32),
}

impl Label {
    pub fn is_terminal(self) -> bool {
        matches!(self, Label::Zero | Label::One)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DNode {
    pub label: Label,
    pub hi: u32,
    pub lo: u32,
}

/// Arena diagram. Nodes 0 and 1 are the terminals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionDiagram {
    input_names: Vec<String>,
    output_names: Vec<String>,
    num_keys: usize,
    nodes: Vec<DNode>,
    roots: Vec<u32>,
}

impl DecisionDiagram {
    pub fn new(input_names: Vec<String>, num_keys: usize) -> Self {
        DecisionDiagram {
            input_names,
            output_names: Vec::new(),
            num_keys,
            nodes: vec![
                DNode {
                    label: Label::Zero,
                    hi: 0,
                    lo: 0,
                },
                DNode {
                    label: Label::One,
                    hi: 1,
                    lo: 1,
                },
            ],
            roots: Vec::new(),
        }
    }

    /// Copies the reachable part of a forest; also returns the arena index
    /// of every copied manager node.
    pub fn from_forest_with_map(forest: &RobddForest) -> (Self, HashMap<u32, u32>) {
        let m = forest.manager();
        let mut dd = DecisionDiagram::new(m.var_names().to_vec(), 0);
        let mut map: HashMap<u32, u32> = HashMap::from([(0, 0), (1, 1)]);
        for idx in m.reachable(&forest.root_ids()).expect("roots are local") {
            let n = m.raw(idx);
            let id = dd.push(Label::Input(n.var), map[&n.hi], map[&n.lo]);
            map.insert(idx, id);
        }
        for (name, r) in forest.roots() {
            dd.add_root(name.clone(), map[&r.index()]);
        }
        (dd, map)
    }

    pub fn from_forest(forest: &RobddForest) -> Self {
        Self::from_forest_with_map(forest).0
    }

    pub fn push(&mut self, label: Label, hi: u32, lo: u32) -> u32 {
        assert!(!label.is_terminal(), "terminals are fixed");
        self.nodes.push(DNode { label, hi, lo });
        (self.nodes.len() - 1) as u32
    }

    pub fn set_children(&mut self, node: u32, hi: u32, lo: u32) {
        let n = &mut self.nodes[node as usize];
        n.hi = hi;
        n.lo = lo;
    }

    pub fn add_root(&mut self, name: String, node: u32) {
        self.output_names.push(name);
        self.roots.push(node);
    }

    pub fn node(&self, id: u32) -> DNode {
        self.nodes[id as usize]
    }

    pub fn nodes(&self) -> &[DNode] {
        &self.nodes
    }

    pub fn roots(&self) -> &[u32] {
        &self.roots
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn output_names(&self) -> &[String] {
        &self.output_names
    }

    pub fn num_keys(&self) -> usize {
        self.num_keys
    }

    pub fn set_num_keys(&mut self, r: usize) {
        self.num_keys = r;
    }

    /// Reachable non-terminal nodes, children before parents.
    pub fn postorder(&self) -> Vec<u32> {
        let mut seen = vec![false; self.nodes.len()];
        let mut order = Vec::new();
        for &r in &self.roots {
            if r < 2 || seen[r as usize] {
                continue;
            }
            let mut stack = vec![(r, false)];
            while let Some((n, expanded)) = stack.pop() {
                if expanded {
                    order.push(n);
                    continue;
                }
                if seen[n as usize] {
                    continue;
                }
                seen[n as usize] = true;
                stack.push((n, true));
                let node = self.nodes[n as usize];
                for c in [node.lo, node.hi] {
                    if c >= 2 && !seen[c as usize] {
                        stack.push((c, false));
                    }
                }
            }
        }
        order
    }

    /// Branching-program evaluation.
    pub fn eval(&self, inputs: &[bool], key: &[bool]) -> Vec<bool> {
        self.roots
            .iter()
            .map(|&r| {
                let mut n = r;
                loop {
                    let node = self.nodes[n as usize];
                    n = match node.label {
                        Label::Zero => break false,
                        Label::One => break true,
                        Label::Input(i) => {
                            if inputs[i as usize] {
                                node.hi
                            } else {
                                node.lo
                            }
                        }
                        Label::Key(i) => {
                            if key[i as usize] {
                                node.hi
                            } else {
                                node.lo
                            }
                        }
                    };
                }
            })
            .collect()
    }

    /// Canonical encoding of the reachable graph: nodes numbered in
    /// depth-first order from the roots (hi before lo), each written as its
    /// label and child numbers, followed by the root numbers.
    pub fn signature(&self) -> Vec<u64> {
        let mut num: HashMap<u32, u64> = HashMap::from([(0, 0), (1, 1)]);
        let mut order: Vec<u32> = Vec::new();
        for &r in &self.roots {
            let mut stack = vec![r];
            while let Some(n) = stack.pop() {
                if num.contains_key(&n) {
                    continue;
                }
                num.insert(n, (order.len() + 2) as u64);
                order.push(n);
                let node = self.nodes[n as usize];
                stack.push(node.lo);
                stack.push(node.hi);
            }
        }
        let mut sig = Vec::with_capacity(order.len() * 3 + self.roots.len() + 1);
        for n in order {
            let node = self.nodes[n as usize];
            let label = match node.label {
                Label::Input(i) => u64::from(i) << 1,
                Label::Key(i) => u64::from(i) << 1 | 1,
                _ => unreachable!("terminals are numbered up front"),
            };
            sig.extend([label, num[&node.hi], num[&node.lo]]);
        }
        sig.push(u64::MAX);
        sig.extend(self.roots.iter().map(|r| num[r]));
        sig
    }

    /// Rebuilds the diagram in `manager`, reducing it. The diagram must not
    /// contain key nodes.
    pub fn import(&self, manager: &mut BddManager) -> Result<Vec<super::Bdd>, BddError> {
        self.import_with_key(manager, &[])
    }

    /// Like [`Self::import`], with every key node replaced by the child its
    /// bit in `key` selects.
    pub fn import_with_key(&self, manager: &mut BddManager, key: &[bool]) -> Result<Vec<super::Bdd>, BddError> {
        let mut val: HashMap<u32, super::Bdd> = HashMap::from([(0, manager.zero()), (1, manager.one())]);
        for n in self.postorder() {
            let node = self.nodes[n as usize];
            let b = match node.label {
                Label::Input(v) => {
                    let x = manager.var(v as usize)?;
                    manager.ite(x, val[&node.hi], val[&node.lo])?
                }
                Label::Key(i) => val[if key[i as usize] { &node.hi } else { &node.lo }],
                _ => unreachable!("postorder skips terminals"),
            };
            val.insert(n, b);
        }
        Ok(self.roots.iter().map(|r| val[r]).collect())
    }

    /// Graphviz rendering: solid edges to high children, dashed to low
    /// children, key nodes filled grey.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph bdd {\n");
        s.push_str("  node [shape=circle];\n");
        s.push_str("  n0 [label=\"0\", shape=box];\n  n1 [label=\"1\", shape=box];\n");
        for n in self.postorder() {
            let node = self.nodes[n as usize];
            let (label, style) = match node.label {
                Label::Input(i) => (self.input_names[i as usize].clone(), ""),
                Label::Key(i) => (format!("k{i}"), ", style=filled, fillcolor=grey"),
                _ => unreachable!(),
            };
            let _ = writeln!(s, "  n{n} [label=\"{label}\"{style}];");
            let _ = writeln!(s, "  n{n} -> n{};", node.hi);
            let _ = writeln!(s, "  n{n} -> n{} [style=dashed];", node.lo);
        }
        for (name, r) in self.output_names.iter().zip(&self.roots) {
            let _ = writeln!(s, "  \"{name}\" [shape=plaintext];\n  \"{name}\" -> n{r};");
        }
        s.push_str("}\n");
        s
    }
}

/// True when every reachable node tests a regular input, variables strictly
/// increase along every edge, no node has equal children and no two nodes
/// are isomorphic.
pub fn is_reduced_ordered(dd: &DecisionDiagram) -> bool {
    let rank = |label: Label| match label {
        Label::Input(i) => Some(i),
        Label::Zero | Label::One => Some(u32::MAX),
        Label::Key(_) => None,
    };
    let mut canon: HashMap<u32, u32> = HashMap::from([(0, 0), (1, 1)]);
    let mut seen: HashMap<(u32, u32, u32), u32> = HashMap::new();
    for n in dd.postorder() {
        let node = dd.node(n);
        let Some(v) = rank(node.label).filter(|&v| v != u32::MAX) else {
            return false;
        };
        if node.hi == node.lo {
            return false;
        }
        for c in [node.hi, node.lo] {
            match rank(dd.node(c).label) {
                Some(cv) if cv > v => {}
                _ => return false,
            }
        }
        let key = (v, canon[&node.hi], canon[&node.lo]);
        if key.1 == key.2 || seen.insert(key, n).is_some() {
            return false;
        }
        canon.insert(n, n);
    }
    true
}
