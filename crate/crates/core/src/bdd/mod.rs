//! Reduced ordered binary decision diagrams.
//!
//! A [`BddManager`] hash-conses nodes `(var, hi, lo)` so that every Boolean
//! function over its variable order has exactly one node. There are no
//! complement edges. Multi-output functions live in one manager as a
//! [`RobddForest`] and share subgraphs.

mod diagram;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, Ordering};

use thiserror::Error;

use crate::circuit::{Assignment, GateKind, Netlist, NodeKind};

pub use diagram::{is_reduced_ordered, DNode, DecisionDiagram, Label};

/// Default limit on stored nodes.
pub const DEFAULT_NODE_CAP: usize = 1 << 22;

const TERMINAL_VAR: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BddError {
    #[error("BDD node limit of {limit} exceeded")]
    Capacity { limit: usize },
    #[error("node belongs to a different BDD manager")]
    ForeignNode,
    #[error("input `{0}` is not in the variable order")]
    UnknownVariable(String),
    #[error("assignment is missing variable `{0}`")]
    MissingVariable(String),
    #[error("variable order lists `{0}` twice")]
    DuplicateVariable(String),
}

static NEXT_MANAGER: AtomicU32 = AtomicU32::new(0);

/// Handle to a node of a particular manager.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bdd {
    mgr: u32,
    idx: u32,
}

impl Bdd {
    pub fn index(self) -> u32 {
        self.idx
    }

    pub fn is_terminal(self) -> bool {
        self.idx < 2
    }

    pub fn is_zero(self) -> bool {
        self.idx == 0
    }

    pub fn is_one(self) -> bool {
        self.idx == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BddNode {
    /// Variable index; terminals carry `u32::MAX` so they order last.
    pub var: u32,
    pub hi: u32,
    pub lo: u32,
}

impl BddNode {
    pub fn is_terminal(&self) -> bool {
        self.var == TERMINAL_VAR
    }
}

#[derive(Debug)]
pub struct BddManager {
    id: u32,
    nodes: Vec<BddNode>,
    unique: HashMap<(u32, u32, u32), u32>,
    cache: HashMap<(u32, u32, u32), u32>,
    vars: Vec<String>,
    cap: usize,
}

impl BddManager {
    pub fn new(vars: Vec<String>) -> Self {
        Self::with_node_cap(vars, DEFAULT_NODE_CAP)
    }

    pub fn with_node_cap(vars: Vec<String>, cap: usize) -> Self {
        let terminal = |v| BddNode {
            var: TERMINAL_VAR,
            hi: v,
            lo: v,
        };
        BddManager {
            id: NEXT_MANAGER.fetch_add(1, Ordering::Relaxed),
            nodes: vec![terminal(0), terminal(1)],
            unique: HashMap::new(),
            cache: HashMap::new(),
            vars,
            cap,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.vars
    }

    /// Stored nodes, terminals included.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn zero(&self) -> Bdd {
        self.handle(0)
    }

    pub fn one(&self) -> Bdd {
        self.handle(1)
    }

    pub fn constant(&self, value: bool) -> Bdd {
        self.handle(u32::from(value))
    }

    fn handle(&self, idx: u32) -> Bdd {
        Bdd { mgr: self.id, idx }
    }

    fn check(&self, b: Bdd) -> Result<u32, BddError> {
        if b.mgr != self.id {
            return Err(BddError::ForeignNode);
        }
        Ok(b.idx)
    }

    pub fn node(&self, b: Bdd) -> Result<BddNode, BddError> {
        Ok(self.nodes[self.check(b)? as usize])
    }

    pub(crate) fn raw(&self, idx: u32) -> BddNode {
        self.nodes[idx as usize]
    }

    pub(crate) fn wrap(&self, idx: u32) -> Bdd {
        self.handle(idx)
    }

    pub fn hi(&self, b: Bdd) -> Result<Bdd, BddError> {
        Ok(self.handle(self.node(b)?.hi))
    }

    pub fn lo(&self, b: Bdd) -> Result<Bdd, BddError> {
        Ok(self.handle(self.node(b)?.lo))
    }

    /// Projection function of variable `i`.
    pub fn var(&mut self, i: usize) -> Result<Bdd, BddError> {
        assert!(i < self.vars.len(), "variable index out of range");
        let idx = self.mk_raw(i as u32, 1, 0)?;
        Ok(self.handle(idx))
    }

    /// The node `(var, hi, lo)`, created if needed; `hi == lo` collapses.
    pub fn mk(&mut self, var: usize, hi: Bdd, lo: Bdd) -> Result<Bdd, BddError> {
        let (h, l) = (self.check(hi)?, self.check(lo)?);
        assert!((var as u32) < self.nodes[h as usize].var && (var as u32) < self.nodes[l as usize].var);
        let idx = self.mk_raw(var as u32, h, l)?;
        Ok(self.handle(idx))
    }

    fn mk_raw(&mut self, var: u32, hi: u32, lo: u32) -> Result<u32, BddError> {
        if hi == lo {
            return Ok(hi);
        }
        if let Some(&n) = self.unique.get(&(var, hi, lo)) {
            return Ok(n);
        }
        if self.nodes.len() >= self.cap {
            return Err(BddError::Capacity { limit: self.cap });
        }
        let n = self.nodes.len() as u32;
        self.nodes.push(BddNode { var, hi, lo });
        self.unique.insert((var, hi, lo), n);
        Ok(n)
    }

    /// Existing node `(var, hi, lo)`, if stored.
    pub fn find(&self, var: u32, hi: u32, lo: u32) -> Option<Bdd> {
        self.unique.get(&(var, hi, lo)).map(|&n| self.handle(n))
    }

    pub fn ite(&mut self, f: Bdd, g: Bdd, h: Bdd) -> Result<Bdd, BddError> {
        let (f, g, h) = (self.check(f)?, self.check(g)?, self.check(h)?);
        let idx = self.ite_raw(f, g, h)?;
        Ok(self.handle(idx))
    }

    fn cofactors(&self, n: u32, var: u32) -> (u32, u32) {
        let node = self.nodes[n as usize];
        if node.var == var {
            (node.hi, node.lo)
        } else {
            (n, n)
        }
    }

    fn ite_raw(&mut self, f: u32, g: u32, h: u32) -> Result<u32, BddError> {
        if f == 1 {
            return Ok(g);
        }
        if f == 0 {
            return Ok(h);
        }
        if g == h {
            return Ok(g);
        }
        if g == 1 && h == 0 {
            return Ok(f);
        }
        if let Some(&r) = self.cache.get(&(f, g, h)) {
            return Ok(r);
        }
        let v = self.nodes[f as usize]
            .var
            .min(self.nodes[g as usize].var)
            .min(self.nodes[h as usize].var);
        let (f1, f0) = self.cofactors(f, v);
        let (g1, g0) = self.cofactors(g, v);
        let (h1, h0) = self.cofactors(h, v);
        let t = self.ite_raw(f1, g1, h1)?;
        let e = self.ite_raw(f0, g0, h0)?;
        let r = self.mk_raw(v, t, e)?;
        self.cache.insert((f, g, h), r);
        Ok(r)
    }

    pub fn not(&mut self, f: Bdd) -> Result<Bdd, BddError> {
        self.ite(f, self.zero(), self.one())
    }

    pub fn and(&mut self, f: Bdd, g: Bdd) -> Result<Bdd, BddError> {
        self.ite(f, g, self.zero())
    }

    pub fn or(&mut self, f: Bdd, g: Bdd) -> Result<Bdd, BddError> {
        self.ite(f, self.one(), g)
    }

    pub fn xor(&mut self, f: Bdd, g: Bdd) -> Result<Bdd, BddError> {
        let ng = self.not(g)?;
        self.ite(f, ng, g)
    }

    /// Drops the ITE cache; results never depend on it.
    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }

    /// Evaluates `f` with variable `i` set to `bits[i]`.
    pub fn eval(&self, f: Bdd, bits: &[bool]) -> Result<bool, BddError> {
        let mut n = self.check(f)?;
        loop {
            let node = self.nodes[n as usize];
            if node.is_terminal() {
                return Ok(n == 1);
            }
            n = if bits[node.var as usize] { node.hi } else { node.lo };
        }
    }

    /// Decision nodes reachable from `roots`, ascending by index, which is
    /// a children-first order.
    pub fn reachable(&self, roots: &[Bdd]) -> Result<Vec<u32>, BddError> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = Vec::new();
        for &r in roots {
            stack.push(self.check(r)?);
        }
        while let Some(n) = stack.pop() {
            if n < 2 || std::mem::replace(&mut seen[n as usize], true) {
                continue;
            }
            let node = self.nodes[n as usize];
            stack.push(node.hi);
            stack.push(node.lo);
        }
        Ok((0..self.nodes.len() as u32).filter(|&i| seen[i as usize]).collect())
    }
}

/// Multi-output function: one manager, one root per output.
#[derive(Debug)]
pub struct RobddForest {
    manager: BddManager,
    roots: Vec<(String, Bdd)>,
}

impl RobddForest {
    pub fn new(manager: BddManager, roots: Vec<(String, Bdd)>) -> Result<Self, BddError> {
        for (_, r) in &roots {
            manager.check(*r)?;
        }
        Ok(RobddForest { manager, roots })
    }

    pub fn manager(&self) -> &BddManager {
        &self.manager
    }

    pub fn manager_mut(&mut self) -> &mut BddManager {
        &mut self.manager
    }

    pub fn roots(&self) -> &[(String, Bdd)] {
        &self.roots
    }

    pub fn root_ids(&self) -> Vec<Bdd> {
        self.roots.iter().map(|(_, r)| *r).collect()
    }

    pub fn output_names(&self) -> impl Iterator<Item = &str> {
        self.roots.iter().map(|(n, _)| n.as_str())
    }

    /// Reachable decision nodes, children first.
    pub fn decision_nodes(&self) -> Vec<Bdd> {
        self.manager
            .reachable(&self.root_ids())
            .expect("roots are local")
            .into_iter()
            .map(|i| self.manager.wrap(i))
            .collect()
    }

    pub fn to_dot(&self) -> String {
        DecisionDiagram::from_forest(self).to_dot()
    }
}

/// Builds the ROBDDs of all outputs. `order` defaults to the input order and
/// may list variables the netlist does not use.
pub fn bdd_from_netlist(netlist: &Netlist, order: Option<&[String]>) -> Result<RobddForest, BddError> {
    bdd_from_netlist_capped(netlist, order, DEFAULT_NODE_CAP)
}

pub fn bdd_from_netlist_capped(netlist: &Netlist, order: Option<&[String]>, cap: usize) -> Result<RobddForest, BddError> {
    let vars: Vec<String> = match order {
        Some(o) => o.to_vec(),
        None => netlist.input_names().map(str::to_string).collect(),
    };
    let mut pos = HashMap::with_capacity(vars.len());
    for (i, v) in vars.iter().enumerate() {
        if pos.insert(v.as_str(), i).is_some() {
            return Err(BddError::DuplicateVariable(v.clone()));
        }
    }
    let mut m = BddManager::with_node_cap(vars.clone(), cap);
    let mut val: Vec<Bdd> = Vec::with_capacity(netlist.len());
    for id in netlist.ids() {
        let node = netlist.node(id);
        let f: Vec<Bdd> = node.fanins().iter().map(|x| val[x.index()]).collect();
        let b = match node.kind() {
            NodeKind::Input => {
                let name = netlist.name(id);
                let &i = pos
                    .get(name)
                    .ok_or_else(|| BddError::UnknownVariable(name.to_string()))?;
                m.var(i)?
            }
            NodeKind::Gate(g) => match g {
                GateKind::Const0 => m.zero(),
                GateKind::Const1 => m.one(),
                GateKind::Buf => f[0],
                GateKind::Inv => m.not(f[0])?,
                GateKind::And2 => m.and(f[0], f[1])?,
                GateKind::Or2 => m.or(f[0], f[1])?,
                GateKind::Nand2 => {
                    let x = m.and(f[0], f[1])?;
                    m.not(x)?
                }
                GateKind::Nor2 => {
                    let x = m.or(f[0], f[1])?;
                    m.not(x)?
                }
                GateKind::Xor2 => m.xor(f[0], f[1])?,
                GateKind::Xnor2 => {
                    let x = m.xor(f[0], f[1])?;
                    m.not(x)?
                }
                GateKind::Mux2 => m.ite(f[0], f[2], f[1])?,
            },
        };
        val.push(b);
    }
    let roots = netlist
        .outputs()
        .iter()
        .map(|o| (netlist.name(*o).to_string(), val[o.index()]))
        .collect();
    RobddForest::new(m, roots)
}

/// Branching-program evaluation of every output.
pub fn bdd_eval(forest: &RobddForest, x: &Assignment) -> Result<Assignment, BddError> {
    let bits = forest
        .manager
        .vars
        .iter()
        .map(|v| x.get(v).copied().ok_or_else(|| BddError::MissingVariable(v.clone())))
        .collect::<Result<Vec<bool>, _>>()?;
    forest
        .roots
        .iter()
        .map(|(name, r)| Ok((name.clone(), forest.manager.eval(*r, &bits)?)))
        .collect()
}

/// Reachable decision nodes; terminals are not counted.
pub fn count_nodes(forest: &RobddForest) -> usize {
    forest.decision_nodes().len()
}

/// Canonicity makes function equality identity of nodes.
pub fn bdd_equal(a: Bdd, b: Bdd) -> Result<bool, BddError> {
    if a.mgr != b.mgr {
        return Err(BddError::ForeignNode);
    }
    Ok(a.idx == b.idx)
}

/// Unordered pairs of reachable nodes with the same variable and swapped
/// children, smaller index first.
pub fn complementary_pairs(forest: &RobddForest) -> Vec<(Bdd, Bdd)> {
    let m = &forest.manager;
    let live = forest.decision_nodes();
    let reach: std::collections::HashSet<u32> = live.iter().map(|b| b.idx).collect();
    let mut out = Vec::new();
    for d in live {
        let n = m.raw(d.idx);
        if let Some(c) = m.find(n.var, n.lo, n.hi) {
            if c.idx > d.idx && reach.contains(&c.idx) {
                out.push((d, c));
            }
        }
    }
    out
}
