//! And-inverter graph used as the synthesis working form.
//!
//! Complemented edges make De Morgan forms and double inversions
//! canonical. Constant folding, structural hashing and the two-level
//! rewrite rules are applied as nodes are created.

use std::collections::HashMap;

use crate::circuit::{GateKind, Netlist, NodeKind};

/// Edge literal: node index shifted left once, low bit set when complemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub const FALSE: Lit = Lit(0);
    pub const TRUE: Lit = Lit(1);

    #[inline]
    pub fn new(node: u32, complemented: bool) -> Lit {
        Lit(node << 1 | u32::from(complemented))
    }

    #[inline]
    pub fn node(self) -> u32 {
        self.0 >> 1
    }

    #[inline]
    pub fn is_complemented(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn regular(self) -> Lit {
        Lit(self.0 & !1)
    }

    #[inline]
    pub fn is_const(self) -> bool {
        self.node() == 0
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AigNode {
    Const,
    Input(u32),
    And(Lit, Lit),
}

/// Construction-time simplifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BuildOptions {
    pub fold: bool,
    pub strash: bool,
    pub rewrite: bool,
}

#[derive(Debug, Clone)]
pub struct Aig {
    nodes: Vec<AigNode>,
    num_inputs: usize,
    outputs: Vec<Lit>,
    table: HashMap<(Lit, Lit), u32>,
    opts: BuildOptions,
}

impl Aig {
    pub fn new(num_inputs: usize, opts: BuildOptions) -> Self {
        let mut nodes = Vec::with_capacity(num_inputs + 1);
        nodes.push(AigNode::Const);
        nodes.extend((0..num_inputs as u32).map(AigNode::Input));
        Aig {
            nodes,
            num_inputs,
            outputs: Vec::new(),
            table: HashMap::new(),
            opts,
        }
    }

    pub fn nodes(&self) -> &[AigNode] {
        &self.nodes
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_ands(&self) -> usize {
        self.nodes.len() - 1 - self.num_inputs
    }

    pub fn input(&self, i: usize) -> Lit {
        Lit::new(i as u32 + 1, false)
    }

    pub fn outputs(&self) -> &[Lit] {
        &self.outputs
    }

    pub fn push_output(&mut self, l: Lit) {
        self.outputs.push(l);
    }

    fn children(&self, l: Lit) -> Option<(Lit, Lit)> {
        match self.nodes[l.node() as usize] {
            AigNode::And(a, b) => Some((a, b)),
            _ => None,
        }
    }

    fn create(&mut self, a: Lit, b: Lit) -> Lit {
        if self.opts.strash {
            if let Some(&n) = self.table.get(&(a, b)) {
                return Lit::new(n, false);
            }
        }
        let n = self.nodes.len() as u32;
        self.nodes.push(AigNode::And(a, b));
        if self.opts.strash {
            self.table.insert((a, b), n);
        }
        Lit::new(n, false)
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if self.opts.fold {
            if a == Lit::FALSE {
                return Lit::FALSE;
            }
            if a == Lit::TRUE {
                return b;
            }
            if a == b {
                return a;
            }
            if a == !b {
                return Lit::FALSE;
            }
        }
        if self.opts.rewrite {
            if let Some(l) = self.two_level(a, b) {
                return l;
            }
        }
        self.create(a, b)
    }

    /// Two-level AND rules: contradiction, idempotence, subsumption,
    /// substitution and resolution.
    fn two_level(&mut self, a: Lit, b: Lit) -> Option<Lit> {
        for (x, y) in [(a, b), (b, a)] {
            let Some((x0, x1)) = self.children(x) else { continue };
            if !x.is_complemented() {
                // (x0 & x1) & !x0 = 0 ; (x0 & x1) & x0 = x
                if y == !x0 || y == !x1 {
                    return Some(Lit::FALSE);
                }
                if y == x0 || y == x1 {
                    return Some(x);
                }
            } else {
                // !(x0 & x1) & !x0 = !x0
                if y == !x0 || y == !x1 {
                    return Some(y);
                }
                // !(x0 & x1) & x0 = x0 & !x1
                if y == x0 {
                    return Some(self.and(y, !x1));
                }
                if y == x1 {
                    return Some(self.and(y, !x0));
                }
            }
        }
        let (Some((a0, a1)), Some((b0, b1))) = (self.children(a), self.children(b)) else {
            return None;
        };
        match (a.is_complemented(), b.is_complemented()) {
            (false, false) => {
                // (p & q) & (!p & r) = 0
                if a0 == !b0 || a0 == !b1 || a1 == !b0 || a1 == !b1 {
                    return Some(Lit::FALSE);
                }
            }
            (true, true) => {
                // !(p & q) & !(!p & q) = !q
                for (p, q) in [(a0, a1), (a1, a0)] {
                    if (b0 == !p && b1 == q) || (b1 == !p && b0 == q) {
                        return Some(!q);
                    }
                }
            }
            (neg_a, _) => {
                // !(p & q) & (r & s) with p = !r: the positive side implies the negative one.
                let (n0, n1, pos, p0, p1) = if neg_a { (a0, a1, b, b0, b1) } else { (b0, b1, a, a0, a1) };
                if n0 == !p0 || n0 == !p1 || n1 == !p0 || n1 == !p1 {
                    return Some(pos);
                }
            }
        }
        None
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and(!a, !b)
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        let p = self.and(a, !b);
        let q = self.and(!a, b);
        self.or(p, q)
    }

    pub fn mux(&mut self, sel: Lit, in0: Lit, in1: Lit) -> Lit {
        let p = self.and(!sel, in0);
        let q = self.and(sel, in1);
        self.or(p, q)
    }

    /// Builds the AIG of `netlist`. `pins[i]`, when set, ties input `i` to
    /// a constant; pinned inputs disappear from the AIG interface.
    pub fn from_netlist(netlist: &Netlist, pins: &[Option<bool>], opts: BuildOptions) -> Aig {
        assert_eq!(pins.len(), netlist.num_inputs());
        let free = pins.iter().filter(|p| p.is_none()).count();
        let mut aig = Aig::new(free, opts);
        let mut lit = Vec::with_capacity(netlist.len());
        let mut next_input = 0;
        for &pin in pins {
            lit.push(match pin {
                Some(true) => Lit::TRUE,
                Some(false) => Lit::FALSE,
                None => {
                    next_input += 1;
                    aig.input(next_input - 1)
                }
            });
        }
        for id in netlist.gate_ids() {
            let node = netlist.node(id);
            let f: Vec<Lit> = node.fanins().iter().map(|x| lit[x.index()]).collect();
            let l = match node.kind() {
                NodeKind::Input => unreachable!(),
                NodeKind::Gate(g) => match g {
                    GateKind::Const0 => Lit::FALSE,
                    GateKind::Const1 => Lit::TRUE,
                    GateKind::Buf => f[0],
                    GateKind::Inv => !f[0],
                    GateKind::And2 => aig.and(f[0], f[1]),
                    GateKind::Nand2 => !aig.and(f[0], f[1]),
                    GateKind::Or2 => aig.or(f[0], f[1]),
                    GateKind::Nor2 => !aig.or(f[0], f[1]),
                    GateKind::Xor2 => aig.xor(f[0], f[1]),
                    GateKind::Xnor2 => !aig.xor(f[0], f[1]),
                    GateKind::Mux2 => aig.mux(f[0], f[1], f[2]),
                },
            };
            lit.push(l);
        }
        for &o in netlist.outputs() {
            aig.push_output(lit[o.index()]);
        }
        aig
    }

    /// Copies the nodes reachable from the outputs into a fresh graph built
    /// with `opts`, preserving their relative order.
    pub fn rebuild(&self, opts: BuildOptions) -> Aig {
        let mut live = vec![false; self.nodes.len()];
        let mut stack: Vec<u32> = self.outputs.iter().map(|l| l.node()).collect();
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut live[n as usize], true) {
                continue;
            }
            if let AigNode::And(a, b) = self.nodes[n as usize] {
                stack.push(a.node());
                stack.push(b.node());
            }
        }
        let mut out = Aig::new(self.num_inputs, opts);
        let mut map: Vec<Lit> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let l = match *node {
                AigNode::Const => Lit::FALSE,
                AigNode::Input(k) => out.input(k as usize),
                AigNode::And(a, b) if live[i] => {
                    let ma = map[a.node() as usize];
                    let mb = map[b.node() as usize];
                    out.and(
                        if a.is_complemented() { !ma } else { ma },
                        if b.is_complemented() { !mb } else { mb },
                    )
                }
                AigNode::And(..) => Lit::FALSE,
            };
            map.push(l);
        }
        for &o in &self.outputs {
            let m = map[o.node() as usize];
            out.push_output(if o.is_complemented() { !m } else { m });
        }
        out
    }

    pub fn options(&self) -> BuildOptions {
        self.opts
    }

    pub fn same_structure(&self, other: &Aig) -> bool {
        self.nodes == other.nodes && self.outputs == other.outputs
    }

    /// Evaluates 64 patterns; one word per input, returns one per output.
    pub fn simulate_words(&self, inputs: &[u64]) -> Vec<u64> {
        let mut v = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            v.push(match *n {
                AigNode::Const => 0,
                AigNode::Input(i) => inputs[i as usize],
                AigNode::And(a, b) => {
                    let wa = v[a.node() as usize] ^ if a.is_complemented() { !0 } else { 0 };
                    let wb = v[b.node() as usize] ^ if b.is_complemented() { !0 } else { 0 };
                    wa & wb
                }
            });
        }
        self.outputs
            .iter()
            .map(|o| v[o.node() as usize] ^ if o.is_complemented() { !0 } else { 0 })
            .collect()
    }
}
