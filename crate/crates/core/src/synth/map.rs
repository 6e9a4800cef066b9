//! Polarity-aware technology mapping of an AIG onto two-input cells.
//!
//! Every AND node can be realised in either polarity by a direct cell
//! (AND2/NOR2 for the true value, NAND2/OR2 for the complement) or by an
//! inverter on the opposite polarity. A bottom-up pass computes tree costs,
//! a top-down pass picks implementations for the polarities actually used.

use crate::circuit::{GateHistogram, GateKind, NetlistBuilder, NetlistError, Netlist, NodeId};

use super::aig::{Aig, AigNode, Lit};

const INF: u32 = u32::MAX / 4;

/// Mapped gate; fanins index the signal space where inputs come first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MappedGate {
    pub kind: GateKind,
    pub fanins: [u32; 2],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mapped {
    pub num_inputs: usize,
    pub gates: Vec<MappedGate>,
    /// One distinct gate signal per output.
    pub outputs: Vec<u32>,
}

#[derive(Debug, Clone, Copy)]
pub struct Library {
    cells: [bool; GateKind::COUNT],
}

impl Library {
    pub fn new(kinds: impl IntoIterator<Item = GateKind>) -> Self {
        let mut cells = [false; GateKind::COUNT];
        for k in kinds {
            cells[k.index()] = true;
        }
        Library { cells }
    }

    pub fn has(&self, k: GateKind) -> bool {
        self.cells[k.index()]
    }
}

/// Direct realisations of one polarity: (cell, fanin literals inverted?).
fn candidates(pol: usize) -> [(GateKind, bool); 2] {
    if pol == 0 {
        [(GateKind::Nor2, true), (GateKind::And2, false)]
    } else {
        [(GateKind::Nand2, false), (GateKind::Or2, true)]
    }
}

#[derive(Clone, Copy)]
enum Impl {
    None,
    Direct(GateKind, bool),
    Inverted,
}

fn pol_of(l: Lit, invert: bool) -> usize {
    usize::from(l.is_complemented() ^ invert)
}

pub fn map(aig: &Aig, lib: &Library) -> Mapped {
    let nodes = aig.nodes();
    let n = nodes.len();
    let inv_ok = lib.has(GateKind::Inv);

    // Bottom-up tree costs per polarity.
    let mut direct = vec![[INF; 2]; n];
    let mut best = vec![[INF; 2]; n];
    for (i, node) in nodes.iter().enumerate() {
        match *node {
            AigNode::Const => {
                direct[i] = [1, 1];
            }
            AigNode::Input(_) => {
                direct[i] = [0, INF];
            }
            AigNode::And(a, b) => {
                for pol in 0..2 {
                    for (kind, invert) in candidates(pol) {
                        if !lib.has(kind) {
                            continue;
                        }
                        let c = 1 + best[a.node() as usize][pol_of(a, invert)] + best[b.node() as usize][pol_of(b, invert)];
                        direct[i][pol] = direct[i][pol].min(c.min(INF));
                    }
                }
            }
        }
        for pol in 0..2 {
            let via_inv = if inv_ok { direct[i][1 - pol].saturating_add(1) } else { INF };
            best[i][pol] = direct[i][pol].min(via_inv).min(INF);
        }
    }

    // Top-down selection.
    let mut need = vec![[false; 2]; n];
    for o in aig.outputs() {
        need[o.node() as usize][usize::from(o.is_complemented())] = true;
    }
    let mut choice = vec![[Impl::None; 2]; n];
    for i in (0..n).rev() {
        let req = need[i];
        if !req[0] && !req[1] {
            continue;
        }
        let d = direct[i];
        let plan: [bool; 2] = match nodes[i] {
            AigNode::Const => req,
            AigNode::Input(_) => [true, false],
            AigNode::And(..) => {
                if req[0] && req[1] {
                    let options = [(d[0].saturating_add(1), [true, false]), (d[1].saturating_add(1), [false, true]), (d[0].saturating_add(d[1]), [true, true])];
                    options.iter().min_by_key(|o| o.0).expect("non-empty").1
                } else {
                    let p = usize::from(req[1]);
                    if d[p] <= d[1 - p].saturating_add(1) {
                        let mut m = [false; 2];
                        m[p] = true;
                        m
                    } else {
                        let mut m = [false; 2];
                        m[1 - p] = true;
                        m
                    }
                }
            }
        };
        for pol in 0..2 {
            if plan[pol] {
                choice[i][pol] = match nodes[i] {
                    AigNode::And(a, b) => {
                        let (kind, invert) = candidates(pol)
                            .into_iter()
                            .filter(|(k, _)| lib.has(*k))
                            .min_by_key(|(_, inv)| {
                                1 + best[a.node() as usize][pol_of(a, *inv)] + best[b.node() as usize][pol_of(b, *inv)]
                            })
                            .expect("library has a two-input cell");
                        need[a.node() as usize][pol_of(a, invert)] = true;
                        need[b.node() as usize][pol_of(b, invert)] = true;
                        Impl::Direct(kind, invert)
                    }
                    _ => Impl::Direct(GateKind::Buf, false),
                };
            } else if req[pol] {
                choice[i][pol] = Impl::Inverted;
            }
        }
    }

    // Emission in node order; direct cells before inverters.
    let num_inputs = aig.num_inputs();
    let mut gates: Vec<MappedGate> = Vec::new();
    let mut signal = vec![[u32::MAX; 2]; n];
    let emit = |gates: &mut Vec<MappedGate>, kind, fanins| {
        gates.push(MappedGate { kind, fanins });
        (num_inputs + gates.len() - 1) as u32
    };
    for i in 0..n {
        for pol in 0..2 {
            if let Impl::Direct(kind, invert) = choice[i][pol] {
                signal[i][pol] = match nodes[i] {
                    AigNode::Const => {
                        let k = if pol == 0 { GateKind::Const0 } else { GateKind::Const1 };
                        emit(&mut gates, k, [0, 0])
                    }
                    AigNode::Input(k) => k,
                    AigNode::And(a, b) => {
                        let fa = signal[a.node() as usize][pol_of(a, invert)];
                        let fb = signal[b.node() as usize][pol_of(b, invert)];
                        emit(&mut gates, kind, [fa, fb])
                    }
                };
            }
        }
        for pol in 0..2 {
            if let Impl::Inverted = choice[i][pol] {
                let src = signal[i][1 - pol];
                signal[i][pol] = emit(&mut gates, GateKind::Inv, [src, 0]);
            }
        }
    }

    let mut taken = vec![false; num_inputs + gates.len()];
    let mut outputs = Vec::with_capacity(aig.outputs().len());
    for o in aig.outputs() {
        let s = signal[o.node() as usize][usize::from(o.is_complemented())];
        let s = if (s as usize) < num_inputs || taken[s as usize] {
            let b = emit(&mut gates, GateKind::Buf, [s, 0]);
            taken.push(false);
            b
        } else {
            s
        };
        taken[s as usize] = true;
        outputs.push(s);
    }
    Mapped {
        num_inputs,
        gates,
        outputs,
    }
}

impl Mapped {
    pub fn histogram(&self) -> GateHistogram {
        let mut h = GateHistogram::new();
        for g in &self.gates {
            h.add(g.kind, 1);
        }
        h
    }

    pub fn to_netlist<S: AsRef<str>>(&self, input_names: &[S], output_names: &[S]) -> Result<Netlist, NetlistError> {
        let mut b = NetlistBuilder::new();
        for name in output_names {
            b.reserve_name(name.as_ref());
        }
        let mut ids: Vec<NodeId> = Vec::with_capacity(self.num_inputs + self.gates.len());
        for name in input_names {
            ids.push(b.add_input(name.as_ref())?);
        }
        for g in &self.gates {
            let fanins: Vec<NodeId> = g.fanins[..g.kind.arity()].iter().map(|&f| ids[f as usize]).collect();
            ids.push(b.add_gate_fresh(g.kind, &fanins, "n")?);
        }
        for (&o, name) in self.outputs.iter().zip(output_names) {
            b.add_named_output(ids[o as usize], name.as_ref())?;
        }
        Ok(b.build())
    }
}
