//! Hardwiring inputs to constants and folding the constants forward.

use crate::circuit::{Assignment, GateKind, Netlist, NetlistBuilder, NodeId, NodeKind};

use super::SynthError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Val {
    Const(bool),
    /// Same signal as another original node.
    Alias(NodeId),
    /// The node survives as a gate over the listed original nodes.
    Gate(GateKind, [Operand; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Operand {
    Node(NodeId),
    Const(bool),
}

/// Ties the inputs named in `pins` to constants, folds constants through
/// their fanout and removes logic that no longer reaches an output. Pinned
/// inputs disappear; every other input is kept, used or not.
pub fn const_propagate(netlist: &Netlist, pins: &Assignment) -> Result<Netlist, SynthError> {
    for name in pins.keys() {
        match netlist.id_of(name) {
            Some(id) if netlist.node(id).is_input() => {}
            _ => return Err(SynthError::UnknownPin(name.clone())),
        }
    }

    let mut val: Vec<Val> = Vec::with_capacity(netlist.len());
    for id in netlist.ids() {
        let node = netlist.node(id);
        let v = match node.kind() {
            NodeKind::Input => match pins.get(netlist.name(id)) {
                Some(&b) => Val::Const(b),
                None => Val::Alias(id),
            },
            NodeKind::Gate(kind) => {
                let ops: Vec<Operand> = node
                    .fanins()
                    .iter()
                    .map(|f| match val[f.index()] {
                        Val::Const(b) => Operand::Const(b),
                        Val::Alias(t) => Operand::Node(t),
                        Val::Gate(..) => Operand::Node(*f),
                    })
                    .collect();
                fold(kind, &ops, id)
            }
        };
        val.push(v);
    }

    // Liveness from the outputs.
    let mut live = vec![false; netlist.len()];
    let mut stack: Vec<NodeId> = netlist
        .outputs()
        .iter()
        .filter_map(|o| match val[o.index()] {
            Val::Alias(t) => Some(t),
            Val::Gate(..) => Some(*o),
            Val::Const(_) => None,
        })
        .collect();
    while let Some(id) = stack.pop() {
        if std::mem::replace(&mut live[id.index()], true) {
            continue;
        }
        if let Val::Gate(kind, ops) = val[id.index()] {
            for op in &ops[..kind.arity()] {
                if let Operand::Node(t) = op {
                    stack.push(*t);
                }
            }
        }
    }

    let mut b = NetlistBuilder::new();
    for id in netlist.ids() {
        b.reserve_name(netlist.name(id));
    }
    let mut new_id: Vec<Option<NodeId>> = vec![None; netlist.len()];
    for id in netlist.inputs() {
        if !pins.contains_key(netlist.name(id)) {
            new_id[id.index()] = Some(b.add_input(netlist.name(id))?);
        }
    }
    let mut consts: [Option<NodeId>; 2] = [None, None];
    for id in netlist.gate_ids() {
        if !live[id.index()] {
            continue;
        }
        let Val::Gate(kind, ops) = val[id.index()] else { continue };
        let mut fanins = Vec::with_capacity(3);
        for op in &ops[..kind.arity()] {
            fanins.push(match *op {
                Operand::Node(t) => new_id[t.index()].expect("fanins emitted first"),
                Operand::Const(c) => match consts[usize::from(c)] {
                    Some(cid) => cid,
                    None => {
                        let k = if c { GateKind::Const1 } else { GateKind::Const0 };
                        let cid = b.add_gate_fresh(k, &[], if c { "const1_" } else { "const0_" })?;
                        consts[usize::from(c)] = Some(cid);
                        cid
                    }
                },
            });
        }
        new_id[id.index()] = Some(b.add_gate(kind, &fanins, netlist.name(id))?);
    }
    for &o in netlist.outputs() {
        let name = netlist.name(o);
        match val[o.index()] {
            Val::Const(c) => {
                let k = if c { GateKind::Const1 } else { GateKind::Const0 };
                let g = if b.contains_name(name) {
                    b.add_gate_fresh(k, &[], &format!("{name}_"))?
                } else {
                    b.add_gate(k, &[], name)?
                };
                b.add_output(g)?;
            }
            Val::Alias(t) => {
                b.add_named_output(new_id[t.index()].expect("live"), name)?;
            }
            Val::Gate(..) => {
                b.add_named_output(new_id[o.index()].expect("live"), name)?;
            }
        }
    }
    Ok(b.build())
}

fn fold(kind: GateKind, ops: &[Operand], this: NodeId) -> Val {
    use GateKind::*;
    use Operand::{Const as C, Node as N};
    let inv = |t: NodeId| Val::Gate(Inv, [N(t), N(t), N(t)]);
    let keep = || {
        let mut a = [C(false); 3];
        a[..ops.len()].copy_from_slice(ops);
        Val::Gate(kind, a)
    };
    match (kind, ops) {
        (Const0, _) => Val::Const(false),
        (Const1, _) => Val::Const(true),
        (Buf, [C(x)]) => Val::Const(*x),
        (Inv, [C(x)]) => Val::Const(!*x),
        (Buf | Inv, _) => keep(),
        (Mux2, [C(s), a, b]) => operand_val(if *s { *b } else { *a }),
        (Mux2, [N(s), C(a), C(b)]) => match (a, b) {
            (false, false) => Val::Const(false),
            (true, true) => Val::Const(true),
            (false, true) => Val::Alias(*s),
            (true, false) => inv(*s),
        },
        (Mux2, [_, a, b]) if a == b => operand_val(*a),
        (Mux2, _) => keep(),
        (_, [C(x), C(y)]) => Val::Const(kind.eval_words(word(*x), word(*y), 0) & 1 == 1),
        (_, [C(c), N(s)] | [N(s), C(c)]) => {
            let c = *c;
            match kind {
                And2 if !c => Val::Const(false),
                And2 => Val::Alias(*s),
                Nand2 if !c => Val::Const(true),
                Nand2 => inv(*s),
                Or2 if c => Val::Const(true),
                Or2 => Val::Alias(*s),
                Nor2 if c => Val::Const(false),
                Nor2 => inv(*s),
                Xor2 if c => inv(*s),
                Xor2 => Val::Alias(*s),
                Xnor2 if c => Val::Alias(*s),
                Xnor2 => inv(*s),
                _ => unreachable!("two-input kinds only"),
            }
        }
        _ => {
            let _ = this;
            keep()
        }
    }
}

fn word(b: bool) -> u64 {
    if b {
        !0
    } else {
        0
    }
}

fn operand_val(op: Operand) -> Val {
    match op {
        Operand::Const(b) => Val::Const(b),
        Operand::Node(t) => Val::Alias(t),
    }
}
