//! Synthetic controller benchmarks.
//!
//! Each circuit is the combinational core of a small finite-state
//! controller: present-state and primary inputs feed a PLA-style block of
//! shared product terms whose sums form the next-state and control outputs.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{GateKind, Netlist, NetlistBuilder, NetlistError, NodeId};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllerSpec {
    pub name: String,
    pub state_bits: usize,
    pub inputs: usize,
    pub outputs: usize,
    /// Distinct product terms shared among all sums.
    pub terms: usize,
    pub min_literals: usize,
    pub max_literals: usize,
    /// Terms per sum.
    pub fan_in: usize,
    pub seed: u64,
}

/// The bundled benchmark set.
pub fn bundled_specs() -> Vec<ControllerSpec> {
    let spec = |name: &str, state_bits, inputs, outputs, terms, fan_in, seed| ControllerSpec {
        name: name.to_string(),
        state_bits,
        inputs,
        outputs,
        terms,
        min_literals: 2,
        max_literals: 5,
        fan_in,
        seed,
    };
    vec![
        spec("ctrl_a", 5, 8, 14, 64, 6, 11),
        spec("ctrl_b", 6, 8, 16, 84, 7, 23),
        spec("ctrl_c", 6, 9, 18, 110, 8, 37),
    ]
}

/// Builds the controller described by `spec`, deterministic in its seed.
pub fn controller(spec: &ControllerSpec) -> Result<Netlist, NetlistError> {
    let mut g = rng::seeded(spec.seed);
    let mut b = NetlistBuilder::new();
    let mut vars: Vec<NodeId> = Vec::new();
    for i in 0..spec.state_bits {
        vars.push(b.add_input(format!("s{i}"))?);
    }
    for i in 0..spec.inputs {
        vars.push(b.add_input(format!("i{i}"))?);
    }
    let mut neg: Vec<Option<NodeId>> = vec![None; vars.len()];

    let mut terms = Vec::with_capacity(spec.terms);
    for t in 0..spec.terms {
        let width = g.gen_range(spec.min_literals..=spec.max_literals).min(vars.len());
        let mut chosen: Vec<usize> = (0..vars.len()).collect();
        chosen.shuffle(&mut g);
        chosen.truncate(width);
        chosen.sort_unstable();
        let mut lits = Vec::with_capacity(width);
        for v in chosen {
            if g.gen::<bool>() {
                lits.push(vars[v]);
            } else {
                let n = match neg[v] {
                    Some(n) => n,
                    None => {
                        let n = b.add_gate(GateKind::Inv, &[vars[v]], format!("{}_n", b.name(vars[v])))?;
                        neg[v] = Some(n);
                        n
                    }
                };
                lits.push(n);
            }
        }
        terms.push(chain(&mut b, GateKind::And2, &lits, &format!("p{t}_"))?);
    }

    for o in 0..spec.outputs {
        let mut picked: Vec<usize> = (0..terms.len()).collect();
        picked.shuffle(&mut g);
        picked.truncate(spec.fan_in.min(terms.len()));
        picked.sort_unstable();
        let lits: Vec<NodeId> = picked.iter().map(|&t| terms[t]).collect();
        let name = if o < spec.state_bits { format!("ns{o}") } else { format!("y{}", o - spec.state_bits) };
        let sum = chain(&mut b, GateKind::Or2, &lits, &format!("{name}_"))?;
        b.add_named_output(sum, &name)?;
    }
    Ok(b.build())
}

fn chain(b: &mut NetlistBuilder, kind: GateKind, lits: &[NodeId], prefix: &str) -> Result<NodeId, NetlistError> {
    let mut acc = lits[0];
    for &l in &lits[1..] {
        acc = b.add_gate_fresh(kind, &[acc, l], prefix)?;
    }
    if lits.len() == 1 {
        acc = b.add_gate_fresh(GateKind::Buf, &[acc], prefix)?;
    }
    Ok(acc)
}
