//! Random netlists for tests and experiments.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{GateKind, Netlist, NetlistBuilder, NodeId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomSpec {
    pub inputs: usize,
    pub gates: usize,
    pub outputs: usize,
    pub kinds: Vec<GateKind>,
}

impl RandomSpec {
    /// Every non-constant cell kind.
    pub fn new(inputs: usize, gates: usize, outputs: usize) -> Self {
        RandomSpec {
            inputs,
            gates,
            outputs,
            kinds: GateKind::ALL.into_iter().filter(|k| k.arity() > 0).collect(),
        }
    }
}

/// A netlist with `spec.gates` gates of uniformly drawn kinds over uniformly
/// drawn earlier signals. Outputs are the last `spec.outputs` gates.
pub fn random_netlist<R: Rng + ?Sized>(rng: &mut R, spec: &RandomSpec) -> Netlist {
    assert!(spec.inputs > 0 && spec.gates > 0 && !spec.kinds.is_empty());
    let mut b = NetlistBuilder::new();
    let mut ids: Vec<NodeId> = (0..spec.inputs)
        .map(|i| b.add_input(format!("x{i}")).expect("fresh name"))
        .collect();
    for g in 0..spec.gates {
        let kind = *spec.kinds.choose(rng).expect("non-empty");
        let fanins: Vec<NodeId> = (0..kind.arity()).map(|_| ids[rng.gen_range(0..ids.len())]).collect();
        ids.push(b.add_gate(kind, &fanins, format!("g{g}")).expect("fresh name"));
    }
    let outputs = spec.outputs.clamp(1, spec.gates);
    for &id in &ids[ids.len() - outputs..] {
        b.add_output(id).expect("known node");
    }
    b.build()
}
