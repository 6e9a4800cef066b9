//! Deterministic synthesis: netlist → AIG → two-level rewriting →
//! technology mapping.
//!
//! ```
//! use logiclock::circuit::parse_bench;
//! use logiclock::synth::{synthesize, SynthConfig};
//!
//! let n = parse_bench("INPUT(a)\nOUTPUT(f)\nx = INV(a)\nf = INV(x)\n").unwrap();
//! let s = synthesize(&n, &SynthConfig::default()).unwrap();
//! assert_eq!(s.num_gates(), 1); // a single BUF driving the output
//! ```

mod aig;
mod constprop;
mod map;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{GateHistogram, GateKind, Netlist, NetlistError};

pub use aig::{Aig, AigNode, BuildOptions, Lit};
pub use constprop::const_propagate;
pub use map::{Library, Mapped, MappedGate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),
    #[error("unknown pin `{0}`")]
    UnknownPin(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

/// Pipeline stages. Constant folding and structural hashing act while the
/// graph is built, so listing them switches them on for every later stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pass {
    ConstFold,
    Sweep,
    Strash,
    Rewrite,
    Map,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub passes: Vec<Pass>,
    pub rewrite_limit: usize,
    pub library: BTreeSet<GateKind>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            passes: vec![Pass::ConstFold, Pass::Sweep, Pass::Strash, Pass::Rewrite, Pass::Map],
            rewrite_limit: 8,
            library: [GateKind::Nand2, GateKind::Nor2, GateKind::Inv].into_iter().collect(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        if self.passes.is_empty() {
            return bad("pass list is empty");
        }
        if self.rewrite_limit == 0 {
            return bad("rewrite_limit must be at least 1");
        }
        if self.passes.last() != Some(&Pass::Map) || self.passes.iter().filter(|p| **p == Pass::Map).count() != 1 {
            return bad("`map` must appear exactly once, as the last pass");
        }
        if !self.library.contains(&GateKind::Inv) {
            return bad("library must contain INV");
        }
        let two_input = [GateKind::And2, GateKind::Or2, GateKind::Nand2, GateKind::Nor2];
        if !two_input.iter().any(|k| self.library.contains(k)) {
            return bad("library needs one of AND2, OR2, NAND2, NOR2");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let cfg: SynthConfig =
            serde_json::from_str(text).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn build_options(&self) -> BuildOptions {
        BuildOptions {
            fold: self.passes.contains(&Pass::ConstFold),
            strash: self.passes.contains(&Pass::Strash),
            rewrite: false,
        }
    }
}

fn run(aig: Aig, cfg: &SynthConfig) -> Mapped {
    let opts = cfg.build_options();
    let mut aig = aig;
    for pass in &cfg.passes {
        match pass {
            Pass::ConstFold | Pass::Strash => {}
            Pass::Sweep => aig = aig.rebuild(opts),
            Pass::Rewrite => {
                let ropts = BuildOptions { rewrite: true, ..opts };
                for _ in 0..cfg.rewrite_limit {
                    let next = aig.rebuild(ropts);
                    let done = next.same_structure(&aig);
                    aig = next;
                    if done {
                        break;
                    }
                }
            }
            Pass::Map => {}
        }
    }
    let lib = Library::new(cfg.library.iter().copied());
    map::map(&aig, &lib)
}

/// Runs the pipeline with some inputs tied to constants and returns the
/// mapped form. Pinned inputs vanish from the interface.
pub fn synthesize_mapped(netlist: &Netlist, pins: &[Option<bool>], cfg: &SynthConfig) -> Mapped {
    let aig = Aig::from_netlist(netlist, pins, cfg.build_options());
    run(aig, cfg)
}

/// Gate histogram of the synthesized netlist with `pins` hardwired, without
/// materializing names.
pub fn synthesized_histogram(netlist: &Netlist, pins: &[Option<bool>], cfg: &SynthConfig) -> GateHistogram {
    synthesize_mapped(netlist, pins, cfg).histogram()
}

pub fn synthesize(netlist: &Netlist, cfg: &SynthConfig) -> Result<Netlist, SynthError> {
    cfg.validate()?;
    let mapped = synthesize_mapped(netlist, &vec![None; netlist.num_inputs()], cfg);
    let inputs: Vec<&str> = netlist.input_names().collect();
    let outputs: Vec<&str> = netlist.output_names().collect();
    Ok(mapped.to_netlist(&inputs, &outputs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{equivalent, parse_bench};

    #[test]
    fn double_inversion_collapses() {
        let n = parse_bench("INPUT(a)\nOUTPUT(f)\nx = INV(a)\nf = INV(x)\n").unwrap();
        let s = synthesize(&n, &SynthConfig::default()).unwrap();
        assert_eq!(s.num_gates(), 1);
        assert_eq!(s.gate_histogram().get(GateKind::Buf), 1);
        assert!(equivalent(&n, &s).unwrap());
    }

    #[test]
    fn redundant_and_maps_to_two_gates() {
        // (a & b) | (a & b & b) written with extra structure
        let n = parse_bench(
            "INPUT(a)\nINPUT(b)\nOUTPUT(f)\nx = AND(a, b)\ny = AND(x, b)\nz = OR(x, y)\nf = BUF(z)\n",
        )
        .unwrap();
        let s = synthesize(&n, &SynthConfig::default()).unwrap();
        let h = s.gate_histogram();
        assert_eq!(h.total(), 2);
        assert_eq!(h.get(GateKind::Nand2), 1);
        assert_eq!(h.get(GateKind::Inv), 1);
        assert!(equivalent(&n, &s).unwrap());
    }

    #[test]
    fn library_is_respected() {
        let n = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(f)\nx = XOR(a, b)\nf = MUX(c, x, a)\n").unwrap();
        for lib in [
            vec![GateKind::Nand2, GateKind::Inv],
            vec![GateKind::Nor2, GateKind::Inv],
            vec![GateKind::And2, GateKind::Or2, GateKind::Inv],
        ] {
            let cfg = SynthConfig {
                library: lib.iter().copied().collect(),
                ..SynthConfig::default()
            };
            let s = synthesize(&n, &cfg).unwrap();
            assert!(equivalent(&n, &s).unwrap());
            for (k, c) in s.gate_histogram().iter() {
                assert!(c == 0 || lib.contains(&k) || k == GateKind::Buf, "{k} used");
            }
        }
    }

    #[test]
    fn config_json_round_trip_and_validation() {
        let cfg = SynthConfig::default();
        assert_eq!(SynthConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let partial = SynthConfig::from_json(r#"{"rewrite_limit": 3}"#).unwrap();
        assert_eq!(partial.rewrite_limit, 3);
        assert!(SynthConfig::from_json(r#"{"passes": []}"#).is_err());
        assert!(SynthConfig::from_json(r#"{"rewrite_limit": 0}"#).is_err());
        assert!(SynthConfig::from_json(r#"{"passes": ["map", "sweep"]}"#).is_err());
        assert!(SynthConfig::from_json(r#"{"library": ["NAND2"]}"#).is_err());
        assert!(SynthConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn constant_and_aliased_outputs() {
        let n = parse_bench("INPUT(a)\nOUTPUT(f)\nOUTPUT(g)\nOUTPUT(h)\nx = INV(a)\nf = AND(a, x)\ng = BUF(a)\nh = BUF(a)\n")
            .unwrap();
        let s = synthesize(&n, &SynthConfig::default()).unwrap();
        assert!(equivalent(&n, &s).unwrap());
        assert_eq!(s.output_names().collect::<Vec<_>>(), ["f", "g", "h"]);
        assert_eq!(s.gate_histogram().get(GateKind::Const0), 1);
        assert_eq!(s.gate_histogram().get(GateKind::Buf), 2);
    }
}
