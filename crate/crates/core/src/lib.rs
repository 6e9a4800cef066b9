//! Logic locking laboratory.
//!
//! Netlists ([`circuit`]) are synthesized by a deterministic pipeline
//! ([`synth`]), locked post-synthesis with XOR key gates ([`locking`]) or
//! through key nodes inserted into a reduced ordered BDD ([`meerkat`],
//! built on [`bdd`]), attacked by greedy desynthesis ([`attack`]) and
//! measured by the experiment harness ([`eval`]).

pub mod attack;
pub mod bdd;
pub mod circuit;
pub mod eval;
pub mod key;
pub mod locking;
pub mod meerkat;
pub mod rng;
pub mod synth;

pub use key::{Key, KeyError};
