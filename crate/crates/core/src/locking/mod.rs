//! Locked netlists, key application and the locking schemes.

mod epic;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Assignment, GateKind, Netlist, NetlistError, NodeId};
use crate::key::{key_input_index, Key, KeyError};
use crate::synth::{const_propagate, SynthConfig, SynthError};

pub use epic::{epic_lock, epic_lock_with, EpicState, Site};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LockError {
    #[error("not enough candidate sites for key bit {bit} (value {})", u8::from(*.value))]
    InsufficientSites { bit: usize, value: bool },
    #[error("unknown locking scheme `{0}`")]
    UnknownScheme(String),
    #[error("input name `{0}` is reserved for key inputs")]
    NameClash(String),
    #[error("key input `{0}` is not an input of the netlist")]
    UnknownKeyInput(String),
    #[error("key inputs must be keyinput0..keyinput{{r-1}}")]
    BadKeyInputs,
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Meerkat(#[from] crate::meerkat::MeerkatError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub scheme: String,
    pub seed: u64,
}

/// A netlist whose inputs are split into regular inputs and key inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LockedNetlist {
    netlist: Netlist,
    key_inputs: Vec<String>,
    regular_inputs: Vec<String>,
    provenance: Provenance,
}

impl LockedNetlist {
    pub fn new(netlist: Netlist, key_inputs: Vec<String>, provenance: Provenance) -> Result<Self, LockError> {
        let mut seen = HashSet::new();
        for k in &key_inputs {
            let is_input = netlist.id_of(k).is_some_and(|id| netlist.node(id).is_input());
            if !is_input || !seen.insert(k.as_str()) {
                return Err(LockError::UnknownKeyInput(k.clone()));
            }
        }
        if key_inputs.is_empty() {
            return Err(KeyError::Empty.into());
        }
        let regular_inputs = netlist
            .input_names()
            .filter(|n| !seen.contains(n))
            .map(str::to_string)
            .collect();
        Ok(LockedNetlist {
            netlist,
            key_inputs,
            regular_inputs,
            provenance,
        })
    }

    /// Treats the inputs named `keyinput0..keyinput{r-1}` as the key.
    pub fn from_key_input_names(netlist: Netlist, provenance: Provenance) -> Result<Self, LockError> {
        let mut idx: Vec<usize> = netlist.input_names().filter_map(key_input_index).collect();
        idx.sort_unstable();
        if idx.is_empty() || idx.iter().enumerate().any(|(i, &k)| i != k) {
            return Err(LockError::BadKeyInputs);
        }
        let names = idx.into_iter().map(crate::key::key_input_name).collect();
        Self::new(netlist, names, provenance)
    }

    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }

    pub fn key_inputs(&self) -> &[String] {
        &self.key_inputs
    }

    pub fn regular_inputs(&self) -> &[String] {
        &self.regular_inputs
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn key_len(&self) -> usize {
        self.key_inputs.len()
    }

    /// Position of each netlist input in the key, if it is a key input.
    pub fn key_slots(&self) -> Vec<Option<usize>> {
        let mut slots = vec![None; self.netlist.num_inputs()];
        for (i, name) in self.key_inputs.iter().enumerate() {
            let id = self.netlist.id_of(name).expect("validated");
            slots[id.index()] = Some(i);
        }
        slots
    }

    /// Input pins for `key` in netlist input order; regular inputs stay free.
    pub fn pins(&self, key: &Key) -> Result<Vec<Option<bool>>, LockError> {
        self.check_len(key)?;
        Ok(self.key_slots().into_iter().map(|s| s.map(|i| key.bit(i))).collect())
    }

    fn check_len(&self, key: &Key) -> Result<(), LockError> {
        if key.len() != self.key_len() {
            return Err(KeyError::LengthMismatch {
                expected: self.key_len(),
                got: key.len(),
            }
            .into());
        }
        Ok(())
    }

    /// XOR/XNOR gates with exactly one key-input fanin, paired with the
    /// key bit and whether a 1 on that bit makes the gate invert.
    pub fn key_gates(&self) -> Vec<KeyGate> {
        let slots = self.key_slots();
        let mut out = Vec::new();
        for id in self.netlist.gate_ids() {
            let node = self.netlist.node(id);
            let inverts_on_one = match node.gate() {
                Some(GateKind::Xor2) => true,
                Some(GateKind::Xnor2) => false,
                _ => continue,
            };
            let f = node.fanins();
            let (a, b) = (f[0], f[1]);
            let sa = if self.netlist.node(a).is_input() { slots[a.index()] } else { None };
            let sb = if self.netlist.node(b).is_input() { slots[b.index()] } else { None };
            let (bit, data) = match (sa, sb) {
                (Some(k), None) => (k, b),
                (None, Some(k)) => (k, a),
                _ => continue,
            };
            out.push(KeyGate {
                gate: id,
                data,
                bit,
                inverts_on_one,
            });
        }
        out
    }

    /// Sidecar document describing the key interface.
    pub fn sidecar(&self, key: Option<&Key>) -> Sidecar {
        Sidecar {
            schema: SIDECAR_SCHEMA.to_string(),
            scheme: self.provenance.scheme.clone(),
            seed: self.provenance.seed,
            key_bits: self.key_len(),
            key: key.map(Key::to_hex),
            key_inputs: self.key_inputs.clone(),
            regular_inputs: self.regular_inputs.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyGate {
    pub gate: NodeId,
    pub data: NodeId,
    pub bit: usize,
    pub inverts_on_one: bool,
}

pub const SIDECAR_SCHEMA: &str = "logiclock.locked/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema: String,
    pub scheme: String,
    pub seed: u64,
    pub key_bits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub key_inputs: Vec<String>,
    pub regular_inputs: Vec<String>,
}

/// Hardwires `key` and simplifies: the netlist computing `f_k`.
pub fn apply_key(locked: &LockedNetlist, key: &Key) -> Result<Netlist, LockError> {
    locked.check_len(key)?;
    let pins: Assignment = locked
        .key_inputs
        .iter()
        .zip(key.bits())
        .map(|(n, &b)| (n.clone(), b))
        .collect();
    Ok(const_propagate(&locked.netlist, &pins)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Epic,
    Meerkat,
}

impl Scheme {
    pub fn id(self) -> &'static str {
        match self {
            Scheme::Epic => "epic",
            Scheme::Meerkat => "meerkat",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scheme {
    type Err = LockError;

    fn from_str(s: &str) -> Result<Self, LockError> {
        match s {
            "epic" => Ok(Scheme::Epic),
            "meerkat" => Ok(Scheme::Meerkat),
            other => Err(LockError::UnknownScheme(other.to_string())),
        }
    }
}

/// Locks with the scheme named `scheme`. EPIC locks `netlist` as given, so
/// callers normally pass a synthesized netlist; Meerkat runs its full flow.
pub fn lock(scheme: &str, netlist: &Netlist, key: &Key, seed: u64, synth: &SynthConfig) -> Result<LockedNetlist, LockError> {
    match scheme.parse::<Scheme>()? {
        Scheme::Epic => epic_lock(netlist, key, seed),
        Scheme::Meerkat => Ok(crate::meerkat::meerkat_flow(netlist, key, seed, synth)?),
    }
}
