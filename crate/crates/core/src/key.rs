//! Fixed-length key bit vectors.

use std::fmt;

use rand::Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("keys must have at least one bit")]
    Empty,
    #[error("key length mismatch: expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid key literal `{0}`")]
    Malformed(String),
}

/// An `r`-bit key. Bit `i` drives the key input `keyinput{i}`.
///
/// The textual forms read bit 0 first: `"10"` sets bit 0. The hex form
/// packs that bit string into nibbles, most significant bit first, padding
/// the last nibble with zeros, so `"10"` is `"8"`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key {
    bits: Vec<bool>,
}

impl Key {
    pub fn new(bits: Vec<bool>) -> Result<Self, KeyError> {
        if bits.is_empty() {
            return Err(KeyError::Empty);
        }
        Ok(Self { bits })
    }

    pub fn zeros(r: usize) -> Result<Self, KeyError> {
        Self::new(vec![false; r])
    }

    pub fn random<R: Rng + ?Sized>(r: usize, rng: &mut R) -> Result<Self, KeyError> {
        Self::new((0..r).map(|_| rng.gen::<bool>()).collect())
    }

    /// Key with bits taken from the low `r` bits of `value` (bit 0 first).
    pub fn from_index(value: u64, r: usize) -> Result<Self, KeyError> {
        Self::new((0..r).map(|i| i < 64 && (value >> i) & 1 == 1).collect())
    }

    pub fn from_bitstr(s: &str) -> Result<Self, KeyError> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(KeyError::Malformed(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(bits)
    }

    pub fn from_hex(s: &str, r: usize) -> Result<Self, KeyError> {
        let s = s.trim().trim_start_matches("0x");
        if r == 0 {
            return Err(KeyError::Empty);
        }
        if s.len() != r.div_ceil(4) {
            return Err(KeyError::Malformed(s.to_string()));
        }
        let mut bits = Vec::with_capacity(s.len() * 4);
        for c in s.chars() {
            let d = c.to_digit(16).ok_or_else(|| KeyError::Malformed(s.to_string()))?;
            bits.extend((0..4).rev().map(|b| (d >> b) & 1 == 1));
        }
        if bits[r..].iter().any(|&b| b) {
            return Err(KeyError::Malformed(s.to_string()));
        }
        bits.truncate(r);
        Self::new(bits)
    }

    pub fn to_hex(&self) -> String {
        self.bits
            .chunks(4)
            .map(|c| {
                let d = c.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << (3 - i)));
                char::from_digit(d, 16).expect("nibble")
            })
            .collect()
    }

    pub fn to_bitstr(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn with_flipped(&self, i: usize) -> Key {
        let mut k = self.clone();
        k.bits[i] = !k.bits[i];
        k
    }

    pub fn complement(&self) -> Key {
        Key {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn hamming(&self, other: &Key) -> Result<usize, KeyError> {
        if self.len() != other.len() {
            return Err(KeyError::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count())
    }

    /// Every key of length `r`, in index order. Only sensible for small `r`.
    pub fn all(r: usize) -> impl Iterator<Item = Key> {
        assert!(r < 32, "key space too large to enumerate");
        (0..1u64 << r).map(move |v| Key::from_index(v, r).expect("r >= 1"))
    }
}

impl fmt::Debug for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Key({})", self.to_bitstr())
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstr())
    }
}

impl Serialize for Key {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

/// Name of the netlist input driven by key bit `i`.
pub fn key_input_name(i: usize) -> String {
    format!("{KEY_INPUT_PREFIX}{i}")
}

pub const KEY_INPUT_PREFIX: &str = "keyinput";

/// Key bit index encoded in an input name, if it follows the key naming.
pub fn key_input_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix(KEY_INPUT_PREFIX)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}
