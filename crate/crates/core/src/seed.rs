//! Seed derivation for independent, reproducible random streams.
//!
//! A stream seed is `SHA-256(master_seed_le ∥ len(label)_le ∥ label ∥ index_le)`
//! and feeds a ChaCha8 generator, so any trial of any sweep point can be
//! regenerated on its own without replaying the others.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSeed(pub [u8; 32]);

impl StreamSeed {
    pub fn derive(master: u64, label: &str, index: u64) -> Self {
        let mut h = Sha256::new();
        h.update(master.to_le_bytes());
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
        h.update(index.to_le_bytes());
        StreamSeed(h.finalize().into())
    }

    /// Shorthand for ad-hoc runs: `derive(seed, "", 0)`.
    pub fn from_u64(seed: u64) -> Self {
        Self::derive(seed, "", 0)
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        if s.len() != 64 || !s.is_ascii() {
            return None;
        }
        let mut out = [0u8; 32];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
        }
        Some(StreamSeed(out))
    }
}

impl fmt::Debug for StreamSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StreamSeed({})", self.to_hex())
    }
}

impl fmt::Display for StreamSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for StreamSeed {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for StreamSeed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        StreamSeed::from_hex(&s).ok_or_else(|| serde::de::Error::custom("expected 64 hex digits"))
    }
}
