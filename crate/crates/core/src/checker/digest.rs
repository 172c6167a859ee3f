//! Canonical state serialization and 64-bit digests.
//!
//! The derived `Hash` of [`SystemState`] visits every field in declaration
//! order and every map in key order, so feeding it into a byte sink yields
//! a canonical serialization.

use crate::state::SystemState;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

struct ByteSink(Vec<u8>);

impl Hasher for ByteSink {
    fn write(&mut self, bytes: &[u8]) {
        self.0.extend_from_slice(bytes);
    }

    fn finish(&self) -> u64 {
        unreachable!("only used as a byte sink")
    }
}

pub fn canonical_bytes(s: &SystemState) -> Vec<u8> {
    let mut sink = ByteSink(Vec::with_capacity(256));
    s.hash(&mut sink);
    sink.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateDigest(pub u64);

impl fmt::Display for StateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Digest of canonical bytes. `DefaultHasher::new` uses fixed keys.
pub fn digest(bytes: &[u8]) -> StateDigest {
    let mut h = DefaultHasher::new();
    h.write(bytes);
    StateDigest(h.finish())
}
