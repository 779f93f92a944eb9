//! Canonical names for undirected vertex pairs.
//!
//! A pair `{u, v}` with `a = min(u, v) + 1` and `b = max(u, v) + 1` is named
//! `a * (n + 1) + b`. The shift by one keeps every valid name nonzero, so the
//! zero word can stand for "no edge" in XOR accumulators, and decoding is two
//! integer divisions with no table lookup.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported vertex count. Names must fit in 64 bits.
pub const MAX_VERTICES: u32 = (1 << 31) - 1;

/// Index of a vertex in `[0, n)`.
pub type VertexId = u32;

/// A 64-bit edge name. Zero is reserved as the empty word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct EdgeName(pub u64);

impl EdgeName {
    pub const EMPTY: EdgeName = EdgeName(0);

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl std::ops::BitXor for EdgeName {
    type Output = EdgeName;

    #[inline]
    fn bitxor(self, rhs: EdgeName) -> EdgeName {
        EdgeName(self.0 ^ rhs.0)
    }
}

impl std::ops::BitXorAssign for EdgeName {
    #[inline]
    fn bitxor_assign(&mut self, rhs: EdgeName) {
        self.0 ^= rhs.0;
    }
}

impl fmt::Display for EdgeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Encoder/decoder for edge names over a fixed vertex set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeCodec {
    n: u32,
}

impl EdgeCodec {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 || n > MAX_VERTICES {
            return Err(Error::InvalidConfig(format!(
                "vertex count must be in [1, {MAX_VERTICES}], got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: v,
                n: self.n,
            })
        }
    }

    pub fn encode(&self, u: VertexId, v: VertexId) -> Result<EdgeName> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        Ok(self.encode_unchecked(u, v))
    }

    /// Caller guarantees `u != v` and both are in range.
    #[inline]
    pub fn encode_unchecked(&self, u: VertexId, v: VertexId) -> EdgeName {
        debug_assert!(u != v && u < self.n && v < self.n);
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        let a = lo as u64 + 1;
        let b = hi as u64 + 1;
        EdgeName(a * (self.n as u64 + 1) + b)
    }

    /// Returns `(u, v)` with `u < v`, or `None` for any word that is not the
    /// name of an in-range pair (XOR of several names usually is not).
    #[inline]
    pub fn decode(&self, name: EdgeName) -> Option<(VertexId, VertexId)> {
        let base = self.n as u64 + 1;
        let a = name.0 / base;
        let b = name.0 % base;
        if a >= 1 && a < b && b <= self.n as u64 {
            Some(((a - 1) as u32, (b - 1) as u32))
        } else {
            None
        }
    }
}
