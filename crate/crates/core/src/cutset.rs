//! Cutset structure: a dynamic forest whose trees can report an edge
//! leaving them.
//!
//! Every edge of the graph gets, per sampling family, a geometric depth `d`
//! with `Pr[d >= i] = 2^-i`; it is then present on levels `0..=d` of that
//! family. Each vertex keeps, per (family, level) channel, the XOR of the
//! names of its incident edges present on that level, and the forest keeps
//! the XOR of those words over every tree. Edges inside a tree appear twice
//! in that fold and cancel, so a tree's channel equals the XOR of its cut
//! edges on that level; when exactly one cut edge survives sampling the
//! channel is that edge's name.
//!
//! `insert_tree_edge`/`delete_tree_edge` callers must not choose their edges
//! based on earlier `outgoing_edge` answers of the same instance; the
//! success bound relies on the tree shapes being independent of the
//! sampling. This is not checked.

use std::collections::HashMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamic_forest::{DynamicForest, TreeName};
use crate::edge_space::{EdgeCodec, EdgeName, VertexId};
use crate::error::{Error, Result};

/// `ceil(log2 n)`, with `ceil_log2(1) == 0`.
pub fn ceil_log2(n: u32) -> u32 {
    if n <= 1 {
        0
    } else {
        32 - (n - 1).leading_zeros()
    }
}

/// Sampling levels per family: `2 * ceil(log2 n) + 1`.
pub fn levels_for(n: u32) -> usize {
    2 * ceil_log2(n) as usize + 1
}

/// Derives an independent stream seed from a base seed (splitmix64).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Tally of cutset operations, excluding tree lookups.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub insert_edge: u64,
    pub delete_edge: u64,
    pub insert_tree_edge: u64,
    pub delete_tree_edge: u64,
    pub outgoing_edge: u64,
}

impl OpCounts {
    pub fn total(&self) -> u64 {
        self.insert_edge
            + self.delete_edge
            + self.insert_tree_edge
            + self.delete_tree_edge
            + self.outgoing_edge
    }
}

/// The operations the layered structure needs from one layer.
///
/// Implemented by [`CutsetState`] and by the boosted baseline, which bundles
/// several independent copies behind the same forest.
pub trait CutsetLayer {
    fn insert_edge(&mut self, u: VertexId, v: VertexId) -> Result<()>;
    fn delete_edge(&mut self, u: VertexId, v: VertexId) -> Result<()>;
    fn insert_tree_edge(&mut self, u: VertexId, v: VertexId) -> Result<()>;
    fn delete_tree_edge(&mut self, u: VertexId, v: VertexId) -> Result<()>;
    fn same_tree(&self, u: VertexId, v: VertexId) -> bool;
    /// Size of the tree containing `v`.
    fn size_of(&self, v: VertexId) -> usize;
    /// `outgoing_edge` on the tree containing `v`.
    fn outgoing_edge_of(&mut self, v: VertexId) -> Option<(VertexId, VertexId)>;
    /// The layer's forest, for structural checks and path extraction.
    fn forest(&self) -> &DynamicForest;
    fn op_counts(&self) -> OpCounts;
}

#[derive(Debug, Clone)]
pub struct CutsetState {
    codec: EdgeCodec,
    forest: DynamicForest,
    families: usize,
    levels: usize,
    /// Current edges with their sampled depth per family.
    edges: HashMap<EdgeName, Box<[u8]>>,
    rng: ChaCha8Rng,
    ops: OpCounts,
}

impl CutsetState {
    pub fn new(n: u32, families: usize, seed: u64) -> Result<Self> {
        if families == 0 {
            return Err(Error::InvalidConfig("families must be positive".into()));
        }
        let codec = EdgeCodec::new(n)?;
        let levels = levels_for(n);
        // Forest priorities and edge sampling draw from separate streams.
        let forest = DynamicForest::new(n, families * levels, seed ^ 0x9e37_79b9_7f4a_7c15)?;
        Ok(Self {
            codec,
            forest,
            families,
            levels,
            edges: HashMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            ops: OpCounts::default(),
        })
    }

    pub fn n(&self) -> u32 {
        self.codec.n()
    }

    pub fn families(&self) -> usize {
        self.families
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Index of the `(family, level)` XOR channel.
    pub fn channel(&self, family: usize, level: usize) -> usize {
        family * self.levels + level
    }

    pub fn codec(&self) -> &EdgeCodec {
        &self.codec
    }

    pub fn forest(&self) -> &DynamicForest {
        &self.forest
    }

    pub fn ops(&self) -> OpCounts {
        self.ops
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.codec
            .encode(u, v)
            .is_ok_and(|name| self.edges.contains_key(&name))
    }

    /// Sampled depth per family of a current edge.
    pub fn sample_levels(&self, name: EdgeName) -> Option<&[u8]> {
        self.edges.get(&name).map(|d| &d[..])
    }

    /// Current edges with their depths, in no particular order.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeName, &[u8])> + '_ {
        self.edges.iter().map(|(&name, d)| (name, &d[..]))
    }

    pub fn insert_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        let name = self.codec.encode(u, v)?;
        if self.edges.contains_key(&name) {
            return Err(Error::DuplicateEdge(u.min(v), u.max(v)));
        }
        self.ops.insert_edge += 1;
        let top = self.levels as u32 - 1;
        let depths: Box<[u8]> = (0..self.families)
            .map(|_| self.rng.next_u64().trailing_zeros().min(top) as u8)
            .collect();
        self.apply(u, v, name, &depths);
        self.edges.insert(name, depths);
        Ok(())
    }

    pub fn delete_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        let name = self.codec.encode(u, v)?;
        let depths = self
            .edges
            .remove(&name)
            .ok_or(Error::MissingEdge(u.min(v), u.max(v)))?;
        self.ops.delete_edge += 1;
        self.apply(u, v, name, &depths);
        Ok(())
    }

    fn apply(&mut self, u: VertexId, v: VertexId, name: EdgeName, depths: &[u8]) {
        for (f, &d) in depths.iter().enumerate() {
            let start = f * self.levels;
            let range = start..start + d as usize + 1;
            self.forest.xor_update_range(u, range.clone(), name);
            self.forest.xor_update_range(v, range, name);
        }
    }

    pub fn insert_tree_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.forest.link(u, v)?;
        self.ops.insert_tree_edge += 1;
        Ok(())
    }

    pub fn delete_tree_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.forest.cut(u, v)?;
        self.ops.delete_tree_edge += 1;
        Ok(())
    }

    pub fn tree(&self, v: VertexId) -> TreeName {
        self.forest.tree_of(v)
    }

    pub fn tree_size(&self, t: TreeName) -> Result<usize> {
        self.forest.tree_size(t)
    }

    /// Looks for an edge with exactly one endpoint in `t`.
    ///
    /// Scans families in order and, within a family, levels from the
    /// densest up; the first channel word that decodes to a current edge
    /// crossing the tree boundary is returned. Never returns an edge
    /// outside the cut, and returns `None` whenever the cut is empty.
    pub fn outgoing_edge(&mut self, t: TreeName) -> Result<Option<(VertexId, VertexId)>> {
        let row = self.forest.tree_xor_row(t)?;
        self.ops.outgoing_edge += 1;
        for &word in row {
            if word == 0 {
                continue;
            }
            let Some((a, b)) = self.codec.decode(EdgeName(word)) else {
                continue;
            };
            if !self.edges.contains_key(&EdgeName(word)) {
                continue;
            }
            let a_in = self.forest.tree_of(a) == t;
            let b_in = self.forest.tree_of(b) == t;
            if a_in != b_in {
                return Ok(Some((a, b)));
            }
        }
        Ok(None)
    }
}

impl CutsetLayer for CutsetState {
    fn insert_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        CutsetState::insert_edge(self, u, v)
    }

    fn delete_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        CutsetState::delete_edge(self, u, v)
    }

    fn insert_tree_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        CutsetState::insert_tree_edge(self, u, v)
    }

    fn delete_tree_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        CutsetState::delete_tree_edge(self, u, v)
    }

    fn same_tree(&self, u: VertexId, v: VertexId) -> bool {
        self.forest.same_tree(u, v)
    }

    fn size_of(&self, v: VertexId) -> usize {
        self.forest.size_of(v)
    }

    fn outgoing_edge_of(&mut self, v: VertexId) -> Option<(VertexId, VertexId)> {
        let t = self.tree(v);
        self.outgoing_edge(t).expect("fresh tree name")
    }

    fn forest(&self) -> &DynamicForest {
        &self.forest
    }

    fn op_counts(&self) -> OpCounts {
        self.ops
    }
}
