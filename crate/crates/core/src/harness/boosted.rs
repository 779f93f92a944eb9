//! The boosted baseline: every layer is a bundle of independent cutset
//! copies maintaining the same forest, and `outgoing_edge` tries the copies
//! in turn until one succeeds.

use crate::cutset::{derive_seed, CutsetLayer, CutsetState, OpCounts};
use crate::dynamic_forest::DynamicForest;
use crate::edge_space::VertexId;
use crate::error::{Error, Result};
use crate::layered::{layer_count, LayerStack};

/// Sampling families per copy in the boosted baseline.
pub const BOOSTED_FAMILIES: usize = 1;

#[derive(Debug, Clone)]
pub struct BoostedCutset {
    copies: Vec<CutsetState>,
}

impl BoostedCutset {
    pub fn new(n: u32, copies: usize, families: usize, seed: u64) -> Result<Self> {
        if copies == 0 {
            return Err(Error::InvalidConfig("copies must be positive".into()));
        }
        let copies = (0..copies)
            .map(|c| CutsetState::new(n, families, derive_seed(seed, c as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { copies })
    }

    pub fn copies(&self) -> &[CutsetState] {
        &self.copies
    }
}

impl CutsetLayer for BoostedCutset {
    fn insert_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.copies.iter_mut().try_for_each(|c| c.insert_edge(u, v))
    }

    fn delete_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.copies.iter_mut().try_for_each(|c| c.delete_edge(u, v))
    }

    fn insert_tree_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.copies
            .iter_mut()
            .try_for_each(|c| c.insert_tree_edge(u, v))
    }

    fn delete_tree_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.copies
            .iter_mut()
            .try_for_each(|c| c.delete_tree_edge(u, v))
    }

    fn same_tree(&self, u: VertexId, v: VertexId) -> bool {
        self.copies[0].forest().same_tree(u, v)
    }

    fn size_of(&self, v: VertexId) -> usize {
        self.copies[0].forest().size_of(v)
    }

    fn outgoing_edge_of(&mut self, v: VertexId) -> Option<(VertexId, VertexId)> {
        self.copies.iter_mut().find_map(|c| c.outgoing_edge_of(v))
    }

    fn forest(&self) -> &DynamicForest {
        self.copies[0].forest()
    }

    fn op_counts(&self) -> OpCounts {
        self.copies.iter().fold(OpCounts::default(), |acc, c| {
            let o = c.ops();
            OpCounts {
                insert_edge: acc.insert_edge + o.insert_edge,
                delete_edge: acc.delete_edge + o.delete_edge,
                insert_tree_edge: acc.insert_tree_edge + o.insert_tree_edge,
                delete_tree_edge: acc.delete_tree_edge + o.delete_tree_edge,
                outgoing_edge: acc.outgoing_edge + o.outgoing_edge,
            }
        })
    }
}

/// A stack of `ceil(log2 n)` + 1 boosted layers, each with `copies` copies.
pub fn boosted_stack(n: u32, copies: usize, seed: u64) -> Result<LayerStack<BoostedCutset>> {
    let ell = layer_count(n, 1.0);
    let layers = (0..=ell)
        .map(|i| BoostedCutset::new(n, copies, BOOSTED_FAMILIES, derive_seed(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    LayerStack::from_layers(n, layers)
}
