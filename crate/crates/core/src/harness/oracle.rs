//! Exact connectivity for the current graph, used as ground truth.

use std::collections::{HashSet, VecDeque};

use crate::edge_space::{EdgeCodec, VertexId};
use crate::error::{Error, Result};
use crate::harness::workload::Op;
use crate::union_find::UnionFind;

/// Adjacency sets plus a union-find that is rebuilt lazily after deletions.
#[derive(Debug, Clone)]
pub struct Oracle {
    codec: EdgeCodec,
    adj: Vec<HashSet<VertexId>>,
    edges: usize,
    uf: UnionFind,
    dirty: bool,
}

impl Oracle {
    pub fn new(n: u32) -> Result<Self> {
        Ok(Self {
            codec: EdgeCodec::new(n)?,
            adj: vec![HashSet::new(); n as usize],
            edges: 0,
            uf: UnionFind::new(n),
            dirty: false,
        })
    }

    pub fn n(&self) -> u32 {
        self.codec.n()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn contains(&self, u: VertexId, v: VertexId) -> bool {
        self.adj.get(u as usize).is_some_and(|s| s.contains(&v))
    }

    /// Applies one operation; queries return the exact answer.
    pub fn apply(&mut self, op: Op) -> Result<Option<bool>> {
        match op {
            Op::Insert(u, v) => self.insert(u, v).map(|_| None),
            Op::Delete(u, v) => self.delete(u, v).map(|_| None),
            Op::Query(u, v) => self.connected(u, v).map(Some),
        }
    }

    pub fn insert(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.codec.encode(u, v)?;
        if !self.adj[u as usize].insert(v) {
            return Err(Error::DuplicateEdge(u.min(v), u.max(v)));
        }
        self.adj[v as usize].insert(u);
        self.edges += 1;
        if !self.dirty {
            self.uf.union(u, v);
        }
        Ok(())
    }

    pub fn delete(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.codec.encode(u, v)?;
        if !self.adj[u as usize].remove(&v) {
            return Err(Error::MissingEdge(u.min(v), u.max(v)));
        }
        self.adj[v as usize].remove(&u);
        self.edges -= 1;
        self.dirty = true;
        Ok(())
    }

    pub fn connected(&mut self, u: VertexId, v: VertexId) -> Result<bool> {
        self.codec.check_vertex(u)?;
        self.codec.check_vertex(v)?;
        if self.dirty {
            self.rebuild();
        }
        Ok(self.uf.find(u) == self.uf.find(v))
    }

    /// Breadth-first search, independent of the union-find.
    pub fn connected_by_search(&self, u: VertexId, v: VertexId) -> bool {
        if u == v {
            return true;
        }
        let mut seen = vec![false; self.adj.len()];
        let mut queue = VecDeque::from([u]);
        seen[u as usize] = true;
        while let Some(x) = queue.pop_front() {
            for &y in &self.adj[x as usize] {
                if y == v {
                    return true;
                }
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    queue.push_back(y);
                }
            }
        }
        false
    }

    /// Component representative of every vertex.
    pub fn components(&mut self) -> Vec<VertexId> {
        if self.dirty {
            self.rebuild();
        }
        (0..self.n()).map(|v| self.uf.find(v)).collect()
    }

    fn rebuild(&mut self) {
        self.uf.reset();
        for (u, nbrs) in self.adj.iter().enumerate() {
            for &v in nbrs {
                if (u as u32) < v {
                    self.uf.union(u as u32, v);
                }
            }
        }
        self.dirty = false;
    }
}
