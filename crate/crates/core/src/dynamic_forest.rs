//! Euler-tour forest with per-tree XOR aggregation.
//!
//! Each tree is stored as its Euler tour: one node per vertex plus two arc
//! nodes per tree edge. Tours live in treaps keyed implicitly by tour
//! position, so link, cut and root lookups take `O(log n)` node visits with
//! high probability. Every treap node carries the XOR of the per-vertex
//! signature words below it on all `channels` at once, plus the count of
//! vertex nodes below it (the tree size at the root).

use std::cell::Cell;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::edge_space::{EdgeCodec, EdgeName, VertexId};
use crate::error::{Error, Result};

const NIL: u32 = u32::MAX;

/// Name of a tree, valid until the next link or cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeName(u32);

#[derive(Debug, Clone)]
struct Node {
    parent: u32,
    left: u32,
    right: u32,
    prio: u64,
    /// Treap nodes in this subtree; zero marks a freed arc slot.
    cnt: u32,
    /// Vertex nodes in this subtree.
    vsize: u32,
    /// Arc endpoints; `from == to` for vertex nodes.
    from: u32,
    to: u32,
}

impl Node {
    fn fresh(prio: u64, from: u32, to: u32, is_vertex: bool) -> Self {
        Node {
            parent: NIL,
            left: NIL,
            right: NIL,
            prio,
            cnt: 1,
            vsize: is_vertex as u32,
            from,
            to,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DynamicForest {
    codec: EdgeCodec,
    channels: usize,
    nodes: Vec<Node>,
    /// Per-vertex signature words, `n * channels`.
    own: Vec<u64>,
    /// Per-node subtree aggregates, `nodes.len() * channels`.
    agg: Vec<u64>,
    free: Vec<u32>,
    tree_edges: HashMap<EdgeName, (u32, u32)>,
    rng: ChaCha8Rng,
    visits: Cell<u64>,
}

impl DynamicForest {
    /// A forest of `n` singleton trees with `channels` XOR words per vertex.
    pub fn new(n: u32, channels: usize, seed: u64) -> Result<Self> {
        let codec = EdgeCodec::new(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = (0..n)
            .map(|v| Node::fresh(rng.gen(), v, v, true))
            .collect::<Vec<_>>();
        Ok(Self {
            codec,
            channels,
            own: vec![0; n as usize * channels],
            agg: vec![0; n as usize * channels],
            nodes,
            free: Vec::new(),
            tree_edges: HashMap::new(),
            rng,
            visits: Cell::new(0),
        })
    }

    pub fn n(&self) -> u32 {
        self.codec.n()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn codec(&self) -> &EdgeCodec {
        &self.codec
    }

    /// Total treap nodes touched so far by walks, splits and merges.
    pub fn node_visits(&self) -> u64 {
        self.visits.get()
    }

    pub fn tree_edge_count(&self) -> usize {
        self.tree_edges.len()
    }

    pub fn is_tree_edge(&self, u: VertexId, v: VertexId) -> bool {
        u != v
            && u < self.n()
            && v < self.n()
            && self
                .tree_edges
                .contains_key(&self.codec.encode_unchecked(u, v))
    }

    /// Names of all current tree edges, in no particular order.
    pub fn tree_edge_names(&self) -> impl Iterator<Item = EdgeName> + '_ {
        self.tree_edges.keys().copied()
    }

    pub fn link(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        let name = self.codec.encode(u, v)?;
        let ru = self.root(u);
        let rv = self.root(v);
        if ru == rv {
            return Err(Error::SameTree(u, v));
        }
        let a1 = self.alloc_arc(u, v);
        let a2 = self.alloc_arc(v, u);
        let tu = self.reroot(u);
        let tv = self.reroot(v);
        let left = self.merge(tu, a1);
        let right = self.merge(tv, a2);
        let root = self.merge(left, right);
        self.nodes[root as usize].parent = NIL;
        self.tree_edges.insert(name, (a1, a2));
        self.debug_check_tree(root);
        Ok(())
    }

    pub fn cut(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        let name = self.codec.encode(u, v)?;
        let (a1, a2) = self
            .tree_edges
            .remove(&name)
            .ok_or(Error::NotTreeEdge(u.min(v), u.max(v)))?;
        let (i1, root) = self.index_and_root(a1);
        let (i2, _) = self.index_and_root(a2);
        let (first, second) = if i1 < i2 { (i1, i2) } else { (i2, i1) };

        // Tour = A p B q C  ->  trees B and A C.
        let (x, y) = self.split(root, second);
        let (q, c) = self.split(y, 1);
        let (a, z) = self.split(x, first);
        let (p, b) = self.split(z, 1);
        for r in [q, c, a, p, b] {
            if r != NIL {
                self.nodes[r as usize].parent = NIL;
            }
        }
        let outer = self.merge(a, c);
        if outer != NIL {
            self.nodes[outer as usize].parent = NIL;
        }
        self.free_arc(p);
        self.free_arc(q);
        self.debug_check_tree(outer);
        self.debug_check_tree(b);
        Ok(())
    }

    pub fn tree_of(&self, v: VertexId) -> TreeName {
        TreeName(self.root(v))
    }

    pub fn same_tree(&self, u: VertexId, v: VertexId) -> bool {
        self.root(u) == self.root(v)
    }

    pub fn tree_size(&self, t: TreeName) -> Result<usize> {
        self.check_tree(t)?;
        Ok(self.nodes[t.0 as usize].vsize as usize)
    }

    /// Size of the tree containing `v`.
    pub fn size_of(&self, v: VertexId) -> usize {
        self.nodes[self.root(v) as usize].vsize as usize
    }

    /// XORs `name` into channel `level` of vertex `v`.
    pub fn xor_update(&mut self, v: VertexId, level: usize, name: EdgeName) {
        self.xor_update_range(v, level..level + 1, name);
    }

    /// XORs `name` into every channel in `levels` of vertex `v` with one
    /// walk to the root.
    pub fn xor_update_range(
        &mut self,
        v: VertexId,
        levels: std::ops::Range<usize>,
        name: EdgeName,
    ) {
        assert!(levels.end <= self.channels, "channel out of range");
        let ch = self.channels;
        let base = v as usize * ch;
        for c in levels.clone() {
            self.own[base + c] ^= name.0;
        }
        let mut x = v;
        let mut visited = 0;
        while x != NIL {
            visited += 1;
            let row = x as usize * ch;
            for c in levels.clone() {
                self.agg[row + c] ^= name.0;
            }
            x = self.nodes[x as usize].parent;
        }
        self.visit(visited);
    }

    /// Channel `level` of vertex `v` alone.
    pub fn signature(&self, v: VertexId, level: usize) -> EdgeName {
        EdgeName(self.own[v as usize * self.channels + level])
    }

    pub fn tree_xor(&self, t: TreeName, level: usize) -> Result<EdgeName> {
        assert!(level < self.channels, "channel out of range");
        self.check_tree(t)?;
        Ok(EdgeName(self.agg[t.0 as usize * self.channels + level]))
    }

    /// All channels of the tree aggregate at once.
    pub fn tree_xor_row(&self, t: TreeName) -> Result<&[u64]> {
        self.check_tree(t)?;
        let row = t.0 as usize * self.channels;
        Ok(&self.agg[row..row + self.channels])
    }

    /// Vertices of tree `t` in tour order. Costs `O(size)`.
    pub fn tree_vertices(&self, t: TreeName) -> impl Iterator<Item = VertexId> + '_ {
        let n = self.n();
        self.tour(t).filter(move |&x| x < n)
    }

    /// Edges `(u, v)` with `u < v` of tree `t`. Costs `O(size)`.
    pub fn tree_edges(&self, t: TreeName) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        let n = self.n();
        self.tour(t).filter_map(move |x| {
            let node = &self.nodes[x as usize];
            (x >= n && node.from < node.to).then_some((node.from, node.to))
        })
    }

    fn tour(&self, t: TreeName) -> TourIter<'_> {
        let mut it = TourIter {
            forest: self,
            stack: Vec::new(),
        };
        if self.check_tree(t).is_ok() {
            it.push_left(t.0);
        }
        it
    }

    fn check_tree(&self, t: TreeName) -> Result<()> {
        match self.nodes.get(t.0 as usize) {
            Some(node) if node.parent == NIL && node.cnt > 0 => Ok(()),
            _ => Err(Error::StaleTree),
        }
    }

    #[inline]
    fn visit(&self, k: u64) {
        self.visits.set(self.visits.get() + k);
    }

    fn root(&self, v: VertexId) -> u32 {
        assert!(v < self.n(), "vertex {v} out of range");
        let mut x = v;
        let mut visited = 1;
        while self.nodes[x as usize].parent != NIL {
            x = self.nodes[x as usize].parent;
            visited += 1;
        }
        self.visit(visited);
        x
    }

    fn cnt(&self, x: u32) -> u32 {
        if x == NIL {
            0
        } else {
            self.nodes[x as usize].cnt
        }
    }

    fn index_and_root(&self, x: u32) -> (u32, u32) {
        let mut idx = self.cnt(self.nodes[x as usize].left);
        let mut cur = x;
        let mut visited = 1;
        loop {
            let p = self.nodes[cur as usize].parent;
            if p == NIL {
                break;
            }
            if self.nodes[p as usize].right == cur {
                idx += self.cnt(self.nodes[p as usize].left) + 1;
            }
            cur = p;
            visited += 1;
        }
        self.visit(visited);
        (idx, cur)
    }

    /// Rotates the tour containing `v` so it starts at `v`; returns the root.
    fn reroot(&mut self, v: VertexId) -> u32 {
        let (k, root) = self.index_and_root(v);
        if k == 0 {
            return root;
        }
        let (a, b) = self.split(root, k);
        self.nodes[a as usize].parent = NIL;
        self.nodes[b as usize].parent = NIL;
        let r = self.merge(b, a);
        self.nodes[r as usize].parent = NIL;
        r
    }

    fn alloc_arc(&mut self, from: u32, to: u32) -> u32 {
        let node = Node::fresh(self.rng.gen(), from, to, false);
        match self.free.pop() {
            Some(x) => {
                self.nodes[x as usize] = node;
                let row = x as usize * self.channels;
                self.agg[row..row + self.channels].fill(0);
                x
            }
            None => {
                let x = self.nodes.len() as u32;
                self.nodes.push(node);
                self.agg.resize(self.agg.len() + self.channels, 0);
                x
            }
        }
    }

    fn free_arc(&mut self, x: u32) {
        debug_assert!(x >= self.n() && self.nodes[x as usize].cnt == 1);
        self.nodes[x as usize].cnt = 0;
        self.nodes[x as usize].parent = NIL;
        self.free.push(x);
    }

    fn set_left(&mut self, t: u32, c: u32) {
        self.nodes[t as usize].left = c;
        if c != NIL {
            self.nodes[c as usize].parent = t;
        }
    }

    fn set_right(&mut self, t: u32, c: u32) {
        self.nodes[t as usize].right = c;
        if c != NIL {
            self.nodes[c as usize].parent = t;
        }
    }

    fn pull(&mut self, x: u32) {
        let n = self.n();
        let Node { left, right, .. } = self.nodes[x as usize];
        let is_vertex = x < n;
        let mut cnt = 1;
        let mut vsize = is_vertex as u32;
        for c in [left, right] {
            if c != NIL {
                cnt += self.nodes[c as usize].cnt;
                vsize += self.nodes[c as usize].vsize;
            }
        }
        self.nodes[x as usize].cnt = cnt;
        self.nodes[x as usize].vsize = vsize;

        let ch = self.channels;
        let row = x as usize * ch;
        if is_vertex {
            self.agg[row..row + ch].copy_from_slice(&self.own[row..row + ch]);
        } else {
            self.agg[row..row + ch].fill(0);
        }
        for c in [left, right] {
            if c != NIL {
                xor_row(&mut self.agg, ch, x as usize, c as usize);
            }
        }
    }

    /// Splits off the first `k` tour nodes. Parent links of the returned
    /// roots are left for the caller to clear.
    fn split(&mut self, t: u32, k: u32) -> (u32, u32) {
        if t == NIL {
            return (NIL, NIL);
        }
        self.visit(1);
        let left = self.nodes[t as usize].left;
        let lc = self.cnt(left);
        if k <= lc {
            let (a, b) = self.split(left, k);
            self.set_left(t, b);
            self.pull(t);
            (a, t)
        } else {
            let right = self.nodes[t as usize].right;
            let (a, b) = self.split(right, k - lc - 1);
            self.set_right(t, a);
            self.pull(t);
            (t, b)
        }
    }

    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        self.visit(1);
        if self.nodes[a as usize].prio > self.nodes[b as usize].prio {
            let right = self.nodes[a as usize].right;
            let m = self.merge(right, b);
            self.set_right(a, m);
            self.pull(a);
            a
        } else {
            let left = self.nodes[b as usize].left;
            let m = self.merge(a, left);
            self.set_left(b, m);
            self.pull(b);
            b
        }
    }

    #[inline]
    fn debug_check_tree(&self, root: u32) {
        if cfg!(debug_assertions) && root != NIL {
            let node = &self.nodes[root as usize];
            // vertices + 2 * (vertices - 1) arcs: the tour spans a tree.
            debug_assert_eq!(node.cnt, 3 * node.vsize - 2, "tour is not a tree");
        }
    }

    /// Recomputes every aggregate from scratch and compares. Costs
    /// `O(nodes * channels)`; meant for tests.
    pub fn check_consistency(&self) -> std::result::Result<(), String> {
        let n = self.n();
        let ch = self.channels;
        for (x, node) in self.nodes.iter().enumerate() {
            if node.cnt == 0 {
                continue;
            }
            let x = x as u32;
            let mut cnt = 1;
            let mut vsize = (x < n) as u32;
            let mut agg: Vec<u64> = if x < n {
                self.own[x as usize * ch..(x as usize + 1) * ch].to_vec()
            } else {
                vec![0; ch]
            };
            for c in [node.left, node.right] {
                if c == NIL {
                    continue;
                }
                let child = &self.nodes[c as usize];
                if child.parent != x {
                    return Err(format!("node {c} has wrong parent"));
                }
                if child.prio > node.prio {
                    return Err(format!("heap order broken at {x}"));
                }
                cnt += child.cnt;
                vsize += child.vsize;
                for (k, w) in agg.iter_mut().enumerate() {
                    *w ^= self.agg[c as usize * ch + k];
                }
            }
            if cnt != node.cnt || vsize != node.vsize {
                return Err(format!("counts stale at node {x}"));
            }
            if agg[..] != self.agg[x as usize * ch..(x as usize + 1) * ch] {
                return Err(format!("aggregate stale at node {x}"));
            }
            if node.parent == NIL && node.cnt != 3 * node.vsize - 2 {
                return Err(format!("tree rooted at {x} is not acyclic"));
            }
        }
        for (&name, &(a1, a2)) in &self.tree_edges {
            let (u, v) = self.codec.decode(name).ok_or("bad tree edge name")?;
            let (p, q) = (&self.nodes[a1 as usize], &self.nodes[a2 as usize]);
            if (p.from.min(p.to), p.from.max(p.to)) != (u, v) || (q.from, q.to) != (p.to, p.from) {
                return Err(format!("arcs of edge ({u}, {v}) are mislabeled"));
            }
        }
        Ok(())
    }
}

/// In-order walk over a treap.
struct TourIter<'a> {
    forest: &'a DynamicForest,
    stack: Vec<u32>,
}

impl TourIter<'_> {
    fn push_left(&mut self, mut x: u32) {
        while x != NIL {
            self.stack.push(x);
            x = self.forest.nodes[x as usize].left;
        }
    }
}

impl Iterator for TourIter<'_> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        let x = self.stack.pop()?;
        let right = self.forest.nodes[x as usize].right;
        self.push_left(right);
        Some(x)
    }
}

/// `agg[dst] ^= agg[src]`, row-wise.
fn xor_row(agg: &mut [u64], ch: usize, dst: usize, src: usize) {
    debug_assert_ne!(dst, src);
    let (d, s) = if dst < src {
        let (lo, hi) = agg.split_at_mut(src * ch);
        (&mut lo[dst * ch..(dst + 1) * ch], &hi[..ch])
    } else {
        let (lo, hi) = agg.split_at_mut(dst * ch);
        (&mut hi[..ch], &lo[src * ch..(src + 1) * ch])
    };
    for (a, b) in d.iter_mut().zip(s) {
        *a ^= *b;
    }
}
