use std::collections::HashSet;

use proptest::prelude::*;

use dynconn::cutset::CutsetState;
use dynconn::harness::oracle::Oracle;
use dynconn::harness::run::{differential_run, Engine, RunConfig};
use dynconn::harness::workload::{Op, Workload};
use dynconn::layered::{LayerStack, StackConfig};
use dynconn::union_find::UnionFind;

/// Turns raw triples into a valid workload: a query, or a toggle of the
/// edge (insert when absent, delete when present).
fn workload_from(n: u32, raw: &[(u32, u32, bool)]) -> Workload {
    let mut live = HashSet::new();
    let mut ops = Vec::new();
    for &(u, v, q) in raw {
        let (u, v) = (u % n, v % n);
        if q {
            ops.push(Op::Query(u, v));
        } else if u != v {
            let key = (u.min(v), u.max(v));
            if live.remove(&key) {
                ops.push(Op::Delete(u, v));
            } else {
                live.insert(key);
                ops.push(Op::Insert(u, v));
            }
        }
    }
    Workload::new(n, ops)
}

fn raw_ops() -> impl Strategy<Value = Vec<(u32, u32, bool)>> {
    prop::collection::vec((0u32..64, 0u32..64, prop::bool::weighted(0.2)), 0..250)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn layered_never_overclaims(n in 2u32..24, raw in raw_ops(), seed: u64) {
        let w = workload_from(n, &raw);
        let mut config = RunConfig::new(StackConfig::new(n, seed));
        config.check_cadence = 1;
        let stats = differential_run(&w, &config).unwrap();
        prop_assert_eq!(stats.invariants.structural_violations, 0);
        prop_assert_eq!(stats.invariants.conditional_violations, 0);
    }

    #[test]
    fn boosted_never_overclaims(n in 2u32..20, raw in raw_ops(), seed: u64, copies in 1usize..4) {
        let w = workload_from(n, &raw);
        let mut config = RunConfig::new(StackConfig::new(n, seed));
        config.engine = Engine::Boosted { copies };
        config.check_cadence = 1;
        let stats = differential_run(&w, &config).unwrap();
        prop_assert_eq!(stats.invariants.structural_violations, 0);
    }

    #[test]
    fn inserted_edge_is_connected(n in 2u32..24, raw in raw_ops(), seed: u64) {
        let w = workload_from(n, &raw);
        let mut s = LayerStack::new(&StackConfig::new(n, seed)).unwrap();
        for &op in &w.ops {
            match op {
                Op::Insert(u, v) => {
                    s.insert(u, v).unwrap();
                    prop_assert!(s.query(u, v).unwrap());
                }
                Op::Delete(u, v) => s.delete(u, v).unwrap(),
                Op::Query(u, v) => {
                    if u == v {
                        prop_assert!(s.query(u, v).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn contract_errors_leave_state_intact(n in 3u32..16, raw in raw_ops(), seed: u64) {
        let w = workload_from(n, &raw);
        let mut s = LayerStack::new(&StackConfig::new(n, seed)).unwrap();
        let mut oracle = Oracle::new(n).unwrap();
        for &op in &w.ops {
            if let Op::Insert(u, v) = op {
                s.insert(u, v).unwrap();
                oracle.insert(u, v).unwrap();
                prop_assert!(s.insert(v, u).is_err());
            } else if let Op::Delete(u, v) = op {
                s.delete(u, v).unwrap();
                oracle.delete(u, v).unwrap();
                prop_assert!(s.delete(u, v).is_err());
            }
        }
        prop_assert!(s.insert(0, 0).is_err());
        prop_assert!(s.query(0, n).is_err());
        prop_assert_eq!(s.edge_count(), oracle.edge_count());
        prop_assert_eq!(s.check_invariants().structural_violations(), 0);
    }

    #[test]
    fn tree_xor_matches_cut(
        n in 2u32..40,
        edges in prop::collection::vec((0u32..40, 0u32..40, any::<bool>()), 0..120),
        families in 1usize..4,
        seed: u64,
    ) {
        let mut c = CutsetState::new(n, families, seed).unwrap();
        let mut uf = UnionFind::new(n);
        for (u, v, tree) in edges {
            let (u, v) = (u % n, v % n);
            if u == v || c.contains_edge(u, v) {
                continue;
            }
            c.insert_edge(u, v).unwrap();
            if tree && uf.union(u, v) {
                c.insert_tree_edge(u, v).unwrap();
            }
        }
        for root in 0..n {
            let t = c.tree(root);
            let inside: HashSet<u32> = c.forest().tree_vertices(t).collect();
            for f in 0..families {
                for i in 0..c.levels() {
                    let mut expect = 0;
                    for (name, d) in c.edges() {
                        let (a, b) = c.codec().decode(name).unwrap();
                        if d[f] as usize >= i && inside.contains(&a) != inside.contains(&b) {
                            expect ^= name.0;
                        }
                    }
                    prop_assert_eq!(c.forest().tree_xor(t, c.channel(f, i)).unwrap().0, expect);
                }
            }
            let found = c.outgoing_edge(t).unwrap();
            if let Some((a, b)) = found {
                prop_assert!(c.contains_edge(a, b));
                prop_assert!(inside.contains(&a) != inside.contains(&b));
            }
        }
    }
}
