//! Empirical success rate of a single `outgoing_edge` call as a function of
//! cut size.
//!
//! The fixture is two stars on `n / 2` vertices each, joined by `s` random
//! cross edges. Each trial deletes and reinserts the cross edges, which
//! redraws their sampling depths; star edges sit inside one tree and cancel
//! out of every tree sum, so a trial is distributed like a fresh structure.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cutset::{derive_seed, CutsetState};
use crate::error::{Error, Result};
use crate::harness::run::FORMAT_VERSION;

/// One-sided 99% normal quantile.
const Z99: f64 = 2.326;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessRow {
    pub cut_size: usize,
    pub trials: u64,
    pub hits: u64,
    pub rate: f64,
    /// Wilson score lower bound at one-sided 99%.
    pub lower_bound_99: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessReport {
    pub format_version: u32,
    pub n: u32,
    pub families: usize,
    pub seed: u64,
    pub rows: Vec<SuccessRow>,
}

impl SuccessReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("success report serializes") + "\n"
    }
}

pub fn wilson_lower(hits: u64, trials: u64, z: f64) -> f64 {
    if hits == 0 {
        return 0.0;
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - spread) / (1.0 + z2 / n)).max(0.0)
}

fn two_stars(n: u32, families: usize, seed: u64) -> Result<CutsetState> {
    let half = n / 2;
    let mut c = CutsetState::new(n, families, seed)?;
    for v in 1..half {
        c.insert_edge(0, v)?;
        c.insert_tree_edge(0, v)?;
        c.insert_edge(half, half + v)?;
        c.insert_tree_edge(half, half + v)?;
    }
    Ok(c)
}

/// Measures the fraction of `outgoing_edge` calls that return an edge for
/// each cut size. Returning an edge outside the cut is an error.
pub fn measure_success_rate(
    n: u32,
    cut_sizes: &[usize],
    trials: u64,
    seed: u64,
    families: usize,
) -> Result<SuccessReport> {
    if n < 4 {
        return Err(Error::InvalidConfig(
            "success measurement needs n >= 4".into(),
        ));
    }
    let half = n / 2;
    let capacity = half as usize * (n - half) as usize;
    let mut rows = Vec::with_capacity(cut_sizes.len());
    for (idx, &s) in cut_sizes.iter().enumerate() {
        if s > capacity {
            return Err(Error::InvalidConfig(format!(
                "cut size {s} exceeds the {capacity} possible cross edges"
            )));
        }
        let stream = derive_seed(seed, idx as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        let mut cross = HashSet::with_capacity(s);
        while cross.len() < s {
            cross.insert((rng.gen_range(0..half), rng.gen_range(half..n)));
        }
        let mut cross: Vec<_> = cross.into_iter().collect();
        cross.sort_unstable();

        let mut c = two_stars(n, families, derive_seed(stream, 1))?;
        for &(a, b) in &cross {
            c.insert_edge(a, b)?;
        }
        let mut hits = 0;
        for trial in 0..trials {
            if trial > 0 {
                for &(a, b) in &cross {
                    c.delete_edge(a, b)?;
                    c.insert_edge(a, b)?;
                }
            }
            let t = c.tree(0);
            if let Some(e) = c.outgoing_edge(t)? {
                if cross.binary_search(&e).is_err() {
                    return Err(Error::CorruptState(format!(
                        "outgoing edge {{{}, {}}} is not in the cut",
                        e.0, e.1
                    )));
                }
                hits += 1;
            }
        }
        rows.push(SuccessRow {
            cut_size: s,
            trials,
            hits,
            rate: if trials == 0 {
                0.0
            } else {
                hits as f64 / trials as f64
            },
            lower_bound_99: wilson_lower(hits, trials, Z99),
        });
    }
    Ok(SuccessReport {
        format_version: FORMAT_VERSION,
        n,
        families,
        seed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_bounds() {
        assert_eq!(wilson_lower(0, 0, Z99), 0.0);
        assert_eq!(wilson_lower(0, 100, Z99), 0.0);
        let lb = wilson_lower(100, 100, Z99);
        assert!(lb > 0.94 && lb < 1.0);
        let lb = wilson_lower(500, 1000, Z99);
        assert!((lb - 0.463).abs() < 0.005, "{lb}");
    }

    #[test]
    fn sizes_zero_and_one() {
        let r = measure_success_rate(64, &[0, 1], 200, 3, 3).unwrap();
        assert_eq!(r.rows[0].hits, 0);
        assert_eq!(r.rows[1].hits, 200);
    }

    #[test]
    fn larger_cuts_succeed_often() {
        let r = measure_success_rate(128, &[2, 8, 64], 500, 9, 3).unwrap();
        for row in &r.rows {
            assert!(row.rate >= 0.5, "{row:?}");
        }
    }

    #[test]
    fn deterministic() {
        let a = measure_success_rate(64, &[3, 5], 100, 11, 2).unwrap();
        let b = measure_success_rate(64, &[3, 5], 100, 11, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oversized_cut_rejected() {
        assert!(measure_success_rate(8, &[17], 1, 1, 1).is_err());
        assert!(measure_success_rate(2, &[1], 1, 1, 1).is_err());
    }
}
