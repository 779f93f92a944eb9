//! Replaying workloads through the layered structure, optionally against
//! the oracle, and tallying what happened.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::cutset::CutsetLayer;
use crate::error::Error;
use crate::harness::boosted::{boosted_stack, BOOSTED_FAMILIES};
use crate::harness::oracle::Oracle;
use crate::harness::workload::{generate_workload, Mix, Op, Workload};
use crate::layered::{layer_count, LayerStack, StackConfig};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Engine {
    Layered,
    Boosted { copies: usize },
}

impl Engine {
    pub fn label(&self) -> &'static str {
        match self {
            Engine::Layered => "layered",
            Engine::Boosted { .. } => "boosted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub stack: StackConfig,
    pub engine: Engine,
    /// Audit invariants after every `check_cadence`-th op; 0 disables.
    pub check_cadence: usize,
    pub timing: bool,
}

impl RunConfig {
    pub fn new(stack: StackConfig) -> Self {
        Self {
            stack,
            engine: Engine::Layered,
            check_cadence: 0,
            timing: false,
        }
    }

    pub fn ell(&self) -> usize {
        match self.engine {
            Engine::Layered => self.stack.ell(),
            Engine::Boosted { .. } => layer_count(self.stack.n, 1.0),
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(#[from] Error),
    #[error("operation {index} (`{op}`): {source}")]
    Contract { index: usize, op: Op, source: Error },
    #[error(
        "soundness violation at operation {index}: query {u} {v} answered connected, \
         but the graph does not connect them"
    )]
    Impossible { index: usize, u: u32, v: u32 },
}

/// Count, sum, mean and max of a per-operation quantity.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Tally {
    pub count: u64,
    pub total: u64,
    pub max: u64,
    pub mean: f64,
}

impl Tally {
    pub fn add(&mut self, x: u64) {
        self.count += 1;
        self.total += x;
        self.max = self.max.max(x);
        self.mean = self.total as f64 / self.count as f64;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Quantiles {
    pub count: usize,
    pub p50_ns: u64,
    pub p90_ns: u64,
    pub p99_ns: u64,
    pub max_ns: u64,
}

impl Quantiles {
    pub fn from_samples(mut xs: Vec<u64>) -> Self {
        if xs.is_empty() {
            return Self::default();
        }
        xs.sort_unstable();
        let at = |q: usize| xs[(xs.len() - 1) * q / 100];
        Self {
            count: xs.len(),
            p50_ns: at(50),
            p90_ns: at(90),
            p99_ns: at(99),
            max_ns: *xs.last().unwrap(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timing {
    pub insert: Quantiles,
    pub delete: Quantiles,
    pub query: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub n: u32,
    pub seed: u64,
    pub c_factor: f64,
    pub families: usize,
    pub ell: usize,
    pub check_cadence: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OpTally {
    pub inserts: u64,
    pub deletes: u64,
    pub queries: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CutsetOpStats {
    pub per_insert: Tally,
    pub per_delete: Tally,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct QueryStats {
    pub answered_true: u64,
    pub answered_false: u64,
    /// Queries checked against the oracle.
    pub checked: u64,
    /// Answered disconnected while connected.
    pub one_sided_mismatches: u64,
}

impl QueryStats {
    pub fn mismatch_rate(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.one_sided_mismatches as f64 / self.checked as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InvariantStats {
    pub checks: u64,
    pub structural_violations: u64,
    /// Unmerged non-maximal trees per layer, summed over snapshots.
    pub unmerged_per_layer: Vec<u64>,
    /// Snapshots with no unmerged non-maximal tree on any layer.
    pub fully_merged_snapshots: u64,
    /// Failures of "fully merged implies large trees and a spanning top".
    pub conditional_violations: u64,
    /// Snapshots where the top forest did not span the graph.
    pub spanning_failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutgoingBucket {
    pub cut_size: String,
    pub calls: u64,
    pub hits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub format_version: u32,
    pub engine: Engine,
    pub config: ConfigEcho,
    pub ops: OpTally,
    pub cutset_ops: CutsetOpStats,
    pub queries: QueryStats,
    pub invariants: InvariantStats,
    /// `outgoing_edge` calls on audited ops, bucketed by true cut size.
    pub outgoing_by_cut_size: Vec<OutgoingBucket>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl RunStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize") + "\n"
    }

    /// Broken structure. Impossible answers abort the run instead.
    pub fn soundness_failures(&self) -> u64 {
        self.invariants.structural_violations
    }
}

fn bucket_of(cut: usize) -> (u32, String) {
    match cut {
        0 => (0, "0".into()),
        1 => (1, "1".into()),
        _ => {
            let k = usize::BITS - (cut - 1).leading_zeros();
            let lo = (1usize << (k - 1)) + 1;
            let hi = 1usize << k;
            let label = if lo == hi {
                format!("{hi}")
            } else {
                format!("{lo}-{hi}")
            };
            (k + 1, label)
        }
    }
}

/// Replays `workload` through `stack`, checking every query against the
/// oracle when one is given. `on_query` sees each answer in order.
pub fn replay<C: CutsetLayer>(
    stack: &mut LayerStack<C>,
    workload: &Workload,
    config: &RunConfig,
    mut oracle: Option<&mut Oracle>,
    mut on_query: impl FnMut(bool),
) -> Result<RunStats, HarnessError> {
    if workload.n != stack.n() {
        return Err(Error::InvalidConfig(format!(
            "workload has n = {} but the structure has n = {}",
            workload.n,
            stack.n()
        ))
        .into());
    }
    let ell = stack.ell();
    let mut ops = OpTally::default();
    let mut cutset_ops = CutsetOpStats::default();
    let mut queries = QueryStats::default();
    let mut inv = InvariantStats {
        unmerged_per_layer: vec![0; ell],
        ..Default::default()
    };
    let mut buckets: BTreeMap<u32, OutgoingBucket> = BTreeMap::new();
    let (mut t_ins, mut t_del, mut t_q) = (Vec::new(), Vec::new(), Vec::new());

    for (index, &op) in workload.ops.iter().enumerate() {
        let audit = config.check_cadence > 0 && (index + 1) % config.check_cadence == 0;
        stack.set_probing(audit);
        let contract = |source| HarnessError::Contract { index, op, source };
        let before = stack.cutset_ops();
        let start = config.timing.then(Instant::now);
        match op {
            Op::Insert(u, v) => {
                stack.insert(u, v).map_err(contract)?;
                if let Some(o) = oracle.as_deref_mut() {
                    o.insert(u, v).map_err(contract)?;
                }
                ops.inserts += 1;
                cutset_ops.per_insert.add(stack.cutset_ops() - before);
                if let Some(s) = start {
                    t_ins.push(s.elapsed().as_nanos() as u64);
                }
            }
            Op::Delete(u, v) => {
                stack.delete(u, v).map_err(contract)?;
                if let Some(o) = oracle.as_deref_mut() {
                    o.delete(u, v).map_err(contract)?;
                }
                ops.deletes += 1;
                cutset_ops.per_delete.add(stack.cutset_ops() - before);
                if let Some(s) = start {
                    t_del.push(s.elapsed().as_nanos() as u64);
                }
            }
            Op::Query(u, v) => {
                let answer = stack.query(u, v).map_err(contract)?;
                if let Some(s) = start {
                    t_q.push(s.elapsed().as_nanos() as u64);
                }
                ops.queries += 1;
                if answer {
                    queries.answered_true += 1;
                } else {
                    queries.answered_false += 1;
                }
                if let Some(o) = oracle.as_deref_mut() {
                    let truth = o.connected(u, v).map_err(contract)?;
                    assert_eq!(
                        truth,
                        o.connected_by_search(u, v),
                        "oracle implementations disagree on {u} {v}"
                    );
                    queries.checked += 1;
                    match (answer, truth) {
                        (true, false) => return Err(HarnessError::Impossible { index, u, v }),
                        (false, true) => queries.one_sided_mismatches += 1,
                        _ => {}
                    }
                }
                on_query(answer);
            }
        }

        if audit {
            for p in stack.take_probes() {
                let (key, label) = bucket_of(p.cut_size);
                let b = buckets.entry(key).or_insert(OutgoingBucket {
                    cut_size: label,
                    calls: 0,
                    hits: 0,
                });
                b.calls += 1;
                b.hits += p.found as u64;
            }
            let report = stack.check_invariants();
            inv.checks += 1;
            inv.structural_violations += report.structural_violations() as u64;
            for (i, l) in report.layers.iter().take(ell).enumerate() {
                inv.unmerged_per_layer[i] += l.unmerged as u64;
            }
            if report.unmerged_total() == 0 {
                inv.fully_merged_snapshots += 1;
            }
            inv.conditional_violations += report.conditional_violations() as u64;
            if report.spanning_mismatches > 0 {
                inv.spanning_failures += 1;
            }
        }
    }
    stack.set_probing(false);

    Ok(RunStats {
        format_version: FORMAT_VERSION,
        engine: config.engine,
        config: ConfigEcho {
            n: config.stack.n,
            seed: config.stack.seed,
            c_factor: match config.engine {
                Engine::Layered => config.stack.c_factor,
                Engine::Boosted { .. } => 1.0,
            },
            families: match config.engine {
                Engine::Layered => config.stack.families,
                Engine::Boosted { .. } => BOOSTED_FAMILIES,
            },
            ell,
            check_cadence: config.check_cadence,
        },
        ops,
        cutset_ops,
        queries,
        invariants: inv,
        outgoing_by_cut_size: buckets.into_values().collect(),
        timing: config.timing.then(|| Timing {
            insert: Quantiles::from_samples(t_ins),
            delete: Quantiles::from_samples(t_del),
            query: Quantiles::from_samples(t_q),
        }),
    })
}

/// Runs the configured engine over `workload` without an oracle.
pub fn run_engine(
    workload: &Workload,
    config: &RunConfig,
    on_query: impl FnMut(bool),
) -> Result<RunStats, HarnessError> {
    match config.engine {
        Engine::Layered => {
            let mut stack = LayerStack::new(&config.stack)?;
            replay(&mut stack, workload, config, None, on_query)
        }
        Engine::Boosted { copies } => {
            let mut stack = boosted_stack(config.stack.n, copies, config.stack.seed)?;
            replay(&mut stack, workload, config, None, on_query)
        }
    }
}

/// Replays `workload` through the engine and the oracle side by side.
pub fn differential_run(workload: &Workload, config: &RunConfig) -> Result<RunStats, HarnessError> {
    differential_run_with(workload, config, |_| {})
}

pub fn differential_run_with(
    workload: &Workload,
    config: &RunConfig,
    on_query: impl FnMut(bool),
) -> Result<RunStats, HarnessError> {
    let mut oracle = Oracle::new(workload.n)?;
    match config.engine {
        Engine::Layered => {
            let mut stack = LayerStack::new(&config.stack)?;
            replay(&mut stack, workload, config, Some(&mut oracle), on_query)
        }
        Engine::Boosted { copies } => {
            let mut stack = boosted_stack(config.stack.n, copies, config.stack.seed)?;
            replay(&mut stack, workload, config, Some(&mut oracle), on_query)
        }
    }
}

/// Differential run of the boosted baseline: `ceil(log2 n)` layers of
/// `copies` independent single-family cutsets each.
pub fn boosted_baseline(
    workload: &Workload,
    copies: usize,
    config: &RunConfig,
) -> Result<RunStats, HarnessError> {
    let config = RunConfig {
        engine: Engine::Boosted { copies },
        ..*config
    };
    differential_run(workload, &config)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub ops: usize,
    pub mix: Mix,
    pub seed: u64,
    pub c_factor: f64,
    pub families: usize,
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchCell {
    pub n: u32,
    pub engine: Engine,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: u32,
    pub engine: Engine,
    pub ell: usize,
    pub inserts: u64,
    pub deletes: u64,
    pub cutset_ops_per_insert: Tally,
    pub cutset_ops_per_delete: Tally,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub format_version: u32,
    pub ops: usize,
    pub mix: String,
    pub seed: u64,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bench report serializes") + "\n"
    }
}

fn bench_cell(cell: BenchCell, config: &BenchConfig) -> Result<BenchRow, HarnessError> {
    // Same seed per n: every engine sees the same workload.
    let workload = generate_workload(cell.n, config.ops, config.mix, config.seed)?;
    let run = RunConfig {
        stack: StackConfig {
            n: cell.n,
            seed: config.seed,
            c_factor: config.c_factor,
            families: config.families,
        },
        engine: cell.engine,
        check_cadence: 0,
        timing: config.timing,
    };
    let stats = run_engine(&workload, &run, |_| {})?;
    Ok(BenchRow {
        n: cell.n,
        engine: cell.engine,
        ell: stats.config.ell,
        inserts: stats.ops.inserts,
        deletes: stats.ops.deletes,
        cutset_ops_per_insert: stats.cutset_ops.per_insert,
        cutset_ops_per_delete: stats.cutset_ops.per_delete,
        timing: stats.timing,
    })
}

/// Runs every cell, spreading cells over `threads` workers. Rows come back
/// in cell order regardless of scheduling.
pub fn bench_grid(
    cells: &[BenchCell],
    config: &BenchConfig,
    threads: usize,
) -> Result<BenchReport, HarnessError> {
    let threads = threads.clamp(1, cells.len().max(1));
    let mut results: Vec<Option<Result<BenchRow, HarnessError>>> = Vec::new();
    results.resize_with(cells.len(), || None);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                scope.spawn(move || {
                    cells
                        .iter()
                        .enumerate()
                        .skip(t)
                        .step_by(threads)
                        .map(|(i, &cell)| (i, bench_cell(cell, config)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, row) in h.join().expect("bench worker panicked") {
                results[i] = Some(row);
            }
        }
    });
    let rows = results
        .into_iter()
        .map(|r| r.expect("every cell ran"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BenchReport {
        format_version: FORMAT_VERSION,
        ops: config.ops,
        mix: config.mix.to_string(),
        seed: config.seed,
        rows,
    })
}
