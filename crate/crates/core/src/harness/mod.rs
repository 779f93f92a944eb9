//! Oracle, workloads, replay, baselines and measurements.

pub mod boosted;
pub mod oracle;
pub mod run;
pub mod success;
pub mod workload;
