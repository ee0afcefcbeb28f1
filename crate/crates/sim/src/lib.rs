//! Discrete-event simulation of one cluster: Poisson node churn, periodic
//! DS-list broadcasts, Zipf requests, serial D2D downloads over a single
//! shared channel, and base-station completion of whatever D2D misses.
//!
//! Replications run in parallel; each one is a sequential timeline driven
//! by its own counter-based random streams, so results depend only on the
//! configuration and the seed.

mod cluster;
mod compare;
mod config;
mod engine;
mod stats;

use rayon::prelude::*;

pub use cluster::{Cluster, NodeKind, NodeState};
pub use compare::{compare, Check, CheckKind, ComparisonReport, Tolerance, DELAY_REL_TOL, PROBABILITY_SE_TOL};
pub use config::{SimConfig, SimError, DEFAULT_WARMUP_REQUESTS, MIN_MEASURED_REQUESTS};
pub use engine::RequestRecord;
pub use stats::{Estimate, OutcomeHistogram, SimStats};

pub fn run(config: &SimConfig) -> Result<SimStats, SimError> {
    config.validate()?;
    let tallies: Vec<_> =
        (0..config.replications).into_par_iter().map(|rep| engine::run_replication(config, rep, None)).collect();
    Ok(stats::summarize(config, &tallies))
}

/// Like [`run`], also returning every measured request in replication
/// order.
pub fn run_traced(config: &SimConfig) -> Result<(SimStats, Vec<RequestRecord>), SimError> {
    config.validate()?;
    let results: Vec<_> = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let mut records = Vec::with_capacity(config.measured_requests as usize);
            let tally = engine::run_replication(config, rep, Some(&mut records));
            (tally, records)
        })
        .collect();
    let (tallies, records): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((stats::summarize(config, &tallies), records.concat()))
}
