//! Parameter sweeps of the analytical model and the simulator, written as
//! CSV tables with a commented header describing the sweep.

pub mod sweep;

use std::io::Write;
use std::path::Path;

use d2dcache_core::{analyze, Analysis, TruncationPolicy};
use d2dcache_sim::{compare, ComparisonReport, SimConfig, SimError, SimStats, Tolerance};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use sweep::{Axis, Point, Preset, SweepSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{failed} of {total} points failed the comparison")]
    Comparison { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Comparison { .. } => 3,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytic,
    Simulate,
    Compare,
}

impl Mode {
    fn analytic(self) -> bool {
        self != Mode::Simulate
    }

    fn simulated(self) -> bool {
        self != Mode::Analytic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimBudget {
    pub seed: u64,
    pub requests: u64,
    pub replications: usize,
    pub warmup_requests: u64,
}

impl Default for SimBudget {
    fn default() -> Self {
        Self { seed: 42, requests: 100_000, replications: 10, warmup_requests: d2dcache_sim::DEFAULT_WARMUP_REQUESTS }
    }
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: Point,
    pub analysis: Option<Analysis>,
    pub stats: Option<SimStats>,
    pub report: Option<ComparisonReport>,
}

/// One measured request of one sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub point: usize,
    pub axis_value: f64,
    pub n_c: u32,
    pub k: u32,
    #[serde(rename = "F")]
    pub cached_files: usize,
    pub replication: usize,
    pub time: f64,
    pub rank: u64,
    pub hit: bool,
    pub idle: bool,
    #[serde(rename = "R")]
    pub request_type: u8,
    pub attempts: u32,
    pub symbols_d2d: u32,
    pub delay: f64,
}

pub struct Sweep {
    pub spec: SweepSpec,
    pub mode: Mode,
    pub budget: SimBudget,
    pub results: Vec<PointResult>,
    pub trace: Option<Vec<TraceRow>>,
}

impl Sweep {
    pub fn run(spec: SweepSpec, mode: Mode, budget: SimBudget, trace: bool) -> Result<Self, CliError> {
        let points = spec.points()?;
        let policy = TruncationPolicy::default();
        let evaluated: Vec<Result<(PointResult, Vec<TraceRow>), CliError>> = points
            .into_par_iter()
            .enumerate()
            .map(|(index, point)| {
                let analysis = if mode.analytic() {
                    Some(analyze(&point.params, &point.code, &point.popularity, &policy).map_err(|e| {
                        CliError::Config(format!("point {} code ({}, {}): {e}", point.axis_value, point.code.length, point.code.k))
                    })?)
                } else {
                    None
                };
                let mut rows = Vec::new();
                let stats = if mode.simulated() {
                    let config = SimConfig {
                        warmup_requests: budget.warmup_requests,
                        ..SimConfig::new(point.params.clone(), point.code, point.popularity.clone(), budget.seed)
                            .with_budget(budget.requests, budget.replications)
                    };
                    if trace {
                        let (stats, records) = d2dcache_sim::run_traced(&config)?;
                        rows = records
                            .into_iter()
                            .map(|r| TraceRow {
                                point: index,
                                axis_value: point.axis_value,
                                n_c: point.params.mean_storage as u32,
                                k: point.code.k,
                                cached_files: point.popularity.cached_files(),
                                replication: r.replication,
                                time: r.time,
                                rank: r.rank,
                                hit: r.hit,
                                idle: r.idle,
                                request_type: r.request_type,
                                attempts: r.attempts,
                                symbols_d2d: r.symbols_d2d,
                                delay: r.delay,
                            })
                            .collect();
                        Some(stats)
                    } else {
                        Some(d2dcache_sim::run(&config)?)
                    }
                } else {
                    None
                };
                let report = match (&stats, &analysis) {
                    (Some(s), Some(a)) => Some(compare(s, a)?),
                    _ => None,
                };
                Ok((PointResult { point, analysis, stats, report }, rows))
            })
            .collect();
        let mut results = Vec::with_capacity(evaluated.len());
        let mut trace_rows = trace.then(Vec::new);
        for item in evaluated {
            let (result, rows) = item?;
            results.push(result);
            if let Some(t) = trace_rows.as_mut() {
                t.extend(rows);
            }
        }
        Ok(Self { spec, mode, budget, results, trace: trace_rows })
    }

    pub fn failed_points(&self) -> usize {
        self.results.iter().filter(|r| r.report.as_ref().is_some_and(|c| !c.passed())).count()
    }

    pub fn header(&self) -> Vec<&'static str> {
        let mut h = vec!["axis_value", "n_c", "k", "F"];
        if self.mode.analytic() {
            h.extend(["p_hit", "p_R1", "p_idle", "eta", "Tbar_eta", "Tbar_dw", "speedup"]);
        }
        if self.mode.simulated() {
            h.extend([
                "sim_Tbar_dw",
                "sim_Tbar_dw_ci",
                "sim_speedup",
                "sim_p_hit",
                "sim_p_R1",
                "sim_p_R1_ci",
                "sim_p_idle",
                "sim_p_idle_ci",
                "sim_eta",
                "sim_eta_ci",
                "sim_Tbar_eta",
                "sim_Tbar_eta_ci",
                "sim_mean_nodes",
                "sim_sessions",
            ]);
        }
        if self.mode == Mode::Compare {
            h.extend(["delay_rel_err", "max_se_multiple", "pass"]);
        }
        h
    }

    fn row(&self, r: &PointResult) -> Vec<String> {
        let p = &r.point;
        let mut row = vec![
            p.axis_value.to_string(),
            p.params.mean_storage.to_string(),
            p.code.k.to_string(),
            p.popularity.cached_files().to_string(),
        ];
        if let Some(a) = &r.analysis {
            let d = &a.delay;
            row.extend([d.p_hit, d.p_s, d.p_idle, d.eta, d.tbar_eta, d.tbar_dw, d.speedup].map(|v| v.to_string()));
        }
        if let Some(s) = &r.stats {
            let t_ref = f64::from(p.code.k) * p.params.t_bs;
            row.extend(
                [
                    s.mean_delay.mean,
                    s.mean_delay.ci_half_width,
                    t_ref / s.mean_delay.mean,
                    s.hit_fraction.mean,
                    s.list_request_fraction.mean,
                    s.list_request_fraction.ci_half_width,
                    s.idle_fraction.mean,
                    s.idle_fraction.ci_half_width,
                    s.eta_hat.mean,
                    s.eta_hat.ci_half_width,
                    s.tbar_eta.mean,
                    s.tbar_eta.ci_half_width,
                    s.mean_nodes.mean,
                ]
                .map(|v| v.to_string()),
            );
            row.push(s.sessions.to_string());
        }
        if let Some(c) = &r.report {
            let delay = c.find(d2dcache_sim::CheckKind::MeanDelay).map_or(f64::NAN, |d| d.rel_error);
            let worst = c
                .checks
                .iter()
                .filter(|c| c.gating && matches!(c.tolerance, Tolerance::StdErrors(_)))
                .map(|c| c.se_multiple)
                .fold(0.0, f64::max);
            row.extend([delay.to_string(), worst.to_string(), c.passed().to_string()]);
        }
        row
    }

    /// The CSV table with its commented header.
    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut out = Vec::new();
        let mode = match self.mode {
            Mode::Analytic => "analytic",
            Mode::Simulate => "simulate",
            Mode::Compare => "compare",
        };
        writeln!(out, "# d2dcache {mode} sweep {:?}", self.spec.name)?;
        writeln!(out, "# axis: {}; grid: {:?}", self.spec.axis, self.spec.grid)?;
        writeln!(out, "# spec: {}", serde_json::to_string(&self.spec).expect("spec serializes"))?;
        if self.mode.simulated() {
            let b = &self.budget;
            writeln!(
                out,
                "# simulation: seed {}, {} measured requests x {} replications, warmup {} requests; CI columns are 95% half widths",
                b.seed, b.requests, b.replications, b.warmup_requests
            )?;
        }
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(self.header())?;
        for r in &self.results {
            w.write_record(self.row(r))?;
        }
        w.flush()?;
        drop(w);
        Ok(out)
    }

    pub fn trace_csv(&self) -> Result<Option<Vec<u8>>, CliError> {
        let Some(rows) = &self.trace else { return Ok(None) };
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        Ok(Some(w.into_inner().map_err(|e| e.into_error())?))
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}
