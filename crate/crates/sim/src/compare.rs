//! Simulated estimates against the analytical prediction of the same point.

use std::fmt;

use d2dcache_core::{Analysis, PopularityModel};
use serde::Serialize;

use crate::stats::{Estimate, SimStats};
use crate::SimError;

pub const DELAY_REL_TOL: f64 = 0.05;
pub const PROBABILITY_SE_TOL: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckKind {
    MeanDelay,
    HitProbability,
    IdleProbability,
    RequestType,
    OutcomeBin { request_type: usize, symbols: usize },
    MeanListSize,
    Eta,
    TbarEta,
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckKind::MeanDelay => write!(f, "Tbar_dw"),
            CheckKind::HitProbability => write!(f, "p_hit"),
            CheckKind::IdleProbability => write!(f, "p_idle"),
            CheckKind::RequestType => write!(f, "p_R1"),
            CheckKind::OutcomeBin { request_type, symbols } => write!(f, "bin[R={request_type}][{symbols}]"),
            CheckKind::MeanListSize => write!(f, "E[X1]"),
            CheckKind::Eta => write!(f, "eta"),
            CheckKind::TbarEta => write!(f, "Tbar_eta"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Tolerance {
    Relative(f64),
    StdErrors(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub kind: CheckKind,
    pub analytic: f64,
    pub simulated: f64,
    pub std_error: f64,
    pub rel_error: f64,
    pub se_multiple: f64,
    pub tolerance: Tolerance,
    /// Whether the check decides the overall verdict; the others are
    /// reported for diagnosis only.
    pub gating: bool,
    pub passed: bool,
}

impl Check {
    fn new(kind: CheckKind, analytic: f64, simulated: f64, std_error: f64, tolerance: Tolerance, gating: bool) -> Self {
        let diff = (simulated - analytic).abs();
        let rel_error = if analytic == 0.0 && diff == 0.0 { 0.0 } else { diff / analytic.abs() };
        let se_multiple = if diff == 0.0 { 0.0 } else { diff / std_error };
        let passed = match tolerance {
            Tolerance::Relative(tol) => rel_error <= tol,
            Tolerance::StdErrors(tol) => se_multiple <= tol,
        };
        Self { kind, analytic, simulated, std_error, rel_error, se_multiple, tolerance, gating, passed }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match (self.passed, self.gating) {
            (true, _) => "ok",
            (false, true) => "FAIL",
            (false, false) => "off",
        };
        write!(
            f,
            "{:<16} analytic {:>12.6e}  sim {:>12.6e}  rel {:>8.3}%  {:>6.2} SE  {verdict}",
            self.kind.to_string(),
            self.analytic,
            self.simulated,
            100.0 * self.rel_error,
            self.se_multiple
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub checks: Vec<Check>,
}

impl ComparisonReport {
    /// Every gating check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.gating).all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.gating && !c.passed)
    }

    pub fn find(&self, kind: CheckKind) -> Option<&Check> {
        self.checks.iter().find(|c| c.kind == kind)
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        write!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Standard error of a simulated frequency: the spread across replications,
/// floored by the binomial error of the predicted value over the pooled
/// sample so that a handful of replications cannot report a spuriously tiny
/// error.
fn frequency_se(estimate: &Estimate, predicted: f64, pooled: u64) -> f64 {
    let n = pooled.max(1) as f64;
    let binomial = (predicted * (1.0 - predicted) / n).sqrt().max(1.0 / n);
    if estimate.std_error.is_nan() {
        binomial
    } else {
        estimate.std_error.max(binomial)
    }
}

fn same_point(stats: &SimStats, analysis: &Analysis) -> Result<(), SimError> {
    if stats.params != analysis.params {
        return Err(SimError::Mismatch(format!("{:?} vs {:?}", stats.params, analysis.params)));
    }
    if stats.code != analysis.code {
        return Err(SimError::Mismatch(format!("code {:?} vs {:?}", stats.code, analysis.code)));
    }
    if stats.cached_files != analysis.cached_files {
        return Err(SimError::Mismatch(format!("F = {} vs {}", stats.cached_files, analysis.cached_files)));
    }
    let p_hit = PopularityModel::new(stats.library_size, stats.sigma, stats.cached_files)?.hit_probability();
    if (p_hit - analysis.delay.p_hit).abs() > 1e-12 {
        return Err(SimError::Mismatch(format!("hit probability {p_hit} vs {}", analysis.delay.p_hit)));
    }
    Ok(())
}

/// Pass rule: mean delay within 5% relative, and the hit, request-type and
/// outcome probabilities within 3 standard errors. The idle probability is
/// gated at 5% only where its small-load approximation applies.
pub fn compare(stats: &SimStats, analysis: &Analysis) -> Result<ComparisonReport, SimError> {
    same_point(stats, analysis)?;
    let d = &analysis.delay;
    let rel = Tolerance::Relative(DELAY_REL_TOL);
    let se = Tolerance::StdErrors(PROBABILITY_SE_TOL);
    let mut checks = vec![
        Check::new(CheckKind::MeanDelay, d.tbar_dw, stats.mean_delay.mean, stats.mean_delay.std_error, rel, true),
        Check::new(
            CheckKind::HitProbability,
            d.p_hit,
            stats.hit_fraction.mean,
            frequency_se(&stats.hit_fraction, d.p_hit, stats.requests),
            se,
            true,
        ),
        Check::new(
            CheckKind::IdleProbability,
            d.p_idle,
            stats.idle_fraction.mean,
            stats.idle_fraction.std_error,
            rel,
            d.idle_load <= d2dcache_core::delay::SMALL_LOAD_LIMIT,
        ),
        Check::new(
            CheckKind::RequestType,
            d.p_s,
            stats.list_request_fraction.mean,
            frequency_se(&stats.list_request_fraction, d.p_s, stats.requests),
            se,
            true,
        ),
    ];
    for (outcome, hist) in analysis.outcomes.by_type.iter().zip(&stats.histograms) {
        let (Some(outcome), sessions) = (outcome, hist.sessions()) else { continue };
        if sessions == 0 {
            continue;
        }
        for (s, p) in outcome.symbol_count_pmf().into_iter().enumerate() {
            let freq = &hist.frequency[s];
            checks.push(Check::new(
                CheckKind::OutcomeBin { request_type: hist.request_type, symbols: s },
                p,
                freq.mean,
                frequency_se(freq, p, sessions),
                se,
                true,
            ));
        }
    }
    checks.extend([
        Check::new(CheckKind::MeanListSize, analysis.snapshot.mean_x1, stats.mean_x1.mean, stats.mean_x1.std_error, se, false),
        Check::new(CheckKind::Eta, analysis.outcomes.eta, stats.eta_hat.mean, stats.eta_hat.std_error, rel, false),
        Check::new(CheckKind::TbarEta, analysis.outcomes.tbar_eta, stats.tbar_eta.mean, stats.tbar_eta.std_error, rel, false),
    ]);
    Ok(ComparisonReport { checks })
}
