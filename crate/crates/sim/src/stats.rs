use d2dcache_core::{CodeParams, SystemParams};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::engine::Tally;

/// Mean of per-replication values with its standard error and the half
/// width of a two-sided 95% Student-t interval. With a single replication
/// the error terms are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub ci_half_width: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, std_error: f64::NAN, ci_half_width: f64::NAN, samples: 0 };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, std_error: f64::NAN, ci_half_width: f64::NAN, samples: 1 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std_error = (var / n as f64).sqrt();
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive freedom").inverse_cdf(0.975);
        Self { mean, std_error, ci_half_width: t * std_error, samples: n }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.ci_half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci_half_width
    }
}

/// Outcomes of the D2D sessions of one request type. Bin `s` counts
/// sessions that obtained `s` symbols; the last bin is a full download.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeHistogram {
    pub request_type: usize,
    pub needed: usize,
    /// Pooled over replications.
    pub counts: Vec<u64>,
    /// Per-bin frequency across replications that had a session of this type.
    pub frequency: Vec<Estimate>,
}

impl OutcomeHistogram {
    pub fn sessions(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimStats {
    pub params: SystemParams,
    pub code: CodeParams,
    pub library_size: usize,
    pub cached_files: usize,
    pub sigma: f64,
    pub replications: usize,
    pub requests: u64,
    pub sessions: u64,
    pub mean_delay: Estimate,
    pub hit_fraction: Estimate,
    pub idle_fraction: Estimate,
    /// Estimates `Pr{R = 1}`.
    pub list_request_fraction: Estimate,
    /// Listed storage nodes alive at a request, requester included.
    pub mean_x1: Estimate,
    /// Symbols obtained per D2D session.
    pub eta_hat: Estimate,
    /// D2D channel time per D2D session.
    pub tbar_eta: Estimate,
    pub mean_nodes: Estimate,
    pub mean_storage_nodes: Estimate,
    pub histograms: [OutcomeHistogram; 2],
}

fn per_rep(tallies: &[Tally], f: impl Fn(&Tally) -> Option<f64>) -> Estimate {
    Estimate::from_samples(&tallies.iter().filter_map(f).collect::<Vec<_>>())
}

fn ratio(num: f64, den: u64) -> Option<f64> {
    (den > 0).then(|| num / den as f64)
}

pub(crate) fn summarize(config: &crate::SimConfig, tallies: &[Tally]) -> SimStats {
    let k = config.code.k as usize;
    let histograms = [0, 1].map(|i| {
        let needed = k - i;
        let counts = (0..=needed).map(|s| tallies.iter().map(|t| t.histograms[i][s]).sum()).collect();
        let frequency = (0..=needed)
            .map(|s| {
                per_rep(tallies, |t| {
                    let total: u64 = t.histograms[i].iter().sum();
                    ratio(t.histograms[i][s] as f64, total)
                })
            })
            .collect();
        OutcomeHistogram { request_type: i, needed, counts, frequency }
    });
    SimStats {
        params: config.params.clone(),
        code: config.code,
        library_size: config.popularity.library_size(),
        cached_files: config.popularity.cached_files(),
        sigma: config.popularity.sigma(),
        replications: tallies.len(),
        requests: tallies.iter().map(|t| t.requests).sum(),
        sessions: tallies.iter().map(|t| t.sessions).sum(),
        mean_delay: per_rep(tallies, |t| ratio(t.delay_sum, t.requests)),
        hit_fraction: per_rep(tallies, |t| ratio(t.hits as f64, t.requests)),
        idle_fraction: per_rep(tallies, |t| ratio(t.idle as f64, t.requests)),
        list_request_fraction: per_rep(tallies, |t| ratio(t.list_requests as f64, t.requests)),
        mean_x1: per_rep(tallies, |t| ratio(t.x1_sum as f64, t.requests)),
        eta_hat: per_rep(tallies, |t| ratio(t.symbols_sum as f64, t.sessions)),
        tbar_eta: per_rep(tallies, |t| ratio(t.channel_time_sum, t.sessions)),
        mean_nodes: per_rep(tallies, |t| (t.span > 0.0).then(|| t.node_time / t.span)),
        mean_storage_nodes: per_rep(tallies, |t| (t.span > 0.0).then(|| t.storage_time / t.span)),
        histograms,
    }
}
