//! Analytical model of the file download delay when popular content is
//! cached in mobile devices with an MDS code and fetched over D2D links,
//! with the base station completing whatever the devices cannot deliver.
//!
//! The pipeline for one parameter point is
//! [`RequestSnapshot`] -> [`D2DOutcomeDistribution`] -> [`DelayBreakdown`];
//! [`analyze`] runs all of it.

pub mod composition;
pub mod d2d;
pub mod delay;
mod error;
pub mod kernels;
pub mod params;
pub mod popularity;

pub use composition::{Conditional, RequestSnapshot};
pub use d2d::{D2DOutcomeDistribution, GammaTable, TypeOutcome};
pub use delay::DelayBreakdown;
pub use error::{ModelError, Result};
pub use kernels::{DeathProcessKernel, Poisson, Truncation, TruncationPolicy};
pub use params::{cached_file_count, validate, CodeParams, StorageBudget, SystemParams, ValidationReport};
pub use popularity::PopularityModel;

/// One evaluated parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub params: SystemParams,
    pub code: CodeParams,
    pub cached_files: usize,
    pub snapshot: RequestSnapshot,
    pub outcomes: D2DOutcomeDistribution,
    pub delay: DelayBreakdown,
}

/// Validates the inputs and evaluates the full analytical pipeline.
pub fn analyze(
    params: &SystemParams,
    code: &CodeParams,
    popularity: &PopularityModel,
    policy: &TruncationPolicy,
) -> Result<Analysis> {
    validate(params, code).into_result()?;
    let snapshot = RequestSnapshot::build(params, policy)?;
    let outcomes = D2DOutcomeDistribution::compute(&snapshot, params.mu, params.t_d, code.k);
    let delay = DelayBreakdown::compute(
        params.omega,
        params.mean_devices,
        popularity.hit_probability(),
        outcomes.eta,
        outcomes.tbar_eta,
        outcomes.p_s,
        code.k,
        params.t_bs,
    )?;
    Ok(Analysis {
        params: params.clone(),
        code: *code,
        cached_files: popularity.cached_files(),
        snapshot,
        outcomes,
        delay,
    })
}
