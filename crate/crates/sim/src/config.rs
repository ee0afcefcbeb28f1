use d2dcache_core::params::Violation;
use d2dcache_core::{validate, CodeParams, ModelError, PopularityModel, SystemParams, ValidationReport};
use thiserror::Error;

/// Fewer measured requests than this make the replication CIs meaningless.
pub const MIN_MEASURED_REQUESTS: u64 = 1_000;

pub const DEFAULT_WARMUP_REQUESTS: u64 = 2_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid parameters: {0}")]
    Params(ValidationReport),

    #[error("measured_requests = {0} is below the minimum of {MIN_MEASURED_REQUESTS}")]
    TooFewRequests(u64),

    #[error("at least one replication is required")]
    NoReplications,

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("simulated and analytic points differ: {0}")]
    Mismatch(String),

}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: SystemParams,
    pub code: CodeParams,
    pub popularity: PopularityModel,
    pub seed: u64,
    /// Requests discarded before measurement starts. Measurement also waits
    /// for `warmup_time()`, whichever comes later.
    pub warmup_requests: u64,
    pub measured_requests: u64,
    pub replications: usize,
}

impl SimConfig {
    pub fn new(params: SystemParams, code: CodeParams, popularity: PopularityModel, seed: u64) -> Self {
        Self {
            params,
            code,
            popularity,
            seed,
            warmup_requests: DEFAULT_WARMUP_REQUESTS,
            measured_requests: 100_000,
            replications: 10,
        }
    }

    pub fn with_budget(mut self, measured_requests: u64, replications: usize) -> Self {
        self.measured_requests = measured_requests;
        self.replications = replications;
        self
    }

    /// Ten mean lifetimes of a full cluster population.
    pub fn warmup_time(&self) -> f64 {
        10.0 * self.params.mean_devices / self.params.lambda
    }

    /// Same checks as the analytical model, except that an empty or small
    /// storage population is allowed: the simulator simply falls back to the
    /// base station.
    pub fn validate(&self) -> Result<(), SimError> {
        let mut report = validate(&self.params, &self.code);
        report.violations.retain(|v| !matches!(v, Violation::DimensionExceedsStorage { .. }));
        if !report.passed() {
            return Err(SimError::Params(report));
        }
        if self.measured_requests < MIN_MEASURED_REQUESTS {
            return Err(SimError::TooFewRequests(self.measured_requests));
        }
        if self.replications == 0 {
            return Err(SimError::NoReplications);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n_c: f64, k: u32) -> SimConfig {
        let params = SystemParams {
            devices: None,
            clusters: None,
            mean_devices: 30.0,
            storage_nodes: None,
            mean_storage: n_c,
            lambda: 1.0,
            mu: 1.0,
            omega: 0.02,
            delta: 1.0,
            t_d: 0.02,
            t_bs: 0.2,
            allow_rate_mismatch: false,
        };
        SimConfig::new(params, CodeParams::new(15, k), PopularityModel::full_cache(100, 0.8).unwrap(), 1)
    }

    #[test]
    fn empty_storage_is_simulable() {
        assert!(config(0.0, 5).validate().is_ok());
        assert!(config(2.0, 5).validate().is_ok());
    }

    #[test]
    fn rejects_bad_budgets() {
        assert!(matches!(config(15.0, 5).with_budget(999, 3).validate(), Err(SimError::TooFewRequests(999))));
        assert!(matches!(config(15.0, 5).with_budget(5000, 0).validate(), Err(SimError::NoReplications)));
        let mut c = config(15.0, 5);
        c.params.omega = 0.0;
        assert!(matches!(c.validate(), Err(SimError::Params(_))));
    }

    #[test]
    fn warmup_time_scales_with_population() {
        assert_eq!(config(15.0, 5).warmup_time(), 300.0);
    }
}
