#![allow(dead_code)]

use d2dcache_core::{CodeParams, PopularityModel, SystemParams};
use d2dcache_sim::SimConfig;

/// Reference cluster: M_c = 30, mu = lambda = 1, omega = 0.02, T_ref = 1.
pub fn params(n_c: f64, k: u32, delta: f64, bs_over_d2d: f64) -> SystemParams {
    let t_bs = 1.0 / f64::from(k);
    SystemParams {
        devices: None,
        clusters: None,
        mean_devices: 30.0,
        storage_nodes: None,
        mean_storage: n_c,
        lambda: 1.0,
        mu: 1.0,
        omega: 0.02,
        delta,
        t_d: t_bs / bs_over_d2d,
        t_bs,
        allow_rate_mismatch: false,
    }
}

pub fn config(n_c: u32, k: u32, delta: f64, bs_over_d2d: f64, requests: u64, reps: usize) -> SimConfig {
    SimConfig::new(
        params(f64::from(n_c), k, delta, bs_over_d2d),
        CodeParams::new(n_c.max(k), k),
        PopularityModel::full_cache(1000, 0.8).unwrap(),
        2024,
    )
    .with_budget(requests, reps)
}
