//! Sweep descriptions and the named presets.

use std::fmt;

use clap::ValueEnum;
use d2dcache_core::{cached_file_count, CodeParams, PopularityModel, StorageBudget, SystemParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Delta,
    Sigma,
    /// Grid values are `k`; each point uses the rate-1/3 code `(3k, k)`.
    Code,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Delta => "delta",
            Axis::Sigma => "sigma",
            Axis::Code => "code",
        })
    }
}

/// Per-device storage budget; the cached library is the largest prefix of
/// the popularity ranking whose symbols fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Storage {
    pub file_size_bits: f64,
    pub capacity_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub name: String,
    pub axis: Axis,
    pub grid: Vec<f64>,
    /// `(n_c, k)` pairs; `n_c` is also the code length.
    pub codes: Vec<(u32, u32)>,
    #[serde(rename = "M_c")]
    pub mean_devices: f64,
    pub lambda: f64,
    pub mu: f64,
    pub omega: f64,
    /// Update interval when the axis is not `delta`.
    pub delta: f64,
    /// Zipf exponent when the axis is not `sigma`.
    pub sigma: f64,
    /// `k t_bs`, the time to fetch a whole file from the base station.
    pub t_ref: f64,
    pub bs_over_d2d: f64,
    #[serde(rename = "Z")]
    pub library_size: usize,
    /// Derive `F` from a storage budget; `None` caches the whole library.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage: Option<Storage>,
    /// With a storage budget, also emit the `F = Z` row of every point.
    #[serde(default)]
    pub full_cache_rows: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Delta sweep, t_bs = 10 t_d.
    Fig2,
    /// Delta sweep, t_bs = 100 t_d.
    Fig3,
    /// Delta sweep, t_bs = 1000 t_d.
    Fig4,
    /// Zipf-exponent sweep with the cache sized by a 6 GB budget.
    Fig5,
    /// Code-dimension sweep at delta = 1, t_bs = 100 t_d.
    Codes,
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

pub const DELTA_POINTS: usize = 20;
const MEGABYTE_BITS: f64 = 8e6;

impl Preset {
    pub fn spec(self) -> SweepSpec {
        let base = SweepSpec {
            name: String::new(),
            axis: Axis::Delta,
            grid: log_grid(0.05, 5.0, DELTA_POINTS),
            codes: vec![(1, 1), (3, 1), (6, 2), (15, 5)],
            mean_devices: 30.0,
            lambda: 1.0,
            mu: 1.0,
            omega: 0.02,
            delta: 1.0,
            sigma: 0.8,
            t_ref: 1.0,
            bs_over_d2d: 10.0,
            library_size: 1000,
            storage: None,
            full_cache_rows: false,
        };
        match self {
            Preset::Fig2 => SweepSpec { name: "fig2".into(), ..base },
            Preset::Fig3 => SweepSpec { name: "fig3".into(), bs_over_d2d: 100.0, ..base },
            Preset::Fig4 => SweepSpec { name: "fig4".into(), bs_over_d2d: 1000.0, ..base },
            Preset::Fig5 => SweepSpec {
                name: "fig5".into(),
                axis: Axis::Sigma,
                grid: (0..=8).map(|i| f64::from(i) / 5.0).collect(),
                codes: vec![(3, 1), (6, 2), (15, 5)],
                delta: 0.5,
                bs_over_d2d: 100.0,
                storage: Some(Storage { file_size_bits: 100.0 * MEGABYTE_BITS, capacity_bits: 6000.0 * MEGABYTE_BITS }),
                full_cache_rows: true,
                ..base
            },
            Preset::Codes => SweepSpec {
                name: "codes".into(),
                axis: Axis::Code,
                grid: vec![1.0, 2.0, 3.0, 4.0, 5.0],
                codes: Vec::new(),
                bs_over_d2d: 100.0,
                ..base
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Codes => "codes",
        }
    }
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub axis_value: f64,
    pub params: SystemParams,
    pub code: CodeParams,
    pub popularity: PopularityModel,
}

impl SweepSpec {
    /// Applies the top-level keys of a JSON object on top of this spec.
    pub fn overridden(&self, overrides: &str) -> Result<Self, CliError> {
        let patch: serde_json::Value =
            serde_json::from_str(overrides).map_err(|e| CliError::Config(format!("config is not valid JSON: {e}")))?;
        let serde_json::Value::Object(patch) = patch else {
            return Err(CliError::Config("config must be a JSON object".into()));
        };
        let mut merged = serde_json::to_value(self).expect("spec serializes");
        let target = merged.as_object_mut().expect("spec is an object");
        for (key, value) in patch {
            target.insert(key, value);
        }
        serde_json::from_value(merged).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(format!("sweep {:?}: {msg}", self.name)));
        if self.grid.is_empty() {
            return bad("grid is empty".into());
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return bad("grid values must be finite".into());
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("grid must be strictly increasing".into());
        }
        match self.axis {
            Axis::Code if self.grid.iter().any(|&k| k < 1.0 || k.fract() != 0.0) => {
                return bad("code grid values must be positive integers".into())
            }
            Axis::Delta | Axis::Sigma if self.codes.is_empty() => return bad("no codes".into()),
            _ => {}
        }
        if !(self.t_ref > 0.0 && self.bs_over_d2d > 0.0) {
            return bad("t_ref and bs_over_d2d must be positive".into());
        }
        if self.full_cache_rows && self.storage.is_none() {
            return bad("full_cache_rows needs a storage budget".into());
        }
        Ok(())
    }

    fn codes_at(&self, axis_value: f64) -> Vec<(u32, u32)> {
        match self.axis {
            Axis::Code => vec![(3 * axis_value as u32, axis_value as u32)],
            _ => self.codes.clone(),
        }
    }

    /// Rows in output order: grid points, then codes, then cache variants.
    pub fn points(&self) -> Result<Vec<Point>, CliError> {
        self.validate()?;
        let mut out = Vec::new();
        for &x in &self.grid {
            for (n_c, k) in self.codes_at(x) {
                if k == 0 {
                    return Err(CliError::Config(format!("code ({n_c}, {k}) has k = 0")));
                }
                let t_bs = self.t_ref / f64::from(k);
                let params = SystemParams {
                    devices: None,
                    clusters: None,
                    mean_devices: self.mean_devices,
                    storage_nodes: None,
                    mean_storage: f64::from(n_c),
                    lambda: self.lambda,
                    mu: self.mu,
                    omega: self.omega,
                    delta: if self.axis == Axis::Delta { x } else { self.delta },
                    t_d: t_bs / self.bs_over_d2d,
                    t_bs,
                    allow_rate_mismatch: false,
                };
                // One symbol per storage node; a cluster without storage nodes
                // still needs a well-formed code.
                let code = CodeParams::new(n_c.max(k), k);
                let sigma = if self.axis == Axis::Sigma { x } else { self.sigma };
                let z = self.library_size;
                let mut caches = Vec::new();
                match self.storage {
                    Some(s) => {
                        let budget =
                            StorageBudget { file_size_bits: s.file_size_bits, capacity_bits: s.capacity_bits, library_size: z };
                        if !budget.is_valid() {
                            return Err(CliError::Config("storage budget must be positive".into()));
                        }
                        caches.push(cached_file_count(&budget, &code));
                        if self.full_cache_rows {
                            caches.push(z);
                        }
                    }
                    None => caches.push(z),
                }
                for f in caches {
                    let popularity = PopularityModel::new(z, sigma, f).map_err(|e| CliError::Config(e.to_string()))?;
                    out.push(Point { axis_value: x, params: params.clone(), code, popularity });
                }
            }
        }
        Ok(out)
    }
}
