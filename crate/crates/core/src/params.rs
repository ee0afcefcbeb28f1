//! Scalar model inputs and their validation.
//!
//! Times are plain reals in abstract time units; every preset fixes the
//! departure rate to one, so one time unit is the mean node lifetime.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Relative slack used when comparing reals that the model treats as equal.
const REAL_EQ_TOL: f64 = 1e-9;

/// Cluster-level parameters of the churn, request and download model.
///
/// Field names in the serialized form follow the customary notation
/// (`M_c`, `n_c`, `t_bs`, ...). Cell totals (`M`, `C`, `n`) are optional;
/// when present they must agree with the per-cluster means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Devices in the cell.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub devices: Option<u64>,
    /// Number of clusters the cell is divided into.
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<u64>,
    /// Mean number of devices per cluster.
    #[serde(rename = "M_c")]
    pub mean_devices: f64,
    /// Storage nodes in the cell.
    #[serde(rename = "n", default, skip_serializing_if = "Option::is_none")]
    pub storage_nodes: Option<u64>,
    /// Mean number of storage nodes per cluster.
    #[serde(rename = "n_c")]
    pub mean_storage: f64,
    /// Arrival rate per node slot.
    pub lambda: f64,
    /// Departure rate per node.
    pub mu: f64,
    /// Request rate per node.
    pub omega: f64,
    /// DS-list update interval; zero means the list is always current.
    pub delta: f64,
    /// Time to fetch one symbol over a D2D link.
    pub t_d: f64,
    /// Time to fetch one symbol from the base station.
    pub t_bs: f64,
    /// Accept `lambda != mu` for exploratory sweeps.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_rate_mismatch: bool,
}

impl SystemParams {
    /// Mean number of regular (non-storage) devices per cluster.
    pub fn mean_regular(&self) -> f64 {
        (self.mean_devices - self.mean_storage).max(0.0)
    }

    /// True when the update interval is small enough to use the
    /// instantaneous-update formulas.
    pub fn is_instantaneous(&self) -> bool {
        self.delta < INSTANTANEOUS_DELTA
    }
}

/// Below this update interval the instantaneous-update closed forms are used.
pub const INSTANTANEOUS_DELTA: f64 = 1e-9;

/// An `(n, k)` MDS code: any `k` of the `n` coded symbols rebuild a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeParams {
    #[serde(rename = "n")]
    pub length: u32,
    pub k: u32,
}

impl CodeParams {
    pub fn new(length: u32, k: u32) -> Self {
        Self { length, k }
    }

    pub fn rate(&self) -> f64 {
        f64::from(self.k) / f64::from(self.length)
    }
}

/// Per-device cache budget and library description used to size the cache.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageBudget {
    pub file_size_bits: f64,
    pub capacity_bits: f64,
    pub library_size: usize,
}

impl StorageBudget {
    pub fn is_valid(&self) -> bool {
        self.file_size_bits.is_finite()
            && self.file_size_bits > 0.0
            && self.capacity_bits.is_finite()
            && self.capacity_bits > 0.0
            && self.library_size > 0
    }
}

/// Number of most-popular files whose symbols fit in one device's budget.
///
/// Each storage node keeps one symbol of `file_size / k` bits per cached
/// file, so the count is `floor(capacity * k / file_size)`, capped at the
/// library size.
pub fn cached_file_count(budget: &StorageBudget, code: &CodeParams) -> usize {
    debug_assert!(budget.is_valid());
    // Multiply before dividing so that exact ratios like 6 GB / (100 MB / 5)
    // stay exact.
    let fit = (budget.capacity_bits * f64::from(code.k) / budget.file_size_bits).floor();
    if fit >= budget.library_size as f64 {
        budget.library_size
    } else {
        fit.max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotPositive { field: &'static str, value: f64 },
    NegativeInterval(f64),
    StorageExceedsDevices { mean_storage: f64, mean_devices: f64 },
    RateMismatch { lambda: f64, mu: f64 },
    CodeDimension { length: u32, k: u32 },
    DimensionExceedsStorage { k: u32, mean_storage: f64 },
    InconsistentTotal { field: &'static str, expected: f64, found: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotPositive { field, value } => {
                write!(f, "{field} must be positive, got {value}")
            }
            Violation::NegativeInterval(d) => write!(f, "delta must be nonnegative, got {d}"),
            Violation::StorageExceedsDevices { mean_storage, mean_devices } => {
                write!(f, "n_c = {mean_storage} exceeds M_c = {mean_devices}")
            }
            Violation::RateMismatch { lambda, mu } => {
                write!(f, "lambda = {lambda} differs from mu = {mu} (set allow_rate_mismatch to override)")
            }
            Violation::CodeDimension { length, k } => {
                write!(f, "code dimension k = {k} must satisfy 1 <= k <= n = {length}")
            }
            Violation::DimensionExceedsStorage { k, mean_storage } => {
                write!(f, "k = {k} exceeds n_c = {mean_storage}")
            }
            Violation::InconsistentTotal { field, expected, found } => {
                write!(f, "{field} = {found} inconsistent with cell totals (expected {expected})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// The base station is not slower than a D2D link.
    BsNotSlower { t_d: f64, t_bs: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::BsNotSlower { t_d, t_bs } => {
                write!(f, "t_bs = {t_bs} is not larger than t_d = {t_d}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Converts a failed report into an error, passing reports through.
    pub fn into_result(self) -> crate::Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(crate::ModelError::Validation(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= REAL_EQ_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Checks every constraint of the model and collects all violations.
pub fn validate(params: &SystemParams, code: &CodeParams) -> ValidationReport {
    let mut report = ValidationReport::default();
    let v = &mut report.violations;

    let positive = [
        ("M_c", params.mean_devices),
        ("lambda", params.lambda),
        ("mu", params.mu),
        ("omega", params.omega),
        ("t_d", params.t_d),
        ("t_bs", params.t_bs),
    ];
    for (field, value) in positive {
        if !(value.is_finite() && value > 0.0) {
            v.push(Violation::NotPositive { field, value });
        }
    }
    if !(params.mean_storage.is_finite() && params.mean_storage >= 0.0) {
        v.push(Violation::NotPositive { field: "n_c", value: params.mean_storage });
    }
    if !(params.delta.is_finite() && params.delta >= 0.0) {
        v.push(Violation::NegativeInterval(params.delta));
    }
    if params.mean_storage > params.mean_devices {
        v.push(Violation::StorageExceedsDevices {
            mean_storage: params.mean_storage,
            mean_devices: params.mean_devices,
        });
    }
    if !params.allow_rate_mismatch && !approx_eq(params.lambda, params.mu) {
        v.push(Violation::RateMismatch { lambda: params.lambda, mu: params.mu });
    }
    if code.k < 1 || code.k > code.length {
        v.push(Violation::CodeDimension { length: code.length, k: code.k });
    }
    // n_c is a mean and may be fractional; compare as reals.
    if f64::from(code.k) > params.mean_storage + REAL_EQ_TOL {
        v.push(Violation::DimensionExceedsStorage { k: code.k, mean_storage: params.mean_storage });
    }
    if let Some(clusters) = params.clusters {
        if clusters == 0 {
            v.push(Violation::NotPositive { field: "C", value: 0.0 });
        } else {
            let c = clusters as f64;
            if let Some(m) = params.devices {
                if !approx_eq(m as f64 / c, params.mean_devices) {
                    v.push(Violation::InconsistentTotal {
                        field: "M_c",
                        expected: m as f64 / c,
                        found: params.mean_devices,
                    });
                }
            }
            if let Some(n) = params.storage_nodes {
                if !approx_eq(n as f64 / c, params.mean_storage) {
                    v.push(Violation::InconsistentTotal {
                        field: "n_c",
                        expected: n as f64 / c,
                        found: params.mean_storage,
                    });
                }
            }
        }
    }

    if params.t_bs <= params.t_d {
        report.warnings.push(Warning::BsNotSlower { t_d: params.t_d, t_bs: params.t_bs });
    }
    report
}
