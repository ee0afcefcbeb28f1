//! Zipf popularity over a library and the resulting cache-hit probability.

use serde::{Deserialize, Serialize};

use crate::{ModelError, Result};

/// A Zipf law over `library_size` files, of which the `cached_files` most
/// popular are stored in the devices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PopularitySpec", into = "PopularitySpec")]
pub struct PopularityModel {
    library_size: usize,
    sigma: f64,
    cached_files: usize,
    // sum_{j <= i} j^-sigma, so that the hit probability of any prefix is a
    // ratio of two entries of the same accumulation.
    prefix: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PopularitySpec {
    #[serde(rename = "Z")]
    library_size: usize,
    sigma: f64,
    #[serde(rename = "F")]
    cached_files: usize,
}

impl TryFrom<PopularitySpec> for PopularityModel {
    type Error = ModelError;

    fn try_from(s: PopularitySpec) -> Result<Self> {
        PopularityModel::new(s.library_size, s.sigma, s.cached_files)
    }
}

impl From<PopularityModel> for PopularitySpec {
    fn from(m: PopularityModel) -> Self {
        PopularitySpec { library_size: m.library_size, sigma: m.sigma, cached_files: m.cached_files }
    }
}

impl PopularityModel {
    pub fn new(library_size: usize, sigma: f64, cached_files: usize) -> Result<Self> {
        if library_size == 0 {
            return Err(ModelError::InvalidPopularity("library must hold at least one file".into()));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(ModelError::InvalidPopularity(format!("sigma = {sigma} must be >= 0")));
        }
        if cached_files > library_size {
            return Err(ModelError::InvalidPopularity(format!(
                "F = {cached_files} exceeds library size {library_size}"
            )));
        }
        // Terms are summed largest first (rank 1 upwards).
        let mut prefix = Vec::with_capacity(library_size + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for i in 1..=library_size {
            acc += (i as f64).powf(-sigma);
            prefix.push(acc);
        }
        Ok(Self { library_size, sigma, cached_files, prefix })
    }

    /// Every file of the library is cached.
    pub fn full_cache(library_size: usize, sigma: f64) -> Result<Self> {
        Self::new(library_size, sigma, library_size)
    }

    pub fn library_size(&self) -> usize {
        self.library_size
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn cached_files(&self) -> usize {
        self.cached_files
    }

    fn normalizer(&self) -> f64 {
        self.prefix[self.library_size]
    }

    /// Probability `z_i` that a request targets the file of popularity rank `i`.
    pub fn zipf_pmf(&self, rank: usize) -> Result<f64> {
        if rank == 0 || rank > self.library_size {
            return Err(ModelError::RankOutOfRange { rank, library_size: self.library_size });
        }
        Ok((rank as f64).powf(-self.sigma) / self.normalizer())
    }

    /// `Pr{H = 1}`: the requested file is among the cached ones.
    pub fn hit_probability(&self) -> f64 {
        if self.cached_files == self.library_size {
            return 1.0;
        }
        self.prefix[self.cached_files] / self.normalizer()
    }

    /// Whether a file of the given rank is cached.
    pub fn is_cached(&self, rank: usize) -> bool {
        rank >= 1 && rank <= self.cached_files
    }
}
