//! Probability kernels shared by the analytical model.
//!
//! The Poisson law of an M/M/inf population, the number of departures
//! among `g` exponential lifetimes in a window, the number of survivors
//! seen at a uniformly placed instant inside an update interval, and the
//! rule that turns the model's infinite series into finite sums.
//!
//! Survival laws are evaluated through binomial forms (and quadrature for
//! the windowed law). The alternating-sum forms are kept as `*_series`
//! references; their `j / (j - i')` products cancel catastrophically once
//! the population grows past a couple of dozen nodes.

use libm::lgamma;

use crate::{ModelError, Result};

/// Threshold rule for truncating series over node counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub epsilon: f64,
    pub hard_cap: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { epsilon: 1e-5, hard_cap: 512 }
    }
}

impl TruncationPolicy {
    pub fn new(epsilon: f64, hard_cap: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ModelError::InvalidPolicy(format!("epsilon {epsilon} not in (0, 1)")));
        }
        if hard_cap == 0 {
            return Err(ModelError::InvalidPolicy("hard_cap must be positive".into()));
        }
        Ok(Self { epsilon, hard_cap })
    }
}

/// Last index kept by a truncated series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncation {
    pub index: usize,
    /// The threshold was never met below the policy's hard cap.
    pub capped: bool,
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn ln_factorial(n: usize) -> f64 {
    lgamma(n as f64 + 1.0)
}

/// Stationary law of an M/M/inf population with mean `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poisson {
    mean: f64,
    ln_mean: f64,
}

impl Poisson {
    pub fn new(mean: f64) -> Result<Self> {
        if !(mean.is_finite() && mean >= 0.0) {
            return Err(ModelError::InvalidMean(mean));
        }
        Ok(Self { mean, ln_mean: mean.ln() })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `rho^m e^-rho / m!`, evaluated in the log domain.
    pub fn pmf(&self, m: usize) -> f64 {
        if self.mean == 0.0 {
            return if m == 0 { 1.0 } else { 0.0 };
        }
        (m as f64 * self.ln_mean - self.mean - ln_factorial(m)).exp()
    }

    /// `pmf(0..=upto)`.
    pub fn table(&self, upto: usize) -> Vec<f64> {
        (0..=upto).map(|m| self.pmf(m)).collect()
    }

    /// Smallest `t > rho` with `pmf(t) < epsilon`, capped at the policy limit.
    pub fn truncation(&self, policy: &TruncationPolicy) -> Truncation {
        let mut t = self.mean.floor() as usize + 1;
        while t < policy.hard_cap {
            if self.pmf(t) < policy.epsilon {
                return Truncation { index: t, capped: false };
            }
            t += 1;
        }
        Truncation { index: policy.hard_cap, capped: self.pmf(policy.hard_cap) >= policy.epsilon }
    }
}

pub fn poisson_pmf(m: usize, rho: f64) -> Result<f64> {
    Ok(Poisson::new(rho)?.pmf(m))
}

pub fn truncation_index(rho: f64, policy: &TruncationPolicy) -> Result<Truncation> {
    Ok(Poisson::new(rho)?.truncation(policy))
}

/// Independent exponential lifetimes observed over a fixed window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeathProcessKernel {
    pub mu: f64,
    pub window: f64,
}

impl DeathProcessKernel {
    pub fn new(mu: f64, window: f64) -> Self {
        debug_assert!(mu >= 0.0 && window >= 0.0);
        Self { mu, window }
    }

    /// Probability that one node outlives the window.
    pub fn survival(&self) -> f64 {
        (-self.mu * self.window).exp()
    }

    /// Probability that one node departs within the window.
    pub fn departure(&self) -> f64 {
        -(-self.mu * self.window).exp_m1()
    }
}

/// Probability that exactly `d` of `g` nodes depart within the kernel's
/// window: `C(g, d) (1 - e^{-mu w})^d e^{-(g - d) mu w}`. Zero for `d > g`.
pub fn departure_count_pmf(d: usize, g: usize, kernel: &DeathProcessKernel) -> f64 {
    if d > g {
        return 0.0;
    }
    let q = kernel.departure();
    let survive_exponent = -((g - d) as f64) * kernel.mu * kernel.window;
    if d == 0 {
        return survive_exponent.exp();
    }
    if q == 0.0 {
        return 0.0;
    }
    (ln_binomial(g, d) + d as f64 * q.ln() + survive_exponent).exp()
}

/// `theta(d, g)` for every `0 <= d <= g <= g_max`, row `g` holding `d = 0..=g`.
pub fn departure_count_table(g_max: usize, kernel: &DeathProcessKernel) -> Vec<Vec<f64>> {
    (0..=g_max)
        .map(|g| (0..=g).map(|d| departure_count_pmf(d, g, kernel)).collect())
        .collect()
}

/// `prod_{j = lo..=hi, j != skip} j / (j - skip)`.
fn lagrange_weight(lo: usize, hi: usize, skip: usize) -> f64 {
    (lo..=hi)
        .filter(|&j| j != skip)
        .map(|j| j as f64 / (j as f64 - skip as f64))
        .product()
}

/// Alternating-sum form of [`departure_count_pmf`].
///
/// `theta(d, g) = B(g - d) - B(g - d + 1)` with
/// `B(s) = sum_{i = s..=g} e^{-i mu w} prod_{j = s..=g, j != i} j / (j - i)`,
/// the survivor tail of a pure death process started at `g`. Only usable
/// for small `g`.
pub fn departure_count_pmf_series(d: usize, g: usize, kernel: &DeathProcessKernel) -> f64 {
    if d > g {
        return 0.0;
    }
    let tail = |s: usize| -> f64 {
        (s..=g)
            .map(|i| (-(i as f64) * kernel.mu * kernel.window).exp() * lagrange_weight(s, g, i))
            .sum()
    };
    tail(g - d) - tail(g - d + 1)
}

/// Probability that `x` of the `y` storage nodes present at the start of an
/// update interval are still present at a request instant placed uniformly
/// in the interval.
///
/// Computed as `(1/delta) int_0^delta C(y, x) e^{-x mu t} (1 - e^{-mu t})^{y - x} dt`
/// with double-exponential quadrature. Zero for `x > y`.
pub fn windowed_survivors_pmf(x: usize, y: usize, mu: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(ModelError::ZeroInterval);
    }
    if x > y {
        return Ok(0.0);
    }
    if y == 0 {
        return Ok(1.0);
    }
    let coeff = ln_binomial(y, x).exp();
    let lost = (y - x) as i32;
    let kept = x as i32;
    let integrand = |t: f64| {
        let s = (-mu * t).exp();
        let q = -(-mu * t).exp_m1();
        coeff * s.powi(kept) * q.powi(lost)
    };
    let out = quadrature::double_exponential::integrate(integrand, 0.0, delta, 1e-10 * delta);
    Ok(out.integral / delta)
}

/// Alternating double-sum form of [`windowed_survivors_pmf`].
///
/// `(1/delta) [A(x) - A(x + 1)]` with
/// `A(s) = sum_{i = s..=y} (1 - e^{-i mu delta}) / (i mu) prod_{j = s..=y, j != i} j / (j - i)`;
/// the `i = 0` term takes its limit `delta`.
pub fn windowed_survivors_pmf_series(x: usize, y: usize, mu: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(ModelError::ZeroInterval);
    }
    if x > y {
        return Ok(0.0);
    }
    let integral_term = |i: usize| -> f64 {
        if i == 0 {
            delta
        } else {
            let rate = i as f64 * mu;
            -(-rate * delta).exp_m1() / rate
        }
    };
    let tail = |s: usize| -> f64 { (s..=y).map(|i| integral_term(i) * lagrange_weight(s, y, i)).sum() };
    Ok((tail(x) - tail(x + 1)) / delta)
}

/// Probability of a request in an update interval,
/// `sum_m (1 - e^{-m omega delta}) pi_m(M_c)` over the truncated range.
pub fn request_in_interval_prob(
    omega: f64,
    delta: f64,
    mean_devices: f64,
    policy: &TruncationPolicy,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(ModelError::ZeroInterval);
    }
    let law = Poisson::new(mean_devices)?;
    let top = law.truncation(policy).index;
    Ok((1..=top).map(|m| request_weight(m, omega, delta) * law.pmf(m)).sum())
}

/// `1 - e^{-m omega delta}`: at least one of `m` nodes requests within `delta`.
pub(crate) fn request_weight(m: usize, omega: f64, delta: f64) -> f64 {
    -(-(m as f64) * omega * delta).exp_m1()
}
