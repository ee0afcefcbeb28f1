//! The D2D download phase.
//!
//! A requester contacts live DS-list members one at a time, each attempt
//! occupying the D2D channel for `t_d`. An attempt fails when the chosen node
//! or the requester departs within `t_d`, or when no uncontacted member is
//! left; the first failure ends the phase. The outcome is one of: failure at
//! the first attempt, `j` symbols then a failure, or all `k - i` symbols.
//!
//! `gamma_j(g, d, i)` is the probability that, with the requester still
//! present, the first `j - 1` attempts succeeded and attempt `j` starts with
//! `g` useful nodes of which `d` will depart during it.

use crate::composition::RequestSnapshot;
use crate::kernels::{departure_count_table, DeathProcessKernel};

/// Largest tolerated excursion of a computed probability outside `[0, 1]`
/// before it is clamped.
pub const PROBABILITY_SLACK: f64 = 1e-6;

pub(crate) fn clamp_probability(p: f64) -> f64 {
    debug_assert!(
        (-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p),
        "probability {p} outside [0, 1]"
    );
    p.clamp(0.0, 1.0)
}

/// `gamma_j(g, d, i)` for one request type, `1 <= j <= depth`,
/// `0 <= d <= g <= g_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaTable {
    request_type: usize,
    depth: usize,
    g_max: usize,
    layer: usize,
    values: Vec<f64>,
}

fn triangle(g: usize) -> usize {
    g * (g + 1) / 2
}

impl GammaTable {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn g_max(&self) -> usize {
        self.g_max
    }

    pub fn request_type(&self) -> usize {
        self.request_type
    }

    /// `gamma_j(g, d)`; zero for `d > g` and outside the table.
    pub fn get(&self, j: usize, g: usize, d: usize) -> f64 {
        if j == 0 || j > self.depth || g > self.g_max || d > g {
            return 0.0;
        }
        self.values[(j - 1) * self.layer + triangle(g) + d]
    }

    fn slot(&mut self, j: usize, g: usize, d: usize) -> &mut f64 {
        &mut self.values[(j - 1) * self.layer + triangle(g) + d]
    }
}

/// Upper bound on the useful-node count tracked by the gamma table.
pub fn gamma_bound(snapshot: &RequestSnapshot, k: u32) -> usize {
    snapshot.storage_top() + k as usize
}

/// Builds `gamma_j(g, d, i)` for `j = 1..=k - i`.
///
/// `gamma_1(g, d, i) = Pr{X1 = g + i | R = i} theta(d, g)`, and for `j > 1`
/// a success from `g'` useful nodes with `d'` departures leaves
/// `g = g' - d' - 1`, so
/// `gamma_j(g, d, i) = theta(d, g) sum_{g' > g} ((g + 1) / g') gamma_{j-1}(g', g' - g - 1, i)`.
///
/// Returns `None` when `Pr{R = i} = 0`.
pub fn build_gamma(snapshot: &RequestSnapshot, kernel: &DeathProcessKernel, k: u32, i: usize) -> Option<GammaTable> {
    let posterior = snapshot.px1_given_r[i].as_ref()?;
    let depth = (k as usize).saturating_sub(i);
    let g_max = gamma_bound(snapshot, k);
    let layer = triangle(g_max + 1);
    let theta = departure_count_table(g_max, kernel);
    let mut table = GammaTable { request_type: i, depth, g_max, layer, values: vec![0.0; depth * layer] };
    if depth == 0 {
        return Some(table);
    }

    for g in 0..=g_max {
        let p = posterior.get(g + i).copied().unwrap_or(0.0);
        for d in 0..=g {
            *table.slot(1, g, d) = p * theta[g][d];
        }
    }
    for j in 2..=depth {
        for g in 0..=g_max {
            let carried: f64 = (g + 1..=g_max)
                .map(|gp| (g + 1) as f64 / gp as f64 * table.get(j - 1, gp, gp - g - 1))
                .sum();
            for d in 0..=g {
                *table.slot(j, g, d) = theta[g][d] * carried;
            }
        }
    }
    Some(table)
}

/// `Pr{S1 = 0 | R = i}`: no symbol is obtained over D2D.
///
/// `1 + e^{-mu t_d} (Pr{X1 = i | R = i} + sum_{g>=1} sum_d (d/g) Pr{X1 = g + i | R = i} theta(d, g) - 1)`.
/// `None` when `Pr{R = i} = 0`.
pub fn first_attempt_failure(snapshot: &RequestSnapshot, kernel: &DeathProcessKernel, i: usize) -> Option<f64> {
    let posterior = snapshot.px1_given_r[i].as_ref()?;
    let g_top = posterior.len().saturating_sub(i + 1);
    let theta = departure_count_table(g_top, kernel);
    let no_useful = posterior.get(i).copied().unwrap_or(0.0);
    let mut picks_departing = 0.0;
    for g in 1..=g_top {
        let p = posterior[g + i];
        for d in 1..=g {
            picks_departing += d as f64 / g as f64 * p * theta[g][d];
        }
    }
    Some(1.0 + kernel.survival() * (no_useful + picks_departing - 1.0))
}

/// `Pr{S_[k-i] = 1 | R = i}`: all `k - i` symbols come over D2D.
pub fn full_recovery(table: &GammaTable, kernel: &DeathProcessKernel, k: u32, i: usize) -> f64 {
    let needed = (k as usize).saturating_sub(i);
    if needed == 0 {
        return 1.0;
    }
    debug_assert!(table.depth() >= needed);
    let requester_stays = (-(needed as f64) * kernel.mu * kernel.window).exp();
    let mut mass = 0.0;
    for g in 1..=table.g_max() {
        for d in 0..g {
            mass += (g - d) as f64 / g as f64 * table.get(needed, g, d);
        }
    }
    requester_stays * mass
}

/// `Pr{S_[j] = 1, S_{j+1} = 0 | R = i}` for `1 <= j <= k - 1 - i`; zero otherwise.
pub fn partial_recovery(table: &GammaTable, kernel: &DeathProcessKernel, j: usize, k: u32, i: usize) -> f64 {
    let needed = (k as usize).saturating_sub(i);
    if j == 0 || j + 1 > needed {
        return 0.0;
    }
    let mu_td = kernel.mu * kernel.window;
    // Requester present through attempt j + 1.
    let a = (-((j + 1) as f64) * mu_td).exp();
    // Requester present through attempt j, gone during attempt j + 1.
    let b = (-(j as f64) * mu_td).exp() * kernel.departure();

    let mut total = table.get(j + 1, 0, 0) * a;
    for g in 1..=table.g_max() {
        let gf = g as f64;
        for d in 0..=g {
            let df = d as f64;
            total += df / gf * table.get(j + 1, g, d) * a + (gf - df) / gf * table.get(j, g, d) * b;
        }
    }
    total
}

/// Outcome law and mean cost of the D2D phase for one request type.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeOutcome {
    pub request_type: usize,
    /// Symbols to fetch: `k - i`.
    pub needed: usize,
    pub p_fail_first: f64,
    /// `p_partial[j - 1]` = probability of exactly `j` symbols then a failure.
    pub p_partial: Vec<f64>,
    pub p_full: f64,
    /// Mean symbols obtained over D2D.
    pub eta: f64,
    /// Mean D2D channel time.
    pub tbar: f64,
}

impl TypeOutcome {
    /// Sum of all outcome probabilities (one up to truncation).
    pub fn total(&self) -> f64 {
        self.p_fail_first + self.p_partial.iter().sum::<f64>() + self.p_full
    }

    /// Probability of obtaining exactly `s` symbols, `s = 0..=needed`.
    pub fn symbol_count_pmf(&self) -> Vec<f64> {
        if self.needed == 0 {
            return vec![self.p_full];
        }
        let mut out = Vec::with_capacity(self.needed + 1);
        out.push(self.p_fail_first);
        out.extend_from_slice(&self.p_partial);
        out.push(self.p_full);
        out
    }
}

/// `(eta_i, Tbar_i)`.
///
/// A full download costs `(k - i) t_d`, `j` symbols then a failure
/// `(j + 1) t_d`, and a failure at the first attempt `t_d`; the
/// first-attempt failure is charged once, through `c_{k,i}`.
pub fn aggregate(p_fail_first: f64, p_partial: &[f64], p_full: f64, k: u32, i: usize, t_d: f64) -> (f64, f64) {
    let needed = (k as usize).saturating_sub(i);
    if needed == 0 {
        return (0.0, 0.0);
    }
    let partial_symbols: f64 = p_partial.iter().enumerate().map(|(idx, p)| (idx + 1) as f64 * p).sum();
    let eta = needed as f64 * p_full + partial_symbols;
    let wasted = p_fail_first + p_partial.iter().sum::<f64>();
    (eta, t_d * (eta + wasted))
}

/// Mixes the two request types with `p_s = Pr{R = 1}`.
pub fn combine(eta_0: f64, tbar_0: f64, eta_1: f64, tbar_1: f64, p_s: f64) -> (f64, f64) {
    (eta_1 * p_s + eta_0 * (1.0 - p_s), tbar_1 * p_s + tbar_0 * (1.0 - p_s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct D2DOutcomeDistribution {
    /// Indexed by request type; `None` for a type of zero probability.
    pub by_type: [Option<TypeOutcome>; 2],
    pub eta: f64,
    pub tbar_eta: f64,
    pub p_s: f64,
}

impl D2DOutcomeDistribution {
    pub fn compute(snapshot: &RequestSnapshot, mu: f64, t_d: f64, k: u32) -> Self {
        let kernel = DeathProcessKernel::new(mu, t_d);
        let by_type = [0, 1].map(|i| type_outcome(snapshot, &kernel, k, i, t_d));
        let p_s = snapshot.p_r1;
        let parts = |i: usize| by_type[i].as_ref().map_or((0.0, 0.0), |o| (o.eta, o.tbar));
        let (eta_0, tbar_0) = parts(0);
        let (eta_1, tbar_1) = parts(1);
        let (eta, tbar_eta) = combine(eta_0, tbar_0, eta_1, tbar_1, p_s);
        Self { by_type, eta, tbar_eta, p_s }
    }
}

fn type_outcome(snapshot: &RequestSnapshot, kernel: &DeathProcessKernel, k: u32, i: usize, t_d: f64) -> Option<TypeOutcome> {
    let table = build_gamma(snapshot, kernel, k, i)?;
    let needed = table.depth();
    let (p_fail_first, p_partial) = if needed == 0 {
        (0.0, Vec::new())
    } else {
        let fail = clamp_probability(first_attempt_failure(snapshot, kernel, i)?);
        let partial = (1..needed).map(|j| clamp_probability(partial_recovery(&table, kernel, j, k, i))).collect();
        (fail, partial)
    };
    let p_full = clamp_probability(full_recovery(&table, kernel, k, i));
    let (eta, tbar) = aggregate(p_fail_first, &p_partial, p_full, k, i, t_d);
    Some(TypeOutcome { request_type: i, needed, p_fail_first, p_partial, p_full, eta, tbar })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::TruncationPolicy;
    use crate::params::SystemParams;

    fn params(n_c: f64, delta: f64, t_d: f64) -> SystemParams {
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
            t_d,
            t_bs: 0.2,
            allow_rate_mismatch: false,
        }
    }

    fn snapshot(p: &SystemParams) -> RequestSnapshot {
        RequestSnapshot::build(p, &TruncationPolicy::default()).unwrap()
    }

    #[test]
    fn gamma_vanishes_above_diagonal_and_first_layer_normalizes() {
        let p = params(9.0, 1.0, 0.02);
        let s = snapshot(&p);
        let kernel = DeathProcessKernel::new(1.0, 0.02);
        let table = build_gamma(&s, &kernel, 5, 0).unwrap();
        assert_eq!(table.depth(), 5);
        for j in 1..=5 {
            for g in 0..6 {
                assert_eq!(table.get(j, g, g + 1), 0.0);
            }
        }
        let mut layer = 0.0;
        for g in 0..=table.g_max() {
            for d in 0..=g {
                let v = table.get(1, g, d);
                assert!((0.0..=1.0).contains(&v));
                layer += v;
            }
        }
        let posterior: f64 = s.px1_given_r[0].as_ref().unwrap().iter().sum();
        assert!((layer - posterior).abs() < 1e-12);
        assert!((layer - 1.0).abs() < 1e-6);
    }

    #[test]
    fn no_churn_keeps_chains_on_zero_departures() {
        let p = params(9.0, 1.0, 0.02);
        let s = snapshot(&p);
        let still = DeathProcessKernel::new(1.0, 0.0);
        let table = build_gamma(&s, &still, 5, 0).unwrap();
        for j in 1..=5 {
            for g in 1..=table.g_max() {
                for d in 1..=g {
                    assert_eq!(table.get(j, g, d), 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_churn_full_recovery_counts_nodes() {
        let p = params(9.0, 1.0, 0.02);
        let s = snapshot(&p);
        let still = DeathProcessKernel::new(1.0, 0.0);
        for (k, i) in [(5u32, 0usize), (5, 1), (3, 0), (1, 0)] {
            let table = build_gamma(&s, &still, k, i).unwrap();
            let posterior = s.px1_given_r[i].as_ref().unwrap();
            let needed = k as usize - i;
            let enough: f64 = posterior.iter().enumerate().filter(|(x, _)| *x >= needed + i).map(|(_, p)| p).sum();
            let full = full_recovery(&table, &still, k, i);
            assert!((full - enough).abs() < 1e-12, "k={k} i={i}: {full} vs {enough}");
            // The only failure left is running out of nodes.
            let fail = first_attempt_failure(&s, &still, i).unwrap();
            assert!((fail - posterior[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn always_empty_list_always_fails() {
        let mut s = snapshot(&params(9.0, 1.0, 0.02));
        let mut only_zero = vec![0.0; s.px1.len()];
        only_zero[0] = 1.0;
        s.px1_given_r[0] = Some(only_zero);
        let kernel = DeathProcessKernel::new(1.0, 0.02);
        assert_eq!(first_attempt_failure(&s, &kernel, 0), Some(1.0));
        let table = build_gamma(&s, &kernel, 5, 0).unwrap();
        assert_eq!(full_recovery(&table, &kernel, 5, 0), 0.0);
    }

    #[test]
    fn vacuous_download_for_list_member_with_k_one() {
        let s = snapshot(&params(3.0, 1.0, 0.02));
        let kernel = DeathProcessKernel::new(1.0, 0.02);
        let table = build_gamma(&s, &kernel, 1, 1).unwrap();
        assert_eq!(table.depth(), 0);
        assert_eq!(full_recovery(&table, &kernel, 1, 1), 1.0);
        assert_eq!(aggregate(0.0, &[], 1.0, 1, 1, 0.02), (0.0, 0.0));
    }

    #[test]
    fn partial_outside_range_is_zero() {
        let s = snapshot(&params(15.0, 1.0, 0.02));
        let kernel = DeathProcessKernel::new(1.0, 0.02);
        let table = build_gamma(&s, &kernel, 5, 0).unwrap();
        assert_eq!(partial_recovery(&table, &kernel, 0, 5, 0), 0.0);
        assert_eq!(partial_recovery(&table, &kernel, 5, 5, 0), 0.0);
        let t1 = build_gamma(&s, &kernel, 5, 1).unwrap();
        assert_eq!(partial_recovery(&t1, &kernel, 4, 5, 1), 0.0);
    }

    #[test]
    fn outcomes_partition_unity() {
        for (n_c, k) in [(3.0, 1u32), (6.0, 2), (15.0, 5), (9.0, 5)] {
            for delta in [0.0, 0.25, 1.0, 4.0] {
                let p = params(n_c, delta, 0.02);
                let dist = D2DOutcomeDistribution::compute(&snapshot(&p), 1.0, 0.02, k);
                for o in dist.by_type.iter().flatten() {
                    assert!((o.total() - 1.0).abs() < 0.02, "n_c={n_c} k={k} delta={delta}: {}", o.total());
                    assert!(o.eta <= o.needed as f64 + 1e-12);
                    assert!(o.tbar <= o.needed as f64 * 0.02 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn fast_churn_collapses_to_failure() {
        let mut p = params(15.0, 1.0, 0.02);
        p.mu = 500.0;
        p.lambda = 500.0;
        let dist = D2DOutcomeDistribution::compute(&snapshot(&p), p.mu, p.t_d, 5);
        let o = dist.by_type[0].as_ref().unwrap();
        assert!(o.p_fail_first > 0.999);
        assert!(o.p_partial.iter().all(|&x| x < 1e-3));
    }

    #[test]
    fn aggregate_examples() {
        let (eta, tbar) = aggregate(0.0, &[0.0; 4], 1.0, 5, 0, 0.02);
        assert_eq!(eta, 5.0);
        assert!((tbar - 0.1).abs() < 1e-15);
        let (eta, tbar) = aggregate(0.2, &[0.1, 0.1, 0.05, 0.05], 0.5, 5, 0, 1.0);
        assert!((eta - (2.5 + 0.1 + 0.2 + 0.15 + 0.2)).abs() < 1e-12);
        assert!(tbar >= eta && tbar <= eta + 1.0);
    }

    #[test]
    fn combine_is_a_mixture() {
        assert_eq!(combine(4.0, 0.1, 3.0, 0.08, 0.0), (4.0, 0.1));
        assert_eq!(combine(4.0, 0.1, 3.0, 0.08, 1.0), (3.0, 0.08));
        let (e, t) = combine(2.0, 0.5, 2.0, 0.5, 0.3);
        assert!((e - 2.0).abs() < 1e-15 && (t - 0.5).abs() < 1e-15);
    }

    #[test]
    fn delay_bounded_by_one_wasted_slot() {
        let p = params(15.0, 1.0, 0.02);
        let dist = D2DOutcomeDistribution::compute(&snapshot(&p), 1.0, 0.02, 5);
        for o in dist.by_type.iter().flatten() {
            assert!(0.02 * o.eta <= o.tbar + 1e-15);
            assert!(o.tbar <= 0.02 * (o.eta + 1.0) + 1e-15);
        }
    }
}
