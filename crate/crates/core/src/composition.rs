//! Node populations seen by a request and the request-type probability.
//!
//! A request sees `X1` live DS-list members, `Q` storage nodes in total and
//! `V` regular nodes; `R = 1` when the requester is itself a list member.
//! With a positive update interval the laws are request-weighted Poisson
//! mixtures; with `delta = 0` the list is always current and the
//! instantaneous closed forms apply.

use crate::kernels::{request_weight, windowed_survivors_pmf, Poisson, TruncationPolicy};
use crate::params::SystemParams;
use crate::{ModelError, Result};

/// A conditional probability whose conditioning event may have zero weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conditional {
    Defined(f64),
    /// `Pr{R = i} = 0`; callers give this branch zero weight.
    ZeroWeight,
}

impl Conditional {
    pub fn value(self) -> Option<f64> {
        match self {
            Conditional::Defined(p) => Some(p),
            Conditional::ZeroWeight => None,
        }
    }
}

/// Everything the D2D phase needs to know about the request instant.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestSnapshot {
    /// `Pr{X1 = x}`, `x = 0..=storage_top`.
    pub px1: Vec<f64>,
    /// `Pr{Q = q}`, `q = 0..=storage_top`.
    pub pq: Vec<f64>,
    /// `Pr{V = v}`, `v = 0..=device_top`.
    pub pv: Vec<f64>,
    /// `Pr{R = 1 | X1 = x}`.
    pub pr1_given_x1: Vec<f64>,
    /// `Pr{R = 1}`.
    pub p_r1: f64,
    /// `Pr{X1 = x | R = i}` for `i = 0, 1`; `None` when `Pr{R = i} = 0`.
    pub px1_given_r: [Option<Vec<f64>>; 2],
    pub mean_x1: f64,
    pub mean_q: f64,
    pub instantaneous: bool,
}

impl RequestSnapshot {
    /// Builds the snapshot, choosing the instantaneous closed forms when the
    /// update interval is (numerically) zero.
    pub fn build(params: &SystemParams, policy: &TruncationPolicy) -> Result<Self> {
        if params.is_instantaneous() {
            instantaneous_snapshot(params, policy)
        } else {
            windowed_snapshot(params, policy)
        }
    }

    pub fn storage_top(&self) -> usize {
        self.px1.len() - 1
    }

    /// `Pr{R = 1 | X1 = x}`; zero outside the truncated range and at `x = 0`.
    pub fn request_type_given_x1(&self, x: usize) -> f64 {
        self.pr1_given_x1.get(x).copied().unwrap_or(0.0)
    }

    /// `Pr{R = i}`.
    pub fn request_type_prob(&self, i: usize) -> f64 {
        match i {
            0 => 1.0 - self.p_r1,
            1 => self.p_r1,
            _ => 0.0,
        }
    }

    /// `Pr{X1 = x | R = i}` by Bayes' rule.
    pub fn ds_list_alive_given_request_type(&self, x: usize, i: usize) -> Conditional {
        match &self.px1_given_r[i.min(1)] {
            Some(v) => Conditional::Defined(v.get(x).copied().unwrap_or(0.0)),
            None => Conditional::ZeroWeight,
        }
    }
}

/// `Pr{R = 1}` of a snapshot.
pub fn request_from_list_prob(snapshot: &RequestSnapshot) -> f64 {
    snapshot.p_r1
}

/// Request-weighted Poisson populations for one parameter point.
///
/// The storage count `y` and the regular count `v` are independent Poisson
/// variables; an update interval is counted with weight
/// `1 - e^{-(y + v) omega delta}`, the chance that it contains a request.
/// The normalizer is the double sum over the same truncated rectangle that
/// the numerators use, so the truncated laws sum to one.
struct RequestWeights {
    storage: Vec<f64>,
    regular: Vec<f64>,
    // weight[s] for s = y + v.
    weight: Vec<f64>,
    norm: f64,
}

impl RequestWeights {
    fn new(params: &SystemParams, policy: &TruncationPolicy) -> Result<Self> {
        if params.is_instantaneous() {
            return Err(ModelError::ZeroInterval);
        }
        let storage_law = Poisson::new(params.mean_storage)?;
        let regular_law = Poisson::new(params.mean_regular())?;
        let storage_top = storage_law.truncation(policy).index;
        let device_top = Poisson::new(params.mean_devices)?.truncation(policy).index;
        let storage = storage_law.table(storage_top);
        let regular = regular_law.table(device_top);
        let weight: Vec<f64> = (0..=storage_top + device_top)
            .map(|m| request_weight(m, params.omega, params.delta))
            .collect();
        let mut norm = 0.0;
        for (y, py) in storage.iter().enumerate() {
            for (v, pv) in regular.iter().enumerate() {
                norm += py * pv * weight[y + v];
            }
        }
        Ok(Self { storage, regular, weight, norm })
    }

    /// `Pr{Y = y}` (identical in form to `Pr{Q = q}`).
    fn storage_pmf(&self, y: usize) -> f64 {
        let Some(py) = self.storage.get(y) else { return 0.0 };
        let inner: f64 = self.regular.iter().enumerate().map(|(v, pv)| pv * self.weight[y + v]).sum();
        py * inner / self.norm
    }

    fn regular_pmf(&self, v: usize) -> f64 {
        let Some(pv) = self.regular.get(v) else { return 0.0 };
        let inner: f64 = self.storage.iter().enumerate().map(|(y, py)| py * self.weight[y + v]).sum();
        pv * inner / self.norm
    }

    fn storage_top(&self) -> usize {
        self.storage.len() - 1
    }

    fn device_top(&self) -> usize {
        self.regular.len() - 1
    }
}

/// `Pr{Y = y}`: storage nodes present at the start of the update interval
/// that contains a request.
pub fn storage_at_update_pmf(y: usize, params: &SystemParams, policy: &TruncationPolicy) -> Result<f64> {
    Ok(RequestWeights::new(params, policy)?.storage_pmf(y))
}

/// `Pr{Q = q}`: storage nodes present at the request instant. Falls back to
/// `pi_q(n_c)` for instantaneous updates.
pub fn storage_total_pmf(q: usize, params: &SystemParams, policy: &TruncationPolicy) -> Result<f64> {
    if params.is_instantaneous() {
        return Poisson::new(params.mean_storage).map(|l| l.pmf(q));
    }
    Ok(RequestWeights::new(params, policy)?.storage_pmf(q))
}

/// `Pr{V = v}`: regular nodes present at the request instant.
pub fn regular_pmf(v: usize, params: &SystemParams, policy: &TruncationPolicy) -> Result<f64> {
    if params.is_instantaneous() {
        return Poisson::new(params.mean_regular()).map(|l| l.pmf(v));
    }
    Ok(RequestWeights::new(params, policy)?.regular_pmf(v))
}

/// `Pr{X1 = x}`: live DS-list members at the request instant.
pub fn ds_list_alive_pmf(x: usize, params: &SystemParams, policy: &TruncationPolicy) -> Result<f64> {
    let weights = RequestWeights::new(params, policy)?;
    let mut total = 0.0;
    for y in x..=weights.storage_top() {
        total += weights.storage_pmf(y) * windowed_survivors_pmf(x, y, params.mu, params.delta)?;
    }
    Ok(total)
}

fn mean(pmf: &[f64]) -> f64 {
    pmf.iter().enumerate().map(|(i, p)| i as f64 * p).sum()
}

fn bayes_posteriors(px1: &[f64], pr1_given_x1: &[f64], p_r1: f64) -> [Option<Vec<f64>>; 2] {
    let from_list = (p_r1 > 0.0)
        .then(|| px1.iter().zip(pr1_given_x1).map(|(p, r)| r * p / p_r1).collect());
    let p_r0 = 1.0 - p_r1;
    let from_others = (p_r0 > 0.0)
        .then(|| px1.iter().zip(pr1_given_x1).map(|(p, r)| (1.0 - r) * p / p_r0).collect());
    [from_others, from_list]
}

fn windowed_snapshot(params: &SystemParams, policy: &TruncationPolicy) -> Result<RequestSnapshot> {
    let weights = RequestWeights::new(params, policy)?;
    let top = weights.storage_top();
    let py: Vec<f64> = (0..=top).map(|y| weights.storage_pmf(y)).collect();
    let pv: Vec<f64> = (0..=weights.device_top()).map(|v| weights.regular_pmf(v)).collect();

    let mut px1 = vec![0.0; top + 1];
    for (y, &p) in py.iter().enumerate() {
        for (x, slot) in px1.iter_mut().enumerate().take(y + 1) {
            *slot += p * windowed_survivors_pmf(x, y, params.mu, params.delta)?;
        }
    }
    let pq = py;
    let mean_x1 = mean(&px1);
    let mean_q = mean(&pq);

    // Given X1 = x, the remaining Q - x storage nodes (arrived since the
    // last broadcast) are taken as Poisson with mean E[Q] - E[X1].
    let newcomers = Poisson::new((mean_q - mean_x1).max(0.0))?;
    let newcomer_top = newcomers.truncation(policy).index;
    let newcomer_pmf = newcomers.table(newcomer_top);
    // share(q) = sum_v Pr{V = v} / (q + v), for q >= 1.
    let share = |q: usize| -> f64 { pv.iter().enumerate().map(|(v, p)| p / (q + v) as f64).sum() };
    let mut pr1_given_x1 = vec![0.0; top + 1];
    for (x, slot) in pr1_given_x1.iter_mut().enumerate().skip(1) {
        let s: f64 = newcomer_pmf.iter().enumerate().map(|(extra, pe)| pe * share(x + extra)).sum();
        *slot = x as f64 * s;
    }
    let p_r1: f64 = px1.iter().zip(&pr1_given_x1).map(|(p, r)| p * r).sum();
    let px1_given_r = bayes_posteriors(&px1, &pr1_given_x1, p_r1);

    Ok(RequestSnapshot {
        px1,
        pq,
        pv,
        pr1_given_x1,
        p_r1,
        px1_given_r,
        mean_x1,
        mean_q,
        instantaneous: false,
    })
}

/// Snapshot for an always-current DS list: `Pr{X = x} = pi_x(n_c)`,
/// `Pr{R = 1} = n_c / M_c` and
/// `Pr{R = 1 | X = x} = sum_{m >= x} (x / m) pi_{m - x}(M_c - n_c)`.
pub fn instantaneous_snapshot(params: &SystemParams, policy: &TruncationPolicy) -> Result<RequestSnapshot> {
    let storage_law = Poisson::new(params.mean_storage)?;
    let regular_law = Poisson::new(params.mean_regular())?;
    let top = storage_law.truncation(policy).index;
    let device_top = Poisson::new(params.mean_devices)?.truncation(policy).index;
    let px1 = storage_law.table(top);
    let pv = regular_law.table(device_top);

    let mut pr1_given_x1 = vec![0.0; top + 1];
    for (x, slot) in pr1_given_x1.iter_mut().enumerate().skip(1) {
        *slot = pv.iter().enumerate().map(|(v, p)| x as f64 / (x + v) as f64 * p).sum();
    }
    let p_r1 = if params.mean_devices > 0.0 { params.mean_storage / params.mean_devices } else { 0.0 };
    let px1_given_r = bayes_posteriors(&px1, &pr1_given_x1, p_r1);
    let mean_x1 = mean(&px1);

    Ok(RequestSnapshot {
        pq: px1.clone(),
        px1,
        pv,
        pr1_given_x1,
        p_r1,
        px1_given_r,
        mean_x1,
        mean_q: mean_x1,
        instantaneous: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{poisson_pmf, request_in_interval_prob};

    fn params(delta: f64) -> SystemParams {
        SystemParams {
            devices: None,
            clusters: None,
            mean_devices: 30.0,
            storage_nodes: None,
            mean_storage: 9.0,
            lambda: 1.0,
            mu: 1.0,
            omega: 0.02,
            delta,
            t_d: 0.02,
            t_bs: 0.2,
            allow_rate_mismatch: false,
        }
    }

    fn total(v: &[f64]) -> f64 {
        v.iter().sum()
    }

    #[test]
    fn windowed_laws_normalize() {
        let policy = TruncationPolicy::default();
        for delta in [0.05, 0.25, 1.0, 4.0] {
            let s = RequestSnapshot::build(&params(delta), &policy).unwrap();
            for (name, v) in [("px1", &s.px1), ("pq", &s.pq), ("pv", &s.pv)] {
                assert!((total(v) - 1.0).abs() < 1e-6, "{name} at delta {delta}: {}", total(v));
            }
            for i in 0..2 {
                let post = s.px1_given_r[i].as_ref().unwrap();
                assert!((total(post) - 1.0).abs() < 1e-6);
            }
            assert!(s.mean_x1 <= s.mean_q + 1e-12);
        }
    }

    #[test]
    fn normalizer_agrees_with_interval_probability() {
        let policy = TruncationPolicy::default();
        let p = params(1.0);
        let w = RequestWeights::new(&p, &policy).unwrap();
        let direct = request_in_interval_prob(p.omega, p.delta, p.mean_devices, &policy).unwrap();
        assert!((w.norm - direct).abs() < 1e-5 * direct, "{} vs {direct}", w.norm);
    }

    #[test]
    fn zero_interval_rejected_by_windowed_ops() {
        let policy = TruncationPolicy::default();
        assert_eq!(storage_at_update_pmf(3, &params(0.0), &policy), Err(ModelError::ZeroInterval));
        assert_eq!(ds_list_alive_pmf(3, &params(0.0), &policy), Err(ModelError::ZeroInterval));
    }

    #[test]
    fn element_ops_match_snapshot() {
        let policy = TruncationPolicy::default();
        let p = params(1.0);
        let s = RequestSnapshot::build(&p, &policy).unwrap();
        for x in [0, 4, 9, 15] {
            assert!((ds_list_alive_pmf(x, &p, &policy).unwrap() - s.px1[x]).abs() < 1e-14);
            assert!((storage_total_pmf(x, &p, &policy).unwrap() - s.pq[x]).abs() < 1e-14);
            assert!((regular_pmf(x, &p, &policy).unwrap() - s.pv[x]).abs() < 1e-14);
        }
    }

    #[test]
    fn long_interval_limits() {
        let policy = TruncationPolicy::default();
        let mut p = params(1.0);
        p.omega = 1e3;
        for y in 0..20 {
            let expect = poisson_pmf(y, 9.0).unwrap();
            assert!((storage_at_update_pmf(y, &p, &policy).unwrap() - expect).abs() < 1e-5);
            assert!((storage_total_pmf(y, &p, &policy).unwrap() - expect).abs() < 1e-5);
            let expect_v = poisson_pmf(y, 21.0).unwrap();
            assert!((regular_pmf(y, &p, &policy).unwrap() - expect_v).abs() < 1e-5);
        }
    }

    #[test]
    fn baseline_mode_near_storage_mean() {
        let policy = TruncationPolicy::default();
        let s = RequestSnapshot::build(&params(1.0), &policy).unwrap();
        let mode = s.pq.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((8..=9).contains(&mode), "mode {mode}");
        assert!(s.mean_x1 < 9.0);
    }

    #[test]
    fn request_type_properties() {
        let policy = TruncationPolicy::default();
        let s = RequestSnapshot::build(&params(1.0), &policy).unwrap();
        assert_eq!(s.request_type_given_x1(0), 0.0);
        assert!(s.pr1_given_x1.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        assert!(s.pr1_given_x1.iter().all(|&p| (0.0..=1.0).contains(&p)));
        assert!(s.p_r1 > 0.0 && s.p_r1 < 0.3, "{}", s.p_r1);
        assert_eq!(s.ds_list_alive_given_request_type(0, 1), Conditional::Defined(0.0));
    }

    #[test]
    fn total_probability_reassembles_px1() {
        let policy = TruncationPolicy::default();
        for delta in [0.0, 0.5, 2.0] {
            let s = RequestSnapshot::build(&params(delta), &policy).unwrap();
            for x in 0..s.px1.len() {
                let mut back = 0.0;
                for i in 0..2 {
                    if let Conditional::Defined(p) = s.ds_list_alive_given_request_type(x, i) {
                        back += p * s.request_type_prob(i);
                    }
                }
                assert!((back - s.px1[x]).abs() < 1e-6, "delta {delta} x {x}");
            }
        }
    }

    #[test]
    fn instantaneous_closed_forms() {
        let policy = TruncationPolicy::default();
        let s = RequestSnapshot::build(&params(0.0), &policy).unwrap();
        assert!(s.instantaneous);
        assert_eq!(s.p_r1, 0.3);
        assert!((s.px1[18] - 3e-3).abs() < 2e-4);
        for (x, p) in s.px1.iter().enumerate() {
            assert_eq!(*p, poisson_pmf(x, 9.0).unwrap());
        }
        // Pr{R = 1} is pinned to n_c / M_c while the truncated sum misses the
        // size-biased tail beyond the truncation index.
        let post = s.px1_given_r[1].as_ref().unwrap();
        assert!((total(post) - 1.0).abs() < 1e-4, "{}", total(post));
        assert_eq!(post[0], 0.0);
    }

    #[test]
    fn no_storage_nodes_means_no_list_requests() {
        let policy = TruncationPolicy::default();
        let mut p = params(1.0);
        p.mean_storage = 0.0;
        let s = RequestSnapshot::build(&p, &policy).unwrap();
        assert_eq!(s.p_r1, 0.0);
        assert!(s.px1_given_r[1].is_none());
        assert_eq!(s.ds_list_alive_given_request_type(0, 1), Conditional::ZeroWeight);
        // Regular-node law becomes the request-biased Poisson(M_c).
        let law = Poisson::new(30.0).unwrap();
        let w: Vec<f64> = (0..s.pv.len()).map(|v| law.pmf(v) * request_weight(v, p.omega, p.delta)).collect();
        let z = total(&w);
        for v in 0..s.pv.len() {
            assert!((s.pv[v] - w[v] / z).abs() < 1e-12);
        }
    }
}
