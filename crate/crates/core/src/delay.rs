//! Channel idle probability, mean file download delay and speedup.

use crate::{ModelError, Result};

/// Above this offered D2D load the linearized idle probability is outside its
/// regime of validity.
pub const SMALL_LOAD_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdleProbability {
    pub value: f64,
    /// `omega * M_c * Tbar_eta`.
    pub load: f64,
    pub small_load: bool,
}

/// `Pr{I = 1} ~ 1 / (1 + omega M_c Pr{H = 1} Tbar_eta)`.
pub fn idle_probability(omega: f64, mean_devices: f64, p_hit: f64, tbar_eta: f64) -> IdleProbability {
    let load = omega * mean_devices * tbar_eta;
    IdleProbability { value: 1.0 / (1.0 + load * p_hit), load, small_load: load <= SMALL_LOAD_LIMIT }
}

/// Inputs of the mean download delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayInputs {
    pub p_hit: f64,
    pub p_idle: f64,
    pub tbar_eta: f64,
    pub eta: f64,
    pub p_s: f64,
}

/// Mean file download delay:
///
/// ```text
/// Pr{H=0} k t_bs + Pr{I=1} Pr{H=1} (Tbar_eta + (k - p_s - eta) t_bs)
///                + Pr{I=0} Pr{H=1} (k - p_s) t_bs
/// ```
pub fn average_download_delay(inputs: &DelayInputs, k: u32, t_bs: f64) -> f64 {
    let k = f64::from(k);
    let DelayInputs { p_hit, p_idle, tbar_eta, eta, p_s } = *inputs;
    (1.0 - p_hit) * k * t_bs
        + p_idle * p_hit * (tbar_eta + (k - p_s - eta) * t_bs)
        + (1.0 - p_idle) * p_hit * (k - p_s) * t_bs
}

/// `T_ref / Tbar_dw` with `T_ref = k t_bs`.
pub fn speedup(tbar_dw: f64, k: u32, t_bs: f64) -> Result<f64> {
    if !(tbar_dw > 0.0) {
        return Err(ModelError::NonPositiveDelay(tbar_dw));
    }
    Ok(f64::from(k) * t_bs / tbar_dw)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayBreakdown {
    pub p_hit: f64,
    pub p_idle: f64,
    pub idle_load: f64,
    pub tbar_eta: f64,
    pub eta: f64,
    pub p_s: f64,
    pub tbar_dw: f64,
    pub t_ref: f64,
    pub speedup: f64,
}

impl DelayBreakdown {
    pub fn compute(omega: f64, mean_devices: f64, p_hit: f64, eta: f64, tbar_eta: f64, p_s: f64, k: u32, t_bs: f64) -> Result<Self> {
        let idle = idle_probability(omega, mean_devices, p_hit, tbar_eta);
        let inputs = DelayInputs { p_hit, p_idle: idle.value, tbar_eta, eta, p_s };
        let tbar_dw = average_download_delay(&inputs, k, t_bs);
        Ok(Self {
            p_hit,
            p_idle: idle.value,
            idle_load: idle.load,
            tbar_eta,
            eta,
            p_s,
            tbar_dw,
            t_ref: f64::from(k) * t_bs,
            speedup: speedup(tbar_dw, k, t_bs)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idle_examples() {
        assert_eq!(idle_probability(0.0, 30.0, 1.0, 0.5).value, 1.0);
        assert_eq!(idle_probability(0.02, 30.0, 0.0, 0.5).value, 1.0);
        let busy = idle_probability(0.02, 30.0, 1.0, 0.5);
        assert!((busy.value - 1.0 / 1.3).abs() < 1e-15);
        assert!(!busy.small_load);
        assert!(idle_probability(0.02, 30.0, 1.0, 0.1).small_load);
    }

    #[test]
    fn delay_examples() {
        let miss = DelayInputs { p_hit: 0.0, p_idle: 1.0, tbar_eta: 0.3, eta: 2.0, p_s: 0.3 };
        assert_eq!(average_download_delay(&miss, 5, 0.2), 5.0 * 0.2);
        let pure = DelayInputs { p_hit: 1.0, p_idle: 1.0, tbar_eta: 5.0 * 0.02, eta: 5.0, p_s: 0.0 };
        assert!((average_download_delay(&pure, 5, 0.2) - 0.1).abs() < 1e-15);
        let busy = DelayInputs { p_hit: 1.0, p_idle: 0.0, tbar_eta: 0.1, eta: 5.0, p_s: 0.3 };
        assert!((average_download_delay(&busy, 5, 0.2) - 4.7 * 0.2).abs() < 1e-15);
    }

    #[test]
    fn speedup_examples() {
        assert_eq!(speedup(1.0, 5, 0.2).unwrap(), 1.0);
        assert_eq!(speedup(0.5, 5, 0.2).unwrap(), 2.0);
        assert!(matches!(speedup(0.0, 5, 0.2), Err(ModelError::NonPositiveDelay(_))));
        assert!(speedup(-1.0, 5, 0.2).is_err());
    }

    #[test]
    fn uncached_library_gives_unit_speedup() {
        let b = DelayBreakdown::compute(0.02, 30.0, 0.0, 3.7, 0.09, 0.3, 5, 0.2).unwrap();
        assert_eq!(b.tbar_dw, b.t_ref);
        assert_eq!(b.speedup, 1.0);
    }
}
