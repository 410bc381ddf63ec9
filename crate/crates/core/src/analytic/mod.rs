//! Closed-form performance model: tip equilibrium, expected cumulative
//! weight per regime, and expected confirmation delay.

pub mod chain;

pub use chain::{expected_weight_at_step, first_passage, h2lr_distribution, StateDistribution};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{round_half_up, ConfirmationThreshold, LoadRegime, NetworkParams};
use crate::stats::Summary;
use crate::stream::SeededStream;

/// Exponent of the adaptation-period growth `2·exp(0.352·t/h_r)`.
pub const ADAPTATION_RATE: f64 = 0.352;

/// Stationary tip count `L = 2·λ·h_r`.
pub fn tip_equilibrium(lambda: f64, reveal_delay: f64) -> f64 {
    2.0 * lambda * reveal_delay
}

/// End of the HR adaptation period: the time `t0` at which the exponential
/// growth rate reaches `λ_h`, and the expected weight there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptationPeriod {
    pub t0: f64,
    pub weight: f64,
}

impl AdaptationPeriod {
    /// `[W(t0)]`, rounded half up.
    pub fn weight_rounded(&self) -> u64 {
        round_half_up(self.weight) as u64
    }
}

pub fn adaptation_period(tip_count_high: f64, reveal_delay: f64) -> Result<AdaptationPeriod> {
    let knee = 2.0 * 2.0 * ADAPTATION_RATE;
    if tip_count_high.is_nan() || tip_count_high <= knee {
        return Err(Error::AdaptationUndefined(tip_count_high));
    }
    Ok(AdaptationPeriod {
        t0: reveal_delay / ADAPTATION_RATE * (tip_count_high / knee).ln(),
        weight: tip_count_high / (2.0 * ADAPTATION_RATE),
    })
}

fn hr_adaptation(params: &NetworkParams) -> Result<AdaptationPeriod> {
    adaptation_period(params.tip_count_high(), params.reveal_delay())
}

/// Expected weight under steady high load: exponential until `t0`, then
/// linear with slope `λ_h`.
pub fn expected_weight_hr(t: f64, params: &NetworkParams) -> Result<f64> {
    let ap = hr_adaptation(params)?;
    Ok(if t <= ap.t0 {
        2.0 * (ADAPTATION_RATE * t / params.reveal_delay()).exp()
    } else {
        ap.weight + params.lambda_high() * (t - ap.t0)
    })
}

pub fn expected_weight_lr(t: f64, lambda_low: f64) -> f64 {
    1.0 + lambda_low * t
}

/// Number of arrivals by time `t` at rate `lambda`, using the mean
/// interarrival time.
pub fn steps_at(t: f64, lambda: f64) -> u64 {
    round_half_up(lambda * t).max(0.0) as u64
}

/// Expected weight after a high-to-low switch, mapping time to arrivals
/// through `k = round(λ_l·t)`.
pub fn expected_weight_h2lr(t: f64, params: &NetworkParams) -> f64 {
    let k = steps_at(t, params.lambda_low());
    expected_weight_at_step(k, params.tip_count_high_rounded().max(2))
}

/// Monte-Carlo version of [`expected_weight_h2lr`]: the number of arrivals by
/// `t` comes from summing exponential interarrival times.
pub fn expected_weight_h2lr_sampled(
    t: f64,
    params: &NetworkParams,
    replications: usize,
    stream: &mut SeededStream,
) -> Summary {
    let l_h = params.tip_count_high_rounded().max(2);
    let lambda = params.lambda_low();
    let xs: Vec<f64> = (0..replications)
        .map(|_| {
            let mut elapsed = stream.exponential(lambda);
            let mut k = 0;
            while elapsed <= t {
                k += 1;
                elapsed += stream.exponential(lambda);
            }
            chain::sample_chain_weight(k, l_h, stream) as f64
        })
        .collect();
    Summary::from_slice(&xs)
}

/// Expected weight after a low-to-high switch: one unit per arrival.
pub fn expected_weight_l2hr(t: f64, lambda_high: f64) -> f64 {
    1.0 + steps_at(t, lambda_high) as f64
}

pub fn expected_weight(regime: LoadRegime, t: f64, params: &NetworkParams) -> Result<f64> {
    Ok(match regime {
        LoadRegime::Hr => expected_weight_hr(t, params)?,
        LoadRegime::Lr => expected_weight_lr(t, params.lambda_low()),
        LoadRegime::H2lr => expected_weight_h2lr(t, params),
        LoadRegime::L2hr => expected_weight_l2hr(t, params.lambda_high()),
    })
}

/// `E[W(t)]` for one regime, with the chain moments precomputed.
#[derive(Debug, Clone)]
pub struct WeightCurve {
    regime: LoadRegime,
    params: NetworkParams,
    adaptation: Option<AdaptationPeriod>,
    chain_means: Vec<f64>,
}

impl WeightCurve {
    pub fn new(regime: LoadRegime, params: &NetworkParams) -> Result<Self> {
        let adaptation = match regime {
            LoadRegime::Hr => Some(hr_adaptation(params)?),
            _ => None,
        };
        let chain_means = if regime == LoadRegime::H2lr {
            let l_h = params.tip_count_high_rounded().max(2);
            (0..u64::from(l_h))
                .map(|k| expected_weight_at_step(k, l_h))
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            regime,
            params: *params,
            adaptation,
            chain_means,
        })
    }

    pub fn regime(&self) -> LoadRegime {
        self.regime
    }

    /// `(t0, W(t0))` for HR.
    pub fn breakpoints(&self) -> Option<AdaptationPeriod> {
        self.adaptation
    }

    pub fn value(&self, t: f64) -> f64 {
        let p = &self.params;
        match self.regime {
            LoadRegime::Hr => {
                let ap = self.adaptation.expect("HR curve has breakpoints");
                if t <= ap.t0 {
                    2.0 * (ADAPTATION_RATE * t / p.reveal_delay()).exp()
                } else {
                    ap.weight + p.lambda_high() * (t - ap.t0)
                }
            }
            LoadRegime::Lr => expected_weight_lr(t, p.lambda_low()),
            LoadRegime::H2lr => {
                let k = steps_at(t, p.lambda_low()) as usize;
                let last = self.chain_means.len() - 1;
                if k <= last {
                    self.chain_means[k]
                } else {
                    self.chain_means[last] + (k - last) as f64
                }
            }
            LoadRegime::L2hr => expected_weight_l2hr(t, p.lambda_high()),
        }
    }
}

/// When, relative to the observed transaction, the load switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SwitchPoint {
    /// At the reveal: the worst case for H2LR and the best case for L2HR.
    #[default]
    AtReveal,
    /// Once the weight reaches the threshold. H2LR then behaves like HR and
    /// L2HR like LR.
    AtConfirmation,
}

/// Expected time from reveal (`W = 1`) to `W = m`.
pub fn confirmation_delay(m: ConfirmationThreshold, regime: LoadRegime, params: &NetworkParams) -> Result<f64> {
    confirmation_delay_with(m, regime, params, SwitchPoint::AtReveal)
}

pub fn confirmation_delay_with(
    m: ConfirmationThreshold,
    regime: LoadRegime,
    params: &NetworkParams,
    switch: SwitchPoint,
) -> Result<f64> {
    let regime = match (regime, switch) {
        (LoadRegime::H2lr, SwitchPoint::AtConfirmation) => LoadRegime::Hr,
        (LoadRegime::L2hr, SwitchPoint::AtConfirmation) => LoadRegime::Lr,
        (r, _) => r,
    };
    let mf = f64::from(m.get());
    match regime {
        LoadRegime::Hr => {
            let ap = hr_adaptation(params)?;
            if u64::from(m.get()) <= ap.weight_rounded() {
                Ok(params.reveal_delay() / ADAPTATION_RATE * (mf / 2.0).ln())
            } else {
                Ok(ap.t0 + (mf - ap.weight) / params.lambda_high())
            }
        }
        LoadRegime::Lr => Ok((mf - 1.0) * params.interarrival_low()),
        LoadRegime::L2hr => Ok((mf - 1.0) * params.interarrival_high()),
        LoadRegime::H2lr => Ok(h2lr_delay_steps(u64::from(m.get()), params.tip_count_high_rounded().max(2))
            * params.interarrival_low()),
    }
}

/// Expected number of arrivals until the chain first reaches weight `m`.
pub fn h2lr_delay_steps(m: u64, l_h: u32) -> f64 {
    first_passage(m, l_h)
        .into_iter()
        .map(|(k, p)| k as f64 * p)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn thr(m: u32) -> ConfirmationThreshold {
        ConfirmationThreshold::new(m).unwrap()
    }

    #[test]
    fn equilibrium_values() {
        assert_eq!(tip_equilibrium(50.0, 1.0), 100.0);
        assert_eq!(tip_equilibrium(0.5, 1.0), 1.0);
        assert_eq!(tip_equilibrium(3.0, 0.7), tip_equilibrium(6.0, 0.35));
    }

    #[test]
    fn adaptation_at_reference_parameters() {
        let ap = adaptation_period(100.0, 1.0).unwrap();
        assert_relative_eq!(ap.weight, 142.045_454_545_454_5, epsilon = 1e-9);
        // (1/0.352)·ln(100/1.408), evaluated independently
        assert_relative_eq!(ap.t0, 12.110_795_250_716_595, epsilon = 1e-9);
        assert_eq!(ap.weight_rounded(), 142);
    }

    #[test]
    fn adaptation_inverse() {
        let ap = adaptation_period(1.408 * 0.352f64.exp(), 1.0).unwrap();
        assert_relative_eq!(ap.t0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn adaptation_undefined_below_knee() {
        assert!(matches!(adaptation_period(1.408, 1.0), Err(Error::AdaptationUndefined(_))));
        assert!(adaptation_period(1.0, 1.0).is_err());
    }

    #[test]
    fn hr_curve_values_and_continuity() {
        let p = NetworkParams::reference();
        assert_relative_eq!(expected_weight_hr(0.0, &p).unwrap(), 2.0);
        let ap = hr_adaptation(&p).unwrap();
        let left = 2.0 * (ADAPTATION_RATE * ap.t0).exp();
        let right = ap.weight + p.lambda_high() * (ap.t0 - ap.t0);
        assert!((left - right).abs() <= 1e-9);
        assert_relative_eq!(expected_weight_hr(ap.t0, &p).unwrap(), 142.045_454_545, epsilon = 1e-6);
        assert_relative_eq!(expected_weight_hr(ap.t0 + 1.0, &p).unwrap(), 192.045_454_545, epsilon = 1e-6);
    }

    #[test]
    fn lr_curve() {
        assert_eq!(expected_weight_lr(0.0, 0.5), 1.0);
        assert_eq!(expected_weight_lr(98.0, 0.5), 50.0);
        let slope = (expected_weight_lr(17.0, 0.5) - expected_weight_lr(3.0, 0.5)) / 14.0;
        assert_relative_eq!(slope, 0.5);
    }

    #[test]
    fn l2hr_curve() {
        assert_eq!(expected_weight_l2hr(0.0, 50.0), 1.0);
        assert_eq!(expected_weight_l2hr(10.0 / 50.0, 50.0), 11.0);
        let p = NetworkParams::reference();
        assert_eq!(expected_weight_l2hr(1.0, 50.0), 51.0);
        assert!(expected_weight_hr(1.0, &p).unwrap() < 2.85);
    }

    #[test]
    fn h2lr_curve_below_lr_then_parallel() {
        let p = NetworkParams::reference();
        assert_eq!(expected_weight_h2lr(0.0, &p), 1.0);
        for t in [2.0, 10.0, 50.0, 100.0, 150.0] {
            assert!(expected_weight_h2lr(t, &p) < expected_weight_lr(t, 0.5));
        }
        // past the lattice each arrival adds exactly one
        let a = expected_weight_h2lr(400.0, &p);
        let b = expected_weight_h2lr(402.0, &p);
        assert_relative_eq!(b - a, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn weight_curve_matches_free_functions() {
        let p = NetworkParams::reference();
        for regime in LoadRegime::ALL {
            let curve = WeightCurve::new(regime, &p).unwrap();
            for t in [0.0, 0.3, 1.0, 5.0, 12.0, 13.0, 50.0, 100.0, 250.0, 400.0] {
                assert_relative_eq!(curve.value(t), expected_weight(regime, t, &p).unwrap(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn delays_for_linear_regimes() {
        let p = NetworkParams::reference();
        assert_relative_eq!(confirmation_delay(thr(50), LoadRegime::Lr, &p).unwrap(), 98.0);
        assert_relative_eq!(confirmation_delay(thr(50), LoadRegime::L2hr, &p).unwrap(), 0.98, epsilon = 1e-12);
    }

    #[test]
    fn hr_delay_in_adaptation() {
        let p = NetworkParams::reference();
        let d50 = confirmation_delay(thr(50), LoadRegime::Hr, &p).unwrap();
        let d100 = confirmation_delay(thr(100), LoadRegime::Hr, &p).unwrap();
        assert_relative_eq!(d50, 25f64.ln() / 0.352, epsilon = 1e-12);
        assert_relative_eq!(d100, 50f64.ln() / 0.352, epsilon = 1e-12);
        let d200 = confirmation_delay(thr(200), LoadRegime::Hr, &p).unwrap();
        let ap = hr_adaptation(&p).unwrap();
        assert_relative_eq!(d200, ap.t0 + (200.0 - ap.weight) / 50.0, epsilon = 1e-12);
    }

    #[test]
    fn switch_at_confirmation_delegates() {
        let p = NetworkParams::reference();
        for m in [5, 50, 200] {
            let m = thr(m);
            assert_eq!(
                confirmation_delay_with(m, LoadRegime::H2lr, &p, SwitchPoint::AtConfirmation).unwrap(),
                confirmation_delay(m, LoadRegime::Hr, &p).unwrap()
            );
            assert_eq!(
                confirmation_delay_with(m, LoadRegime::L2hr, &p, SwitchPoint::AtConfirmation).unwrap(),
                confirmation_delay(m, LoadRegime::Lr, &p).unwrap()
            );
        }
    }

    #[test]
    fn h2lr_delay_exceeds_lr() {
        let p = NetworkParams::reference();
        for m in 2..300 {
            let h = confirmation_delay(thr(m), LoadRegime::H2lr, &p).unwrap();
            let l = confirmation_delay(thr(m), LoadRegime::Lr, &p).unwrap();
            assert!(h >= l - 1e-9, "m {m}: {h} < {l}");
        }
    }

    #[test]
    fn delay_weight_consistency_linear_regimes() {
        let p = NetworkParams::reference();
        for m in 2..400 {
            let lr = confirmation_delay(thr(m), LoadRegime::Lr, &p).unwrap();
            assert_relative_eq!(expected_weight_lr(lr, p.lambda_low()), f64::from(m), epsilon = 1e-9);
            let l2 = confirmation_delay(thr(m), LoadRegime::L2hr, &p).unwrap();
            assert_eq!(expected_weight_l2hr(l2, p.lambda_high()), f64::from(m));
        }
    }

    #[test]
    fn hr_delay_above_l2hr_from_three() {
        // at m = 2 the HR curve starts at weight 2, so its delay is zero
        for lh in [2.0, 5.0, 20.0, 50.0, 100.0] {
            let p = NetworkParams::new(lh, 0.5, 1.0).unwrap();
            for m in 3..500 {
                let hr = confirmation_delay(thr(m), LoadRegime::Hr, &p).unwrap();
                let l2 = confirmation_delay(thr(m), LoadRegime::L2hr, &p).unwrap();
                assert!(hr >= l2, "lambda {lh} m {m}: {hr} < {l2}");
            }
        }
    }
}
