//! Network parameters, load regimes and the confirmation threshold.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rounds half up. Tip counts and weight thresholds are integer counts.
pub(crate) fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Arrival rates and reveal delay, plus the tip equilibria derived from them.
///
/// Rates are in transactions per second and the reveal delay in seconds.
/// Construct through [`NetworkParams::new`] or [`validate`]; the derived
/// fields are always consistent with the raw ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NetworkParams {
    lambda_high: f64,
    lambda_low: f64,
    reveal_delay: f64,
    tip_count_high: f64,
    tip_count_low: f64,
}

/// Unvalidated parameter triple, as read from flags or spec files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RawParams {
    pub lambda_high: f64,
    pub lambda_low: f64,
    pub reveal_delay: f64,
}

impl Default for RawParams {
    fn default() -> Self {
        Self {
            lambda_high: 50.0,
            lambda_low: 0.5,
            reveal_delay: 1.0,
        }
    }
}

fn check_rate(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositiveRate { name, value })
    }
}

impl NetworkParams {
    /// Checks positivity and fills in the derived tip counts. Regime-specific
    /// load conditions are checked separately by [`NetworkParams::require`].
    pub fn new(lambda_high: f64, lambda_low: f64, reveal_delay: f64) -> Result<Self> {
        let lambda_high = check_rate("lambda_high", lambda_high)?;
        let lambda_low = check_rate("lambda_low", lambda_low)?;
        if !(reveal_delay.is_finite() && reveal_delay > 0.0) {
            return Err(Error::NonPositiveDelay(reveal_delay));
        }
        let tip_count_high = 2.0 * lambda_high * reveal_delay;
        let raw_low = 2.0 * lambda_low * reveal_delay;
        // below one arrival per reveal delay the tip set collapses to a single tip
        let tip_count_low = if raw_low <= 2.0 { 1.0 } else { raw_low };
        Ok(Self {
            lambda_high,
            lambda_low,
            reveal_delay,
            tip_count_high,
            tip_count_low,
        })
    }

    /// Parameters used throughout the numerical section: h_r = 1 s,
    /// λ_h = 50, λ_l = 0.5.
    pub fn reference() -> Self {
        Self::new(50.0, 0.5, 1.0).expect("reference parameters are valid")
    }

    pub fn lambda_high(&self) -> f64 {
        self.lambda_high
    }

    pub fn lambda_low(&self) -> f64 {
        self.lambda_low
    }

    pub fn reveal_delay(&self) -> f64 {
        self.reveal_delay
    }

    /// L_h = 2·λ_h·h_r.
    pub fn tip_count_high(&self) -> f64 {
        self.tip_count_high
    }

    /// L_l, clamped to 1 under low load.
    pub fn tip_count_low(&self) -> f64 {
        self.tip_count_low
    }

    /// L_h rounded half up, for chain state spaces.
    pub fn tip_count_high_rounded(&self) -> u32 {
        round_half_up(self.tip_count_high) as u32
    }

    /// Mean interarrival time under high load, h_h = 1/λ_h.
    pub fn interarrival_high(&self) -> f64 {
        1.0 / self.lambda_high
    }

    /// Mean interarrival time under low load, h_l = 1/λ_l.
    pub fn interarrival_low(&self) -> f64 {
        1.0 / self.lambda_low
    }

    pub fn is_high_load(&self) -> bool {
        self.interarrival_high() <= self.reveal_delay
    }

    pub fn is_low_load(&self) -> bool {
        self.interarrival_low() > self.reveal_delay
    }

    /// Checks the load conditions that `regime` relies on.
    pub fn require(self, regime: LoadRegime) -> Result<Self> {
        let needs_high = matches!(regime, LoadRegime::Hr | LoadRegime::H2lr | LoadRegime::L2hr);
        let needs_low = matches!(regime, LoadRegime::Lr | LoadRegime::H2lr | LoadRegime::L2hr);
        if needs_high && !self.is_high_load() {
            return Err(Error::RegimeConditionViolated {
                regime,
                condition: format!(
                    "1/lambda_high <= reveal_delay (got 1/{} > {})",
                    self.lambda_high, self.reveal_delay
                ),
            });
        }
        if needs_low && !self.is_low_load() {
            return Err(Error::RegimeConditionViolated {
                regime,
                condition: format!(
                    "1/lambda_low > reveal_delay (got 1/{} <= {})",
                    self.lambda_low, self.reveal_delay
                ),
            });
        }
        Ok(self)
    }

    /// Arrival rate before and after the switch at the observed transaction's
    /// reveal.
    pub fn rates(&self, regime: LoadRegime) -> (f64, f64) {
        match regime {
            LoadRegime::Hr => (self.lambda_high, self.lambda_high),
            LoadRegime::Lr => (self.lambda_low, self.lambda_low),
            LoadRegime::H2lr => (self.lambda_high, self.lambda_low),
            LoadRegime::L2hr => (self.lambda_low, self.lambda_high),
        }
    }
}

/// Validates raw parameters, optionally against the load conditions of a regime.
pub fn validate(raw: RawParams, regime: Option<LoadRegime>) -> Result<NetworkParams> {
    let params = NetworkParams::new(raw.lambda_high, raw.lambda_low, raw.reveal_delay)?;
    match regime {
        Some(regime) => params.require(regime),
        None => Ok(params),
    }
}

/// Network load regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadRegime {
    /// Steady high load.
    Hr,
    /// Steady low load.
    Lr,
    /// Abrupt high-to-low switch at the observed transaction's reveal.
    H2lr,
    /// Abrupt low-to-high switch at the observed transaction's reveal.
    L2hr,
}

impl LoadRegime {
    pub const ALL: [LoadRegime; 4] = [Self::Hr, Self::Lr, Self::H2lr, Self::L2hr];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Hr => "hr",
            Self::Lr => "lr",
            Self::H2lr => "h2lr",
            Self::L2hr => "l2hr",
        }
    }
}

impl fmt::Display for LoadRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LoadRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hr" => Ok(Self::Hr),
            "lr" => Ok(Self::Lr),
            "h2lr" => Ok(Self::H2lr),
            "l2hr" => Ok(Self::L2hr),
            other => Err(Error::InvalidArgument(format!("unknown regime `{other}`"))),
        }
    }
}

/// Cumulative weight at which a transaction counts as confirmed (m ≥ 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ConfirmationThreshold(u32);

impl ConfirmationThreshold {
    pub fn new(m: u32) -> Result<Self> {
        if m >= 2 {
            Ok(Self(m))
        } else {
            Err(Error::InvalidThreshold(m.into()))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for ConfirmationThreshold {
    type Error = Error;

    fn try_from(m: u32) -> Result<Self> {
        Self::new(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_tip_counts() {
        let p = NetworkParams::reference();
        assert_eq!(p.tip_count_high(), 100.0);
        assert_eq!(p.tip_count_low(), 1.0);
        assert_eq!(p.tip_count_high_rounded(), 100);
    }

    #[test]
    fn low_tip_count_clamped() {
        let p = NetworkParams::new(2.0, 0.25, 1.0).unwrap();
        assert_eq!(p.tip_count_high(), 4.0);
        assert_eq!(p.tip_count_low(), 1.0);
    }

    #[test]
    fn hr_condition_violated() {
        let raw = RawParams {
            lambda_high: 0.5,
            lambda_low: 0.5,
            reveal_delay: 1.0,
        };
        assert!(matches!(
            validate(raw, Some(LoadRegime::Hr)),
            Err(Error::RegimeConditionViolated { regime: LoadRegime::Hr, .. })
        ));
        // positivity alone is fine
        assert!(validate(raw, None).is_ok());
        assert!(validate(raw, Some(LoadRegime::Lr)).is_ok());
    }

    #[test]
    fn lr_condition_is_strict() {
        let p = NetworkParams::new(50.0, 1.0, 1.0).unwrap();
        assert!(p.require(LoadRegime::Lr).is_err());
        assert!(p.require(LoadRegime::Hr).is_ok());
    }

    #[test]
    fn non_positive_inputs() {
        assert!(matches!(
            NetworkParams::new(0.0, 0.5, 1.0),
            Err(Error::NonPositiveRate { name: "lambda_high", .. })
        ));
        assert!(matches!(
            NetworkParams::new(50.0, -1.0, 1.0),
            Err(Error::NonPositiveRate { name: "lambda_low", .. })
        ));
        assert!(matches!(NetworkParams::new(50.0, 0.5, 0.0), Err(Error::NonPositiveDelay(_))));
        assert!(NetworkParams::new(f64::NAN, 0.5, 1.0).is_err());
    }

    #[test]
    fn threshold_lower_bound() {
        assert!(ConfirmationThreshold::new(1).is_err());
        assert_eq!(ConfirmationThreshold::new(2).unwrap().get(), 2);
    }

    #[test]
    fn regime_parse_roundtrip() {
        for r in LoadRegime::ALL {
            assert_eq!(r.as_str().parse::<LoadRegime>().unwrap(), r);
        }
        assert_eq!("H2LR".parse::<LoadRegime>().unwrap(), LoadRegime::H2lr);
        assert!("mid".parse::<LoadRegime>().is_err());
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(round_half_up(2.5), 3.0);
        assert_eq!(round_half_up(142.045), 142.0);
        assert_eq!(NetworkParams::new(1.25, 0.5, 1.0).unwrap().tip_count_high_rounded(), 3);
    }

    proptest::proptest! {
        #[test]
        fn tip_count_is_exact_product(lh in 1e-3f64..1e4, hr in 1e-3f64..1e2) {
            let p = NetworkParams::new(lh, 0.1, hr).unwrap();
            proptest::prop_assert_eq!(p.tip_count_high(), 2.0 * lh * hr);
        }
    }
}
