//! Double-spending race between an honest sub-DAG and a parasite chain.
//!
//! Each new transaction is honest with probability `p = λ/(λ+μ)` and belongs
//! to the attacker with probability `q = μ/(λ+μ)`. While the honest side
//! issues its `α` transactions the attacker issues a negative-binomial number
//! `N` of its own; if that is not enough to overtake the honest branch the
//! attacker then has to close the remaining gap, a gambler's-ruin walk.

mod montecarlo;

pub use montecarlo::{monte_carlo_race, monte_carlo_regime, race_once, RaceEstimate, RaceOutcome, DEFAULT_DEFICIT_CUTOFF};

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::analytic::{adaptation_period, chain::h2lr_distribution};
use crate::error::{Error, Result};
use crate::params::{round_half_up, ConfirmationThreshold, LoadRegime, NetworkParams};

/// Per-round odds of the race.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RaceOdds {
    p: f64,
    q: f64,
    /// `q/p`, kept separately so `μ/λ` is exact when built from rates.
    ratio: f64,
}

impl RaceOdds {
    pub fn from_rates(honest_rate: f64, attacker_rate: f64) -> Result<Self> {
        check_rate("honest_rate", honest_rate)?;
        check_rate("attacker_rate", attacker_rate)?;
        let total = honest_rate + attacker_rate;
        Ok(Self {
            p: honest_rate / total,
            q: attacker_rate / total,
            ratio: attacker_rate / honest_rate,
        })
    }

    /// Odds with honest probability `p` and `q = 1 − p`.
    pub fn from_p(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!("p must lie in (0, 1), got {p}")));
        }
        let q = 1.0 - p;
        Ok(Self { p, q, ratio: q / p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// True when the honest side wins rounds more often than the attacker.
    pub fn honest_ahead(&self) -> bool {
        self.ratio < 1.0
    }
}

fn check_rate(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveRate { name, value })
    }
}

/// `(p, q)` for honest rate `λ` and attacker rate `μ`.
pub fn race_probabilities(honest_rate: f64, attacker_rate: f64) -> Result<(f64, f64)> {
    let o = RaceOdds::from_rates(honest_rate, attacker_rate)?;
    Ok((o.p, o.q))
}

fn ln_choose(n: u64, k: u64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn ln_pmf(n: u64, alpha: u64, odds: &RaceOdds) -> f64 {
    ln_choose(n + alpha - 1, alpha - 1) + alpha as f64 * odds.p.ln() + n as f64 * odds.q.ln()
}

/// Probability that the attacker issues exactly `n` transactions while the
/// honest side issues `alpha`. Panics if `alpha == 0`.
pub fn negative_binomial_pmf(n: u64, alpha: u64, odds: &RaceOdds) -> f64 {
    assert!(alpha >= 1, "alpha must be at least 1");
    ln_pmf(n, alpha, odds).exp()
}

/// `P{N > k}` for the attacker count `N`, summed term by term until the
/// geometric bound on the remainder is negligible.
pub fn negative_binomial_tail(k: u64, alpha: u64, odds: &RaceOdds) -> f64 {
    assert!(alpha >= 1, "alpha must be at least 1");
    let ln_q = odds.q.ln();
    let mut n = k + 1;
    let mut ln_t = ln_pmf(n, alpha, odds);
    let mut acc = 0.0;
    loop {
        let t = ln_t.exp();
        acc += t;
        // successive term ratio, decreasing in n
        let r = odds.q * (n + alpha) as f64 / (n + 1) as f64;
        if r < 1.0 {
            let bound = t * r / (1.0 - r);
            if bound <= 1e-17 * acc || bound < 1e-300 {
                return acc;
            }
        }
        ln_t += ln_q + ((n + alpha) as f64).ln() - ((n + 1) as f64).ln();
        n += 1;
    }
}

/// Probability that an attacker `d` transactions behind ever catches up.
pub fn catchup_probability(d: i64, odds: &RaceOdds) -> f64 {
    if d <= 0 || !odds.honest_ahead() {
        1.0
    } else {
        odds.ratio.powf(d as f64)
    }
}

/// Success probability of a parasite chain attached at the tips, with `alpha`
/// honest transactions needed for confirmation.
///
/// Evaluated through the regularized incomplete beta function for the
/// attacker's lead and a direct sum for the catch-up part; this route shares
/// no code with [`attack_success_with_gap`].
pub fn attack_success(alpha: u64, odds: &RaceOdds) -> f64 {
    if !odds.honest_ahead() {
        return 1.0;
    }
    if alpha == 0 {
        return odds.ratio;
    }
    let a = alpha as f64;
    // P{N > α} = I_q(α + 1, α)
    let lead = beta_reg(a + 1.0, a, odds.q);
    // pmf by recurrence: pmf(n+1) = pmf(n)·q·(n+α)/(n+1)
    let mut pmf = odds.p.powi(alpha as i32);
    let mut catchup = 0.0;
    for n in 0..=alpha {
        catchup += pmf * odds.ratio.powi((alpha - n + 1) as i32);
        pmf *= odds.q * (n + alpha) as f64 / (n + 1) as f64;
    }
    (lead + catchup).min(1.0)
}

/// Success probability when the parasite chain attaches `beta` transactions
/// below the tips.
pub fn attack_success_with_gap(alpha: u64, beta: u64, odds: &RaceOdds) -> f64 {
    if !odds.honest_ahead() {
        return 1.0;
    }
    if alpha == 0 {
        return catchup_probability(beta as i64 + 1, odds);
    }
    let k = alpha + beta;
    let ln_ratio = odds.ratio.ln();
    let catchup: f64 = (0..=k)
        .map(|n| (ln_pmf(n, alpha, odds) + (k - n + 1) as f64 * ln_ratio).exp())
        .sum();
    (negative_binomial_tail(k, alpha, odds) + catchup).min(1.0)
}

/// How the high-to-low regime accounts for the adaptation period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum H2lrMode {
    /// Mixture over the weight distribution when two tips remain.
    #[default]
    Distribution,
    /// Single race from the expected weight at that point.
    ExpectedValue,
}

/// Parameters of one race.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackScenario {
    pub honest_rate: f64,
    pub attacker_rate: f64,
    pub threshold: u32,
    pub head_start_deficit: u64,
    pub pre_confirmation_count: u64,
    pub regime: Option<LoadRegime>,
}

impl AttackScenario {
    pub fn new(
        honest_rate: f64,
        attacker_rate: f64,
        threshold: u32,
        alpha: u64,
        beta: u64,
    ) -> Result<Self> {
        check_rate("honest_rate", honest_rate)?;
        check_rate("attacker_rate", attacker_rate)?;
        ConfirmationThreshold::new(threshold)?;
        Ok(Self {
            honest_rate,
            attacker_rate,
            threshold,
            head_start_deficit: beta,
            pre_confirmation_count: alpha,
            regime: None,
        })
    }

    pub fn with_regime(mut self, regime: LoadRegime) -> Self {
        self.regime = Some(regime);
        self
    }

    pub fn odds(&self) -> RaceOdds {
        RaceOdds::from_rates(self.honest_rate, self.attacker_rate)
            .expect("rates validated on construction")
    }

    pub fn success_probability(&self) -> f64 {
        attack_success_with_gap(self.pre_confirmation_count, self.head_start_deficit, &self.odds())
    }
}

/// The rate the race runs at and, for each regime, the `(α, β)` pair of the
/// race that follows confirmation. H2LR has no single pair and is handled
/// separately.
fn regime_odds(regime: LoadRegime, params: &NetworkParams, mu: f64) -> Result<RaceOdds> {
    let lambda = match regime {
        LoadRegime::Hr | LoadRegime::L2hr => params.lambda_high(),
        LoadRegime::Lr | LoadRegime::H2lr => params.lambda_low(),
    };
    RaceOdds::from_rates(lambda, mu)
}

/// Success probability of an attack on a transaction confirmed under
/// `regime`, with attacker rate `mu`. H2LR uses the distribution mode.
pub fn attack_success_regime(
    m: ConfirmationThreshold,
    regime: LoadRegime,
    params: &NetworkParams,
    mu: f64,
) -> Result<f64> {
    attack_success_regime_with(m, regime, params, mu, H2lrMode::Distribution)
}

pub fn attack_success_regime_with(
    m: ConfirmationThreshold,
    regime: LoadRegime,
    params: &NetworkParams,
    mu: f64,
    mode: H2lrMode,
) -> Result<f64> {
    let odds = regime_odds(regime, params, mu)?;
    let m = u64::from(m.get());
    match regime {
        LoadRegime::Hr => {
            let w = adaptation_period(params.tip_count_high(), params.reveal_delay())?.weight_rounded();
            if !odds.honest_ahead() {
                Ok(1.0)
            } else if m < w {
                Ok(odds.ratio())
            } else {
                Ok(attack_success(m - w + 1, &odds))
            }
        }
        LoadRegime::Lr | LoadRegime::L2hr => Ok(attack_success_with_gap(m - 1, 1, &odds)),
        LoadRegime::H2lr => match mode {
            H2lrMode::Distribution => h2lr_distribution_mode(m, params, &odds),
            H2lrMode::ExpectedValue => h2lr_expected_mode(m, params, &odds),
        },
    }
}

/// H2LR success probability from the expected weight when two tips remain.
pub fn attack_success_h2lr_expected(
    m: ConfirmationThreshold,
    params: &NetworkParams,
    mu: f64,
) -> Result<f64> {
    attack_success_regime_with(m, LoadRegime::H2lr, params, mu, H2lrMode::ExpectedValue)
}

fn two_tip_distribution(params: &NetworkParams) -> Result<crate::analytic::chain::StateDistribution> {
    let l_h = params.tip_count_high_rounded();
    if l_h < 2 {
        return Err(Error::AdaptationUndefined(params.tip_count_high()));
    }
    Ok(h2lr_distribution(u64::from(l_h - 2), l_h))
}

/// Expected weight of the observed transaction when the tip count reaches two.
pub fn h2lr_two_tip_weight(params: &NetworkParams) -> Result<f64> {
    Ok(two_tip_distribution(params)?.expected_weight())
}

fn h2lr_distribution_mode(m: u64, params: &NetworkParams, odds: &RaceOdds) -> Result<f64> {
    let dist = two_tip_distribution(params)?;
    if !odds.honest_ahead() {
        return Ok(1.0);
    }
    let total = dist
        .iter()
        .map(|((i, _), p)| {
            let f = if i < m { attack_success(m - i, odds) } else { odds.ratio() };
            p * f
        })
        .sum::<f64>();
    Ok(total.min(1.0))
}

fn h2lr_expected_mode(m: u64, params: &NetworkParams, odds: &RaceOdds) -> Result<f64> {
    let w0 = round_half_up(two_tip_distribution(params)?.expected_weight()) as u64;
    if !odds.honest_ahead() {
        return Ok(1.0);
    }
    if m < w0 {
        Ok(odds.ratio())
    } else {
        Ok(attack_success(m - w0, odds))
    }
}
