//! Monte-Carlo race oracle, sharing no arithmetic with the closed forms.

use rayon::prelude::*;
use serde::Serialize;

use super::{AttackScenario, RaceOdds};
use crate::analytic::{adaptation_period, chain::sample_chain_weight};
use crate::error::{Error, Result};
use crate::params::{ConfirmationThreshold, LoadRegime, NetworkParams};
use crate::stream::SeededStream;

/// Deficit at which a catch-up walk is abandoned and counted as a failure.
pub const DEFAULT_DEFICIT_CUTOFF: u64 = 200;

/// Replications drawn from one forked stream.
const CHUNK: u64 = 1 << 14;

/// Longest run of walk steps drawn as a single binomial.
const MAX_JUMP: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RaceOutcome {
    Success,
    Failure,
    /// The deficit reached the cutoff; scored as a failure.
    Censored,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RaceEstimate {
    pub probability: f64,
    pub standard_error: f64,
    pub replications: u64,
    pub censored: u64,
    /// Upper bound on the downward bias from censoring: `(q/p)^cutoff` when
    /// the honest side is faster, otherwise the censored fraction.
    pub bias_bound: f64,
}

/// Plays one race: the attacker issues transactions while the honest side
/// issues `alpha`, then chases a deficit of `alpha + beta − N + 1`.
pub fn race_once(alpha: u64, beta: u64, odds: &RaceOdds, cutoff: u64, stream: &mut SeededStream) -> RaceOutcome {
    let mut honest = 0;
    let mut attacker = 0;
    while honest < alpha {
        if stream.bernoulli(odds.p()) {
            honest += 1;
        } else {
            attacker += 1;
        }
    }
    if attacker > alpha + beta {
        return RaceOutcome::Success;
    }
    let mut d = alpha + beta - attacker + 1;
    loop {
        if d == 0 {
            return RaceOutcome::Success;
        }
        if d >= cutoff {
            return RaceOutcome::Censored;
        }
        // a block of b steps cannot reach either boundary when b < d and
        // b < cutoff − d, so it can be drawn at once
        let b = (d - 1).min(cutoff - 1 - d).min(MAX_JUMP);
        if b >= 2 {
            let down = stream.binomial(b, odds.q());
            d = d + b - 2 * down;
        } else if stream.bernoulli(odds.q()) {
            d -= 1;
        } else {
            d += 1;
        }
    }
}

fn estimate<F>(replications: u64, stream: &SeededStream, odds: &RaceOdds, cutoff: u64, play: F) -> RaceEstimate
where
    F: Fn(&mut SeededStream) -> RaceOutcome + Sync,
{
    let chunks = replications.div_ceil(CHUNK);
    let (wins, censored) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = stream.fork(c);
            let n = CHUNK.min(replications - c * CHUNK);
            let mut wins = 0u64;
            let mut censored = 0u64;
            for _ in 0..n {
                match play(&mut s) {
                    RaceOutcome::Success => wins += 1,
                    RaceOutcome::Censored => censored += 1,
                    RaceOutcome::Failure => {}
                }
            }
            (wins, censored)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = replications as f64;
    let probability = wins as f64 / n;
    let bias_bound = if odds.honest_ahead() {
        odds.ratio().powf(cutoff as f64)
    } else {
        censored as f64 / n
    };
    RaceEstimate {
        probability,
        standard_error: (probability * (1.0 - probability) / n).sqrt(),
        replications,
        censored,
        bias_bound,
    }
}

fn check_replications(replications: u64) -> Result<()> {
    if replications == 0 {
        Err(Error::InvalidArgument("replications must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Estimates the scenario's success probability from `replications` races.
pub fn monte_carlo_race(
    scenario: &AttackScenario,
    replications: u64,
    deficit_cutoff: u64,
    stream: &SeededStream,
) -> Result<RaceEstimate> {
    check_replications(replications)?;
    let alpha = scenario.pre_confirmation_count;
    let beta = scenario.head_start_deficit;
    if deficit_cutoff < alpha + beta + 2 {
        return Err(Error::InvalidArgument(format!(
            "deficit cutoff {deficit_cutoff} below alpha + beta + 2 = {}",
            alpha + beta + 2
        )));
    }
    let odds = scenario.odds();
    Ok(estimate(replications, stream, &odds, deficit_cutoff, |s| {
        race_once(alpha, beta, &odds, deficit_cutoff, s)
    }))
}

/// Estimates a regime's success probability by simulating the whole story:
/// for H2LR the adaptation chain is sampled up to two tips and the race
/// starts from the weight reached; the other regimes race from their fixed
/// `(α, β)`.
pub fn monte_carlo_regime(
    m: ConfirmationThreshold,
    regime: LoadRegime,
    params: &NetworkParams,
    mu: f64,
    replications: u64,
    deficit_cutoff: u64,
    stream: &SeededStream,
) -> Result<RaceEstimate> {
    check_replications(replications)?;
    let odds = super::regime_odds(regime, params, mu)?;
    let m = u64::from(m.get());
    let cutoff = deficit_cutoff.max(m + 3);
    match regime {
        LoadRegime::Hr => {
            let w = adaptation_period(params.tip_count_high(), params.reveal_delay())?.weight_rounded();
            let alpha = (m + 1).saturating_sub(w);
            Ok(estimate(replications, stream, &odds, cutoff, |s| race_once(alpha, 0, &odds, cutoff, s)))
        }
        LoadRegime::Lr | LoadRegime::L2hr => {
            Ok(estimate(replications, stream, &odds, cutoff, |s| race_once(m - 1, 1, &odds, cutoff, s)))
        }
        LoadRegime::H2lr => {
            let l_h = params.tip_count_high_rounded();
            if l_h < 2 {
                return Err(Error::AdaptationUndefined(params.tip_count_high()));
            }
            let steps = u64::from(l_h - 2);
            Ok(estimate(replications, stream, &odds, cutoff, |s| {
                let i = sample_chain_weight(steps, l_h, s);
                race_once(m.saturating_sub(i), 0, &odds, cutoff, s)
            }))
        }
    }
}
