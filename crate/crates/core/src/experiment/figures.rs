//! Data tables behind the evaluation figures.
//!
//! Sweep ranges the figures leave unstated are fixed here:
//! - fig8/fig9: `β` (at `α = 1`) or `α` (at `β = 1`) over `0..=20`, `p ∈ {0.6, 0.7, 0.8, 0.9}`.
//! - fig10: `m0 = 10`, offsets `−10..=15` honest transactions, `β = 0`.
//! - fig11: H2LR both modes, `m` from 5 to `W0 + 300`, `μ/λ_l ∈ {0.2, 0.5, 0.8}`.
//! - fig12: `t = 0..=100` s, all regimes.
//! - fig13: 40 log-spaced rates, `[0.05, 1]` for LR/H2LR and `[1, 100]` for HR/L2HR.
//! - fig14/fig15: `μ/λ` from 0.05 to 1.2 in steps of 0.05.

use super::{
    accumulation_rate, attack_rows, delay_rows, weight_rows, AttackCell, ExperimentSpec, Figure, OffsetRow,
    Provenance, RaceRow, ResultTable, RunContext,
};
use crate::attack::{
    attack_success_with_gap, h2lr_two_tip_weight, monte_carlo_race, AttackScenario, H2lrMode, RaceOdds,
    DEFAULT_DEFICIT_CUTOFF,
};
use crate::error::Result;
use crate::params::{validate, ConfirmationThreshold, LoadRegime, NetworkParams};

const FIG13_POINTS: usize = 40;

pub(crate) fn run_figure(figure: Figure, spec: &ExperimentSpec, ctx: &RunContext) -> Result<ResultTable> {
    match figure {
        Figure::Fig8 => race_sweep(spec, ctx, |i| (1, i)).map(ResultTable::Race),
        Figure::Fig9 => race_sweep(spec, ctx, |i| (i, 1)).map(ResultTable::Race),
        Figure::Fig10 => offset_table(spec, ctx).map(ResultTable::Offset),
        Figure::Fig11 => fig11(spec, ctx).map(ResultTable::Attack),
        Figure::Fig12 => {
            let params = validate(spec.params, None)?;
            let times: Vec<f64> = if spec.times.is_empty() {
                (0..=100).map(f64::from).collect()
            } else {
                spec.times.clone()
            };
            let regimes = regimes_or(spec, &LoadRegime::ALL);
            weight_rows(&params, &regimes, &times, spec.replications_or(500), ctx).map(ResultTable::Weight)
        }
        Figure::Fig13 => fig13(spec, ctx).map(ResultTable::Delay),
        Figure::Fig14 => regime_attack(spec, ctx, &[LoadRegime::Hr, LoadRegime::L2hr]).map(ResultTable::Attack),
        Figure::Fig15 => regime_attack(spec, ctx, &[LoadRegime::H2lr, LoadRegime::Lr]).map(ResultTable::Attack),
    }
}

fn regimes_or(spec: &ExperimentSpec, default: &[LoadRegime]) -> Vec<LoadRegime> {
    if spec.regimes.is_empty() {
        default.to_vec()
    } else {
        spec.regimes.clone()
    }
}

fn figure_odds() -> Vec<RaceOdds> {
    [0.6, 0.7, 0.8, 0.9]
        .into_iter()
        .map(|p| RaceOdds::from_p(p).expect("valid p"))
        .collect()
}

/// `(α, β)` sweep over `0..=20` at the four reference odds.
fn race_sweep(spec: &ExperimentSpec, ctx: &RunContext, point: impl Fn(u64) -> (u64, u64)) -> Result<Vec<RaceRow>> {
    let replications = spec.replications_or(0);
    let cells: Vec<(RaceOdds, u64, u64)> = figure_odds()
        .into_iter()
        .flat_map(|o| (0..=20).map(move |i| (o, i)))
        .map(|(o, i)| {
            let (a, b) = point(i);
            (o, a, b)
        })
        .collect();
    cells
        .iter()
        .enumerate()
        .map(|(i, &(odds, alpha, beta))| {
            let mc = if replications > 0 {
                let scenario = AttackScenario::new(odds.p(), odds.q(), 2, alpha, beta)?;
                Some(monte_carlo_race(
                    &scenario,
                    replications,
                    DEFAULT_DEFICIT_CUTOFF.max(alpha + beta + 2),
                    &ctx.stream(i as u64),
                )?)
            } else {
                None
            };
            Ok(RaceRow {
                alpha,
                beta,
                p: odds.p(),
                q: odds.q(),
                prob_formula: attack_success_with_gap(alpha, beta, &odds),
                prob_mc: mc.map(|e| e.probability),
                mc_se: mc.map(|e| e.standard_error),
                provenance: if mc.is_some() { Provenance::MonteCarlo } else { Provenance::Analytic },
                seed: mc.map(|_| ctx.seed),
                spec_hash: ctx.hash.clone(),
            })
        })
        .collect()
}

/// Honest transactions the parasite chain must outrun as its start moves
/// relative to the honest payment: starting `k` transactions before it adds
/// `k` to `m0`; starting after removes them, down to zero.
pub fn alpha_for_offset(m0: u64, offset: i64) -> u64 {
    if offset <= 0 {
        m0 + offset.unsigned_abs()
    } else {
        m0.saturating_sub(offset as u64)
    }
}

fn offset_table(_spec: &ExperimentSpec, ctx: &RunContext) -> Result<Vec<OffsetRow>> {
    let m0 = 10;
    let mut rows = Vec::new();
    for odds in figure_odds() {
        for offset in -10..=15 {
            let alpha = alpha_for_offset(m0, offset);
            rows.push(OffsetRow {
                offset,
                m0,
                alpha,
                p: odds.p(),
                q: odds.q(),
                prob_formula: attack_success_with_gap(alpha, 0, &odds),
                provenance: Provenance::Analytic,
                seed: None,
                spec_hash: ctx.hash.clone(),
            });
        }
    }
    Ok(rows)
}

fn fig11(spec: &ExperimentSpec, ctx: &RunContext) -> Result<Vec<super::AttackRow>> {
    let params = validate(spec.params, None)?;
    let w0 = h2lr_two_tip_weight(&params)?.round() as u32;
    let ms: Vec<u32> = if spec.thresholds.is_empty() {
        let mut ms: Vec<u32> = (5..=w0 + 300).step_by(5).collect();
        ms.extend([10, 50, 100, 200, 300].map(|d| w0 + d));
        ms.sort_unstable();
        ms.dedup();
        ms
    } else {
        spec.thresholds.clone()
    };
    let rates = if spec.mu.is_empty() && spec.mu_ratios.is_empty() {
        [0.2, 0.5, 0.8].iter().map(|r| r * params.lambda_low()).collect()
    } else {
        spec.attacker_rates(params.lambda_low())?
    };
    let mut cells = Vec::new();
    for &mu in &rates {
        for &m in &ms {
            for mode in [H2lrMode::Distribution, H2lrMode::ExpectedValue] {
                cells.push(AttackCell {
                    regime: LoadRegime::H2lr,
                    m: ConfirmationThreshold::new(m)?,
                    params,
                    mu,
                    mode,
                });
            }
        }
    }
    attack_rows(&cells, spec.replications_or(0), ctx)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Parameters for one point of the delay sweep. The swept rate replaces the
/// rate in force during weight accumulation; the other rate keeps its value.
/// Regime load conditions are not enforced at the grid boundary.
fn sweep_params(regime: LoadRegime, base: &NetworkParams, lambda: f64) -> Result<NetworkParams> {
    match regime {
        LoadRegime::Lr | LoadRegime::H2lr => NetworkParams::new(base.lambda_high(), lambda, base.reveal_delay()),
        LoadRegime::Hr | LoadRegime::L2hr => NetworkParams::new(lambda, base.lambda_low(), base.reveal_delay()),
    }
}

fn fig13(spec: &ExperimentSpec, ctx: &RunContext) -> Result<Vec<super::DelayRow>> {
    let base = validate(spec.params, None)?;
    let ms = spec.thresholds_or(&[50, 100, 200])?;
    let mut cells = Vec::new();
    for regime in regimes_or(spec, &LoadRegime::ALL) {
        let grid = match regime {
            LoadRegime::Lr | LoadRegime::H2lr => log_grid(0.05, 1.0, FIG13_POINTS),
            LoadRegime::Hr | LoadRegime::L2hr => log_grid(1.0, 100.0, FIG13_POINTS),
        };
        for &m in &ms {
            for &lambda in &grid {
                cells.push((regime, m, sweep_params(regime, &base, lambda)?));
            }
        }
    }
    delay_rows(&cells, spec.replications_or(0), ctx)
}

fn regime_attack(spec: &ExperimentSpec, ctx: &RunContext, default: &[LoadRegime]) -> Result<Vec<super::AttackRow>> {
    let params = validate(spec.params, None)?;
    let ms = spec.thresholds_or(&[50, 100, 150])?;
    let ratios: Vec<f64> = (1..=24).map(|i| f64::from(i) / 20.0).collect();
    let mut cells = Vec::new();
    for regime in regimes_or(spec, default) {
        let lambda = accumulation_rate(regime, &params);
        let rates = if spec.mu.is_empty() && spec.mu_ratios.is_empty() {
            ratios.iter().map(|r| r * lambda).collect()
        } else {
            spec.attacker_rates(lambda)?
        };
        for &m in &ms {
            for &mu in &rates {
                cells.push(AttackCell {
                    regime,
                    m,
                    params,
                    mu,
                    mode: spec.h2lr_mode,
                });
            }
        }
    }
    attack_rows(&cells, spec.replications_or(0), ctx)
}

#[cfg(test)]
/// Evaluates every figure's analytic table; used to check that none of them
/// fails on the default parameters.
pub fn analytic_figures() -> Result<Vec<(Figure, usize)>> {
    use rayon::prelude::*;
    Figure::ALL
        .par_iter()
        .map(|&f| {
            let mut spec = ExperimentSpec::figure(f);
            spec.replications = Some(0);
            let table = super::run_experiment(&spec)?;
            Ok((f, table.len()))
        })
        .collect()
}
