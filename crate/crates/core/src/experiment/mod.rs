//! Declarative experiments: a spec in, a table of rows out.

mod compare;
mod figures;
mod records;

pub use compare::{compare_files, compare_tables, CompareReport, RowError};
pub use records::{
    AttackRow, DelayRow, OffsetRow, OutputFormat, Provenance, RaceRow, ResultTable, TipRow, WeightRow, ATTACK_COLUMNS,
    DELAY_COLUMNS, OFFSET_COLUMNS, RACE_COLUMNS, TIP_COLUMNS, WEIGHT_COLUMNS,
};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{confirmation_delay, WeightCurve};
use crate::attack::{
    attack_success_regime_with, monte_carlo_regime, H2lrMode, RaceOdds, DEFAULT_DEFICIT_CUTOFF,
};
use crate::error::{Error, Result};
use crate::params::{validate, ConfirmationThreshold, LoadRegime, NetworkParams, RawParams};
use crate::sim::{estimate_confirmation_delay, run_weight_experiment, tip_count_series};
use crate::stats::Summary;
use crate::stream::{derive_stream, SeededStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    WeightCurve,
    TipSeries,
    ConfirmationDelay,
    AttackSweep,
    Figure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig8,
    Fig9,
    Fig10,
    Fig11,
    Fig12,
    Fig13,
    Fig14,
    Fig15,
}

impl Figure {
    pub const ALL: [Figure; 8] = [
        Self::Fig8,
        Self::Fig9,
        Self::Fig10,
        Self::Fig11,
        Self::Fig12,
        Self::Fig13,
        Self::Fig14,
        Self::Fig15,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fig8 => "fig8",
            Self::Fig9 => "fig9",
            Self::Fig10 => "fig10",
            Self::Fig11 => "fig11",
            Self::Fig12 => "fig12",
            Self::Fig13 => "fig13",
            Self::Fig14 => "fig14",
            Self::Fig15 => "fig15",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown figure `{s}` (expected fig8..fig15)")))
    }
}

/// Everything needed to reproduce one output table.
///
/// Empty lists and missing counts fall back to per-kind defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub figure: Option<Figure>,
    #[serde(default)]
    pub params: RawParams,
    #[serde(default)]
    pub regimes: Vec<LoadRegime>,
    #[serde(default)]
    pub thresholds: Vec<u32>,
    /// Absolute attacker rates. Takes precedence over `mu_ratios`.
    #[serde(default)]
    pub mu: Vec<f64>,
    /// Attacker rates as fractions of the honest rate.
    #[serde(default)]
    pub mu_ratios: Vec<f64>,
    /// Sample times in seconds after the reveal.
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub replications: Option<u64>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub h2lr_mode: H2lrMode,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<OutputFormat>,
}

fn default_seed() -> u64 {
    1
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            figure: None,
            params: RawParams::default(),
            regimes: Vec::new(),
            thresholds: Vec::new(),
            mu: Vec::new(),
            mu_ratios: Vec::new(),
            times: Vec::new(),
            replications: None,
            horizon: None,
            seed: default_seed(),
            h2lr_mode: H2lrMode::default(),
            output: None,
            format: None,
        }
    }

    pub fn figure(figure: Figure) -> Self {
        Self {
            figure: Some(figure),
            ..Self::new(ExperimentKind::Figure)
        }
    }

    /// Reads a spec from a `.json` file, or TOML otherwise.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::SpecParse(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::SpecParse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::SpecParse(e.to_string()))
    }

    /// Identifies the experiment independently of seed and output location,
    /// so reruns with another seed keep the same hash.
    pub fn spec_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.seed = 0;
        canonical.output = None;
        canonical.format = None;
        let bytes = serde_json::to_vec(&canonical).expect("spec serializes");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }

    /// Output format: explicit, else from the output extension, else CSV.
    pub fn output_format(&self) -> OutputFormat {
        self.format.unwrap_or_else(|| match &self.output {
            Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) => OutputFormat::Json,
            _ => OutputFormat::Csv,
        })
    }

    fn regimes(&self) -> Vec<LoadRegime> {
        if self.regimes.is_empty() {
            LoadRegime::ALL.to_vec()
        } else {
            self.regimes.clone()
        }
    }

    fn thresholds_or(&self, default: &[u32]) -> Result<Vec<ConfirmationThreshold>> {
        let ms = if self.thresholds.is_empty() { default } else { &self.thresholds };
        ms.iter().map(|&m| ConfirmationThreshold::new(m)).collect()
    }

    fn replications_or(&self, default: u64) -> u64 {
        self.replications.unwrap_or(default)
    }

    /// Attacker rates for a race against honest rate `lambda`.
    fn attacker_rates(&self, lambda: f64) -> Result<Vec<f64>> {
        let rates: Vec<f64> = if !self.mu.is_empty() {
            self.mu.clone()
        } else if !self.mu_ratios.is_empty() {
            self.mu_ratios.iter().map(|r| r * lambda).collect()
        } else {
            default_mu_ratios().iter().map(|r| r * lambda).collect()
        };
        for &mu in &rates {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::NonPositiveRate { name: "mu", value: mu });
            }
        }
        Ok(rates)
    }

    fn check_horizon(&self) -> Result<()> {
        match self.horizon {
            Some(h) if !(h > 0.0 && h.is_finite()) => {
                Err(Error::InvalidArgument(format!("horizon must be positive, got {h}")))
            }
            _ => Ok(()),
        }
    }
}

/// `μ/λ ∈ {0.1, …, 1.0, 1.2}`; the last two show the certain-success region.
fn default_mu_ratios() -> Vec<f64> {
    (1..=10).map(|i| f64::from(i) / 10.0).chain([1.2]).collect()
}

/// The rate in force while the observed transaction accumulates weight.
pub fn accumulation_rate(regime: LoadRegime, params: &NetworkParams) -> f64 {
    params.rates(regime).1
}

/// Context shared by the row builders.
pub(crate) struct RunContext {
    pub seed: u64,
    pub hash: String,
}

impl RunContext {
    pub fn stream(&self, group: u64) -> SeededStream {
        derive_stream(self.seed, group)
    }
}

/// Runs the experiment described by `spec`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.check_horizon()?;
    let ctx = RunContext {
        seed: spec.seed,
        hash: spec.spec_hash(),
    };
    match spec.kind {
        ExperimentKind::Figure => {
            let figure = spec
                .figure
                .ok_or_else(|| Error::SpecParse("kind `figure` needs a `figure` field".into()))?;
            figures::run_figure(figure, spec, &ctx)
        }
        kind => {
            let regimes = spec.regimes();
            let mut params = None;
            for &r in &regimes {
                params = Some(validate(spec.params, Some(r))?);
            }
            let params = params.expect("at least one regime");
            match kind {
                ExperimentKind::WeightCurve => {
                    let times = if spec.times.is_empty() {
                        vec![0.0, 1.0, 5.0, 10.0, 20.0, 50.0, 100.0]
                    } else {
                        spec.times.clone()
                    };
                    weight_rows(&params, &regimes, &times, spec.replications_or(100), &ctx).map(ResultTable::Weight)
                }
                ExperimentKind::TipSeries => {
                    let horizon = spec.horizon.unwrap_or(300.0);
                    tip_rows(&params, &regimes, horizon, spec.replications_or(20).max(1), &ctx).map(ResultTable::Tips)
                }
                ExperimentKind::ConfirmationDelay => {
                    let ms = spec.thresholds_or(&[50, 100, 200])?;
                    let cells: Vec<_> = regimes
                        .iter()
                        .flat_map(|&r| ms.iter().map(move |&m| (r, m, params)))
                        .collect();
                    delay_rows(&cells, spec.replications_or(100), &ctx).map(ResultTable::Delay)
                }
                ExperimentKind::AttackSweep => {
                    let ms = spec.thresholds_or(&[50, 100, 150])?;
                    let mut cells = Vec::new();
                    for &r in &regimes {
                        for &m in &ms {
                            for mu in spec.attacker_rates(accumulation_rate(r, &params))? {
                                cells.push(AttackCell {
                                    regime: r,
                                    m,
                                    params,
                                    mu,
                                    mode: spec.h2lr_mode,
                                });
                            }
                        }
                    }
                    attack_rows(&cells, spec.replications_or(0), &ctx).map(ResultTable::Attack)
                }
                ExperimentKind::Figure => unreachable!(),
            }
        }
    }
}

/// Runs `spec` and writes the table to its output path, returning the bytes
/// written. Without an output path nothing is written.
pub fn run_and_write(spec: &ExperimentSpec) -> Result<(ResultTable, Vec<u8>)> {
    let table = run_experiment(spec)?;
    let bytes = table.to_bytes(spec.output_format())?;
    if let Some(path) = &spec.output {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, &bytes)?;
    }
    Ok((table, bytes))
}

fn regime_group(regime: LoadRegime) -> u64 {
    LoadRegime::ALL.iter().position(|&r| r == regime).expect("known regime") as u64
}

/// Per-time weight summaries over `replications` simulated runs.
pub fn simulate_weight_curve(
    params: &NetworkParams,
    regime: LoadRegime,
    times: &[f64],
    replications: u64,
    stream: &SeededStream,
) -> Result<Vec<Summary>> {
    let horizon = times.iter().copied().fold(params.reveal_delay(), f64::max);
    let m = ConfirmationThreshold::new(2).expect("valid threshold");
    let runs: Vec<Vec<f64>> = (0..replications)
        .into_par_iter()
        .map(|i| {
            let mut s = stream.fork(i);
            let trace = run_weight_experiment(params, regime, m, horizon, &mut s)?;
            Ok(times.iter().map(|&t| trace.weight_at(t) as f64).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..times.len())
        .map(|j| Summary::from_slice(&runs.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect())
}

pub(crate) fn weight_rows(
    params: &NetworkParams,
    regimes: &[LoadRegime],
    times: &[f64],
    replications: u64,
    ctx: &RunContext,
) -> Result<Vec<WeightRow>> {
    let mut rows = Vec::new();
    for &regime in regimes {
        let curve = WeightCurve::new(regime, params)?;
        let sims = if replications > 0 {
            Some(simulate_weight_curve(params, regime, times, replications, &ctx.stream(regime_group(regime)))?)
        } else {
            None
        };
        for (j, &t) in times.iter().enumerate() {
            let sim = sims.as_ref().map(|s| s[j]);
            rows.push(WeightRow {
                regime,
                t,
                expected_weight: curve.value(t),
                sim_mean: sim.map(|s| s.mean),
                sim_se: sim.map(|s| s.standard_error),
                replications: sim.map(|_| replications),
                seed: sim.map(|_| ctx.seed),
                provenance: if sim.is_some() { Provenance::Simulation } else { Provenance::Analytic },
                spec_hash: ctx.hash.clone(),
            });
        }
    }
    Ok(rows)
}

fn tip_rows(
    params: &NetworkParams,
    regimes: &[LoadRegime],
    horizon: f64,
    replications: u64,
    ctx: &RunContext,
) -> Result<Vec<TipRow>> {
    let step = params.reveal_delay();
    let grid: Vec<f64> = (0..)
        .map(|i| f64::from(i) * step)
        .take_while(|&t| t <= horizon)
        .collect();
    let mut rows = Vec::new();
    for &regime in regimes {
        let stream = ctx.stream(regime_group(regime));
        let runs: Vec<Vec<f64>> = (0..replications)
            .into_par_iter()
            .map(|i| {
                let mut s = stream.fork(i);
                let series = tip_count_series(params, regime, horizon, &mut s)?;
                Ok(grid
                    .iter()
                    .map(|&t| {
                        let idx = series.partition_point(|&(s, _)| s <= t);
                        series[idx.max(1) - 1].1 as f64
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        for (j, &t) in grid.iter().enumerate() {
            let s = Summary::from_slice(&runs.iter().map(|r| r[j]).collect::<Vec<_>>());
            rows.push(TipRow {
                regime,
                t,
                tips_mean: s.mean,
                tips_se: s.standard_error,
                replications,
                seed: ctx.seed,
                provenance: Provenance::Simulation,
                spec_hash: ctx.hash.clone(),
            });
        }
    }
    Ok(rows)
}

pub(crate) fn delay_rows(
    cells: &[(LoadRegime, ConfirmationThreshold, NetworkParams)],
    replications: u64,
    ctx: &RunContext,
) -> Result<Vec<DelayRow>> {
    cells
        .iter()
        .enumerate()
        .map(|(i, &(regime, m, params))| {
            let analytic = match confirmation_delay(m, regime, &params) {
                Ok(d) => Some(d),
                Err(Error::AdaptationUndefined(_)) => None,
                Err(e) => return Err(e),
            };
            let sim = if replications > 0 {
                Some(estimate_confirmation_delay(
                    &params,
                    regime,
                    m,
                    replications as usize,
                    &ctx.stream(i as u64),
                )?)
            } else {
                None
            };
            Ok(DelayRow {
                regime,
                m: m.get(),
                lambda: accumulation_rate(regime, &params),
                delay_analytic: analytic,
                delay_sim_mean: sim.as_ref().map(|s| s.mean()),
                delay_sim_se: sim.as_ref().map(|s| s.standard_error()),
                provenance: if sim.is_some() { Provenance::Simulation } else { Provenance::Analytic },
                seed: sim.map(|_| ctx.seed),
                spec_hash: ctx.hash.clone(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct AttackCell {
    pub regime: LoadRegime,
    pub m: ConfirmationThreshold,
    pub params: NetworkParams,
    pub mu: f64,
    pub mode: H2lrMode,
}

fn method_name(regime: LoadRegime, mode: H2lrMode) -> &'static str {
    match (regime, mode) {
        (LoadRegime::H2lr, H2lrMode::Distribution) => "h2lr_distribution",
        (LoadRegime::H2lr, H2lrMode::ExpectedValue) => "h2lr_expected",
        _ => "closed_form",
    }
}

pub(crate) fn attack_rows(cells: &[AttackCell], replications: u64, ctx: &RunContext) -> Result<Vec<AttackRow>> {
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let lambda = accumulation_rate(c.regime, &c.params);
            let odds = RaceOdds::from_rates(lambda, c.mu)?;
            let formula = attack_success_regime_with(c.m, c.regime, &c.params, c.mu, c.mode)?;
            let mc = if replications > 0 {
                Some(monte_carlo_regime(
                    c.m,
                    c.regime,
                    &c.params,
                    c.mu,
                    replications,
                    DEFAULT_DEFICIT_CUTOFF,
                    &ctx.stream(i as u64),
                )?)
            } else {
                None
            };
            Ok(AttackRow {
                regime: c.regime,
                m: c.m.get(),
                lambda,
                mu: c.mu,
                p: odds.p(),
                q: odds.q(),
                prob_formula: formula,
                prob_mc: mc.map(|e| e.probability),
                mc_se: mc.map(|e| e.standard_error),
                method: method_name(c.regime, c.mode).to_owned(),
                provenance: if mc.is_some() { Provenance::MonteCarlo } else { Provenance::Analytic },
                seed: mc.map(|_| ctx.seed),
                spec_hash: ctx.hash.clone(),
            })
        })
        .collect()
}
