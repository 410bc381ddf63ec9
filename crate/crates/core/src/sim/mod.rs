//! Discrete-event Monte-Carlo simulation of the DAG ledger.
//!
//! Arrivals form a Poisson process whose rate may switch once, exactly when
//! the observed transaction reveals. Each arrival approves one or two visible
//! tips and stays private for the reveal delay. The observed transaction is
//! the first arrival issued after the warm-up period.

mod ledger;

pub use ledger::{tip_select, Issuer, LedgerState, Parents, Transaction, TxId};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{ConfirmationThreshold, LoadRegime, NetworkParams};
use crate::stats::{Histogram, Summary};
use crate::stream::SeededStream;

/// Warm-up length, in multiples of the reveal delay, before the observed
/// transaction is injected.
pub const DEFAULT_WARMUP_REVEALS: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Seconds of simulated time before the observed transaction is issued.
    pub warmup: f64,
    /// End the run at the first arrival that confirms the observed
    /// transaction instead of running to the horizon.
    pub stop_at_confirmation: bool,
}

impl SimConfig {
    pub fn for_params(params: &NetworkParams) -> Self {
        Self {
            warmup: DEFAULT_WARMUP_REVEALS * params.reveal_delay(),
            stop_at_confirmation: false,
        }
    }
}

enum Event {
    Reveal,
    Arrival(TxId),
}

/// Event loop shared by the experiments.
struct Engine<'a> {
    ledger: LedgerState,
    stream: &'a mut SeededStream,
    rate_before: f64,
    rate_after: f64,
    warmup: f64,
    switch_at: Option<f64>,
    switched: bool,
    next_arrival: f64,
    observed: Option<TxId>,
}

impl<'a> Engine<'a> {
    fn new(params: &NetworkParams, regime: LoadRegime, warmup: f64, stream: &'a mut SeededStream) -> Self {
        let (rate_before, rate_after) = params.rates(regime);
        let first = stream.exponential(rate_before);
        Self {
            ledger: LedgerState::with_genesis(params.reveal_delay()),
            stream,
            rate_before,
            rate_after,
            warmup,
            switch_at: None,
            switched: false,
            next_arrival: first,
            observed: None,
        }
    }

    fn observed_reveal(&self) -> Option<f64> {
        self.switch_at
    }

    fn step(&mut self) -> Result<(f64, Event)> {
        if let Some(r) = self.ledger.next_reveal_time() {
            if r <= self.next_arrival {
                self.ledger.reveal_next().expect("pending reveal");
                return Ok((r, Event::Reveal));
            }
        }
        let t = self.next_arrival;
        self.ledger.advance_to(t);
        let parents = tip_select(&self.ledger, self.stream)?;
        let inject = self.observed.is_none() && t >= self.warmup;
        let issuer = if inject { Issuer::Observed } else { Issuer::Honest };
        let id = self.ledger.issue(t, parents, issuer);
        if inject {
            self.observed = Some(id);
            self.switch_at = Some(t + self.ledger.reveal_delay());
        }
        self.schedule_after(t);
        Ok((t, Event::Arrival(id)))
    }

    fn schedule_after(&mut self, t: f64) {
        let rate = if self.switched { self.rate_after } else { self.rate_before };
        let mut next = t + self.stream.exponential(rate);
        if let Some(s) = self.switch_at {
            if !self.switched && next > s {
                // memoryless: restart the clock at the switch with the new rate
                next = s + self.stream.exponential(self.rate_after);
                self.switched = true;
            }
        }
        self.next_arrival = next;
    }
}

/// Cumulative weight of the observed transaction over time.
///
/// Times are seconds since the observed transaction revealed. There is one
/// sample at the reveal (`W = 1`) and one per later arrival, approving or
/// not, so `samples[k]` is the weight after `k` arrivals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightTrace {
    pub samples: Vec<(f64, u64)>,
    pub confirmation_time: Option<f64>,
    /// Seconds of weight accumulation simulated.
    pub horizon: f64,
}

impl WeightTrace {
    /// Weight at `t` seconds after the reveal (right-continuous step function).
    pub fn weight_at(&self, t: f64) -> u64 {
        let idx = self.samples.partition_point(|&(s, _)| s <= t);
        if idx == 0 {
            1
        } else {
            self.samples[idx - 1].1
        }
    }

    /// Weight after `k` post-reveal arrivals, if the trace reaches that far.
    pub fn weight_after_arrivals(&self, k: usize) -> Option<u64> {
        self.samples.get(k).map(|&(_, w)| w)
    }

    /// True when the horizon elapsed before the threshold was reached.
    pub fn horizon_too_short(&self) -> bool {
        self.confirmation_time.is_none()
    }
}

/// Simulates one run and returns the observed transaction's weight trace up
/// to `horizon` seconds after its reveal.
pub fn run_weight_experiment(
    params: &NetworkParams,
    regime: LoadRegime,
    m: ConfirmationThreshold,
    horizon: f64,
    stream: &mut SeededStream,
) -> Result<WeightTrace> {
    run_weight_experiment_with(params, regime, m, horizon, &SimConfig::for_params(params), stream)
}

pub fn run_weight_experiment_with(
    params: &NetworkParams,
    regime: LoadRegime,
    m: ConfirmationThreshold,
    horizon: f64,
    config: &SimConfig,
    stream: &mut SeededStream,
) -> Result<WeightTrace> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let m = u64::from(m.get());
    let mut engine = Engine::new(params, regime, config.warmup, stream);
    // approval-cone flag per transaction
    let mut in_cone: Vec<bool> = vec![false];
    let mut weight = 1u64;
    let mut samples = vec![(0.0, 1u64)];
    let mut confirmation_time = None;
    loop {
        let (t, event) = engine.step()?;
        let Event::Arrival(id) = event else { continue };
        let tx = engine.ledger.transaction(id);
        let parents = tx.parents.expect("non-genesis");
        let observed = engine.observed;
        let approves = match observed {
            Some(o) if o != id => parents
                .as_slice()
                .iter()
                .any(|&p| p == o || in_cone[p as usize]),
            _ => false,
        };
        in_cone.push(approves);
        let Some(reveal) = engine.observed_reveal() else { continue };
        if t < reveal {
            continue;
        }
        let since = t - reveal;
        if since > horizon {
            break;
        }
        if approves {
            weight += 1;
        }
        samples.push((since, weight));
        if confirmation_time.is_none() && weight >= m {
            confirmation_time = Some(since);
            if config.stop_at_confirmation {
                break;
            }
        }
    }
    Ok(WeightTrace {
        samples,
        confirmation_time,
        horizon,
    })
}

/// Visible tip count after every event from genesis to `horizon`.
///
/// For the switching regimes the rate changes when the first transaction
/// issued after the warm-up reveals.
pub fn tip_count_series(
    params: &NetworkParams,
    regime: LoadRegime,
    horizon: f64,
    stream: &mut SeededStream,
) -> Result<Vec<(f64, usize)>> {
    tip_count_series_with(params, regime, horizon, &SimConfig::for_params(params), stream)
}

pub fn tip_count_series_with(
    params: &NetworkParams,
    regime: LoadRegime,
    horizon: f64,
    config: &SimConfig,
    stream: &mut SeededStream,
) -> Result<Vec<(f64, usize)>> {
    let mut engine = Engine::new(params, regime, config.warmup, stream);
    let mut series = vec![(0.0, engine.ledger.tip_count())];
    loop {
        let (t, _) = engine.step()?;
        if t > horizon {
            break;
        }
        series.push((t, engine.ledger.tip_count()));
    }
    Ok(series)
}

/// Time-weighted mean of a piecewise-constant series over `[from, to]`.
pub fn time_average(series: &[(f64, usize)], from: f64, to: f64) -> f64 {
    let mut acc = 0.0;
    for (i, &(t, v)) in series.iter().enumerate() {
        let end = series.get(i + 1).map_or(to, |&(n, _)| n).min(to);
        let start = t.max(from);
        if end > start {
            acc += (end - start) * v as f64;
        }
    }
    acc / (to - from)
}

/// Replicated confirmation-delay measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayEstimate {
    pub summary: Summary,
    pub histogram: Histogram,
    pub replications: usize,
    /// Runs whose horizon elapsed before confirmation; excluded from the mean.
    pub censored: usize,
}

impl DelayEstimate {
    pub fn mean(&self) -> f64 {
        self.summary.mean
    }

    pub fn standard_error(&self) -> f64 {
        self.summary.standard_error
    }
}

/// Default per-run horizon: generous against the slowest regime.
pub fn default_delay_horizon(params: &NetworkParams, m: ConfirmationThreshold) -> f64 {
    let slowest = params.lambda_high().min(params.lambda_low());
    let span = f64::from(m.get()) + params.tip_count_high().max(1.0);
    20.0 * span / slowest + 100.0 * params.reveal_delay()
}

/// Runs `replications` independent weight experiments (replication `i` uses
/// `stream.fork(i)`) and summarizes the reveal-to-confirmation delay.
pub fn estimate_confirmation_delay(
    params: &NetworkParams,
    regime: LoadRegime,
    m: ConfirmationThreshold,
    replications: usize,
    stream: &SeededStream,
) -> Result<DelayEstimate> {
    if replications == 0 {
        return Err(Error::InvalidArgument("replications must be at least 1".into()));
    }
    let config = SimConfig {
        stop_at_confirmation: true,
        ..SimConfig::for_params(params)
    };
    let horizon = default_delay_horizon(params, m);
    let runs: Vec<Option<f64>> = (0..replications as u64)
        .into_par_iter()
        .map(|i| {
            let mut s = stream.fork(i);
            run_weight_experiment_with(params, regime, m, horizon, &config, &mut s)
                .map(|trace| trace.confirmation_time)
        })
        .collect::<Result<_>>()?;
    let delays: Vec<f64> = runs.iter().flatten().copied().collect();
    Ok(DelayEstimate {
        summary: Summary::from_slice(&delays),
        histogram: Histogram::from_slice(&delays, 20),
        replications,
        censored: replications - delays.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::derive_stream;

    fn m(v: u32) -> ConfirmationThreshold {
        ConfirmationThreshold::new(v).unwrap()
    }

    #[test]
    fn trace_is_monotone_and_deterministic() {
        let p = NetworkParams::reference();
        for regime in LoadRegime::ALL {
            let a = run_weight_experiment(&p, regime, m(50), 20.0, &mut derive_stream(5, 1)).unwrap();
            let b = run_weight_experiment(&p, regime, m(50), 20.0, &mut derive_stream(5, 1)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.samples[0], (0.0, 1));
            for w in a.samples.windows(2) {
                assert!(w[1].0 >= w[0].0);
                assert!(w[1].1 == w[0].1 || w[1].1 == w[0].1 + 1);
            }
            if let Some(c) = a.confirmation_time {
                let first = a.samples.iter().find(|s| s.1 >= 50).unwrap();
                assert_eq!(first.0, c);
            }
        }
    }

    #[test]
    fn l2hr_weight_tracks_arrivals() {
        let p = NetworkParams::reference();
        let trace = run_weight_experiment(&p, LoadRegime::L2hr, m(50), 1.0, &mut derive_stream(11, 0)).unwrap();
        // nearly every arrival after reveal approves a single-tip ledger
        let arrivals = trace.samples.len() as u64 - 1;
        let w = trace.samples.last().unwrap().1;
        assert!(w + 3 > arrivals, "w {w} arrivals {arrivals}");
    }

    #[test]
    fn weight_at_is_step_function() {
        let tr = WeightTrace {
            samples: vec![(0.0, 1), (1.0, 2), (2.5, 2), (3.0, 3)],
            confirmation_time: Some(3.0),
            horizon: 5.0,
        };
        assert_eq!(tr.weight_at(0.5), 1);
        assert_eq!(tr.weight_at(1.0), 2);
        assert_eq!(tr.weight_at(2.9), 2);
        assert_eq!(tr.weight_at(10.0), 3);
        assert_eq!(tr.weight_after_arrivals(3), Some(3));
        assert_eq!(tr.weight_after_arrivals(4), None);
    }

    #[test]
    fn short_horizon_is_flagged() {
        let p = NetworkParams::reference();
        let tr = run_weight_experiment(&p, LoadRegime::Lr, m(500), 5.0, &mut derive_stream(1, 0)).unwrap();
        assert!(tr.horizon_too_short());
        assert!(run_weight_experiment(&p, LoadRegime::Lr, m(5), 0.0, &mut derive_stream(1, 0)).is_err());
    }

    #[test]
    fn lr_tips_collapse() {
        let p = NetworkParams::reference();
        let series = tip_count_series(&p, LoadRegime::Lr, 120.0, &mut derive_stream(2, 0)).unwrap();
        assert!(series.iter().all(|&(_, l)| l >= 1));
        assert!(time_average(&series, 0.0, 120.0) < 2.0);
    }

    #[test]
    fn hr_tip_count_near_equilibrium() {
        let p = NetworkParams::reference();
        let series = tip_count_series(&p, LoadRegime::Hr, 150.0, &mut derive_stream(3, 0)).unwrap();
        let avg = time_average(&series, 50.0, 150.0);
        assert!((90.0..=110.0).contains(&avg), "avg {avg}");
    }

    #[test]
    fn time_average_of_steps() {
        let s = [(0.0, 1), (1.0, 3), (3.0, 2)];
        approx::assert_relative_eq!(time_average(&s, 0.0, 4.0), (1.0 + 6.0 + 2.0) / 4.0);
        approx::assert_relative_eq!(time_average(&s, 2.0, 4.0), (3.0 + 2.0) / 2.0);
    }

    #[test]
    fn m2_single_tip_delay_is_one_interarrival() {
        // L2HR reveals on a single-tip ledger: the first arrival confirms.
        let p = NetworkParams::reference();
        let est = estimate_confirmation_delay(&p, LoadRegime::L2hr, m(2), 4000, &derive_stream(8, 0)).unwrap();
        let expect = p.interarrival_high();
        assert!((est.mean() - expect).abs() < 4.0 * est.standard_error(), "{est:?}");
        assert_eq!(est.censored, 0);
    }
}
