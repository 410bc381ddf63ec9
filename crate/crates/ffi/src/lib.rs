//! C interface to the tanglesim engines.
//!
//! Every fallible call returns a [`TsStatus`] and writes its result through
//! an out pointer. On failure the message is available from
//! [`ts_last_error_message`] on the same thread. Parameter sets and chain
//! distributions are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tanglesim::analytic::chain::{h2lr_distribution, StateDistribution};
use tanglesim::analytic::{adaptation_period, confirmation_delay, expected_weight};
use tanglesim::attack::{attack_success_regime, attack_success_with_gap, monte_carlo_race, AttackScenario, RaceOdds};
use tanglesim::sim::estimate_confirmation_delay;
use tanglesim::{derive_stream, ConfirmationThreshold, Error, LoadRegime, NetworkParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidParams = 3,
    RegimeCondition = 4,
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsRegime {
    Hr = 0,
    Lr = 1,
    H2lr = 2,
    L2hr = 3,
}

impl From<TsRegime> for LoadRegime {
    fn from(r: TsRegime) -> Self {
        match r {
            TsRegime::Hr => Self::Hr,
            TsRegime::Lr => Self::Lr,
            TsRegime::H2lr => Self::H2lr,
            TsRegime::L2hr => Self::L2hr,
        }
    }
}

/// Validated network parameters.
pub struct TsParams(NetworkParams);

/// Weight distribution of the H2LR chain after a number of arrivals.
pub struct TsDistribution(StateDistribution);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TsRaceEstimate {
    pub probability: f64,
    pub standard_error: f64,
    pub replications: u64,
    pub censored: u64,
    pub bias_bound: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TsDelayEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub replications: u64,
    pub censored: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| c"error message contained NUL".to_owned());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TsStatus {
    match e {
        Error::NonPositiveRate { .. } | Error::NonPositiveDelay(_) | Error::AdaptationUndefined(_) => {
            TsStatus::InvalidParams
        }
        Error::RegimeConditionViolated { .. } => TsStatus::RegimeCondition,
        Error::InvalidThreshold(_) | Error::InvalidArgument(_) | Error::EmptyTipSet => TsStatus::InvalidArgument,
        _ => TsStatus::Internal,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (TsStatus, String)>) -> TsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TsStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside tanglesim".into());
            TsStatus::Internal
        }
    }
}

trait Lift<T> {
    fn lift(self) -> Result<T, (TsStatus, String)>;
}

impl<T> Lift<T> for tanglesim::Result<T> {
    fn lift(self) -> Result<T, (TsStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(name: &str) -> (TsStatus, String) {
    (TsStatus::NullPointer, format!("`{name}` is null"))
}

/// Writes `v` through `out`.
///
/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn put<T>(out: *mut T, name: &str, v: T) -> Result<(), (TsStatus, String)> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(v);
    Ok(())
}

/// # Safety
/// `p` must be null or a live handle from [`ts_params_new`].
unsafe fn params<'a>(p: *const TsParams) -> Result<&'a NetworkParams, (TsStatus, String)> {
    p.as_ref().map(|p| &p.0).ok_or_else(|| null("params"))
}

/// Message for the last failed call on this thread, or null after a
/// success. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ts_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Validates and allocates a parameter set.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ts_params_new(
    lambda_high: f64,
    lambda_low: f64,
    reveal_delay: f64,
    out: *mut *mut TsParams,
) -> TsStatus {
    guard(|| {
        let p = NetworkParams::new(lambda_high, lambda_low, reveal_delay).lift()?;
        put(out, "out", Box::into_raw(Box::new(TsParams(p))))
    })
}

/// # Safety
/// `params` must be null or a handle from [`ts_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ts_params_free(params: *mut TsParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Fails with `TS_STATUS_REGIME_CONDITION` when `params` do not meet the
/// load condition of `regime`.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_params_check_regime(params: *const TsParams, regime: TsRegime) -> TsStatus {
    guard(|| {
        self::params(params)?.require(regime.into()).lift()?;
        Ok(())
    })
}

/// Adaptation time `t0` and weight `W(t0)` for the high-rate regime.
///
/// # Safety
/// `params` must be a live handle; `t0` and `weight` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_adaptation_period(params: *const TsParams, t0: *mut f64, weight: *mut f64) -> TsStatus {
    guard(|| {
        let p = self::params(params)?;
        let ap = adaptation_period(p.tip_count_high(), p.reveal_delay()).lift()?;
        put(t0, "t0", ap.t0)?;
        put(weight, "weight", ap.weight)
    })
}

/// Expected cumulative weight `t` seconds after the reveal.
///
/// # Safety
/// `params` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ts_expected_weight(params: *const TsParams, regime: TsRegime, t: f64, out: *mut f64) -> TsStatus {
    guard(|| {
        let w = expected_weight(regime.into(), t, self::params(params)?).lift()?;
        put(out, "out", w)
    })
}

/// Expected confirmation delay in seconds for threshold `m`.
///
/// # Safety
/// `params` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ts_confirmation_delay(params: *const TsParams, regime: TsRegime, m: u32, out: *mut f64) -> TsStatus {
    guard(|| {
        let m = ConfirmationThreshold::new(m).lift()?;
        let d = confirmation_delay(m, regime.into(), self::params(params)?).lift()?;
        put(out, "out", d)
    })
}

/// Simulated confirmation delay over `replications` runs.
///
/// # Safety
/// `params` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ts_estimate_confirmation_delay(
    params: *const TsParams,
    regime: TsRegime,
    m: u32,
    replications: u64,
    seed: u64,
    out: *mut TsDelayEstimate,
) -> TsStatus {
    guard(|| {
        let m = ConfirmationThreshold::new(m).lift()?;
        let est = estimate_confirmation_delay(
            self::params(params)?,
            regime.into(),
            m,
            replications as usize,
            &derive_stream(seed, 0),
        )
        .lift()?;
        put(
            out,
            "out",
            TsDelayEstimate {
                mean: est.mean(),
                standard_error: est.standard_error(),
                replications: est.replications as u64,
                censored: est.censored as u64,
            },
        )
    })
}

/// Success probability of a race where the honest side needs `alpha`
/// transactions and the attacker starts `beta` behind; `p` is the honest
/// share of the combined rate.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ts_attack_success(alpha: u64, beta: u64, p: f64, out: *mut f64) -> TsStatus {
    guard(|| {
        let odds = RaceOdds::from_p(p).lift()?;
        put(out, "out", attack_success_with_gap(alpha, beta, &odds))
    })
}

/// Attack success probability against a merchant waiting for weight `m`,
/// with attacker rate `mu`.
///
/// # Safety
/// `params` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ts_attack_success_regime(
    params: *const TsParams,
    regime: TsRegime,
    m: u32,
    mu: f64,
    out: *mut f64,
) -> TsStatus {
    guard(|| {
        let m = ConfirmationThreshold::new(m).lift()?;
        let v = attack_success_regime(m, regime.into(), self::params(params)?, mu).lift()?;
        put(out, "out", v)
    })
}

/// Monte-Carlo estimate of [`ts_attack_success`]; walks whose deficit
/// reaches `cutoff` count as failures.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ts_monte_carlo_race(
    alpha: u64,
    beta: u64,
    p: f64,
    replications: u64,
    cutoff: u64,
    seed: u64,
    out: *mut TsRaceEstimate,
) -> TsStatus {
    guard(|| {
        if !(p > 0.0 && p < 1.0) {
            return Err((TsStatus::InvalidArgument, format!("p must lie in (0, 1), got {p}")));
        }
        let scenario = AttackScenario::new(p, 1.0 - p, 2, alpha, beta).lift()?;
        let e = monte_carlo_race(&scenario, replications, cutoff, &derive_stream(seed, 0)).lift()?;
        put(
            out,
            "out",
            TsRaceEstimate {
                probability: e.probability,
                standard_error: e.standard_error,
                replications: e.replications,
                censored: e.censored,
                bias_bound: e.bias_bound,
            },
        )
    })
}

/// H2LR chain state after `k` arrivals with `l_h` initial tips.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ts_h2lr_distribution(k: u64, l_h: u32, out: *mut *mut TsDistribution) -> TsStatus {
    guard(|| {
        if l_h < 2 {
            return Err((TsStatus::InvalidArgument, format!("l_h must be at least 2, got {l_h}")));
        }
        let d = h2lr_distribution(k, l_h);
        put(out, "out", Box::into_raw(Box::new(TsDistribution(d))))
    })
}

/// # Safety
/// `dist` must be null or a handle from [`ts_h2lr_distribution`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ts_distribution_free(dist: *mut TsDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// Probability that the weight equals `w`.
///
/// # Safety
/// `dist` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ts_distribution_mass(dist: *const TsDistribution, w: u64, out: *mut f64) -> TsStatus {
    guard(|| {
        let d = dist.as_ref().ok_or_else(|| null("dist"))?;
        put(out, "out", d.0.mass(w))
    })
}

/// Expected weight, tip count and smallest/largest reachable weight.
///
/// # Safety
/// `dist` must be a live handle; every out pointer valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ts_distribution_summary(
    dist: *const TsDistribution,
    expected_weight: *mut f64,
    tips: *mut u32,
    min_weight: *mut u64,
    max_weight: *mut u64,
) -> TsStatus {
    guard(|| {
        let d = &dist.as_ref().ok_or_else(|| null("dist"))?.0;
        let (lo, hi) = d.weight_range();
        put(expected_weight, "expected_weight", d.expected_weight())?;
        put(tips, "tips", d.tips())?;
        put(min_weight, "min_weight", lo)?;
        put(max_weight, "max_weight", hi)
    })
}
