#ifndef TANGLESIM_H
#define TANGLESIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TsStatus {
  TS_STATUS_OK = 0,
  TS_STATUS_NULL_POINTER = 1,
  TS_STATUS_INVALID_ARGUMENT = 2,
  TS_STATUS_INVALID_PARAMS = 3,
  TS_STATUS_REGIME_CONDITION = 4,
  TS_STATUS_INTERNAL = 5,
} TsStatus;

typedef enum TsRegime {
  TS_REGIME_HR = 0,
  TS_REGIME_LR = 1,
  TS_REGIME_H2LR = 2,
  TS_REGIME_L2HR = 3,
} TsRegime;

/**
 * Weight distribution of the H2LR chain after a number of arrivals.
 */
typedef struct TsDistribution TsDistribution;

/**
 * Validated network parameters.
 */
typedef struct TsParams TsParams;

typedef struct TsDelayEstimate {
  double mean;
  double standard_error;
  uint64_t replications;
  uint64_t censored;
} TsDelayEstimate;

typedef struct TsRaceEstimate {
  double probability;
  double standard_error;
  uint64_t replications;
  uint64_t censored;
  double bias_bound;
} TsRaceEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a
 * success. Valid until the next call on the same thread.
 */
const char *ts_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ts_version(void);

/**
 * Validates and allocates a parameter set.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum TsStatus ts_params_new(double lambda_high,
                            double lambda_low,
                            double reveal_delay,
                            struct TsParams **out);

/**
 * # Safety
 * `params` must be null or a handle from [`ts_params_new`] not yet freed.
 */
void ts_params_free(struct TsParams *params);

/**
 * Fails with `TS_STATUS_REGIME_CONDITION` when `params` do not meet the
 * load condition of `regime`.
 *
 * # Safety
 * `params` must be a live handle.
 */
enum TsStatus ts_params_check_regime(const struct TsParams *params, enum TsRegime regime);

/**
 * Adaptation time `t0` and weight `W(t0)` for the high-rate regime.
 *
 * # Safety
 * `params` must be a live handle; `t0` and `weight` valid for writes.
 */
enum TsStatus ts_adaptation_period(const struct TsParams *params, double *t0, double *weight);

/**
 * Expected cumulative weight `t` seconds after the reveal.
 *
 * # Safety
 * `params` must be a live handle; `out` valid for a write.
 */
enum TsStatus ts_expected_weight(const struct TsParams *params,
                                 enum TsRegime regime,
                                 double t,
                                 double *out);

/**
 * Expected confirmation delay in seconds for threshold `m`.
 *
 * # Safety
 * `params` must be a live handle; `out` valid for a write.
 */
enum TsStatus ts_confirmation_delay(const struct TsParams *params,
                                    enum TsRegime regime,
                                    uint32_t m,
                                    double *out);

/**
 * Simulated confirmation delay over `replications` runs.
 *
 * # Safety
 * `params` must be a live handle; `out` valid for a write.
 */
enum TsStatus ts_estimate_confirmation_delay(const struct TsParams *params,
                                             enum TsRegime regime,
                                             uint32_t m,
                                             uint64_t replications,
                                             uint64_t seed,
                                             struct TsDelayEstimate *out);

/**
 * Success probability of a race where the honest side needs `alpha`
 * transactions and the attacker starts `beta` behind; `p` is the honest
 * share of the combined rate.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum TsStatus ts_attack_success(uint64_t alpha, uint64_t beta, double p, double *out);

/**
 * Attack success probability against a merchant waiting for weight `m`,
 * with attacker rate `mu`.
 *
 * # Safety
 * `params` must be a live handle; `out` valid for a write.
 */
enum TsStatus ts_attack_success_regime(const struct TsParams *params,
                                       enum TsRegime regime,
                                       uint32_t m,
                                       double mu,
                                       double *out);

/**
 * Monte-Carlo estimate of [`ts_attack_success`]; walks whose deficit
 * reaches `cutoff` count as failures.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum TsStatus ts_monte_carlo_race(uint64_t alpha,
                                  uint64_t beta,
                                  double p,
                                  uint64_t replications,
                                  uint64_t cutoff,
                                  uint64_t seed,
                                  struct TsRaceEstimate *out);

/**
 * H2LR chain state after `k` arrivals with `l_h` initial tips.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum TsStatus ts_h2lr_distribution(uint64_t k, uint32_t l_h, struct TsDistribution **out);

/**
 * # Safety
 * `dist` must be null or a handle from [`ts_h2lr_distribution`] not yet freed.
 */
void ts_distribution_free(struct TsDistribution *dist);

/**
 * Probability that the weight equals `w`.
 *
 * # Safety
 * `dist` must be a live handle; `out` valid for a write.
 */
enum TsStatus ts_distribution_mass(const struct TsDistribution *dist, uint64_t w, double *out);

/**
 * Expected weight, tip count and smallest/largest reachable weight.
 *
 * # Safety
 * `dist` must be a live handle; every out pointer valid for a write.
 */
enum TsStatus ts_distribution_summary(const struct TsDistribution *dist,
                                      double *expected_weight,
                                      uint32_t *tips,
                                      uint64_t *min_weight,
                                      uint64_t *max_weight);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TANGLESIM_H */
