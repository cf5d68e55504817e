#ifndef NETMARKET_H
#define NETMARKET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum NmStatus {
  NM_STATUS_OK = 0,
  NM_STATUS_NULL_POINTER = 1,
  NM_STATUS_INVALID_ARGUMENT = 2,
  NM_STATUS_INVALID_PARAMS = 3,
  NM_STATUS_NETWORK_ERROR = 4,
  NM_STATUS_SIMULATION_ERROR = 5,
  NM_STATUS_FUSION_ERROR = 6,
  NM_STATUS_BUFFER_TOO_SMALL = 7,
  NM_STATUS_PANIC = 99,
} NmStatus;

typedef enum NmTopology {
  NM_TOPOLOGY_SMALL_WORLD = 0,
  NM_TOPOLOGY_STOCHASTIC_BLOCK = 1,
  NM_TOPOLOGY_SCALE_FREE_HUBS_INFORMED = 2,
  NM_TOPOLOGY_SCALE_FREE_HUBS_MISINFORMED = 3,
} NmTopology;

/**
 * Per-step series stored in a simulation result.
 */
typedef enum NmSeries {
  NM_SERIES_THETA = 0,
  NM_SERIES_GAMMA = 1,
  NM_SERIES_DIVIDEND = 2,
  NM_SERIES_PRICE = 3,
  NM_SERIES_PAYOFF = 4,
  NM_SERIES_MEAN_BELIEF_UNINFORMED = 5,
} NmSeries;

/**
 * Social network with agent categories.
 */
typedef struct NmNetwork NmNetwork;

/**
 * Model parameters.
 */
typedef struct NmParams NmParams;

/**
 * Recorded simulation path.
 */
typedef struct NmSimResult NmSimResult;

typedef struct NmMoments {
  double mean;
  double std;
  double skewness;
  double kurtosis;
  uint64_t n_obs;
} NmMoments;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or an empty string.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *nm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nm_version(void);

/**
 * New parameter set holding the calibrated defaults.
 */
struct NmParams *nm_params_new(void);

/**
 * # Safety
 * `params` must come from `nm_params_new` and not be freed twice.
 */
void nm_params_free(struct NmParams *params);

/**
 * Sets a parameter by name. `steps` and `agents` take whole numbers.
 *
 * # Safety
 * `params` must be a live handle and `name` a NUL-terminated string.
 */
enum NmStatus nm_params_set(struct NmParams *params, const char *name, double value);

/**
 * Reads a parameter by name into `out`.
 *
 * # Safety
 * `params` must be a live handle, `name` a NUL-terminated string and `out`
 * writable.
 */
enum NmStatus nm_params_get(const struct NmParams *params, const char *name, double *out);

/**
 * Checks every parameter invariant.
 *
 * # Safety
 * `params` must be a live handle.
 */
enum NmStatus nm_params_validate(const struct NmParams *params);

/**
 * Generates a network with the standard settings of `topology`, drawing
 * from `seed`'s network and placement streams.
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum NmStatus nm_network_generate(const struct NmParams *params,
                                  enum NmTopology topology,
                                  uint64_t seed,
                                  struct NmNetwork **out);

/**
 * Parses a network from the edge-list text format.
 *
 * # Safety
 * `text` must be NUL-terminated and `out` writable.
 */
enum NmStatus nm_network_from_edge_list(const char *text, struct NmNetwork **out);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `network` must be null or a live handle.
 */
uint64_t nm_network_node_count(const struct NmNetwork *network);

/**
 * Number of directed observation edges, or 0 for a null handle.
 *
 * # Safety
 * `network` must be null or a live handle.
 */
uint64_t nm_network_edge_count(const struct NmNetwork *network);

/**
 * # Safety
 * `network` must come from this library and not be freed twice.
 */
void nm_network_free(struct NmNetwork *network);

/**
 * Runs one simulation with Gaussian shocks drawn from `seed`.
 *
 * # Safety
 * `params` and `network` must be live handles and `out` writable.
 */
enum NmStatus nm_simulate(const struct NmParams *params,
                          const struct NmNetwork *network,
                          uint64_t seed,
                          struct NmSimResult **out);

/**
 * Number of recorded steps, or 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
uint64_t nm_result_len(const struct NmSimResult *result);

/**
 * Number of agents, or 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
uint64_t nm_result_agents(const struct NmSimResult *result);

/**
 * Copies one per-step series into `buf`, which must hold at least
 * `nm_result_len` values.
 *
 * # Safety
 * `result` must be a live handle and `buf` writable for `len` values.
 */
enum NmStatus nm_result_series(const struct NmSimResult *result,
                               enum NmSeries series,
                               double *buf,
                               uint64_t len);

/**
 * Copies each agent's cumulative profit into `buf`, which must hold at
 * least `nm_result_agents` values.
 *
 * # Safety
 * `result` must be a live handle and `buf` writable for `len` values.
 */
enum NmStatus nm_result_cum_profit(const struct NmSimResult *result, double *buf, uint64_t len);

/**
 * Return moments after dropping the first `burn_in` prices.
 *
 * # Safety
 * `result` must be a live handle and `out` writable.
 */
enum NmStatus nm_result_moments(const struct NmSimResult *result,
                                uint64_t burn_in,
                                struct NmMoments *out);

/**
 * # Safety
 * `result` must come from this library and not be freed twice.
 */
void nm_result_free(struct NmSimResult *result);

/**
 * Fuses a Gaussian prior with `k` Gaussian signals. A signal variance of
 * `+inf` marks a signal to ignore; a zero variance is taken as certain.
 *
 * # Safety
 * `means` and `variances` must be readable for `k` values (or `k` = 0) and
 * the outputs writable.
 */
enum NmStatus nm_fuse(double prior_mean,
                      double prior_variance,
                      const double *means,
                      const double *variances,
                      uint64_t k,
                      double *out_mean,
                      double *out_variance);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETMARKET_H */
