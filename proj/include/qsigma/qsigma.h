/*
 * C interface to the qsigma library: tabular Q(sigma, lambda) and Double
 * Q(sigma) learners, gridworld benchmarks and the experiment sweep engine.
 *
 * All objects are opaque handles created and destroyed through this API.
 * Functions that can fail return a qsigma_status; on failure
 * qsigma_last_error() describes the problem. The message belongs to the
 * calling thread and stays valid until that thread's next failing call.
 */
#ifndef QSIGMA_QSIGMA_H
#define QSIGMA_QSIGMA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(QSIGMA_BUILDING_LIBRARY)
#    define QSIGMA_API __declspec(dllexport)
#  else
#    define QSIGMA_API __declspec(dllimport)
#  endif
#else
#  define QSIGMA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qsigma_status {
  QSIGMA_OK = 0,
  QSIGMA_INVALID_ARGUMENT = 1,
  QSIGMA_CONFIG_ERROR = 2,
  QSIGMA_IO_ERROR = 3,
  QSIGMA_CONTRACT_VIOLATION = 4,
  QSIGMA_NO_SOLUTION = 5,
  QSIGMA_INTERNAL_ERROR = 6
} qsigma_status;

QSIGMA_API const char* qsigma_version(void);
QSIGMA_API const char* qsigma_last_error(void);
QSIGMA_API const char* qsigma_status_name(qsigma_status status);

/* ------------------------------------------------------------------------ */
/* Experiments                                                              */

typedef struct qsigma_experiment qsigma_experiment;
typedef struct qsigma_results qsigma_results;

/* Defaults: env "stochastic-windy", algorithm "qsigma", alpha 0.1..1.0,
 * sigma {0, 0.5, 1, dyn}, sigma decay 0.99, lambda {0, 0.7}, 100 episodes,
 * 200 runs, epsilon 0.1, gamma 1, seed 0, 10000 steps per episode. */
QSIGMA_API qsigma_status qsigma_experiment_create(qsigma_experiment** out);
QSIGMA_API qsigma_status qsigma_experiment_from_manifest(const char* manifest_json, qsigma_experiment** out);
QSIGMA_API void qsigma_experiment_destroy(qsigma_experiment* experiment);

QSIGMA_API qsigma_status qsigma_experiment_set_env(qsigma_experiment* experiment, const char* name);
QSIGMA_API qsigma_status qsigma_experiment_set_algorithm(qsigma_experiment* experiment, const char* name);
QSIGMA_API qsigma_status qsigma_experiment_set_alphas(qsigma_experiment* experiment, const double* values, size_t count);
/* dynamic[i] != 0 turns entry i into a decaying schedule starting at values[i].
 * dynamic may be NULL. */
QSIGMA_API qsigma_status qsigma_experiment_set_sigmas(qsigma_experiment* experiment, const double* values,
                                                      const int* dynamic, size_t count);
QSIGMA_API qsigma_status qsigma_experiment_set_sigma_decay(qsigma_experiment* experiment, double decay);
QSIGMA_API qsigma_status qsigma_experiment_set_lambdas(qsigma_experiment* experiment, const double* values,
                                                       size_t count);
QSIGMA_API qsigma_status qsigma_experiment_set_episodes(qsigma_experiment* experiment, uint64_t episodes);
QSIGMA_API qsigma_status qsigma_experiment_set_runs(qsigma_experiment* experiment, uint64_t runs);
QSIGMA_API qsigma_status qsigma_experiment_set_epsilon(qsigma_experiment* experiment, double epsilon);
QSIGMA_API qsigma_status qsigma_experiment_set_gamma(qsigma_experiment* experiment, double gamma);
QSIGMA_API qsigma_status qsigma_experiment_set_seed(qsigma_experiment* experiment, uint64_t master_seed);
QSIGMA_API qsigma_status qsigma_experiment_set_max_steps(qsigma_experiment* experiment, uint64_t max_steps);
/* "accumulating", "pi_weighted" or "sigma_weighted" (default). */
QSIGMA_API qsigma_status qsigma_experiment_set_trace_kind(qsigma_experiment* experiment, const char* kind);
/* "greedy" (default), "epsilon_greedy" or "uniform". */
QSIGMA_API qsigma_status qsigma_experiment_set_target_policy(qsigma_experiment* experiment, const char* policy);

QSIGMA_API qsigma_status qsigma_experiment_validate(const qsigma_experiment* experiment);
QSIGMA_API qsigma_status qsigma_experiment_num_points(const qsigma_experiment* experiment, size_t* out);
/* threads == 0 uses every logical core. Results do not depend on threads. */
QSIGMA_API qsigma_status qsigma_experiment_run(const qsigma_experiment* experiment, unsigned threads,
                                               qsigma_results** out);

typedef struct qsigma_aggregate {
  double alpha;
  double sigma;
  double sigma_decay;
  double lambda;
  uint64_t runs;
  double mean_avg_return;
  double stderr_avg_return;
  uint64_t truncated_episodes;
} qsigma_aggregate;

QSIGMA_API size_t qsigma_results_num_runs(const qsigma_results* results);
QSIGMA_API size_t qsigma_results_num_aggregates(const qsigma_results* results);
QSIGMA_API uint64_t qsigma_results_truncated_episodes(const qsigma_results* results);
QSIGMA_API qsigma_status qsigma_results_aggregate(const qsigma_results* results, size_t index,
                                                  qsigma_aggregate* out);
/* Borrowed pointer to the per-episode returns of run record `index`. */
QSIGMA_API qsigma_status qsigma_results_run_returns(const qsigma_results* results, size_t index,
                                                    const double** returns, size_t* episodes);
QSIGMA_API qsigma_status qsigma_results_write_raw_csv(const qsigma_results* results, const char* path);
QSIGMA_API qsigma_status qsigma_results_write_aggregate_csv(const qsigma_results* results, const char* path);
QSIGMA_API qsigma_status qsigma_results_write_svg(const qsigma_results* results, const char* path,
                                                  const char* title);
QSIGMA_API qsigma_status qsigma_results_write_manifest(const qsigma_results* results, const char* path);
QSIGMA_API void qsigma_results_destroy(qsigma_results* results);

/* ------------------------------------------------------------------------ */
/* Environments                                                             */

typedef struct qsigma_env qsigma_env;
typedef struct qsigma_rng qsigma_rng;

typedef struct qsigma_transition {
  size_t state;
  size_t action;
  double reward;
  size_t next_state;
  int terminal;
} qsigma_transition;

QSIGMA_API qsigma_status qsigma_rng_create(uint64_t seed, qsigma_rng** out);
QSIGMA_API void qsigma_rng_destroy(qsigma_rng* rng);
QSIGMA_API double qsigma_rng_uniform(qsigma_rng* rng);

/* "windy", "stochastic-windy", "chain:<n>" or "maxbias". */
QSIGMA_API qsigma_status qsigma_env_create(const char* name, qsigma_env** out);
QSIGMA_API void qsigma_env_destroy(qsigma_env* env);
QSIGMA_API size_t qsigma_env_num_states(const qsigma_env* env);
QSIGMA_API size_t qsigma_env_num_actions(const qsigma_env* env);
QSIGMA_API size_t qsigma_env_reset(const qsigma_env* env, qsigma_rng* rng);
QSIGMA_API int qsigma_env_is_terminal(const qsigma_env* env, size_t state);
QSIGMA_API qsigma_status qsigma_env_step(const qsigma_env* env, size_t state, size_t action, qsigma_rng* rng,
                                         qsigma_transition* out);
/* Optimal action values by value iteration, written row-major into out,
 * which must hold num_states * num_actions doubles. */
QSIGMA_API qsigma_status qsigma_env_q_star(const qsigma_env* env, double gamma, double tol, double* out,
                                           size_t capacity);

#ifdef __cplusplus
}
#endif

#endif /* QSIGMA_QSIGMA_H */
