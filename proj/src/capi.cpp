#include "qsigma/qsigma.h"

#include <new>
#include <string>
#include <vector>

#include "qsigma/envs.hpp"
#include "qsigma/error.hpp"
#include "qsigma/harness.hpp"
#include "qsigma/report.hpp"

struct qsigma_experiment {
  qsigma::ExperimentSpec spec;
};

struct qsigma_results {
  qsigma::ExperimentSpec spec;
  std::vector<qsigma::RunRecord> records;
  std::vector<qsigma::AggregateRecord> aggregates;
  std::uint64_t truncated = 0;
};

struct qsigma_env {
  std::unique_ptr<qsigma::Environment> env;
};

struct qsigma_rng {
  qsigma::Rng rng;
};

namespace {

thread_local std::string last_error;

qsigma_status to_status(qsigma::ErrorCode code) {
  switch (code) {
    case qsigma::ErrorCode::kInvalidArgument: return QSIGMA_INVALID_ARGUMENT;
    case qsigma::ErrorCode::kConfiguration: return QSIGMA_CONFIG_ERROR;
    case qsigma::ErrorCode::kIo: return QSIGMA_IO_ERROR;
    case qsigma::ErrorCode::kContractViolation: return QSIGMA_CONTRACT_VIOLATION;
    case qsigma::ErrorCode::kNoSolution: return QSIGMA_NO_SOLUTION;
  }
  return QSIGMA_INTERNAL_ERROR;
}

qsigma_status fail(qsigma_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <class Fn>
qsigma_status guarded(Fn&& fn) {
  try {
    fn();
    return QSIGMA_OK;
  } catch (const qsigma::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(QSIGMA_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(QSIGMA_INTERNAL_ERROR, e.what());
  }
}

#define QSIGMA_REQUIRE(cond, what) \
  if (!(cond)) return fail(QSIGMA_INVALID_ARGUMENT, what)

std::vector<double> copy_grid(const double* values, size_t count) {
  if (count == 0) qsigma::throw_invalid("grid is empty");
  if (values == nullptr) qsigma::throw_invalid("grid pointer is null");
  return {values, values + count};
}

}  // namespace

extern "C" {

const char* qsigma_version(void) { return qsigma::kToolVersion; }

const char* qsigma_last_error(void) { return last_error.c_str(); }

const char* qsigma_status_name(qsigma_status status) {
  switch (status) {
    case QSIGMA_OK: return "ok";
    case QSIGMA_INVALID_ARGUMENT: return "invalid argument";
    case QSIGMA_CONFIG_ERROR: return "configuration error";
    case QSIGMA_IO_ERROR: return "i/o error";
    case QSIGMA_CONTRACT_VIOLATION: return "contract violation";
    case QSIGMA_NO_SOLUTION: return "no solution";
    case QSIGMA_INTERNAL_ERROR: return "internal error";
  }
  return "unknown";
}

qsigma_status qsigma_experiment_create(qsigma_experiment** out) {
  QSIGMA_REQUIRE(out != nullptr, "out is null");
  return guarded([&] { *out = new qsigma_experiment{}; });
}

qsigma_status qsigma_experiment_from_manifest(const char* manifest_json, qsigma_experiment** out) {
  QSIGMA_REQUIRE(out != nullptr && manifest_json != nullptr, "null argument");
  return guarded([&] { *out = new qsigma_experiment{qsigma::spec_from_manifest(manifest_json)}; });
}

void qsigma_experiment_destroy(qsigma_experiment* experiment) { delete experiment; }

qsigma_status qsigma_experiment_set_env(qsigma_experiment* experiment, const char* name) {
  QSIGMA_REQUIRE(experiment != nullptr && name != nullptr, "null argument");
  return guarded([&] {
    qsigma::make_environment(name);
    experiment->spec.env = name;
  });
}

qsigma_status qsigma_experiment_set_algorithm(qsigma_experiment* experiment, const char* name) {
  QSIGMA_REQUIRE(experiment != nullptr && name != nullptr, "null argument");
  return guarded([&] {
    qsigma::resolve_algorithm(name);
    experiment->spec.algorithm = name;
  });
}

qsigma_status qsigma_experiment_set_alphas(qsigma_experiment* experiment, const double* values, size_t count) {
  QSIGMA_REQUIRE(experiment != nullptr, "experiment is null");
  return guarded([&] { experiment->spec.alphas = copy_grid(values, count); });
}

qsigma_status qsigma_experiment_set_sigmas(qsigma_experiment* experiment, const double* values, const int* dynamic,
                                           size_t count) {
  QSIGMA_REQUIRE(experiment != nullptr, "experiment is null");
  return guarded([&] {
    const auto grid = copy_grid(values, count);
    std::vector<qsigma::SigmaSetting> sigmas;
    for (size_t i = 0; i < count; ++i) sigmas.push_back({grid[i], dynamic != nullptr && dynamic[i] != 0});
    experiment->spec.sigmas = std::move(sigmas);
  });
}

qsigma_status qsigma_experiment_set_sigma_decay(qsigma_experiment* experiment, double decay) {
  QSIGMA_REQUIRE(experiment != nullptr, "experiment is null");
  QSIGMA_REQUIRE(decay > 0.0 && decay <= 1.0, "sigma decay outside (0, 1]");
  experiment->spec.sigma_decay = decay;
  return QSIGMA_OK;
}

qsigma_status qsigma_experiment_set_lambdas(qsigma_experiment* experiment, const double* values, size_t count) {
  QSIGMA_REQUIRE(experiment != nullptr, "experiment is null");
  return guarded([&] { experiment->spec.lambdas = copy_grid(values, count); });
}

qsigma_status qsigma_experiment_set_episodes(qsigma_experiment* experiment, uint64_t episodes) {
  QSIGMA_REQUIRE(experiment != nullptr, "experiment is null");
  QSIGMA_REQUIRE(episodes >= 1, "episodes must be >= 1");
  experiment->spec.episodes = episodes;
  return QSIGMA_OK;
}

qsigma_status qsigma_experiment_set_runs(qsigma_experiment* experiment, uint64_t runs) {
  QSIGMA_REQUIRE(experiment != nullptr, "experiment is null");
  QSIGMA_REQUIRE(runs >= 1, "runs must be >= 1");
  experiment->spec.runs = runs;
  return QSIGMA_OK;
}

qsigma_status qsigma_experiment_set_epsilon(qsigma_experiment* experiment, double epsilon) {
  QSIGMA_REQUIRE(experiment != nullptr, "experiment is null");
  QSIGMA_REQUIRE(epsilon >= 0.0 && epsilon <= 1.0, "epsilon outside [0, 1]");
  experiment->spec.epsilon = epsilon;
  return QSIGMA_OK;
}

qsigma_status qsigma_experiment_set_gamma(qsigma_experiment* experiment, double gamma) {
  QSIGMA_REQUIRE(experiment != nullptr, "experiment is null");
  QSIGMA_REQUIRE(gamma >= 0.0 && gamma <= 1.0, "gamma outside [0, 1]");
  experiment->spec.gamma = gamma;
  return QSIGMA_OK;
}

qsigma_status qsigma_experiment_set_seed(qsigma_experiment* experiment, uint64_t master_seed) {
  QSIGMA_REQUIRE(experiment != nullptr, "experiment is null");
  experiment->spec.master_seed = master_seed;
  return QSIGMA_OK;
}

qsigma_status qsigma_experiment_set_max_steps(qsigma_experiment* experiment, uint64_t max_steps) {
  QSIGMA_REQUIRE(experiment != nullptr, "experiment is null");
  QSIGMA_REQUIRE(max_steps >= 1, "max steps must be >= 1");
  experiment->spec.max_steps_per_episode = max_steps;
  return QSIGMA_OK;
}

qsigma_status qsigma_experiment_set_trace_kind(qsigma_experiment* experiment, const char* kind) {
  QSIGMA_REQUIRE(experiment != nullptr && kind != nullptr, "null argument");
  return guarded([&] { experiment->spec.trace_kind = qsigma::parse_trace_kind(kind); });
}

qsigma_status qsigma_experiment_set_target_policy(qsigma_experiment* experiment, const char* policy) {
  QSIGMA_REQUIRE(experiment != nullptr && policy != nullptr, "null argument");
  return guarded([&] { experiment->spec.target_policy = qsigma::parse_target_policy(policy); });
}

qsigma_status qsigma_experiment_validate(const qsigma_experiment* experiment) {
  QSIGMA_REQUIRE(experiment != nullptr, "experiment is null");
  return guarded([&] { experiment->spec.validate(); });
}

qsigma_status qsigma_experiment_num_points(const qsigma_experiment* experiment, size_t* out) {
  QSIGMA_REQUIRE(experiment != nullptr && out != nullptr, "null argument");
  return guarded([&] { *out = experiment->spec.grid().size(); });
}

qsigma_status qsigma_experiment_run(const qsigma_experiment* experiment, unsigned threads, qsigma_results** out) {
  QSIGMA_REQUIRE(experiment != nullptr && out != nullptr, "null argument");
  return guarded([&] {
    auto results = std::make_unique<qsigma_results>();
    results->spec = experiment->spec;
    results->records = qsigma::run_experiment(experiment->spec, threads);
    results->aggregates = qsigma::aggregate(results->records);
    for (const auto& r : results->records) results->truncated += r.truncated_episodes;
    *out = results.release();
  });
}

size_t qsigma_results_num_runs(const qsigma_results* results) { return results ? results->records.size() : 0; }

size_t qsigma_results_num_aggregates(const qsigma_results* results) {
  return results ? results->aggregates.size() : 0;
}

uint64_t qsigma_results_truncated_episodes(const qsigma_results* results) { return results ? results->truncated : 0; }

qsigma_status qsigma_results_aggregate(const qsigma_results* results, size_t index, qsigma_aggregate* out) {
  QSIGMA_REQUIRE(results != nullptr && out != nullptr, "null argument");
  QSIGMA_REQUIRE(index < results->aggregates.size(), "aggregate index out of range");
  const auto& a = results->aggregates[index];
  *out = {a.point.alpha,     a.point.sigma,        a.point.sigma_decay,    a.point.lambda,
          a.runs,            a.mean_avg_return,    a.stderr_avg_return,    a.truncated_episodes};
  return QSIGMA_OK;
}

qsigma_status qsigma_results_run_returns(const qsigma_results* results, size_t index, const double** returns,
                                         size_t* episodes) {
  QSIGMA_REQUIRE(results != nullptr && returns != nullptr && episodes != nullptr, "null argument");
  QSIGMA_REQUIRE(index < results->records.size(), "run index out of range");
  *returns = results->records[index].returns.data();
  *episodes = results->records[index].returns.size();
  return QSIGMA_OK;
}

qsigma_status qsigma_results_write_raw_csv(const qsigma_results* results, const char* path) {
  QSIGMA_REQUIRE(results != nullptr && path != nullptr, "null argument");
  return guarded([&] { qsigma::write_text_file(path, qsigma::raw_csv(results->records)); });
}

qsigma_status qsigma_results_write_aggregate_csv(const qsigma_results* results, const char* path) {
  QSIGMA_REQUIRE(results != nullptr && path != nullptr, "null argument");
  return guarded([&] { qsigma::write_text_file(path, qsigma::aggregate_csv(results->aggregates)); });
}

qsigma_status qsigma_results_write_svg(const qsigma_results* results, const char* path, const char* title) {
  QSIGMA_REQUIRE(results != nullptr && path != nullptr, "null argument");
  return guarded([&] {
    const std::string heading = title ? title : results->spec.env + " / " + results->spec.algorithm;
    qsigma::write_text_file(path, qsigma::svg_chart(results->aggregates, heading));
  });
}

qsigma_status qsigma_results_write_manifest(const qsigma_results* results, const char* path) {
  QSIGMA_REQUIRE(results != nullptr && path != nullptr, "null argument");
  return guarded([&] { qsigma::write_text_file(path, qsigma::manifest_json(results->spec, results->truncated)); });
}

void qsigma_results_destroy(qsigma_results* results) { delete results; }

qsigma_status qsigma_rng_create(uint64_t seed, qsigma_rng** out) {
  QSIGMA_REQUIRE(out != nullptr, "out is null");
  return guarded([&] { *out = new qsigma_rng{qsigma::Rng(seed)}; });
}

void qsigma_rng_destroy(qsigma_rng* rng) { delete rng; }

double qsigma_rng_uniform(qsigma_rng* rng) { return rng ? rng->rng.uniform() : 0.0; }

qsigma_status qsigma_env_create(const char* name, qsigma_env** out) {
  QSIGMA_REQUIRE(name != nullptr && out != nullptr, "null argument");
  return guarded([&] { *out = new qsigma_env{qsigma::make_environment(name)}; });
}

void qsigma_env_destroy(qsigma_env* env) { delete env; }

size_t qsigma_env_num_states(const qsigma_env* env) { return env ? env->env->num_states() : 0; }

size_t qsigma_env_num_actions(const qsigma_env* env) { return env ? env->env->num_actions() : 0; }

size_t qsigma_env_reset(const qsigma_env* env, qsigma_rng* rng) {
  if (env == nullptr || rng == nullptr) return 0;
  return env->env->reset(rng->rng);
}

int qsigma_env_is_terminal(const qsigma_env* env, size_t state) {
  if (env == nullptr || state >= env->env->num_states()) return 0;
  return env->env->is_terminal(state) ? 1 : 0;
}

qsigma_status qsigma_env_step(const qsigma_env* env, size_t state, size_t action, qsigma_rng* rng,
                              qsigma_transition* out) {
  QSIGMA_REQUIRE(env != nullptr && rng != nullptr && out != nullptr, "null argument");
  return guarded([&] {
    const qsigma::Transition t = env->env->step(state, action, rng->rng);
    *out = {t.state, t.action, t.reward, t.next_state, t.terminal ? 1 : 0};
  });
}

qsigma_status qsigma_env_q_star(const qsigma_env* env, double gamma, double tol, double* out, size_t capacity) {
  QSIGMA_REQUIRE(env != nullptr && out != nullptr, "null argument");
  QSIGMA_REQUIRE(capacity >= env->env->num_states() * env->env->num_actions(), "output buffer too small");
  return guarded([&] {
    const auto q = qsigma::value_iteration_q_star(env->env->model(), gamma, tol);
    const auto values = q.values();
    std::copy(values.begin(), values.end(), out);
  });
}

}  // extern "C"
