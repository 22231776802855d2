#include "qsigma/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "qsigma/envs.hpp"

namespace qsigma {

std::vector<double> ExperimentSpec::default_alpha_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(k / 10.0);
  return grid;
}

void ExperimentSpec::validate() const {
  make_environment(env);
  const AlgorithmSpec algo = resolve_algorithm(algorithm);
  if (alphas.empty()) throw_invalid("alpha grid is empty");
  if (sigmas.empty()) throw_invalid("sigma grid is empty");
  if (lambdas.empty()) throw_invalid("lambda grid is empty");
  if (episodes == 0) throw_invalid("episodes must be >= 1");
  if (runs == 0) throw_invalid("runs must be >= 1");
  if (algo.pinned_sigma) {
    for (const auto& s : sigmas) {
      if (s.dynamic || s.value != *algo.pinned_sigma) {
        throw Error(ErrorCode::kConfiguration,
                    "algorithm '" + algorithm + "' pins sigma to " + (*algo.pinned_sigma == 0.0 ? "0" : "1"));
      }
    }
  }
  for (const auto& point : grid()) agent_config(point).validate();
}

std::vector<ConfigPoint> ExperimentSpec::grid() const {
  std::vector<ConfigPoint> points;
  for (double alpha : alphas) {
    for (const auto& s : sigmas) {
      for (double lambda : lambdas) {
        points.push_back({alpha, s.value, s.dynamic ? sigma_decay : 1.0, lambda});
      }
    }
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return points;
}

AgentConfig ExperimentSpec::agent_config(const ConfigPoint& point) const {
  const AlgorithmSpec algo = resolve_algorithm(algorithm);
  AgentConfig config;
  config.alpha = point.alpha;
  config.gamma = gamma;
  config.epsilon = epsilon;
  config.sigma = point.sigma;
  config.sigma_decay = point.sigma_decay;
  config.lambda = point.lambda;
  config.trace_kind = trace_kind;
  config.target_policy = algo.pinned_target.value_or(target_policy);
  config.double_learning = algo.double_learning;
  config.max_steps_per_episode = max_steps_per_episode;
  return config;
}

Rng run_stream(std::uint64_t master_seed, const ConfigPoint& point, std::uint64_t run_index) {
  return derive_substream(master_seed, {label_of(point.alpha), label_of(point.sigma), label_of(point.sigma_decay),
                                        label_of(point.lambda), run_index});
}

RunRecord run_single(const ExperimentSpec& spec, const ConfigPoint& point, std::uint64_t run_index) {
  const auto env = make_environment(spec.env);
  const AgentConfig config = spec.agent_config(point);
  const SigmaSchedule schedule{point.sigma, point.sigma_decay};
  Rng rng = run_stream(spec.master_seed, point, run_index);

  RunRecord record{point, run_index, {}, 0};
  record.returns.reserve(spec.episodes);
  auto run_all = [&](auto& agent) {
    for (std::uint64_t e = 0; e < spec.episodes; ++e) {
      const EpisodeResult r = agent.run_episode(*env, decay_sigma(schedule, e), rng);
      record.returns.push_back(r.episode_return);
      record.truncated_episodes += r.truncated;
    }
  };
  if (config.double_learning) {
    DoubleQSigmaAgent agent(*env, config);
    run_all(agent);
  } else {
    QSigmaLambdaAgent agent(*env, config);
    run_all(agent);
  }
  return record;
}

std::vector<RunRecord> run_experiment(const ExperimentSpec& spec, unsigned threads) {
  spec.validate();
  const std::vector<ConfigPoint> points = spec.grid();
  const std::size_t total = points.size() * spec.runs;
  std::vector<RunRecord> records(total);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t task = next++; task < total; task = next++) {
      try {
        records[task] = run_single(spec, points[task / spec.runs], task % spec.runs);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

std::vector<AggregateRecord> aggregate(std::span<const RunRecord> records) {
  std::map<ConfigPoint, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) groups[r.point].push_back(&r);

  std::vector<AggregateRecord> out;
  for (const auto& [point, runs] : groups) {
    const std::size_t episodes = runs.front()->returns.size();
    if (episodes == 0) throw_invalid("run record has no episodes");
    std::vector<double> averages;
    AggregateRecord agg{point, 0.0, 0.0, runs.size(), 0};
    for (const RunRecord* r : runs) {
      if (r->returns.size() != episodes) throw_invalid("runs of one grid point have different episode counts");
      double sum = 0.0;
      for (double ret : r->returns) sum += ret;
      averages.push_back(sum / static_cast<double>(episodes));
      agg.truncated_episodes += r->truncated_episodes;
    }
    double sum = 0.0;
    for (double a : averages) sum += a;
    agg.mean_avg_return = sum / static_cast<double>(averages.size());
    if (averages.size() > 1) {
      double ss = 0.0;
      for (double a : averages) ss += (a - agg.mean_avg_return) * (a - agg.mean_avg_return);
      const double n = static_cast<double>(averages.size());
      agg.stderr_avg_return = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    out.push_back(agg);
  }
  return out;
}

}  // namespace qsigma
