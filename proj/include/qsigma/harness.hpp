#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qsigma/algos.hpp"
#include "qsigma/rng.hpp"
#include "qsigma/tdcore.hpp"

namespace qsigma {

/// One entry of the sigma grid: a fixed value, or a schedule starting at
/// `value` that decays by the experiment's sigma_decay after every episode.
struct SigmaSetting {
  double value = 1.0;
  bool dynamic = false;

  static SigmaSetting fixed(double v) { return {v, false}; }
  static SigmaSetting decaying(double initial = 1.0) { return {initial, true}; }

  bool operator==(const SigmaSetting&) const = default;
};

/// Coordinates of one cell of the sweep. Fixed-sigma points carry decay 1.
struct ConfigPoint {
  double alpha = 0.0;
  double sigma = 0.0;
  double sigma_decay = 1.0;
  double lambda = 0.0;

  auto operator<=>(const ConfigPoint&) const = default;
  bool operator==(const ConfigPoint&) const = default;
};

struct ExperimentSpec {
  std::string env = "stochastic-windy";
  std::string algorithm = "qsigma";
  std::vector<double> alphas = default_alpha_grid();
  std::vector<SigmaSetting> sigmas = {SigmaSetting::fixed(0.0), SigmaSetting::fixed(0.5), SigmaSetting::fixed(1.0),
                                      SigmaSetting::decaying()};
  double sigma_decay = 0.99;
  std::vector<double> lambdas = {0.0, 0.7};
  std::uint64_t episodes = 100;
  std::uint64_t runs = 200;
  double epsilon = 0.1;
  double gamma = 1.0;
  std::uint64_t master_seed = 0;
  std::uint64_t max_steps_per_episode = AgentConfig::kDefaultMaxSteps;
  TraceKind trace_kind = TraceKind::kSigmaWeighted;
  TargetPolicy target_policy = TargetPolicy::kGreedy;

  /// 0.1, 0.2, ..., 1.0
  static std::vector<double> default_alpha_grid();

  /// Throws kConfiguration for unknown names or alias conflicts and
  /// kInvalidArgument for empty grids or out-of-range values.
  void validate() const;

  /// Sorted, de-duplicated grid points.
  std::vector<ConfigPoint> grid() const;

  /// Agent configuration for one grid point, with aliases applied.
  AgentConfig agent_config(const ConfigPoint& point) const;
};

struct RunRecord {
  ConfigPoint point;
  std::uint64_t run_index = 0;
  std::vector<double> returns;          // one per episode
  std::uint64_t truncated_episodes = 0;

  bool operator==(const RunRecord&) const = default;
};

struct AggregateRecord {
  ConfigPoint point;
  double mean_avg_return = 0.0;
  double stderr_avg_return = 0.0;
  std::uint64_t runs = 0;
  std::uint64_t truncated_episodes = 0;
};

/// Stream for one run of one grid point. Seeds depend only on the point's
/// coordinates and the run index, never on grid position.
Rng run_stream(std::uint64_t master_seed, const ConfigPoint& point, std::uint64_t run_index);

/// Runs one learner for spec.episodes episodes at `point`.
RunRecord run_single(const ExperimentSpec& spec, const ConfigPoint& point, std::uint64_t run_index);

/// Every grid point times every run, spread over `threads` workers (0 means
/// hardware concurrency). Records come back sorted by (point, run_index), so
/// the output does not depend on the thread count.
std::vector<RunRecord> run_experiment(const ExperimentSpec& spec, unsigned threads = 1);

/// Per point: mean over episodes, then mean and standard error over runs.
/// Standard error of a single run is reported as 0. Throws kInvalidArgument if
/// a point mixes episode counts.
std::vector<AggregateRecord> aggregate(std::span<const RunRecord> records);

}  // namespace qsigma
