#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qsigma/error.hpp"
#include "qsigma/rng.hpp"

namespace qsigma {

using StateId = std::size_t;
using ActionId = std::size_t;

/// Dense |S| x |A| table of action-value estimates, row-major by state.
class ActionValueTable {
 public:
  ActionValueTable() = default;
  ActionValueTable(std::size_t num_states, std::size_t num_actions, double init = 0.0);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }

  double& operator()(StateId s, ActionId a) { return values_[s * num_actions_ + a]; }
  double operator()(StateId s, ActionId a) const { return values_[s * num_actions_ + a]; }
  /// Bounds-checked read.
  double at(StateId s, ActionId a) const;

  std::span<double> row(StateId s) { return {values_.data() + s * num_actions_, num_actions_}; }
  std::span<const double> row(StateId s) const { return {values_.data() + s * num_actions_, num_actions_}; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const ActionValueTable& other) const {
    return num_states_ == other.num_states_ && num_actions_ == other.num_actions_;
  }

  bool operator==(const ActionValueTable&) const = default;

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::vector<double> values_;
};

/// Eligibility traces, same shape as the value table. Besides the dense values
/// it keeps the list of pairs bumped since the last clear(); every other entry
/// is exactly zero, so sweeps over the list are equivalent to full sweeps.
class EligibilityTable {
 public:
  EligibilityTable() = default;
  EligibilityTable(std::size_t num_states, std::size_t num_actions);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }

  double operator()(StateId s, ActionId a) const { return values_[s * num_actions_ + a]; }
  double at(StateId s, ActionId a) const;

  /// Adds exactly 1 to E(s, a).
  void bump(StateId s, ActionId a);
  /// Multiplies every entry by `factor` (factor >= 0).
  void scale(double factor);
  /// Zeroes every entry.
  void clear();

  std::span<const double> values() const { return values_; }
  /// Flat indices (s * |A| + a) of the possibly non-zero entries.
  std::span<const std::size_t> active() const { return active_; }

  bool same_shape(const ActionValueTable& q) const {
    return num_states_ == q.num_states() && num_actions_ == q.num_actions();
  }

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::vector<double> values_;
  std::vector<char> is_active_;
  std::vector<std::size_t> active_;
};

/// Probability vector over actions. Construction validates normalization.
class PolicyDistribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit PolicyDistribution(std::vector<double> probs);

  std::span<const double> probs() const { return probs_; }
  double operator[](ActionId a) const { return probs_[a]; }
  std::size_t size() const { return probs_.size(); }

 private:
  std::vector<double> probs_;
};

PolicyDistribution greedy_distribution(std::span<const double> q_row);
PolicyDistribution epsilon_greedy_distribution(std::span<const double> q_row, double epsilon);
PolicyDistribution uniform_distribution(std::size_t num_actions);

// Allocation-free kernels behind the functions above; `out` must have the same
// length as `q_row`. Inputs are not validated.
void greedy_into(std::span<const double> q_row, std::span<double> out);
void epsilon_greedy_into(std::span<const double> q_row, double epsilon, std::span<double> out);

/// Draws an action with probability probs[i]. Consumes exactly one uniform draw.
ActionId sample_action(std::span<const double> probs, Rng& rng);
inline ActionId sample_action(const PolicyDistribution& dist, Rng& rng) { return sample_action(dist.probs(), rng); }

/// Sum over a of probs[a] * q_row[a], accumulated in index order.
double expected_action_value(std::span<const double> q_row, std::span<const double> probs);
inline double expected_action_value(std::span<const double> q_row, const PolicyDistribution& dist) {
  return expected_action_value(q_row, dist.probs());
}

enum class TraceKind { kAccumulating, kPiWeighted, kSigmaWeighted };
enum class TargetPolicy { kGreedy, kEpsilonGreedy, kUniform };
enum class StepSizeRule { kConstant, kInverseVisitCount };

std::string_view to_string(TraceKind kind);
std::string_view to_string(TargetPolicy policy);
TraceKind parse_trace_kind(std::string_view name);
TargetPolicy parse_target_policy(std::string_view name);

struct AgentConfig {
  static constexpr std::uint64_t kDefaultMaxSteps = 10'000;

  double alpha = 0.5;
  double gamma = 1.0;
  double epsilon = 0.1;
  double sigma = 1.0;
  double sigma_decay = 1.0;
  double lambda = 0.0;
  TraceKind trace_kind = TraceKind::kSigmaWeighted;
  TargetPolicy target_policy = TargetPolicy::kGreedy;
  StepSizeRule step_size = StepSizeRule::kConstant;
  bool double_learning = false;
  std::uint64_t max_steps_per_episode = kDefaultMaxSteps;

  /// Throws kInvalidArgument naming the first out-of-range field.
  void validate() const;
};

/// Fills `out` with the target policy's distribution for the given row.
void target_distribution_into(const AgentConfig& config, std::span<const double> q_row, std::span<double> out);

}  // namespace qsigma
