#include "qsigma/tdcore.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qsigma {
namespace {

void check_row(std::span<const double> q_row) {
  if (q_row.empty()) throw_invalid("action-value row is empty");
  for (double v : q_row) {
    if (!std::isfinite(v)) throw_invalid("action-value row contains a non-finite entry");
  }
}

void check_shape(std::size_t num_states, std::size_t num_actions) {
  if (num_states == 0 || num_actions == 0) throw_invalid("table dimensions must be positive");
}

void check_range(const char* name, double value, double lo, double hi, bool lo_open = false) {
  const bool below = lo_open ? !(value > lo) : !(value >= lo);
  if (below || !(value <= hi)) {
    std::ostringstream os;
    os << name << " = " << value << " is outside " << (lo_open ? "(" : "[") << lo << ", " << hi << "]";
    throw_invalid(os.str());
  }
}

}  // namespace

ActionValueTable::ActionValueTable(std::size_t num_states, std::size_t num_actions, double init)
    : num_states_(num_states), num_actions_(num_actions) {
  check_shape(num_states, num_actions);
  values_.assign(num_states * num_actions, init);
}

double ActionValueTable::at(StateId s, ActionId a) const {
  if (s >= num_states_ || a >= num_actions_) throw_invalid("state-action index out of range");
  return (*this)(s, a);
}

EligibilityTable::EligibilityTable(std::size_t num_states, std::size_t num_actions)
    : num_states_(num_states), num_actions_(num_actions) {
  check_shape(num_states, num_actions);
  values_.assign(num_states * num_actions, 0.0);
  is_active_.assign(num_states * num_actions, 0);
}

double EligibilityTable::at(StateId s, ActionId a) const {
  if (s >= num_states_ || a >= num_actions_) throw_invalid("state-action index out of range");
  return (*this)(s, a);
}

void EligibilityTable::bump(StateId s, ActionId a) {
  if (s >= num_states_ || a >= num_actions_) throw_invalid("trace index out of range");
  const std::size_t i = s * num_actions_ + a;
  values_[i] += 1.0;
  if (!is_active_[i]) {
    is_active_[i] = 1;
    active_.push_back(i);
  }
}

void EligibilityTable::scale(double factor) {
  if (factor == 0.0) {
    clear();
    return;
  }
  for (std::size_t i : active_) values_[i] *= factor;
}

void EligibilityTable::clear() {
  for (std::size_t i : active_) {
    values_[i] = 0.0;
    is_active_[i] = 0;
  }
  active_.clear();
}

PolicyDistribution::PolicyDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw_invalid("policy distribution is empty");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) throw_invalid("policy probability outside [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) throw_invalid("policy probabilities do not sum to 1");
}

void greedy_into(std::span<const double> q_row, std::span<double> out) {
  const double best = *std::max_element(q_row.begin(), q_row.end());
  std::size_t ties = 0;
  for (double v : q_row) ties += (v == best);
  const double share = 1.0 / static_cast<double>(ties);
  for (std::size_t a = 0; a < q_row.size(); ++a) out[a] = q_row[a] == best ? share : 0.0;
}

void epsilon_greedy_into(std::span<const double> q_row, double epsilon, std::span<double> out) {
  greedy_into(q_row, out);
  const double explore = epsilon / static_cast<double>(q_row.size());
  for (double& p : out) p = (1.0 - epsilon) * p + explore;
}

PolicyDistribution greedy_distribution(std::span<const double> q_row) {
  check_row(q_row);
  std::vector<double> probs(q_row.size());
  greedy_into(q_row, probs);
  return PolicyDistribution(std::move(probs));
}

PolicyDistribution epsilon_greedy_distribution(std::span<const double> q_row, double epsilon) {
  check_range("epsilon", epsilon, 0.0, 1.0);
  check_row(q_row);
  std::vector<double> probs(q_row.size());
  epsilon_greedy_into(q_row, epsilon, probs);
  return PolicyDistribution(std::move(probs));
}

PolicyDistribution uniform_distribution(std::size_t num_actions) {
  if (num_actions == 0) throw_invalid("uniform distribution needs at least one action");
  return PolicyDistribution(std::vector<double>(num_actions, 1.0 / static_cast<double>(num_actions)));
}

ActionId sample_action(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  ActionId last_positive = 0;
  for (ActionId a = 0; a < probs.size(); ++a) {
    if (probs[a] <= 0.0) continue;
    cumulative += probs[a];
    last_positive = a;
    if (u < cumulative) return a;
  }
  // Rounding left the cumulative sum just below u.
  return last_positive;
}

double expected_action_value(std::span<const double> q_row, std::span<const double> probs) {
  if (q_row.size() != probs.size()) throw_invalid("row and distribution lengths differ");
  double sum = 0.0;
  for (std::size_t a = 0; a < q_row.size(); ++a) sum += probs[a] * q_row[a];
  return sum;
}

std::string_view to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::kAccumulating: return "accumulating";
    case TraceKind::kPiWeighted: return "pi_weighted";
    case TraceKind::kSigmaWeighted: return "sigma_weighted";
  }
  return "?";
}

std::string_view to_string(TargetPolicy policy) {
  switch (policy) {
    case TargetPolicy::kGreedy: return "greedy";
    case TargetPolicy::kEpsilonGreedy: return "epsilon_greedy";
    case TargetPolicy::kUniform: return "uniform";
  }
  return "?";
}

TraceKind parse_trace_kind(std::string_view name) {
  for (auto kind : {TraceKind::kAccumulating, TraceKind::kPiWeighted, TraceKind::kSigmaWeighted}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::kConfiguration, "unknown trace kind '" + std::string(name) + "'");
}

TargetPolicy parse_target_policy(std::string_view name) {
  for (auto policy : {TargetPolicy::kGreedy, TargetPolicy::kEpsilonGreedy, TargetPolicy::kUniform}) {
    if (to_string(policy) == name) return policy;
  }
  throw Error(ErrorCode::kConfiguration, "unknown target policy '" + std::string(name) + "'");
}

void AgentConfig::validate() const {
  check_range("alpha", alpha, 0.0, 1.0, /*lo_open=*/true);
  check_range("gamma", gamma, 0.0, 1.0);
  check_range("epsilon", epsilon, 0.0, 1.0);
  check_range("sigma", sigma, 0.0, 1.0);
  check_range("sigma_decay", sigma_decay, 0.0, 1.0, /*lo_open=*/true);
  check_range("lambda", lambda, 0.0, 1.0);
  if (max_steps_per_episode == 0) throw_invalid("max_steps_per_episode must be positive");
}

void target_distribution_into(const AgentConfig& config, std::span<const double> q_row, std::span<double> out) {
  switch (config.target_policy) {
    case TargetPolicy::kGreedy:
      greedy_into(q_row, out);
      return;
    case TargetPolicy::kEpsilonGreedy:
      epsilon_greedy_into(q_row, config.epsilon, out);
      return;
    case TargetPolicy::kUniform:
      std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
      return;
  }
}

}  // namespace qsigma
