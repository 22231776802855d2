#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qsigma/envs.hpp"
#include "qsigma/tdcore.hpp"

namespace qsigma {

struct TdError {
  double delta = 0.0;
};

// ---------------------------------------------------------------------------
// TD errors. Callers handle terminal successors with td_error_terminal, which
// treats every next-state value term as 0.

TdError td_error_sarsa(double reward, double gamma, double q_next, double q_cur);
TdError td_error_expected_sarsa(double reward, double gamma, std::span<const double> q_next_row,
                                std::span<const double> target_probs, double q_cur);
/// reward + gamma * (sigma * q_next_sa + (1 - sigma) * E_pi[q_next_row]) - q_cur
TdError td_error_q_sigma(double reward, double gamma, double sigma, double q_next_sa,
                         std::span<const double> q_next_row, std::span<const double> target_probs, double q_cur);
inline TdError td_error_terminal(double reward, double q_cur) { return {reward - q_cur}; }

// ---------------------------------------------------------------------------
// Eligibility traces

/// E <- gamma * lambda * E
void decay_traces_accumulating(EligibilityTable& traces, double gamma, double lambda);
/// E <- gamma * lambda * pi(A'|S') * E
void decay_traces_pi_weighted(EligibilityTable& traces, double gamma, double lambda, double pi_next);
/// E <- gamma * lambda * (sigma + (1 - sigma) * pi(A'|S')) * E
///
/// sigma = 1 gives the accumulating decay and sigma = 0 the pi-weighted one,
/// bit for bit.
void decay_traces_sigma(EligibilityTable& traces, double gamma, double lambda, double sigma, double pi_next);
void bump_trace(EligibilityTable& traces, StateId s, ActionId a);
/// Q(s,a) += alpha * delta * E(s,a) for every pair.
void apply_td_update_all(ActionValueTable& q, const EligibilityTable& traces, double alpha, TdError delta);

// ---------------------------------------------------------------------------
// Double learning

enum class TableSide { kA, kB };

struct DoubleTables {
  ActionValueTable q_a;
  ActionValueTable q_b;

  DoubleTables() = default;
  DoubleTables(std::size_t num_states, std::size_t num_actions) : q_a(num_states, num_actions), q_b(num_states, num_actions) {}

  ActionValueTable& updated(TableSide side) { return side == TableSide::kA ? q_a : q_b; }
  const ActionValueTable& updated(TableSide side) const { return side == TableSide::kA ? q_a : q_b; }
  const ActionValueTable& evaluator(TableSide side) const { return side == TableSide::kA ? q_b : q_a; }
};

/// Q(sigma) error for the table on `side`, bootstrapping from the other table.
/// `target_probs` must come from the updated table's row at `next_state`.
TdError td_error_double_q_sigma(double reward, double gamma, double sigma, TableSide side, const DoubleTables& tables,
                                ActionId next_action, StateId next_state, std::span<const double> target_probs,
                                double q_cur);

// ---------------------------------------------------------------------------
// Sigma schedule

struct SigmaSchedule {
  double initial_sigma = 1.0;
  double decay = 1.0;
};

/// initial_sigma * decay^episode_index
double decay_sigma(const SigmaSchedule& schedule, std::uint64_t episode_index);

// ---------------------------------------------------------------------------
// Episode loops

struct EpisodeResult {
  double episode_return = 0.0;  // undiscounted
  std::uint64_t steps = 0;
  bool truncated = false;       // hit max_steps_per_episode
};

/// Tabular Q(sigma, lambda) learner. The value table and visit counts persist
/// across episodes; traces are cleared at the start of every episode.
class QSigmaLambdaAgent {
 public:
  QSigmaLambdaAgent(ActionValueTable initial, AgentConfig config);
  QSigmaLambdaAgent(const Environment& env, AgentConfig config)
      : QSigmaLambdaAgent(ActionValueTable(env.num_states(), env.num_actions()), config) {}

  /// One episode with the given sigma (the config's sigma is not consulted).
  EpisodeResult run_episode(const Environment& env, double sigma, Rng& rng);

  const ActionValueTable& q() const { return q_; }
  ActionValueTable release_q() && { return std::move(q_); }
  const EligibilityTable& traces() const { return traces_; }
  const AgentConfig& config() const { return config_; }

 private:
  double step_size(StateId s, ActionId a);
  void decay(double sigma, double pi_next);

  AgentConfig config_;
  ActionValueTable q_;
  EligibilityTable traces_;
  std::vector<std::uint64_t> visits_;
  std::vector<double> behaviour_;
  std::vector<double> target_;
};

/// Double Q(sigma): one-step updates of one of two tables per step, chosen by a
/// fair coin; behaviour is epsilon-greedy on Q_A + Q_B.
class DoubleQSigmaAgent {
 public:
  DoubleQSigmaAgent(DoubleTables initial, AgentConfig config);
  DoubleQSigmaAgent(const Environment& env, AgentConfig config)
      : DoubleQSigmaAgent(DoubleTables(env.num_states(), env.num_actions()), config) {}

  EpisodeResult run_episode(const Environment& env, double sigma, Rng& rng);

  const DoubleTables& tables() const { return tables_; }
  DoubleTables release_tables() && { return std::move(tables_); }
  const AgentConfig& config() const { return config_; }

  /// Replaces the coin flip with strict A, B, A, ... alternation. Still
  /// consumes one draw per step so trajectories stay aligned.
  void force_alternating_coin(bool on) { alternate_ = on; }

 private:
  void behaviour_into(StateId s);

  AgentConfig config_;
  DoubleTables tables_;
  std::vector<std::uint64_t> visits_a_;
  std::vector<std::uint64_t> visits_b_;
  std::vector<double> sum_;
  std::vector<double> behaviour_;
  std::vector<double> target_;
  bool alternate_ = false;
  bool next_is_a_ = true;
};

/// Single-episode forms of the two loops. Visit counts do not carry over
/// between calls; use the agent classes for multi-episode learning.
EpisodeResult run_episode_q_sigma_lambda(ActionValueTable& q, const Environment& env, const AgentConfig& config,
                                         double sigma, Rng& rng);
EpisodeResult run_episode_double_q_sigma(DoubleTables& tables, const Environment& env, const AgentConfig& config,
                                         double sigma, Rng& rng);

// ---------------------------------------------------------------------------
// Algorithm names

struct AlgorithmSpec {
  bool double_learning = false;
  std::optional<double> pinned_sigma;       // set by the aliases
  std::optional<TargetPolicy> pinned_target;
};

/// "qsigma", "double-qsigma", or the aliases "sarsa" (sigma 1), "qlearning"
/// (sigma 0, greedy target) and "expected-sarsa" (sigma 0, epsilon-greedy
/// target). Unknown names throw kConfiguration.
AlgorithmSpec resolve_algorithm(std::string_view name);

}  // namespace qsigma
