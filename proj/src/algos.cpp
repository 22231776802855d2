#include "qsigma/algos.hpp"

#include <cmath>
#include <string>

namespace qsigma {
namespace {

void check_unit(const char* name, double value) {
  if (!(value >= 0.0 && value <= 1.0)) throw_invalid(std::string(name) + " outside [0, 1]");
}

void check_env_shape(const Environment& env, const ActionValueTable& q) {
  if (env.num_states() != q.num_states() || env.num_actions() != q.num_actions()) {
    throw_invalid("value table shape does not match the environment");
  }
}

}  // namespace

TdError td_error_sarsa(double reward, double gamma, double q_next, double q_cur) {
  return {reward + gamma * q_next - q_cur};
}

TdError td_error_expected_sarsa(double reward, double gamma, std::span<const double> q_next_row,
                                std::span<const double> target_probs, double q_cur) {
  return {reward + gamma * expected_action_value(q_next_row, target_probs) - q_cur};
}

TdError td_error_q_sigma(double reward, double gamma, double sigma, double q_next_sa,
                         std::span<const double> q_next_row, std::span<const double> target_probs, double q_cur) {
  check_unit("sigma", sigma);
  const double expectation = expected_action_value(q_next_row, target_probs);
  return {reward + gamma * (sigma * q_next_sa + (1.0 - sigma) * expectation) - q_cur};
}

void decay_traces_accumulating(EligibilityTable& traces, double gamma, double lambda) {
  traces.scale(gamma * lambda);
}

void decay_traces_pi_weighted(EligibilityTable& traces, double gamma, double lambda, double pi_next) {
  check_unit("pi_next", pi_next);
  traces.scale(gamma * lambda * pi_next);
}

void decay_traces_sigma(EligibilityTable& traces, double gamma, double lambda, double sigma, double pi_next) {
  check_unit("sigma", sigma);
  check_unit("pi_next", pi_next);
  traces.scale(gamma * lambda * (sigma + (1.0 - sigma) * pi_next));
}

void bump_trace(EligibilityTable& traces, StateId s, ActionId a) { traces.bump(s, a); }

void apply_td_update_all(ActionValueTable& q, const EligibilityTable& traces, double alpha, TdError delta) {
  if (!traces.same_shape(q)) throw_invalid("trace and value table shapes differ");
  const double step = alpha * delta.delta;
  auto values = q.values();
  const auto e = traces.values();
  for (std::size_t i : traces.active()) values[i] += step * e[i];
}

TdError td_error_double_q_sigma(double reward, double gamma, double sigma, TableSide side, const DoubleTables& tables,
                                ActionId next_action, StateId next_state, std::span<const double> target_probs,
                                double q_cur) {
  const auto row = tables.evaluator(side).row(next_state);
  return td_error_q_sigma(reward, gamma, sigma, row[next_action], row, target_probs, q_cur);
}

double decay_sigma(const SigmaSchedule& schedule, std::uint64_t episode_index) {
  return schedule.initial_sigma * std::pow(schedule.decay, static_cast<double>(episode_index));
}

// ---------------------------------------------------------------------------

QSigmaLambdaAgent::QSigmaLambdaAgent(ActionValueTable initial, AgentConfig config)
    : config_(config),
      q_(std::move(initial)),
      traces_(q_.num_states(), q_.num_actions()),
      visits_(q_.values().size(), 0),
      behaviour_(q_.num_actions()),
      target_(q_.num_actions()) {
  config_.validate();
}

double QSigmaLambdaAgent::step_size(StateId s, ActionId a) {
  if (config_.step_size == StepSizeRule::kConstant) return config_.alpha;
  const auto n = ++visits_[s * q_.num_actions() + a];
  return 1.0 / static_cast<double>(n);
}

void QSigmaLambdaAgent::decay(double sigma, double pi_next) {
  switch (config_.trace_kind) {
    case TraceKind::kAccumulating:
      decay_traces_accumulating(traces_, config_.gamma, config_.lambda);
      return;
    case TraceKind::kPiWeighted:
      decay_traces_pi_weighted(traces_, config_.gamma, config_.lambda, pi_next);
      return;
    case TraceKind::kSigmaWeighted:
      decay_traces_sigma(traces_, config_.gamma, config_.lambda, sigma, pi_next);
      return;
  }
}

EpisodeResult QSigmaLambdaAgent::run_episode(const Environment& env, double sigma, Rng& rng) {
  check_unit("sigma", sigma);
  check_env_shape(env, q_);
  traces_.clear();

  EpisodeResult result;
  StateId s = env.reset(rng);
  epsilon_greedy_into(q_.row(s), config_.epsilon, behaviour_);
  ActionId a = sample_action(behaviour_, rng);
  for (;;) {
    const Transition t = env.step(s, a, rng);
    result.episode_return += t.reward;
    ++result.steps;

    ActionId next_a = 0;
    TdError delta;
    if (t.terminal) {
      delta = td_error_terminal(t.reward, q_(s, a));
    } else {
      const auto next_row = q_.row(t.next_state);
      epsilon_greedy_into(next_row, config_.epsilon, behaviour_);
      next_a = sample_action(behaviour_, rng);
      target_distribution_into(config_, next_row, target_);
      delta = td_error_q_sigma(t.reward, config_.gamma, sigma, next_row[next_a], next_row, target_, q_(s, a));
    }

    bump_trace(traces_, s, a);
    apply_td_update_all(q_, traces_, step_size(s, a), delta);
    if (t.terminal) break;

    // pi(A'|S') from the table as it stands after this step's update.
    target_distribution_into(config_, q_.row(t.next_state), target_);
    decay(sigma, target_[next_a]);

    s = t.next_state;
    a = next_a;
    if (result.steps >= config_.max_steps_per_episode) {
      result.truncated = true;
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

DoubleQSigmaAgent::DoubleQSigmaAgent(DoubleTables initial, AgentConfig config)
    : config_(config),
      tables_(std::move(initial)),
      visits_a_(tables_.q_a.values().size(), 0),
      visits_b_(tables_.q_a.values().size(), 0),
      sum_(tables_.q_a.num_actions()),
      behaviour_(tables_.q_a.num_actions()),
      target_(tables_.q_a.num_actions()) {
  config_.validate();
  if (!tables_.q_a.same_shape(tables_.q_b)) throw_invalid("double tables must have equal shapes");
}

void DoubleQSigmaAgent::behaviour_into(StateId s) {
  const auto row_a = tables_.q_a.row(s);
  const auto row_b = tables_.q_b.row(s);
  for (std::size_t a = 0; a < behaviour_.size(); ++a) sum_[a] = row_a[a] + row_b[a];
  epsilon_greedy_into(sum_, config_.epsilon, behaviour_);
}

EpisodeResult DoubleQSigmaAgent::run_episode(const Environment& env, double sigma, Rng& rng) {
  check_unit("sigma", sigma);
  check_env_shape(env, tables_.q_a);

  EpisodeResult result;
  StateId s = env.reset(rng);
  behaviour_into(s);
  ActionId a = sample_action(behaviour_, rng);
  for (;;) {
    const Transition t = env.step(s, a, rng);
    result.episode_return += t.reward;
    ++result.steps;

    ActionId next_a = 0;
    if (!t.terminal) {
      behaviour_into(t.next_state);
      next_a = sample_action(behaviour_, rng);
    }

    const double coin = rng.uniform();
    TableSide side = coin < 0.5 ? TableSide::kA : TableSide::kB;
    if (alternate_) {
      side = next_is_a_ ? TableSide::kA : TableSide::kB;
      next_is_a_ = !next_is_a_;
    }

    ActionValueTable& updated = tables_.updated(side);
    TdError delta;
    if (t.terminal) {
      delta = td_error_terminal(t.reward, updated(s, a));
    } else {
      target_distribution_into(config_, updated.row(t.next_state), target_);
      delta = td_error_double_q_sigma(t.reward, config_.gamma, sigma, side, tables_, next_a, t.next_state, target_,
                                      updated(s, a));
    }

    double alpha = config_.alpha;
    if (config_.step_size == StepSizeRule::kInverseVisitCount) {
      auto& visits = side == TableSide::kA ? visits_a_ : visits_b_;
      alpha = 1.0 / static_cast<double>(++visits[s * updated.num_actions() + a]);
    }
    updated(s, a) += alpha * delta.delta;

    if (t.terminal) break;
    s = t.next_state;
    a = next_a;
    if (result.steps >= config_.max_steps_per_episode) {
      result.truncated = true;
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

EpisodeResult run_episode_q_sigma_lambda(ActionValueTable& q, const Environment& env, const AgentConfig& config,
                                         double sigma, Rng& rng) {
  QSigmaLambdaAgent agent(std::move(q), config);
  const EpisodeResult result = agent.run_episode(env, sigma, rng);
  q = std::move(agent).release_q();
  return result;
}

EpisodeResult run_episode_double_q_sigma(DoubleTables& tables, const Environment& env, const AgentConfig& config,
                                         double sigma, Rng& rng) {
  DoubleQSigmaAgent agent(std::move(tables), config);
  const EpisodeResult result = agent.run_episode(env, sigma, rng);
  tables = std::move(agent).release_tables();
  return result;
}

AlgorithmSpec resolve_algorithm(std::string_view name) {
  if (name == "qsigma") return {};
  if (name == "double-qsigma") return {.double_learning = true};
  if (name == "sarsa") return {.pinned_sigma = 1.0};
  if (name == "qlearning") return {.pinned_sigma = 0.0, .pinned_target = TargetPolicy::kGreedy};
  if (name == "expected-sarsa") return {.pinned_sigma = 0.0, .pinned_target = TargetPolicy::kEpsilonGreedy};
  throw Error(ErrorCode::kConfiguration,
              "unknown algorithm '" + std::string(name) +
                  "' (expected qsigma, double-qsigma, sarsa, qlearning, expected-sarsa)");
}

}  // namespace qsigma
