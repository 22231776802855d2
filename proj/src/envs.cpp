#include "qsigma/envs.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

namespace qsigma {
namespace {

constexpr std::array<Cell, 4> kActionOffsets = {{{0, 1}, {0, -1}, {-1, 0}, {1, 0}}};
constexpr std::array<Cell, 8> kNeighbourOffsets = {
    {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

void check_step(const EnvDescriptor& d, StateId s, ActionId a) {
  if (s >= d.num_states) throw_invalid("state id out of range");
  if (a >= d.num_actions) throw_invalid("action id out of range");
  if (d.is_terminal(s)) throw Error(ErrorCode::kContractViolation, "step called from a terminal state");
}

Transition finish(const GridSpec& spec, StateId s, ActionId a, Cell next) {
  const Cell clipped = spec.clip(next);
  return {s, a, -1.0, spec.encode(clipped), clipped == spec.goal};
}

EnvDescriptor grid_descriptor(const GridSpec& spec) {
  EnvDescriptor d;
  d.num_states = static_cast<std::size_t>(spec.width * spec.height);
  d.num_actions = 4;
  d.start_state = spec.encode(spec.start);
  d.terminal.assign(d.num_states, 0);
  d.terminal[spec.encode(spec.goal)] = 1;
  return d;
}

}  // namespace

TabularModel::TabularModel(EnvDescriptor descriptor)
    : descriptor_(std::move(descriptor)), outcomes_(descriptor_.num_states * descriptor_.num_actions) {}

void TabularModel::add(StateId s, ActionId a, double probability, StateId next_state, double reward) {
  auto& list = outcomes_[s * descriptor_.num_actions + a];
  for (auto& o : list) {
    if (o.next_state == next_state) {
      // Merge by probability-weighted expected reward.
      const double total = o.probability + probability;
      o.reward = (o.reward * o.probability + reward * probability) / total;
      o.probability = total;
      return;
    }
  }
  list.push_back({probability, next_state, reward});
}

// ---------------------------------------------------------------------------

void GridSpec::validate() const {
  if (width <= 0 || height <= 0) throw_invalid("grid dimensions must be positive");
  if (wind.size() != static_cast<std::size_t>(width)) throw_invalid("wind vector length must equal grid width");
  if (std::any_of(wind.begin(), wind.end(), [](int w) { return w < 0; })) throw_invalid("wind must be >= 0");
  if (clip(start) != start || clip(goal) != goal) throw_invalid("start and goal must lie inside the grid");
  if (start == goal) throw_invalid("start and goal must differ");
  if (!(slip_prob >= 0.0 && slip_prob <= 1.0)) throw_invalid("slip_prob outside [0, 1]");
}

Cell GridSpec::clip(Cell c) const {
  return {std::clamp(c.col, 0, width - 1), std::clamp(c.row, 0, height - 1)};
}

Transition step_windy(const GridSpec& spec, StateId s, ActionId a) {
  if (a >= kActionOffsets.size()) throw_invalid("grid action must be up, down, left or right");
  if (s >= static_cast<StateId>(spec.width * spec.height)) throw_invalid("state id out of range");
  const Cell here = spec.decode(s);
  if (here == spec.goal) throw Error(ErrorCode::kContractViolation, "step called from the goal state");
  const Cell move = kActionOffsets[a];
  return finish(spec, s, a, {here.col + move.col, here.row + move.row + spec.wind[here.col]});
}

Transition step_stochastic_windy(const GridSpec& spec, StateId s, ActionId a, Rng& rng) {
  if (rng.uniform() >= spec.slip_prob) return step_windy(spec, s, a);
  if (a >= kActionOffsets.size()) throw_invalid("grid action must be up, down, left or right");
  if (s >= static_cast<StateId>(spec.width * spec.height)) throw_invalid("state id out of range");
  const Cell here = spec.decode(s);
  if (here == spec.goal) throw Error(ErrorCode::kContractViolation, "step called from the goal state");
  const Cell offset = kNeighbourOffsets[rng.below(kNeighbourOffsets.size())];
  return finish(spec, s, a, {here.col + offset.col, here.row + offset.row});
}

WindyGridworld::WindyGridworld(GridSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  descriptor_ = grid_descriptor(spec_);
}

Transition WindyGridworld::step(StateId s, ActionId a, Rng& rng) const {
  return spec_.slip_prob > 0.0 ? step_stochastic_windy(spec_, s, a, rng) : step_windy(spec_, s, a);
}

TabularModel WindyGridworld::model() const {
  TabularModel model(descriptor_);
  for (StateId s = 0; s < descriptor_.num_states; ++s) {
    if (descriptor_.is_terminal(s)) continue;
    const Cell here = spec_.decode(s);
    for (ActionId a = 0; a < 4; ++a) {
      const Transition t = step_windy(spec_, s, a);
      if (spec_.slip_prob < 1.0) model.add(s, a, 1.0 - spec_.slip_prob, t.next_state, -1.0);
      if (spec_.slip_prob > 0.0) {
        for (const Cell& off : kNeighbourOffsets) {
          const Cell n = spec_.clip({here.col + off.col, here.row + off.row});
          model.add(s, a, spec_.slip_prob / 8.0, spec_.encode(n), -1.0);
        }
      }
    }
  }
  return model;
}

// ---------------------------------------------------------------------------

ChainMdp::ChainMdp(std::size_t length) : length_(length) {
  if (length < 2) throw_invalid("chain length must be at least 2");
  descriptor_.num_states = length;
  descriptor_.num_actions = 2;
  descriptor_.start_state = 0;
  descriptor_.terminal.assign(length, 0);
  descriptor_.terminal[length - 1] = 1;
}

Transition ChainMdp::step(StateId s, ActionId a, Rng& /*rng*/) const {
  check_step(descriptor_, s, a);
  const StateId next = a == kAdvance ? s + 1 : s;
  return {s, a, -1.0, next, descriptor_.is_terminal(next)};
}

TabularModel ChainMdp::model() const {
  TabularModel model(descriptor_);
  for (StateId s = 0; s + 1 < length_; ++s) {
    model.add(s, kAdvance, 1.0, s + 1, -1.0);
    model.add(s, kStay, 1.0, s, -1.0);
  }
  return model;
}

// ---------------------------------------------------------------------------

MaxBiasMdp::MaxBiasMdp(std::size_t noisy_actions, double noise_sd) : noise_sd_(noise_sd) {
  if (noisy_actions < 2) throw_invalid("max-bias MDP needs at least two actions");
  if (!(noise_sd >= 0.0)) throw_invalid("noise_sd must be >= 0");
  descriptor_.num_states = 3;
  descriptor_.num_actions = noisy_actions;
  descriptor_.start_state = kStart;
  descriptor_.terminal = {0, 0, 1};
}

Transition MaxBiasMdp::step(StateId s, ActionId a, Rng& rng) const {
  check_step(descriptor_, s, a);
  if (s == kStart) {
    return a == 0 ? Transition{s, a, 0.0, kBranch, false} : Transition{s, a, 0.0, kEnd, true};
  }
  return {s, a, noise_sd_ * rng.normal(), kEnd, true};
}

TabularModel MaxBiasMdp::model() const {
  TabularModel model(descriptor_);
  for (ActionId a = 0; a < descriptor_.num_actions; ++a) {
    model.add(kStart, a, 1.0, a == 0 ? kBranch : kEnd, 0.0);
    model.add(kBranch, a, 1.0, kEnd, 0.0);
  }
  return model;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Environment> make_environment(std::string_view name) {
  if (name == "windy") return std::make_unique<WindyGridworld>(GridSpec::deterministic());
  if (name == "stochastic-windy") return std::make_unique<WindyGridworld>(GridSpec::stochastic());
  if (name == "maxbias") return std::make_unique<MaxBiasMdp>();
  if (name.starts_with("chain:")) {
    const std::string_view digits = name.substr(6);
    std::size_t n = 0;
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec == std::errc{} && end == digits.data() + digits.size() && n >= 2) return std::make_unique<ChainMdp>(n);
  }
  throw Error(ErrorCode::kConfiguration, "unknown environment '" + std::string(name) +
                                             "' (expected windy, stochastic-windy, chain:<n>=2.., maxbias)");
}

// ---------------------------------------------------------------------------

namespace {

void check_policy(const TabularModel& model, const std::vector<PolicyDistribution>& pi) {
  if (pi.size() != model.num_states()) throw_invalid("policy must give one distribution per state");
  for (const auto& d : pi) {
    if (d.size() != model.num_actions()) throw_invalid("policy distribution length differs from action count");
  }
}

}  // namespace

double bellman_residual(const TabularModel& model, const std::vector<PolicyDistribution>& pi, double gamma,
                        const ActionValueTable& q) {
  check_policy(model, pi);
  double worst = 0.0;
  for (StateId s = 0; s < model.num_states(); ++s) {
    for (ActionId a = 0; a < model.num_actions(); ++a) {
      double target = 0.0;
      if (!model.is_terminal(s)) {
        for (const auto& o : model.outcomes(s, a)) {
          double next = 0.0;
          if (!model.is_terminal(o.next_state)) next = expected_action_value(q.row(o.next_state), pi[o.next_state]);
          target += o.probability * (o.reward + gamma * next);
        }
      }
      worst = std::max(worst, std::abs(target - q(s, a)));
    }
  }
  return worst;
}

ActionValueTable solve_q_pi_exact(const TabularModel& model, const std::vector<PolicyDistribution>& pi,
                                  double gamma) {
  check_policy(model, pi);
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw_invalid("gamma outside [0, 1]");
  const std::size_t num_actions = model.num_actions();

  // Unknowns are the non-terminal pairs; terminal rows are fixed at 0.
  std::vector<std::ptrdiff_t> index(model.num_states(), -1);
  std::ptrdiff_t live = 0;
  for (StateId s = 0; s < model.num_states(); ++s) {
    if (!model.is_terminal(s)) index[s] = live++;
  }
  const Eigen::Index n = live * static_cast<Eigen::Index>(num_actions);
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (StateId s = 0; s < model.num_states(); ++s) {
    if (index[s] < 0) continue;
    for (ActionId a = 0; a < num_actions; ++a) {
      const Eigen::Index row = index[s] * static_cast<Eigen::Index>(num_actions) + static_cast<Eigen::Index>(a);
      for (const auto& o : model.outcomes(s, a)) {
        rhs(row) += o.probability * o.reward;
        if (index[o.next_state] < 0) continue;
        for (ActionId b = 0; b < num_actions; ++b) {
          const Eigen::Index col =
              index[o.next_state] * static_cast<Eigen::Index>(num_actions) + static_cast<Eigen::Index>(b);
          system(row, col) -= gamma * o.probability * pi[o.next_state][b];
        }
      }
    }
  }

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kNoSolution, "Bellman system is singular: the policy does not terminate");
  }
  const Eigen::VectorXd solution = lu.solve(rhs);

  ActionValueTable q(model.num_states(), num_actions);
  for (StateId s = 0; s < model.num_states(); ++s) {
    if (index[s] < 0) continue;
    for (ActionId a = 0; a < num_actions; ++a) {
      q(s, a) = solution(index[s] * static_cast<Eigen::Index>(num_actions) + static_cast<Eigen::Index>(a));
    }
  }
  const double scale = std::max(1.0, solution.size() > 0 ? solution.cwiseAbs().maxCoeff() : 0.0);
  if (!(bellman_residual(model, pi, gamma, q) <= 1e-10 * scale)) {
    throw Error(ErrorCode::kNoSolution, "Bellman system is ill-conditioned: residual above 1e-10");
  }
  return q;
}

ActionValueTable value_iteration_q_star(const TabularModel& model, double gamma, double tol,
                                        std::size_t max_sweeps) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw_invalid("gamma outside [0, 1]");
  if (!(tol > 0.0)) throw_invalid("tolerance must be positive");
  const std::size_t num_states = model.num_states();
  const std::size_t num_actions = model.num_actions();
  ActionValueTable q(num_states, num_actions);
  ActionValueTable next(num_states, num_actions);
  std::vector<double> best(num_states, 0.0);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    for (StateId s = 0; s < num_states; ++s) {
      const auto row = q.row(s);
      best[s] = model.is_terminal(s) ? 0.0 : *std::max_element(row.begin(), row.end());
    }
    double change = 0.0;
    for (StateId s = 0; s < num_states; ++s) {
      if (model.is_terminal(s)) continue;
      for (ActionId a = 0; a < num_actions; ++a) {
        double target = 0.0;
        for (const auto& o : model.outcomes(s, a)) target += o.probability * (o.reward + gamma * best[o.next_state]);
        change = std::max(change, std::abs(target - q(s, a)));
        next(s, a) = target;
      }
    }
    std::swap(q, next);
    if (change < tol) return q;
  }
  throw Error(ErrorCode::kNoSolution, "value iteration did not converge within the sweep budget");
}

}  // namespace qsigma
