#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "qsigma/rng.hpp"
#include "qsigma/tdcore.hpp"

namespace qsigma {

struct Transition {
  StateId state = 0;
  ActionId action = 0;
  double reward = 0.0;
  StateId next_state = 0;
  bool terminal = false;

  bool operator==(const Transition&) const = default;
};

struct EnvDescriptor {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  StateId start_state = 0;
  std::vector<char> terminal;  // indexed by state id

  bool is_terminal(StateId s) const { return terminal[s] != 0; }
};

/// Exact transition model: for every (s, a) the list of possible outcomes with
/// their probability and expected reward. Terminal states have no outcomes.
class TabularModel {
 public:
  struct Outcome {
    double probability;
    StateId next_state;
    double reward;
  };

  explicit TabularModel(EnvDescriptor descriptor);

  const EnvDescriptor& descriptor() const { return descriptor_; }
  std::size_t num_states() const { return descriptor_.num_states; }
  std::size_t num_actions() const { return descriptor_.num_actions; }
  bool is_terminal(StateId s) const { return descriptor_.is_terminal(s); }

  /// Adds probability mass; repeated (next_state) entries are merged.
  void add(StateId s, ActionId a, double probability, StateId next_state, double reward);
  const std::vector<Outcome>& outcomes(StateId s, ActionId a) const {
    return outcomes_[s * descriptor_.num_actions + a];
  }

 private:
  EnvDescriptor descriptor_;
  std::vector<std::vector<Outcome>> outcomes_;
};

/// Episodic environment. Implementations hold no per-episode state, so a
/// single instance can serve any number of sequential episodes.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvDescriptor& descriptor() const = 0;
  virtual std::string name() const = 0;
  /// Throws kContractViolation when `s` is terminal.
  virtual Transition step(StateId s, ActionId a, Rng& rng) const = 0;
  virtual TabularModel model() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;

  std::size_t num_states() const { return descriptor().num_states; }
  std::size_t num_actions() const { return descriptor().num_actions; }
  bool is_terminal(StateId s) const { return descriptor().is_terminal(s); }
  StateId reset(Rng& /*rng*/) const { return descriptor().start_state; }
};

// ---------------------------------------------------------------------------
// Windy gridworld

struct Cell {
  int col = 0;
  int row = 0;
  bool operator==(const Cell&) const = default;
};

enum GridAction : ActionId { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

/// Grid layout. Rows grow upward and the wind pushes toward larger rows.
struct GridSpec {
  int width = 10;
  int height = 7;
  std::vector<int> wind = {0, 0, 0, 1, 1, 1, 2, 2, 1, 0};
  Cell start{0, 3};
  Cell goal{7, 3};
  double slip_prob = 0.0;

  static GridSpec deterministic() { return {}; }
  static GridSpec stochastic() {
    GridSpec spec;
    spec.slip_prob = 0.1;
    return spec;
  }

  void validate() const;
  StateId encode(Cell c) const { return static_cast<StateId>(c.row * width + c.col); }
  Cell decode(StateId s) const { return {static_cast<int>(s) % width, static_cast<int>(s) / width}; }
  Cell clip(Cell c) const;
};

/// Action offset plus the departure column's wind, clipped once. Ignores
/// slip_prob.
Transition step_windy(const GridSpec& spec, StateId s, ActionId a);

/// One draw for the slip test; on a slip one more draw picks one of the eight
/// neighbours (no wind), otherwise identical to step_windy.
Transition step_stochastic_windy(const GridSpec& spec, StateId s, ActionId a, Rng& rng);

class WindyGridworld final : public Environment {
 public:
  explicit WindyGridworld(GridSpec spec);

  const EnvDescriptor& descriptor() const override { return descriptor_; }
  std::string name() const override { return spec_.slip_prob > 0.0 ? "stochastic-windy" : "windy"; }
  Transition step(StateId s, ActionId a, Rng& rng) const override;
  TabularModel model() const override;
  std::unique_ptr<Environment> clone() const override { return std::make_unique<WindyGridworld>(*this); }

  const GridSpec& spec() const { return spec_; }

 private:
  GridSpec spec_;
  EnvDescriptor descriptor_;
};

// ---------------------------------------------------------------------------
// Chain

enum ChainAction : ActionId { kAdvance = 0, kStay = 1 };

/// States 0..n-1 left to right, n-1 terminal. Advance moves one right, stay
/// self-loops; every step pays -1.
class ChainMdp final : public Environment {
 public:
  explicit ChainMdp(std::size_t length);

  const EnvDescriptor& descriptor() const override { return descriptor_; }
  std::string name() const override { return "chain:" + std::to_string(length_); }
  Transition step(StateId s, ActionId a, Rng& rng) const override;
  TabularModel model() const override;
  std::unique_ptr<Environment> clone() const override { return std::make_unique<ChainMdp>(*this); }

 private:
  std::size_t length_;
  EnvDescriptor descriptor_;
};

// ---------------------------------------------------------------------------
// Two-stage maximization-bias MDP
//
// State 0 (start): action 0 moves to state 1 with reward 0; every other action
// ends the episode with reward 0. State 1: each of the `noisy_actions` actions
// ends the episode with a N(0, noise_sd^2) reward. Every true action value is 0.

class MaxBiasMdp final : public Environment {
 public:
  explicit MaxBiasMdp(std::size_t noisy_actions = 8, double noise_sd = 1.0);

  const EnvDescriptor& descriptor() const override { return descriptor_; }
  std::string name() const override { return "maxbias"; }
  Transition step(StateId s, ActionId a, Rng& rng) const override;
  TabularModel model() const override;
  std::unique_ptr<Environment> clone() const override { return std::make_unique<MaxBiasMdp>(*this); }

  static constexpr StateId kStart = 0;
  static constexpr StateId kBranch = 1;
  static constexpr StateId kEnd = 2;

 private:
  double noise_sd_;
  EnvDescriptor descriptor_;
};

/// "windy", "stochastic-windy", "chain:<n>" or "maxbias". Unknown names throw
/// kConfiguration.
std::unique_ptr<Environment> make_environment(std::string_view name);

// ---------------------------------------------------------------------------
// Exact oracles

/// Solves q = r + gamma * P * pi * q by LU elimination over the non-terminal
/// pairs. Throws kNoSolution when the system is singular (a policy that never
/// terminates under gamma = 1) or the Bellman residual exceeds 1e-10 relative
/// to max(1, |q|_inf).
ActionValueTable solve_q_pi_exact(const TabularModel& model, const std::vector<PolicyDistribution>& pi,
                                  double gamma);

/// Largest componentwise violation of the Bellman equation for `q` under `pi`.
double bellman_residual(const TabularModel& model, const std::vector<PolicyDistribution>& pi, double gamma,
                        const ActionValueTable& q);

/// Synchronous Bellman-optimality sweeps until the max-norm change drops below
/// `tol`. Throws kNoSolution if `max_sweeps` pass first.
ActionValueTable value_iteration_q_star(const TabularModel& model, double gamma, double tol,
                                        std::size_t max_sweeps = 1'000'000);

}  // namespace qsigma
