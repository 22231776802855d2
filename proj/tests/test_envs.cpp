#include <gtest/gtest.h>

#include <cmath>
#include <utility>

#include "qsigma/envs.hpp"
#include "support/oracles.hpp"

using namespace qsigma;

namespace {

const GridSpec kGrid = GridSpec::deterministic();

StateId cell(int col, int row) { return kGrid.encode({col, row}); }

// Follows the first maximizer of q from the start until the goal (or a cap).
int greedy_episode_length(const WindyGridworld& env, const ActionValueTable& q) {
  Rng rng(0);
  StateId s = env.reset(rng);
  for (int steps = 1; steps <= 1000; ++steps) {
    const auto row = q.row(s);
    ActionId best = 0;
    for (ActionId a = 1; a < row.size(); ++a) {
      if (row[a] > row[best]) best = a;
    }
    const Transition t = env.step(s, best, rng);
    if (t.terminal) return steps;
    s = t.next_state;
  }
  return -1;
}

}  // namespace

TEST(WindyGridworld, ResetReturnsStart) {
  const WindyGridworld env(kGrid);
  Rng rng(1);
  EXPECT_EQ(env.reset(rng), cell(0, 3));
  EXPECT_EQ(env.reset(rng), cell(0, 3));
  EXPECT_EQ(env.num_states(), 70u);
  EXPECT_EQ(env.num_actions(), 4u);
  EXPECT_TRUE(env.is_terminal(cell(7, 3)));
}

TEST(WindyGridworld, StepExamples) {
  Transition t = step_windy(kGrid, cell(0, 3), kRight);
  EXPECT_EQ(t.next_state, cell(1, 3));
  EXPECT_EQ(t.reward, -1.0);
  EXPECT_FALSE(t.terminal);

  t = step_windy(kGrid, cell(3, 3), kRight);
  EXPECT_EQ(t.next_state, cell(4, 4));

  t = step_windy(kGrid, cell(0, 6), kUp);
  EXPECT_EQ(t.next_state, cell(0, 6));
}

TEST(WindyGridworld, WindClipsAtTopRow) {
  // Column 6 has wind 2: from row 5 moving up would reach row 8.
  EXPECT_EQ(step_windy(kGrid, cell(6, 5), kUp).next_state, cell(6, 6));
  EXPECT_EQ(step_windy(kGrid, cell(0, 0), kDown).next_state, cell(0, 0));
  EXPECT_EQ(step_windy(kGrid, cell(9, 2), kRight).next_state, cell(9, 2));
}

TEST(WindyGridworld, GoalReachedByWindTerminates) {
  // Column 6 wind 2 from row 1 with a right move lands on (7, 3).
  const Transition t = step_windy(kGrid, cell(6, 1), kRight);
  EXPECT_EQ(t.next_state, cell(7, 3));
  EXPECT_TRUE(t.terminal);
}

TEST(WindyGridworld, StepFromGoalIsContractViolation) {
  try {
    step_windy(kGrid, cell(7, 3), kLeft);
    FAIL() << "expected a contract violation";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kContractViolation);
  }
  EXPECT_THROW(step_windy(kGrid, cell(0, 0), 4), Error);
}

TEST(WindyGridworld, AllTransitionsInsideGridWithUnitCost) {
  Rng rng(3);
  const WindyGridworld stochastic(GridSpec::stochastic());
  for (StateId s = 0; s < 70; ++s) {
    if (s == cell(7, 3)) continue;
    for (ActionId a = 0; a < 4; ++a) {
      const Transition det = step_windy(kGrid, s, a);
      EXPECT_EQ(det, step_windy(kGrid, s, a));
      EXPECT_LT(det.next_state, 70u);
      EXPECT_EQ(det.reward, -1.0);
      for (int k = 0; k < 20; ++k) {
        const Transition t = stochastic.step(s, a, rng);
        EXPECT_LT(t.next_state, 70u);
        EXPECT_EQ(t.reward, -1.0);
        EXPECT_EQ(t.terminal, t.next_state == cell(7, 3));
      }
    }
  }
}

TEST(StochasticWindy, ZeroSlipMatchesDeterministic) {
  GridSpec spec = kGrid;
  spec.slip_prob = 0.0;
  Rng rng(8);
  for (StateId s = 0; s < 70; ++s) {
    if (s == cell(7, 3)) continue;
    for (ActionId a = 0; a < 4; ++a) EXPECT_EQ(step_stochastic_windy(spec, s, a, rng), step_windy(kGrid, s, a));
  }
}

TEST(StochasticWindy, ForcedSlipFromBottomEdgeStaysInGrid) {
  GridSpec spec = kGrid;
  spec.slip_prob = 1.0;
  Rng rng(12);
  const Cell from{5, 0};
  for (int i = 0; i < 2000; ++i) {
    const Transition t = step_stochastic_windy(spec, spec.encode(from), kUp, rng);
    const Cell to = spec.decode(t.next_state);
    EXPECT_LE(std::abs(to.col - from.col), 1);
    EXPECT_LE(to.row, 1);
    EXPECT_GE(to.row, 0);
  }
}

TEST(StochasticWindy, SlipFrequencyAndDrawCount) {
  const GridSpec spec = GridSpec::stochastic();
  Rng rng(77);
  int slips = 0;
  constexpr int kSteps = 100'000;
  const StateId s = cell(4, 3);
  for (int i = 0; i < kSteps; ++i) {
    Rng probe = rng;
    const bool slipped = probe.uniform() < spec.slip_prob;
    if (slipped) probe();
    const Transition t = step_stochastic_windy(spec, s, kRight, rng);
    ASSERT_EQ(rng, probe) << "draw count differs from the contract";
    if (!slipped) {
      ASSERT_EQ(t, step_windy(spec, s, kRight));
    }
    slips += slipped;
  }
  EXPECT_NEAR(static_cast<double>(slips) / kSteps, 0.1, 0.005);
}

TEST(StochasticWindy, SameStreamSameTransition) {
  const GridSpec spec = GridSpec::stochastic();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng a(seed), b(seed);
    EXPECT_EQ(step_stochastic_windy(spec, cell(2, 2), kLeft, a), step_stochastic_windy(spec, cell(2, 2), kLeft, b));
  }
}

TEST(GridSpec, Validation) {
  GridSpec spec = kGrid;
  spec.wind.pop_back();
  EXPECT_THROW(WindyGridworld{spec}, Error);
  spec = kGrid;
  spec.goal = spec.start;
  EXPECT_THROW(WindyGridworld{spec}, Error);
  spec = kGrid;
  spec.wind[0] = -1;
  EXPECT_THROW(WindyGridworld{spec}, Error);
}

TEST(ChainMdp, Basics) {
  const ChainMdp chain(3);
  Rng rng(0);
  EXPECT_EQ(chain.reset(rng), 0u);
  EXPECT_EQ(chain.step(0, kAdvance, rng), (Transition{0, kAdvance, -1.0, 1, false}));
  EXPECT_EQ(chain.step(1, kAdvance, rng), (Transition{1, kAdvance, -1.0, 2, true}));
  EXPECT_EQ(chain.step(1, kStay, rng), (Transition{1, kStay, -1.0, 1, false}));
  EXPECT_THROW(chain.step(2, kAdvance, rng), Error);
  EXPECT_THROW(ChainMdp(1), Error);
}

TEST(MakeEnvironment, Names) {
  EXPECT_EQ(make_environment("windy")->name(), "windy");
  EXPECT_EQ(make_environment("stochastic-windy")->name(), "stochastic-windy");
  EXPECT_EQ(make_environment("chain:7")->num_states(), 7u);
  EXPECT_EQ(make_environment("maxbias")->num_actions(), 8u);
  for (const char* bad : {"chain:", "chain:1", "chain:x", "grid", ""}) {
    try {
      make_environment(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kConfiguration);
    }
  }
}

TEST(ValueIteration, ChainQStar) {
  const auto q3 = value_iteration_q_star(ChainMdp(3).model(), 1.0, 1e-12);
  EXPECT_EQ(q3(0, kAdvance), -2.0);
  EXPECT_EQ(q3(1, kAdvance), -1.0);
  EXPECT_EQ(q3(0, kStay), -3.0);
  const auto q2 = value_iteration_q_star(ChainMdp(2).model(), 1.0, 1e-12);
  EXPECT_EQ(q2(0, kAdvance), -1.0);
}

TEST(ValueIteration, WindyGreedyPathLength) {
  const WindyGridworld env(kGrid);
  const auto q = value_iteration_q_star(env.model(), 1.0, 1e-10);
  // Regression constant produced by this oracle on the standard layout.
  EXPECT_EQ(greedy_episode_length(env, q), 15);
  double best = q(cell(0, 3), 0);
  for (ActionId a = 1; a < 4; ++a) best = std::max(best, q(cell(0, 3), a));
  EXPECT_EQ(best, -15.0);
}

TEST(ValueIteration, HalvingToleranceMovesLessThanTolerance) {
  // Deterministic windy at gamma = 1 reaches its fixed point exactly.
  const auto windy = WindyGridworld(GridSpec::deterministic()).model();
  // With gamma <= 0.5 the contraction bound tol * gamma / (1 - gamma) is at most tol.
  const auto stochastic = WindyGridworld(GridSpec::stochastic()).model();
  for (double tol : {1e-2, 1e-4, 1e-6}) {
    for (const auto& [model, gamma] : {std::pair{&windy, 1.0}, std::pair{&stochastic, 0.5}}) {
      const auto coarse = value_iteration_q_star(*model, gamma, tol);
      const auto fine = value_iteration_q_star(*model, gamma, tol / 2);
      for (std::size_t i = 0; i < coarse.values().size(); ++i) {
        ASSERT_LT(std::abs(coarse.values()[i] - fine.values()[i]), tol) << "gamma=" << gamma;
      }
    }
  }
  const auto model = ChainMdp(6).model();
  for (double tol : {1e-2, 1e-4, 1e-6}) {
    const auto coarse = value_iteration_q_star(model, 0.9, tol);
    const auto fine = value_iteration_q_star(model, 0.9, tol / 2);
    for (std::size_t i = 0; i < coarse.values().size(); ++i) {
      EXPECT_LT(std::abs(coarse.values()[i] - fine.values()[i]), tol * 0.9 / (1 - 0.9));
    }
  }
}

TEST(SolveQPi, ChainExamples) {
  const auto model2 = ChainMdp(2).model();
  for (double p : {0.1, 0.5, 0.9}) {
    const std::vector<PolicyDistribution> pi(2, PolicyDistribution({p, 1 - p}));
    EXPECT_NEAR(solve_q_pi_exact(model2, pi, 1.0)(0, kAdvance), -1.0, 1e-12);
  }
  const std::vector<PolicyDistribution> advance(3, PolicyDistribution({1.0, 0.0}));
  EXPECT_NEAR(solve_q_pi_exact(ChainMdp(3).model(), advance, 1.0)(0, kAdvance), -2.0, 1e-12);
}

TEST(SolveQPi, AgreesWithIterativeEvaluation) {
  const auto model = ChainMdp(4).model();
  const std::vector<PolicyDistribution> pi(4, uniform_distribution(2));
  const auto exact = solve_q_pi_exact(model, pi, 0.9);
  const auto iterated = qsigma::testing::iterate_policy_evaluation(model, pi, 0.9, 10'000);
  for (std::size_t i = 0; i < exact.values().size(); ++i) {
    EXPECT_NEAR(exact.values()[i], iterated.values()[i], 1e-6);
  }
  EXPECT_LE(bellman_residual(model, pi, 0.9, exact), 1e-10);
}

TEST(SolveQPi, StochasticWindyResidual) {
  const WindyGridworld env(GridSpec::stochastic());
  const auto model = env.model();
  std::vector<PolicyDistribution> pi;
  const auto q_star = value_iteration_q_star(model, 1.0, 1e-10);
  for (StateId s = 0; s < env.num_states(); ++s) pi.push_back(epsilon_greedy_distribution(q_star.row(s), 0.1));
  const auto q = solve_q_pi_exact(model, pi, 1.0);
  double scale = 1.0;
  for (double v : q.values()) scale = std::max(scale, std::abs(v));
  EXPECT_LE(bellman_residual(model, pi, 1.0, q), 1e-10 * scale);
  EXPECT_LT(q(env.descriptor().start_state, kRight), -15.0);
}

TEST(SolveQPi, NonTerminatingPolicyHasNoSolution) {
  const std::vector<PolicyDistribution> stay(3, PolicyDistribution({0.0, 1.0}));
  try {
    solve_q_pi_exact(ChainMdp(3).model(), stay, 1.0);
    FAIL() << "expected kNoSolution";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoSolution);
  }
  // Discounting makes the same policy well-posed.
  const auto q = solve_q_pi_exact(ChainMdp(3).model(), stay, 0.5);
  EXPECT_NEAR(q(0, kStay), -2.0, 1e-12);
}

TEST(MaxBiasMdp, TrueValuesAreZero) {
  const MaxBiasMdp env;
  const auto q = value_iteration_q_star(env.model(), 1.0, 1e-12);
  for (double v : q.values()) EXPECT_EQ(v, 0.0);
  Rng rng(4);
  double sum = 0;
  for (int i = 0; i < 100'000; ++i) sum += env.step(MaxBiasMdp::kBranch, i % 8, rng).reward;
  EXPECT_NEAR(sum / 100'000, 0.0, 0.015);
}
