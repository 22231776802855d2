#include "support/properties.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "qsigma/algos.hpp"
#include "qsigma/envs.hpp"
#include "qsigma/harness.hpp"
#include "qsigma/report.hpp"
#include "support/oracles.hpp"

namespace qsigma::testing {
namespace {

using Check = std::optional<std::string>;

std::string describe(std::span<const double> v) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ']';
  return os.str();
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }
double between(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

// Small integers make ties common, which is where the interesting cases live.
std::vector<double> random_row(Rng& rng, std::size_t n) {
  std::vector<double> row(n);
  const bool coarse = rng.uniform() < 0.5;
  for (double& x : row) x = coarse ? static_cast<double>(pick(rng, 0, 6)) - 3.0 : between(rng, -50.0, 50.0);
  return row;
}

// ---------------------------------------------------------------------------
// tdcore

Check epsilon_greedy_normalized(Rng& rng) {
  const auto row = random_row(rng, pick(rng, 1, 12));
  const double eps = rng.uniform() < 0.1 ? static_cast<double>(rng.below(2)) : rng.uniform();
  const auto dist = epsilon_greedy_distribution(row, eps);
  const auto p = dist.probs();
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-12) return "sum " + std::to_string(sum) + " for " + describe(row);
  const double floor = eps / static_cast<double>(row.size());
  for (double x : p) {
    if (x < floor) return "entry below eps/|A| for " + describe(row);
  }
  return {};
}

Check greedy_argmax_invariance(Rng& rng) {
  std::vector<double> row(pick(rng, 1, 10));
  for (double& x : row) x = static_cast<double>(pick(rng, 0, 8)) - 4.0;
  const double shift = static_cast<double>(pick(rng, 0, 200)) - 100.0;
  const double scale = std::ldexp(1.0, static_cast<int>(pick(rng, 0, 10)) - 5) * static_cast<double>(pick(rng, 1, 7));
  std::vector<double> shifted = row, scaled = row;
  for (double& x : shifted) x += shift;
  for (double& x : scaled) x *= scale;
  const auto base_dist = greedy_distribution(row), a_dist = greedy_distribution(shifted), b_dist = greedy_distribution(scaled);
  const auto base = base_dist.probs(), a = a_dist.probs(), b = b_dist.probs();
  if (!std::equal(base.begin(), base.end(), a.begin())) return "shift changed argmax of " + describe(row);
  if (!std::equal(base.begin(), base.end(), b.begin())) return "rescale changed argmax of " + describe(row);
  return {};
}

Check greedy_expectation_is_max(Rng& rng) {
  const auto row = random_row(rng, pick(rng, 1, 12));
  const double best = row_max(row);
  const auto ties = std::count(row.begin(), row.end(), best);
  const double got = expected_action_value(row, greedy_distribution(row));
  if (ties == 1 && got != best) return "unique max not returned exactly for " + describe(row);
  // With k tied maxima the value is k terms of m/k; allow for their rounding.
  if (std::abs(got - best) > 4e-16 * std::abs(best)) return "tied max not recovered for " + describe(row);
  return {};
}

Check epsilon_zero_is_greedy(Rng& rng) {
  const auto row = random_row(rng, pick(rng, 1, 12));
  const auto a_dist = epsilon_greedy_distribution(row, 0.0), b_dist = greedy_distribution(row);
  const auto a = a_dist.probs(), b = b_dist.probs();
  if (!std::equal(a.begin(), a.end(), b.begin(), b.end())) return "eps=0 differs from greedy for " + describe(row);
  return {};
}

// ---------------------------------------------------------------------------
// envs

Check windy_transitions(Rng& rng) {
  const GridSpec spec = rng.uniform() < 0.5 ? GridSpec::deterministic() : GridSpec::stochastic();
  const WindyGridworld env(spec);
  StateId s = 0;
  do {
    s = rng.below(env.num_states());
  } while (env.is_terminal(s));
  const ActionId a = rng.below(4);
  Rng stream(rng());
  Rng replay = stream;
  const Transition t = env.step(s, a, stream);
  if (t.reward != -1.0) return "reward " + std::to_string(t.reward);
  const Cell c = spec.decode(t.next_state);
  if (c.col < 0 || c.col >= spec.width || c.row < 0 || c.row >= spec.height || t.next_state >= env.num_states()) {
    return "next state " + std::to_string(t.next_state) + " left the grid";
  }
  if (env.step(s, a, replay) != t) return "same stream produced a different transition";
  if (step_windy(spec, s, a) != step_windy(spec, s, a)) return "step_windy is not pure";
  return {};
}

Check bellman_residual_of_exact_solution(Rng& rng) {
  // Mostly chains with random stochastic policies; every tenth case uses the
  // stochastic gridworld.
  const bool grid = rng.below(10) == 0;
  const auto env = grid ? make_environment("stochastic-windy")
                        : make_environment("chain:" + std::to_string(pick(rng, 2, 12)));
  const TabularModel model = env->model();
  // gamma = 1 needs a policy that terminates; keep advance probability >= 0.2.
  const double gamma = rng.uniform() < 0.3 ? 1.0 : between(rng, 0.0, 0.99);
  std::vector<PolicyDistribution> pi;
  for (StateId s = 0; s < model.num_states(); ++s) {
    std::vector<double> p(model.num_actions());
    if (grid) {
      for (double& x : p) x = 1.0 / static_cast<double>(p.size());
    } else {
      p[kAdvance] = between(rng, 0.2, 1.0);
      p[kStay] = 1.0 - p[kAdvance];
    }
    pi.emplace_back(std::move(p));
  }
  if (grid && gamma == 1.0) return {};  // a uniform walk on the grid still ends, but slowly; covered in test_envs
  const ActionValueTable q = solve_q_pi_exact(model, pi, gamma);
  double scale = 1.0, worst = 0.0;
  for (double v : q.values()) scale = std::max(scale, std::abs(v));
  for (StateId s = 0; s < model.num_states(); ++s) {
    for (ActionId a = 0; a < model.num_actions(); ++a) {
      double target = 0.0;
      for (const auto& o : model.outcomes(s, a)) {
        double next = 0.0;
        if (!model.is_terminal(o.next_state)) {
          for (ActionId b = 0; b < model.num_actions(); ++b) next += pi[o.next_state][b] * q(o.next_state, b);
        }
        target += o.probability * (o.reward + gamma * next);
      }
      worst = std::max(worst, std::abs(target - q(s, a)));
    }
  }
  if (worst > 1e-10 * scale) return env->name() + ": residual " + std::to_string(worst);
  return {};
}

// ---------------------------------------------------------------------------
// algos

Check td_error_linear_in_sigma(Rng& rng) {
  const std::size_t n = pick(rng, 1, 8);
  const auto row = random_row(rng, n);
  const auto pi = epsilon_greedy_distribution(row, rng.uniform());
  const double r = between(rng, -5.0, 5.0), gamma = rng.uniform(), cur = between(rng, -50.0, 50.0);
  const double sigma = rng.uniform() < 0.1 ? static_cast<double>(rng.below(2)) : rng.uniform();
  const double q_next = row[rng.below(n)];
  const double mixed = td_error_q_sigma(r, gamma, sigma, q_next, row, pi.probs(), cur).delta;
  const double blend = sigma * td_error_sarsa(r, gamma, q_next, cur).delta +
                       (1.0 - sigma) * td_error_expected_sarsa(r, gamma, row, pi.probs(), cur).delta;
  // Equal as real numbers; the two groupings may round differently.
  double scale = std::abs(r) + std::abs(cur) + 1.0;
  for (double x : row) scale = std::max(scale, std::abs(r) + std::abs(cur) + std::abs(x));
  if (std::abs(mixed - blend) > 1e-13 * scale) {
    return "sigma=" + std::to_string(sigma) + " delta " + std::to_string(mixed) + " vs " + std::to_string(blend);
  }
  if ((sigma == 1.0 && mixed != td_error_sarsa(r, gamma, q_next, cur).delta) ||
      (sigma == 0.0 && mixed != td_error_expected_sarsa(r, gamma, row, pi.probs(), cur).delta)) {
    return "endpoint not exact";
  }
  return {};
}

Check traces_non_negative_and_decay_multiplicatively(Rng& rng) {
  const std::size_t ns = pick(rng, 1, 6), na = pick(rng, 1, 4);
  EligibilityTable e(ns, na);
  const StateId watched_s = rng.below(ns);
  const ActionId watched_a = rng.below(na);
  double expected = 0.0;
  const int steps = static_cast<int>(pick(rng, 1, 40));
  for (int k = 0; k < steps; ++k) {
    const StateId s = rng.below(ns);
    const ActionId a = rng.below(na);
    const bool hit = s == watched_s && a == watched_a;
    bump_trace(e, s, a);
    if (hit) expected = e(s, a);
    const double gamma = rng.uniform(), lambda = rng.uniform(), sigma = rng.uniform(), pi = rng.uniform();
    double multiplier = 0.0;
    switch (rng.below(3)) {
      case 0:
        decay_traces_accumulating(e, gamma, lambda);
        multiplier = gamma * lambda;
        break;
      case 1:
        decay_traces_pi_weighted(e, gamma, lambda, pi);
        multiplier = gamma * lambda * pi;
        break;
      default:
        decay_traces_sigma(e, gamma, lambda, sigma, pi);
        multiplier = gamma * lambda * (sigma + (1.0 - sigma) * pi);
        break;
    }
    expected *= multiplier;
    for (double v : e.values()) {
      if (!(v >= 0.0)) return "negative trace " + std::to_string(v);
    }
    if (std::abs(e(watched_s, watched_a) - expected) > 1e-12 * std::max(1.0, expected)) {
      return "trace " + std::to_string(e(watched_s, watched_a)) + " vs product " + std::to_string(expected);
    }
  }
  return {};
}

Check one_hot_update_is_one_step(Rng& rng) {
  const std::size_t ns = pick(rng, 1, 6), na = pick(rng, 1, 4);
  ActionValueTable q(ns, na);
  for (double& v : q.values()) v = between(rng, -20.0, 20.0);
  const ActionValueTable before = q;
  const StateId s = rng.below(ns);
  const ActionId a = rng.below(na);
  EligibilityTable e(ns, na);
  e.bump(s, a);
  const double alpha = between(rng, 1e-3, 1.0);
  const double target = between(rng, -20.0, 20.0);
  const double delta = target - before(s, a);
  apply_td_update_all(q, e, alpha, {delta});
  for (StateId i = 0; i < ns; ++i) {
    for (ActionId j = 0; j < na; ++j) {
      const double want = (i == s && j == a) ? before(i, j) + alpha * delta : before(i, j);
      if (q(i, j) != want) return "pair (" + std::to_string(i) + "," + std::to_string(j) + ") mismatch";
    }
  }
  return {};
}

Check reduction_identities(Rng& rng) {
  const auto env = rng.uniform() < 0.5 ? make_environment("windy")
                                       : make_environment("chain:" + std::to_string(pick(rng, 2, 8)));
  OracleConfig oc;
  // Large steps with long accumulating traces can diverge; stay in the stable range.
  oc.alpha = between(rng, 0.05, 0.5);
  oc.gamma = rng.uniform() < 0.5 ? 1.0 : between(rng, 0.5, 1.0);
  oc.epsilon = between(rng, 0.0, 0.3);
  oc.lambda = rng.uniform() < 0.3 ? 0.0 : between(rng, 0.0, 0.9);
  oc.sigma = rng.uniform();
  oc.max_steps = 2000;
  AgentConfig c;
  c.alpha = oc.alpha;
  c.gamma = oc.gamma;
  c.epsilon = oc.epsilon;
  c.lambda = oc.lambda;
  c.max_steps_per_episode = oc.max_steps;
  const std::uint64_t seed = rng();
  const int episodes = 3;

  auto single = [&](double sigma, double lambda) {
    AgentConfig cc = c;
    cc.sigma = sigma;
    cc.lambda = lambda;
    QSigmaLambdaAgent agent(*env, cc);
    Rng stream(seed);
    for (int i = 0; i < episodes; ++i) agent.run_episode(*env, sigma, stream);
    return std::move(agent).release_q();
  };
  Rng r1(seed), r2(seed), r3(seed), r4(seed);
  if (single(1.0, oc.lambda) != sarsa_lambda(*env, oc, episodes, r1)) return env->name() + ": sigma=1 vs Sarsa(lambda)";
  if (single(0.0, oc.lambda) != watkins_q_lambda(*env, oc, episodes, r2)) {
    return env->name() + ": sigma=0 vs Q(lambda)";
  }
  if (single(oc.sigma, 0.0) != one_step_q_sigma(*env, oc, episodes, r3)) return env->name() + ": lambda=0 vs one-step";
  AgentConfig dc = c;
  dc.sigma = 0.0;
  dc.lambda = 0.0;
  DoubleQSigmaAgent dbl(*env, dc);
  Rng stream(seed);
  for (int i = 0; i < episodes; ++i) dbl.run_episode(*env, 0.0, stream);
  const DoubleTables want = double_q_learning(*env, oc, episodes, r4);
  if (dbl.tables().q_a != want.q_a || dbl.tables().q_b != want.q_b) return env->name() + ": double vs Double Q";
  return {};
}

// ---------------------------------------------------------------------------
// harness and report

ExperimentSpec random_small_spec(Rng& rng) {
  ExperimentSpec spec;
  const std::size_t which = rng.below(3);
  spec.env = which == 0 ? "windy" : which == 1 ? "stochastic-windy" : "chain:" + std::to_string(pick(rng, 2, 9));
  spec.algorithm = rng.uniform() < 0.25 ? "double-qsigma" : "qsigma";
  spec.alphas.clear();
  for (std::size_t i = 0, n = pick(rng, 1, 2); i < n; ++i) spec.alphas.push_back(static_cast<double>(pick(rng, 1, 10)) / 10.0);
  spec.sigmas = {rng.uniform() < 0.3 ? SigmaSetting::decaying() : SigmaSetting::fixed(static_cast<double>(rng.below(3)) / 2)};
  if (rng.uniform() < 0.5) spec.sigmas.push_back(SigmaSetting::fixed(rng.uniform()));
  spec.lambdas = {rng.uniform() < 0.5 ? 0.0 : 0.7};
  spec.episodes = pick(rng, 1, 3);
  spec.runs = pick(rng, 1, 3);
  spec.master_seed = rng();
  spec.max_steps_per_episode = pick(rng, 20, 300);
  return spec;
}

Check harness_is_deterministic(Rng& rng) {
  const ExperimentSpec spec = random_small_spec(rng);
  const auto first = run_experiment(spec, 1);
  const auto second = run_experiment(spec, 1);
  if (first != second) return "two runs of one spec differ";
  const auto grid = spec.grid();
  for (const auto& agg : aggregate(first)) {
    if (spec.env.starts_with("chain")) continue;
    if (!(agg.mean_avg_return < 0.0) || agg.mean_avg_return < -static_cast<double>(spec.max_steps_per_episode)) {
      return "gridworld mean " + std::to_string(agg.mean_avg_return) + " out of (-max_steps, 0)";
    }
  }
  // Dropping a point leaves every other point's records untouched.
  if (grid.size() > 1 && spec.alphas.size() > 1) {
    ExperimentSpec reduced = spec;
    reduced.alphas.erase(reduced.alphas.begin());
    const double dropped = spec.alphas.front();
    const auto fewer = run_experiment(reduced, 1);
    std::size_t matched = 0;
    for (const auto& rec : first) {
      if (rec.point.alpha == dropped && std::count(reduced.alphas.begin(), reduced.alphas.end(), dropped) == 0) {
        continue;
      }
      const auto it = std::find_if(fewer.begin(), fewer.end(), [&](const RunRecord& r) {
        return r.point == rec.point && r.run_index == rec.run_index;
      });
      if (it == fewer.end() || *it != rec) return "record changed after removing a grid point";
      ++matched;
    }
    if (matched != fewer.size()) return "reduced grid produced extra records";
  }
  return {};
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::runtime_error("bad number '" + s + "'");
  return v;
}

Check csv_aggregation_idempotent(Rng& rng) {
  // Synthetic records with integer returns, like the gridworld tasks.
  std::vector<RunRecord> records;
  const std::size_t points = pick(rng, 1, 4), runs = pick(rng, 1, 6), episodes = pick(rng, 1, 30);
  for (std::size_t p = 0; p < points; ++p) {
    ConfigPoint point{static_cast<double>(p + 1) / 10.0, static_cast<double>(rng.below(3)) / 2.0, 1.0,
                      rng.uniform() < 0.5 ? 0.0 : 0.7};
    for (std::size_t r = 0; r < runs; ++r) {
      RunRecord rec{point, r, {}, 0};
      for (std::size_t e = 0; e < episodes; ++e) rec.returns.push_back(-static_cast<double>(pick(rng, 15, 5000)));
      records.push_back(std::move(rec));
    }
  }
  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.point, a.run_index) < std::tie(b.point, b.run_index);
  });
  const std::string raw = raw_csv(records);
  const std::string agg = aggregate_csv(aggregate(records));

  // Rebuild records from the raw text alone.
  std::map<std::pair<std::vector<double>, std::uint64_t>, RunRecord> rebuilt;
  std::istringstream in(raw);
  std::string line;
  std::getline(in, line);
  if (line != kRawCsvHeader) return "raw header";
  while (std::getline(in, line)) {
    const auto f = split(line, ',');
    if (f.size() != 7) return "raw row width";
    const ConfigPoint point{parse_double(f[0]), parse_double(f[1]), parse_double(f[2]), parse_double(f[3])};
    const auto run = static_cast<std::uint64_t>(parse_double(f[4]));
    auto& rec = rebuilt[{{point.alpha, point.sigma, point.sigma_decay, point.lambda}, run}];
    rec.point = point;
    rec.run_index = run;
    rec.returns.push_back(parse_double(f[6]));
  }
  std::vector<RunRecord> from_text;
  for (auto& [key, rec] : rebuilt) from_text.push_back(std::move(rec));
  const auto recomputed = aggregate(from_text);

  std::istringstream agg_in(agg);
  std::getline(agg_in, line);
  if (line != kAggregateCsvHeader) return "aggregate header";
  std::size_t row = 0;
  while (std::getline(agg_in, line)) {
    if (row >= recomputed.size()) return "aggregate has extra rows";
    const auto f = split(line, ',');
    const auto& want = recomputed[row++];
    // The recomputed row, written with the CSV's own number format, must
    // match the stored text to within 1e-9.
    const double fields[] = {want.mean_avg_return, want.stderr_avg_return};
    for (int k = 0; k < 2; ++k) {
      const double stored = parse_double(f[5 + k]);
      const double again = parse_double(format_number(fields[k]));
      if (std::abs(stored - again) > 1e-9) return "row " + std::to_string(row) + " not reproducible: " + line;
    }
    if (parse_double(f[4]) != static_cast<double>(want.runs)) return "run count";
  }
  if (row != recomputed.size()) return "aggregate is missing rows";
  return {};
}

Check outputs_follow_manifest(Rng& rng) {
  ExperimentSpec spec = random_small_spec(rng);
  spec.episodes = 1;
  spec.runs = 1;
  const auto records = run_experiment(spec, 1);
  const ExperimentSpec back = spec_from_manifest(manifest_json(spec, 0));
  const auto replayed = run_experiment(back, 1);
  if (raw_csv(records) != raw_csv(replayed)) return "raw CSV differs after manifest round trip";
  if (aggregate_csv(aggregate(records)) != aggregate_csv(aggregate(replayed))) return "aggregate CSV differs";
  if (manifest_json(back, 0) != manifest_json(spec, 0)) return "manifest is not a fixed point";
  return {};
}

}  // namespace

const std::vector<Property>& all_properties() {
  static const std::vector<Property> kAll = {
      {"epsilon_greedy_normalized", epsilon_greedy_normalized},
      {"greedy_argmax_invariance", greedy_argmax_invariance},
      {"greedy_expectation_is_max", greedy_expectation_is_max},
      {"epsilon_zero_is_greedy", epsilon_zero_is_greedy},
      {"windy_transitions", windy_transitions},
      {"exact_solution_bellman_residual", bellman_residual_of_exact_solution},
      {"td_error_linear_in_sigma", td_error_linear_in_sigma},
      {"traces_non_negative", traces_non_negative_and_decay_multiplicatively},
      {"one_hot_update_is_one_step", one_hot_update_is_one_step},
      {"reduction_identities", reduction_identities},
      {"harness_deterministic", harness_is_deterministic},
      {"csv_aggregation_idempotent", csv_aggregation_idempotent},
      {"outputs_follow_manifest", outputs_follow_manifest},
  };
  return kAll;
}

PropertyOutcome run_property(const Property& property, int cases, std::uint64_t seed) {
  PropertyOutcome out{property.name, 0, std::nullopt};
  std::uint64_t label = 0xcbf29ce484222325ULL;  // FNV-1a of the name
  for (unsigned char ch : property.name) label = (label ^ ch) * 0x100000001b3ULL;
  Rng rng = derive_substream(seed, {label});
  for (int i = 0; i < cases; ++i) {
    try {
      if (auto failure = property.check(rng)) {
        out.failure = "case " + std::to_string(i) + ": " + *failure;
        return out;
      }
    } catch (const std::exception& ex) {
      out.failure = "case " + std::to_string(i) + " threw: " + ex.what();
      return out;
    }
    ++out.cases;
  }
  return out;
}

}  // namespace qsigma::testing
