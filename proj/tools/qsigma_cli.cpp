// qsigma command-line front end. Talks to the library only through the C API.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qsigma/qsigma.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentDeleter {
  void operator()(qsigma_experiment* e) const { qsigma_experiment_destroy(e); }
};
struct ResultsDeleter {
  void operator()(qsigma_results* r) const { qsigma_results_destroy(r); }
};
using ExperimentPtr = std::unique_ptr<qsigma_experiment, ExperimentDeleter>;
using ResultsPtr = std::unique_ptr<qsigma_results, ResultsDeleter>;

struct Options {
  std::string env = "stochastic-windy";
  std::string algo = "qsigma";
  std::optional<std::string> alpha;
  std::optional<std::string> sigma;
  double sigma_decay = 0.99;
  std::optional<std::string> lambda;
  std::uint64_t episodes = 100;
  std::uint64_t runs = 200;
  std::uint64_t seed = 0;
  double epsilon = 0.1;
  double gamma = 1.0;
  std::uint64_t max_steps = 10000;
  std::string trace_kind = "sigma_weighted";
  std::string target = "greedy";
  std::string out = "results";
  std::string manifest;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(part);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

double parse_real(const std::string& flag, const std::string& token) {
  if (token.empty()) throw UsageError(flag + ": empty value in list");
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || !std::isfinite(value)) throw UsageError(flag + ": '" + token + "' is not a number");
  return value;
}

void check_range(const std::string& flag, double value, double lo, double hi, bool lo_open) {
  const bool bad = (lo_open ? value <= lo : value < lo) || value > hi;
  if (bad) {
    std::ostringstream os;
    os << flag << ": value " << value << " is outside " << (lo_open ? "(" : "[") << lo << ", " << hi << "]";
    throw UsageError(os.str());
  }
}

// Rounds to 12 decimals so 0.1:1.0:0.1 yields exactly 0.3 rather than 0.30000000000000004.
double tidy(double x) { return std::round(x * 1e12) / 1e12; }

std::vector<double> parse_grid(const std::string& flag, const std::string& text, double lo, double hi, bool lo_open) {
  std::vector<double> values;
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw UsageError(flag + ": range must be start:stop:step");
    const double start = parse_real(flag, parts[0]);
    const double stop = parse_real(flag, parts[1]);
    const double step = parse_real(flag, parts[2]);
    if (!(step > 0.0) || stop < start) throw UsageError(flag + ": range needs step > 0 and stop >= start");
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (long i = 0; i < count; ++i) values.push_back(tidy(start + static_cast<double>(i) * step));
  } else {
    for (const auto& token : split(text, ',')) values.push_back(parse_real(flag, token));
  }
  if (values.empty()) throw UsageError(flag + ": empty grid");
  for (double v : values) check_range(flag, v, lo, hi, lo_open);
  return values;
}

void check(qsigma_status status, bool usage) {
  if (status == QSIGMA_OK) return;
  const std::string message = qsigma_last_error();
  if (usage && (status == QSIGMA_INVALID_ARGUMENT || status == QSIGMA_CONFIG_ERROR)) throw UsageError(message);
  throw std::runtime_error(message);
}

unsigned thread_count() {
  const char* text = std::getenv("QSIGMA_THREADS");
  if (text == nullptr || *text == '\0') return 0;
  const double value = parse_real("QSIGMA_THREADS", text);
  if (value < 1 || value != std::floor(value)) throw UsageError("QSIGMA_THREADS must be a positive integer");
  return static_cast<unsigned>(value);
}

ExperimentPtr build_experiment(const Options& o, bool single_point) {
  qsigma_experiment* raw = nullptr;
  check(qsigma_experiment_create(&raw), false);
  ExperimentPtr exp(raw);

  check(qsigma_experiment_set_env(exp.get(), o.env.c_str()), true);
  check(qsigma_experiment_set_algorithm(exp.get(), o.algo.c_str()), true);
  check_range("--sigma-decay", o.sigma_decay, 0.0, 1.0, true);
  check_range("--epsilon", o.epsilon, 0.0, 1.0, false);
  check_range("--gamma", o.gamma, 0.0, 1.0, false);
  if (o.episodes == 0) throw UsageError("--episodes: must be >= 1");
  if (o.runs == 0) throw UsageError("--runs: must be >= 1");
  if (o.max_steps == 0) throw UsageError("--max-steps: must be >= 1");

  const auto alphas = parse_grid("--alpha", o.alpha.value_or(single_point ? "0.5" : "0.1:1.0:0.1"), 0.0, 1.0, true);
  const auto lambdas = parse_grid("--lambda", o.lambda.value_or(single_point ? "0" : "0,0.7"), 0.0, 1.0, false);

  std::string sigma_text = o.sigma.value_or(single_point ? "1" : "0,0.5,1,dyn");
  if (!o.sigma && (o.algo == "qlearning" || o.algo == "expected-sarsa")) sigma_text = "0";
  if (!o.sigma && o.algo == "sarsa") sigma_text = "1";
  std::vector<double> sigmas;
  std::vector<int> dynamic;
  for (const auto& token : split(sigma_text, ',')) {
    if (token == "dyn") {
      sigmas.push_back(1.0);
      dynamic.push_back(1);
    } else {
      const double v = parse_real("--sigma", token);
      check_range("--sigma", v, 0.0, 1.0, false);
      sigmas.push_back(v);
      dynamic.push_back(0);
    }
  }
  if (sigmas.empty()) throw UsageError("--sigma: empty grid");
  if (single_point && (alphas.size() != 1 || sigmas.size() != 1 || lambdas.size() != 1)) {
    throw UsageError("run takes single values for --alpha, --sigma and --lambda; use sweep for grids");
  }

  check(qsigma_experiment_set_alphas(exp.get(), alphas.data(), alphas.size()), true);
  check(qsigma_experiment_set_sigmas(exp.get(), sigmas.data(), dynamic.data(), sigmas.size()), true);
  check(qsigma_experiment_set_lambdas(exp.get(), lambdas.data(), lambdas.size()), true);
  check(qsigma_experiment_set_sigma_decay(exp.get(), o.sigma_decay), true);
  check(qsigma_experiment_set_episodes(exp.get(), o.episodes), true);
  check(qsigma_experiment_set_runs(exp.get(), o.runs), true);
  check(qsigma_experiment_set_epsilon(exp.get(), o.epsilon), true);
  check(qsigma_experiment_set_gamma(exp.get(), o.gamma), true);
  check(qsigma_experiment_set_seed(exp.get(), o.seed), true);
  check(qsigma_experiment_set_max_steps(exp.get(), o.max_steps), true);
  check(qsigma_experiment_set_trace_kind(exp.get(), o.trace_kind.c_str()), true);
  check(qsigma_experiment_set_target_policy(exp.get(), o.target.c_str()), true);
  check(qsigma_experiment_validate(exp.get()), true);
  return exp;
}

void execute(const qsigma_experiment* exp, const std::string& out_dir, bool with_svg) {
  const unsigned threads = thread_count();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + out_dir + "': " + ec.message());

  qsigma_results* raw = nullptr;
  check(qsigma_experiment_run(exp, threads, &raw), true);
  ResultsPtr results(raw);

  const std::filesystem::path dir(out_dir);
  check(qsigma_results_write_raw_csv(results.get(), (dir / "raw.csv").string().c_str()), false);
  check(qsigma_results_write_aggregate_csv(results.get(), (dir / "aggregate.csv").string().c_str()), false);
  check(qsigma_results_write_manifest(results.get(), (dir / "manifest.json").string().c_str()), false);
  if (with_svg) check(qsigma_results_write_svg(results.get(), (dir / "chart.svg").string().c_str(), nullptr), false);

  std::printf("%-8s %-8s %-8s %-8s %14s %10s\n", "alpha", "sigma", "decay", "lambda", "mean_return", "stderr");
  const std::size_t n = qsigma_results_num_aggregates(results.get());
  for (std::size_t i = 0; i < n; ++i) {
    qsigma_aggregate a{};
    check(qsigma_results_aggregate(results.get(), i, &a), false);
    std::printf("%-8g %-8g %-8g %-8g %14.4f %10.4f\n", a.alpha, a.sigma, a.sigma_decay, a.lambda, a.mean_avg_return,
                a.stderr_avg_return);
  }
  const auto truncated = qsigma_results_truncated_episodes(results.get());
  if (truncated > 0) {
    std::fprintf(stderr, "warning: %llu episodes hit the step cap and report truncated returns\n",
                 static_cast<unsigned long long>(truncated));
  }
  std::printf("wrote %s\n", dir.string().c_str());
}

void add_experiment_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--env", o.env, "windy | stochastic-windy | chain:<n> | maxbias")->capture_default_str();
  cmd->add_option("--algo", o.algo, "qsigma | double-qsigma | sarsa | qlearning | expected-sarsa")
      ->capture_default_str();
  cmd->add_option("--alpha", o.alpha, "step size(s): list a,b,c or range start:stop:step");
  cmd->add_option("--sigma", o.sigma, "sigma value(s) in [0,1], or 'dyn' for the decaying schedule");
  cmd->add_option("--sigma-decay", o.sigma_decay, "per-episode multiplier for 'dyn'")->capture_default_str();
  cmd->add_option("--lambda", o.lambda, "trace decay value(s) in [0,1]");
  cmd->add_option("--episodes", o.episodes, "episodes per run")->capture_default_str();
  cmd->add_option("--runs", o.runs, "independent runs per grid point")->capture_default_str();
  cmd->add_option("--seed", o.seed, "master seed")->capture_default_str();
  cmd->add_option("--epsilon", o.epsilon, "behaviour exploration rate")->capture_default_str();
  cmd->add_option("--gamma", o.gamma, "discount")->capture_default_str();
  cmd->add_option("--max-steps", o.max_steps, "per-episode step cap")->capture_default_str();
  cmd->add_option("--trace-kind", o.trace_kind, "sigma_weighted | pi_weighted | accumulating")
      ->capture_default_str();
  cmd->add_option("--target", o.target, "target policy: greedy | epsilon_greedy | uniform")->capture_default_str();
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular Q(sigma, lambda) experiments on gridworld benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qsigma_version());

  Options o;
  auto* run = app.add_subcommand("run", "one configuration, many runs");
  add_experiment_flags(run, o);
  auto* sweep = app.add_subcommand("sweep", "full-factorial sweep over alpha x sigma x lambda, with SVG chart");
  add_experiment_flags(sweep, o);
  auto* replay = app.add_subcommand("replay", "re-run the experiment recorded in a manifest");
  replay->add_option("--manifest", o.manifest, "manifest.json from an earlier run")->required();
  replay->add_option("--out", o.out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (replay->parsed()) {
      std::ifstream in(o.manifest, std::ios::binary);
      if (!in) throw std::runtime_error("cannot read manifest '" + o.manifest + "'");
      std::stringstream text;
      text << in.rdbuf();
      qsigma_experiment* raw = nullptr;
      check(qsigma_experiment_from_manifest(text.str().c_str(), &raw), true);
      ExperimentPtr exp(raw);
      check(qsigma_experiment_validate(exp.get()), true);
      execute(exp.get(), o.out, true);
    } else {
      const bool single = run->parsed();
      const ExperimentPtr exp = build_experiment(o, single);
      execute(exp.get(), o.out, !single);
    }
  } catch (const UsageError& e) {
    CLI::App* active = replay->parsed() ? replay : (run->parsed() ? run : sweep);
    std::cerr << "error: " << e.what() << "\n\n" << active->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
