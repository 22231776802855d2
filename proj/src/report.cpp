#include "qsigma/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace qsigma {
namespace {

using nlohmann::json;

void append_point(std::string& out, const ConfigPoint& p) {
  out += format_number(p.alpha);
  out += ',';
  out += format_number(p.sigma);
  out += ',';
  out += format_number(p.sigma_decay);
  out += ',';
  out += format_number(p.lambda);
  out += ',';
}

std::string series_label(const ConfigPoint& p) {
  std::string label = "sigma=";
  label += p.sigma_decay < 1.0 ? "dyn(" + format_number(p.sigma) + "x" + format_number(p.sigma_decay) + ")"
                               : format_number(p.sigma);
  label += " lambda=" + format_number(p.lambda);
  return label;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

json sigma_to_json(const SigmaSetting& s) {
  if (s.dynamic) return json{{"dynamic", true}, {"initial", s.value}};
  return s.value;
}

SigmaSetting sigma_from_json(const json& j) {
  if (j.is_number()) return SigmaSetting::fixed(j.get<double>());
  return SigmaSetting::decaying(j.at("initial").get<double>());
}

}  // namespace

std::string format_number(double value) {
  if (value == 0.0) return "0";
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 6);
  return std::string(buf.data(), end);
}

std::string raw_csv(std::span<const RunRecord> records) {
  std::string out = kRawCsvHeader;
  out += '\n';
  for (const auto& r : records) {
    std::string prefix;
    append_point(prefix, r.point);
    prefix += std::to_string(r.run_index);
    prefix += ',';
    for (std::size_t e = 0; e < r.returns.size(); ++e) {
      out += prefix;
      out += std::to_string(e);
      out += ',';
      out += format_number(r.returns[e]);
      out += '\n';
    }
  }
  return out;
}

std::string aggregate_csv(std::span<const AggregateRecord> aggregates) {
  std::string out = kAggregateCsvHeader;
  out += '\n';
  for (const auto& a : aggregates) {
    append_point(out, a.point);
    out += std::to_string(a.runs);
    out += ',';
    out += format_number(a.mean_avg_return);
    out += ',';
    out += format_number(a.stderr_avg_return);
    out += '\n';
  }
  return out;
}

std::string svg_chart(std::span<const AggregateRecord> aggregates, const std::string& title) {
  constexpr double kWidth = 820, kHeight = 520;
  constexpr double kLeft = 80, kRight = 230, kTop = 50, kBottom = 60;
  constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                   "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

  std::map<std::tuple<double, double, double>, std::vector<const AggregateRecord*>> series;
  double x_min = 0, x_max = 1, y_min = -1, y_max = 0;
  bool first = true;
  for (const auto& a : aggregates) {
    series[{a.point.sigma, a.point.sigma_decay, a.point.lambda}].push_back(&a);
    const double lo = a.mean_avg_return - a.stderr_avg_return;
    const double hi = a.mean_avg_return + a.stderr_avg_return;
    if (first) {
      x_min = x_max = a.point.alpha;
      y_min = lo;
      y_max = hi;
      first = false;
    }
    x_min = std::min(x_min, a.point.alpha);
    x_max = std::max(x_max, a.point.alpha);
    y_min = std::min(y_min, lo);
    y_max = std::max(y_max, hi);
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  const double y_pad = std::max(1e-9, 0.05 * (y_max - y_min));
  y_min -= y_pad;
  y_max += y_pad;
  if (y_max == y_min) y_max = y_min + 1.0;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kTop + (y_max - y) / (y_max - y_min) * plot_h; };
  auto num = [](double v) { return format_number(v); };

  std::ostringstream os;
  os << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << kWidth << R"(" height=")" << kHeight
     << R"(" font-family="sans-serif" font-size="12">)" << '\n';
  os << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n';
  os << R"(<text x=")" << kLeft + plot_w / 2 << R"(" y="24" text-anchor="middle" font-size="15">)"
     << xml_escape(title) << "</text>\n";
  os << R"(<rect x=")" << kLeft << R"(" y=")" << kTop << R"(" width=")" << plot_w << R"(" height=")" << plot_h
     << R"(" fill="none" stroke="#333"/>)" << '\n';

  for (int i = 0; i <= 5; ++i) {
    const double yv = y_min + (y_max - y_min) * i / 5.0;
    const double xv = x_min + (x_max - x_min) * i / 5.0;
    os << R"(<line x1=")" << kLeft - 5 << R"(" x2=")" << kLeft << R"(" y1=")" << py(yv) << R"(" y2=")" << py(yv)
       << R"(" stroke="#333"/>)";
    os << R"(<text x=")" << kLeft - 8 << R"(" y=")" << py(yv) + 4 << R"(" text-anchor="end">)" << num(yv)
       << "</text>\n";
    os << R"(<line x1=")" << px(xv) << R"(" x2=")" << px(xv) << R"(" y1=")" << kTop + plot_h << R"(" y2=")"
       << kTop + plot_h + 5 << R"(" stroke="#333"/>)";
    os << R"(<text x=")" << px(xv) << R"(" y=")" << kTop + plot_h + 20 << R"(" text-anchor="middle">)" << num(xv)
       << "</text>\n";
  }
  os << R"(<text x=")" << kLeft + plot_w / 2 << R"(" y=")" << kHeight - 15
     << R"(" text-anchor="middle">step size alpha</text>)" << '\n';
  os << R"(<text x="20" y=")" << kTop + plot_h / 2 << R"svg(" text-anchor="middle" transform="rotate(-90 20 )svg"
     << kTop + plot_h / 2 << R"svg()">mean average return</text>)svg" << '\n';

  std::size_t index = 0;
  for (const auto& [key, points] : series) {
    const char* color = kPalette[index % kPalette.size()];
    const bool dashed = std::get<2>(key) == 0.0;
    os << R"(<polyline fill="none" stroke=")" << color << R"(" stroke-width="2")"
       << (dashed ? R"( stroke-dasharray="6 4")" : "") << R"( points=")";
    for (const auto* a : points) os << px(a->point.alpha) << ',' << py(a->mean_avg_return) << ' ';
    os << "\"/>\n";
    for (const auto* a : points) {
      const double x = px(a->point.alpha);
      const double lo = py(a->mean_avg_return - a->stderr_avg_return);
      const double hi = py(a->mean_avg_return + a->stderr_avg_return);
      os << R"(<line x1=")" << x << R"(" x2=")" << x << R"(" y1=")" << lo << R"(" y2=")" << hi << R"(" stroke=")"
         << color << R"("/>)";
      os << R"(<line x1=")" << x - 3 << R"(" x2=")" << x + 3 << R"(" y1=")" << lo << R"(" y2=")" << lo
         << R"(" stroke=")" << color << R"("/>)";
      os << R"(<line x1=")" << x - 3 << R"(" x2=")" << x + 3 << R"(" y1=")" << hi << R"(" y2=")" << hi
         << R"(" stroke=")" << color << R"("/>)" << '\n';
    }
    const double ly = kTop + 10 + 18.0 * static_cast<double>(index);
    const double lx = kWidth - kRight + 15;
    os << R"(<line x1=")" << lx << R"(" x2=")" << lx + 24 << R"(" y1=")" << ly << R"(" y2=")" << ly << R"(" stroke=")"
       << color << R"(" stroke-width="2")" << (dashed ? R"( stroke-dasharray="6 4")" : "") << "/>";
    os << R"(<text x=")" << lx + 30 << R"(" y=")" << ly + 4 << R"(">)"
       << xml_escape(series_label(points.front()->point)) << "</text>\n";
    ++index;
  }
  os << "</svg>\n";
  return os.str();
}

std::string manifest_json(const ExperimentSpec& spec, std::uint64_t truncated_episodes) {
  json sigmas = json::array();
  for (const auto& s : spec.sigmas) sigmas.push_back(sigma_to_json(s));
  json j = {
      {"tool", "qsigma"},
      {"version", kToolVersion},
      {"master_seed", spec.master_seed},
      {"truncated_episodes", truncated_episodes},
      {"spec",
       {
           {"env", spec.env},
           {"algorithm", spec.algorithm},
           {"alphas", spec.alphas},
           {"sigmas", sigmas},
           {"sigma_decay", spec.sigma_decay},
           {"lambdas", spec.lambdas},
           {"episodes", spec.episodes},
           {"runs", spec.runs},
           {"epsilon", spec.epsilon},
           {"gamma", spec.gamma},
           {"max_steps_per_episode", spec.max_steps_per_episode},
           {"trace_kind", std::string(to_string(spec.trace_kind))},
           {"target_policy", std::string(to_string(spec.target_policy))},
       }},
  };
  return j.dump(2) + "\n";
}

ExperimentSpec spec_from_manifest(const std::string& text) {
  try {
    const json j = json::parse(text);
    const json& s = j.at("spec");
    ExperimentSpec spec;
    spec.env = s.at("env").get<std::string>();
    spec.algorithm = s.at("algorithm").get<std::string>();
    spec.alphas = s.at("alphas").get<std::vector<double>>();
    spec.sigmas.clear();
    for (const auto& entry : s.at("sigmas")) spec.sigmas.push_back(sigma_from_json(entry));
    spec.sigma_decay = s.at("sigma_decay").get<double>();
    spec.lambdas = s.at("lambdas").get<std::vector<double>>();
    spec.episodes = s.at("episodes").get<std::uint64_t>();
    spec.runs = s.at("runs").get<std::uint64_t>();
    spec.epsilon = s.at("epsilon").get<double>();
    spec.gamma = s.at("gamma").get<double>();
    spec.max_steps_per_episode = s.at("max_steps_per_episode").get<std::uint64_t>();
    spec.trace_kind = parse_trace_kind(s.at("trace_kind").get<std::string>());
    spec.target_policy = parse_target_policy(s.at("target_policy").get<std::string>());
    spec.master_seed = j.at("master_seed").get<std::uint64_t>();
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("malformed manifest: ") + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace qsigma
