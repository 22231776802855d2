#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "qsigma/harness.hpp"

namespace qsigma {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kRawCsvHeader = "alpha,sigma,sigma_decay,lambda,run,episode,ret";
inline constexpr const char* kAggregateCsvHeader = "alpha,sigma,sigma_decay,lambda,runs,mean_avg_return,stderr";

/// Six significant digits, '.' separator, independent of the C locale.
std::string format_number(double value);

std::string raw_csv(std::span<const RunRecord> records);
std::string aggregate_csv(std::span<const AggregateRecord> aggregates);
/// Mean average return against alpha, one polyline per (sigma, decay, lambda)
/// with standard-error whiskers. Static markup only.
std::string svg_chart(std::span<const AggregateRecord> aggregates, const std::string& title);

/// Spec echo plus tool version. `truncated_episodes` is informational and not
/// read back.
std::string manifest_json(const ExperimentSpec& spec, std::uint64_t truncated_episodes);
/// Inverse of manifest_json. Throws kConfiguration on malformed input.
ExperimentSpec spec_from_manifest(const std::string& json);

/// Writes `contents` to `path`, throwing kIo with the path on failure.
void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace qsigma
