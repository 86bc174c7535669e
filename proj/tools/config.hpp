#pragma once

// Run configuration for the command-line tool: a JSON document whose omitted
// fields fall back to the library defaults.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stocycle/model.hpp"
#include "stocycle/prior.hpp"
#include "stocycle/sampler.hpp"

namespace stocycle::app {

inline constexpr int kSchemaVersion = 1;

struct DataConfig {
  std::filesystem::path path;
  std::string column;  // empty: first column
  int periods_per_year = 4;
};

// Explicit prior supports; when absent the supports are built around the
// periodogram peaks.
struct PriorOverrides {
  double lambda_half_width = 0.25;
  std::vector<BetaInterval> lambda;
  std::vector<BetaInterval> p_shift;
};

struct AnalysisConfig {
  double ci_level = 0.95;
  std::vector<double> ellipse_levels{0.30, 0.60, 0.90};
  std::size_t forecast_horizon = 20;
  std::size_t paths_per_draw = 20;
  std::size_t max_draws = 1000;
  std::vector<double> clock_window_years{4.0, 8.0};
};

struct SimulateConfig {
  std::size_t n = 120;
  ModelParameters parameters;
  bool present = false;
};

struct RunConfig {
  std::filesystem::path source;  // the config file itself
  DataConfig data;
  Dimensions dims;
  PriorSpec prior;  // shapes and hyperparameters; supports filled in by resolve_prior
  PriorOverrides overrides;
  SamplerConfig sampler;
  AnalysisConfig analysis;
  SimulateConfig simulate;
  std::filesystem::path output = "out";
  bool data_required = true;

  // Canonical JSON form of every resolved setting.
  nlohmann::json to_json() const;
  // FNV-1a of the canonical form, as 16 hex digits.
  std::string hash() const;
  // Hash over the settings that determine a fit (data, model, prior, sampler).
  std::string fit_hash() const;
};

struct Overrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> chains;
};

// Parses and validates the file. Throws ConfigError listing every violation.
// Relative paths are resolved against the directory of the file. With
// `need_data` false the data section may be absent (the simulate command).
RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides, bool need_data);
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                       const Overrides& overrides, bool need_data);

// Completes the prior with frequency and phase supports from the overrides or
// the periodogram peaks, then checks it. Throws ConfigError on violations.
PriorSpec resolve_prior(const RunConfig& config, std::span<const double> peaks);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex16(std::uint64_t h);

}  // namespace stocycle::app
