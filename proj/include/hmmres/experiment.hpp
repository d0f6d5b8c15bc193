#pragma once

// Seeded experiment runner. A run writes
//   <outdir>/<kind>/<config-hash>/{manifest.json, report.csv, summary.json}
// (kind "full" writes one report.csv / summary.json pair per sub-experiment
// under a directory named after it). Report bodies depend only on the
// config; the manifest also carries a timestamp.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hmmres/io.hpp"

namespace hmmres {

enum class ExperimentKind { lemma2, concentration, aep, sanov, theorem2, corollary_sweep, classify, full };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::lemma2;
  io::ModelSpec model;
  std::size_t n = 0;
  std::optional<std::size_t> k;  // checked against the model when given
  double delta = 0.0;
  std::size_t restarts = 10;
  std::size_t max_iter = 500;
  double tol = 1e-7;
  std::vector<std::uint64_t> seeds;
  double eps_tol = 0.05;
  /// Required pass fraction; when unset: 0.9 for theorem2, 1 for the sweep,
  /// 0.95 otherwise.
  std::optional<double> pass_threshold;
  // sanov
  std::size_t n_small = 6;
  std::optional<io::Json> sanov_hmm;  // defaults to the reference HMM, uniform start
  // corollary_sweep
  unsigned min_exp = 10;
  unsigned max_exp = 16;
  unsigned burn_in_exp = 12;
  // classify
  double confidence = 0.95;
  std::size_t window = 0;          // 0 = choose_window(confidence)
  bool classify_with_fit = false;  // estimated instead of true sources
  double accuracy_threshold = 0.99;

  std::filesystem::path outdir;
  int jobs = 1;
  bool trace = false;
};

/// Parses a config document. `seeds` is a count (seeds 1..count) or a list;
/// `model` is inline or `model_path` names a model spec file, resolved
/// against `base_dir`. Throws std::invalid_argument on malformed input.
ExperimentConfig config_from_json(const io::Json& j, const std::filesystem::path& base_dir = {});
/// Every field that affects results, in a fixed order (no outdir, jobs, trace).
io::Json to_json(const ExperimentConfig& config);
/// FNV-1a of to_json(config).dump(), as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// All invariant violations, empty for a clean config.
std::vector<std::string> validate(const ExperimentConfig& config);

/// Horizon the run needs: the longest sample drawn.
std::size_t required_horizon(const ExperimentConfig& config);

/// The interval model of the config; a zero horizon is replaced by
/// required_horizon.
IntervalModel build_model(const ExperimentConfig& config);

struct RunManifest {
  std::string config_hash;
  std::string version;
  std::string timestamp;  // UTC, ISO 8601
  std::string kind;
  std::vector<std::uint64_t> sample_seeds;
  std::vector<std::uint64_t> fit_seeds;  // empty when nothing was fitted
  std::vector<std::filesystem::path> files;
  bool passed = false;  // every hard assertion held
  std::vector<std::string> failures;
  std::filesystem::path directory;
};

io::Json to_json(const RunManifest& manifest);

/// Runs the experiment and writes its files. Throws std::invalid_argument when
/// validate() reports anything.
RunManifest run(const ExperimentConfig& config);

inline constexpr const char* kArtifactVersion = "1.0.0";

}  // namespace hmmres
