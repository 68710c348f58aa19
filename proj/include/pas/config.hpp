#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pas/correction.hpp"
#include "pas/metrics.hpp"
#include "pas/schedule.hpp"
#include "pas/score_model.hpp"
#include "pas/solvers.hpp"

namespace pas {

struct ScheduleParams {
  double rho = 7.0;
  double t_min = 0.002;
  double t_max = 80.0;
  int n_steps = 10;
};

struct SamplingConfig {
  int count = 4;
  std::string format = "csv";  // "csv" or "binary"
};

struct SubspaceConfig {
  std::string mode = "per-trajectory";  // or "pooled"
  int trajectories = 100;
  int max_k = 8;
};

struct ErrorCurveConfig {
  int trajectories = 64;
  NormKind norm = NormKind::l2;
  bool per_dimension = false;
  int teacher_steps = 100;
  SolverKind teacher_kind = SolverKind::heun;
};

// One experiment, fully determined by a JSON file: every field is config-file
// driven; command-line flags override only seed/threads/output directory, and
// the environment (PAS_OUT, PAS_THREADS) only those last two aspects.
struct ExperimentConfig {
  std::string model_json;               // inline model object (serialized), or
  std::filesystem::path model_file;     // a file path, relative to config_dir
  std::filesystem::path config_dir;     // directory the config was loaded from
  ScheduleParams schedule;
  SolverSpec solver;
  TrainConfig train;
  SamplingConfig sampling;
  SubspaceConfig subspace;
  ErrorCurveConfig error_curve;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_dir;

  bool has_model() const { return !model_json.empty() || !model_file.empty(); }
};

// Parses and validates; unknown or ill-typed keys raise ConfigError naming
// the offending section and key. "tau" additionally accepts the string "inf"
// (infinite tolerance disables correction).
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Instantiates the configured model (inline spec or referenced file).
// Throws ConfigError when the config has no model section.
ScoreModel build_model(const ExperimentConfig& config);

TimeSchedule build_schedule(const ScheduleParams& params);

}  // namespace pas
