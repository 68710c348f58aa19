#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pas/correction.hpp"
#include "pas/metrics.hpp"
#include "pas/schedule.hpp"
#include "pas/score_model.hpp"
#include "pas/solvers.hpp"

namespace pas {

// Shortest decimal that parses back to the same double (round-trip safe).
std::string format_double(double value);

// FNV-1a 64-bit; the checksum primitive used by run manifests.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64(const std::string& text);
// "fnv1a64:<16 hex digits>", the form stored in manifests.
std::string checksum_string(std::uint64_t checksum);

std::string read_text_file(const std::filesystem::path& path);  // IoError on failure
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

// --- CSV emitters (doubles are round-trip formatted) ---

// Header "index,time"; one row per schedule index 0..n.
std::string schedule_csv(const TimeSchedule& schedule);

// Header "step,time,state_0..,direction_0.."; rows in traversal order
// (index n first). The row at index 0 has no direction columns filled; they
// are left empty since no step is taken from t_0.
std::string trajectory_csv(const TrajectoryRecord& record);

// Header "components,cumulative_fraction"; one row per component count.
std::string cumulative_variance_csv(const std::vector<double>& fractions);

// Optional metadata line ("# key=value,...") then "step,time,error"; rows in
// traversal order.
std::string error_curve_csv(const ErrorCurve& curve, const std::string& metadata);

// --- Binary trajectory container ---
// Little-endian layout, independent of host byte order:
//   bytes 0..7   magic "PASTRAJ1"
//   u32          version (1)
//   u32          D (state dimension)
//   u32          N (steps; the file holds N+1 states)
//   f64 x (N+1)  times, ascending index 0..N
//   f64 x (N+1)*D states, row-major, row i = state at index i
//   f64 x N*D    directions, row-major, row j = direction consumed at index j+1
std::vector<std::uint8_t> trajectory_binary(const TrajectoryRecord& record);

struct TrajectoryFrames {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> directions;
};
TrajectoryFrames read_trajectory_binary(const std::vector<std::uint8_t>& bytes);

// --- Correction table JSON ---
// Schema: {format_version, solver:{kind,order}, schedule:{rho,t_min,t_max,n},
// basis_k, loss, tau, lr, trajectories, seed, entries:[{step, coords:[...]}]}
// plus additive fields (parameterization, teacher_steps, huber_scale,
// per_dimension_loss, per-entry acceptance provenance). Doubles round-trip
// bit-exactly. Unknown keys are rejected.
std::string correction_table_to_json(const CorrectionTable& table);
CorrectionTable correction_table_from_json(const std::string& text);
void save_correction_table(const std::filesystem::path& path, const CorrectionTable& table);
CorrectionTable load_correction_table(const std::filesystem::path& path);

// --- Model specification JSON ---
// Either a preset: {"preset": "isotropic"|"rank2-manifold"|"mixture-symmetric",
// "dimension": D, "seed": S, ["eigenvalues": [...], "floor": f]} or explicit
// components: {"dimension": D, "components": [{"weight", "mean", "eigenvalues",
// "axes": [axis vectors...]}]}. Unknown keys are rejected.
ScoreModel model_from_json(const std::string& text);
std::string model_to_json(const ScoreModel& model);
ScoreModel load_model(const std::filesystem::path& path);

// --- Run manifest ---
struct ArtifactRecord {
  std::string path;  // relative to the manifest's directory
  std::uint64_t bytes = 0;
  std::uint64_t checksum = 0;
};

struct RunManifest {
  int format_version = 1;
  std::string tool = "pas";
  std::string subcommand;
  std::uint64_t seed = 0;
  int threads = 1;
  std::uint64_t config_checksum = 0;
  double wall_time_seconds = 0.0;  // informational; not covered by determinism
  std::vector<ArtifactRecord> artifacts;
};

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);
void save_manifest(const std::filesystem::path& directory, const RunManifest& manifest);
RunManifest load_manifest(const std::filesystem::path& directory);  // IoError when missing

}  // namespace pas
