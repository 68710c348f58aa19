#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pas/metrics.hpp"
#include "pas/schedule.hpp"
#include "pas/score_model.hpp"
#include "pas/solvers.hpp"

namespace pas {

// How one shared coordinate vector maps onto per-trajectory bases.
//   absolute: correction = basis * coords; coords carry magnitudes directly.
//   relative: correction = |d| * basis * coords; coords are dimensionless
//             gains, so trajectories with different direction norms reuse the
//             same coordinates. coords[0] multiplies d itself since the first
//             basis column is d / |d|.
enum class CoordinateParam { absolute, relative };

std::string to_string(CoordinateParam param);
CoordinateParam coordinate_param_from_string(const std::string& name);

struct TrainConfig {
  int basis_k = 4;
  LossOptions loss = {};  // l1, per-dimension mean
  double learning_rate = 1e-2;
  int inner_iterations = 100;
  int batch_size = 0;  // samples per optimizer iteration; 0 = full batch
  double tau = 1e-4;   // acceptance margin until the first accepted step
  int trajectories = 5000;
  int teacher_steps = 100;
  SolverKind teacher_kind = SolverKind::heun;
  CoordinateParam parameterization = CoordinateParam::absolute;
  std::uint64_t seed = 0;
  int threads = 1;
};

// After the first accepted step the acceptance margin drops to this fixed
// value; the configured tau only gates where correction commences.
inline constexpr double kLaterTau = 1e-4;

struct CorrectionEntry {
  int step_index = 0;
  Eigen::VectorXd coords;
  // Acceptance-time provenance.
  double loss_uncorrected = 0.0;
  double loss_corrected = 0.0;
  double tau_used = 0.0;
};

struct CorrectionTable {
  int format_version = 1;
  SolverSpec solver;
  double rho = 7.0;
  double t_min = 0.002;
  double t_max = 80.0;
  int n_steps = 10;
  int basis_k = 4;
  LossKind loss = LossKind::l1;
  double huber_scale = 0.03;
  bool per_dimension_loss = true;
  double tau = 1e-4;
  double learning_rate = 1e-2;
  int trajectories = 0;
  int teacher_steps = 100;
  CoordinateParam parameterization = CoordinateParam::absolute;
  std::uint64_t seed = 0;
  std::vector<CorrectionEntry> entries;  // descending step_index, each unique in [1, n_steps]

  const CorrectionEntry* find(int step_index) const;
  int stored_scalars() const;
  // "i_a,i_b,..." in descending order; "-" when empty.
  std::string corrected_steps_string() const;
};

// One training step's optimization problem: a batch of trajectories frozen at
// the same schedule index, each with its own state, basis, and multistep
// history, sharing one coordinate vector. Steps are affine in the corrected
// direction, so the batch keeps the per-sample affine form alongside the raw
// ingredients needed to rerun the true solver route.
struct CoordinateProblem {
  double t = 0.0;
  double t_prev = 0.0;
  SolverSpec solver;
  int coord_size = 0;
  std::vector<const Eigen::VectorXd*> states;
  std::vector<const HistoryBuffer*> histories;  // nullptr allowed for euler
  std::vector<const Eigen::VectorXd*> targets;
  std::vector<Eigen::MatrixXd> bases;  // D x k_s with k_s <= coord_size
  std::vector<double> scales;          // 1 (absolute) or |d_s| (relative)
  int threads = 1;
};

// Batch-mean loss at the given shared coordinates, evaluated through the real
// solver step (the route the finite-difference oracle also uses).
double coordinate_loss(const CoordinateProblem& problem, const Eigen::VectorXd& coords,
                       const LossOptions& loss);

// Analytic batch-mean gradient, using the affine form of the step:
// d(x_out)/d(coords) = sensitivity * scale_s * basis_s.
Eigen::VectorXd coordinate_gradient(const CoordinateProblem& problem,
                                    const Eigen::VectorXd& coords, const LossOptions& loss);

// Central finite differences through coordinate_loss; the independent route
// for validating coordinate_gradient, and a fallback for non-affine solvers.
Eigen::VectorXd coordinate_gradient_fd(const CoordinateProblem& problem,
                                       const Eigen::VectorXd& coords, const LossOptions& loss,
                                       double delta);

// Plain gradient descent from `init` (fixed step size, fixed iteration count,
// mini-batches cycled in deterministic order). Returns the final iterate,
// which may be worse than the start; acceptance decides whether to keep it.
Eigen::VectorXd optimize_coordinates(const CoordinateProblem& problem,
                                     const Eigen::VectorXd& init, const TrainConfig& config);

// Keep the correction only when it beats the uncorrected loss by more than
// tau. Non-finite corrected losses never pass; tau = +infinity never accepts.
bool adaptive_accept(double loss_corrected, double loss_uncorrected, double tau);

struct StepLog {
  int step_index = 0;
  double t = 0.0;
  double t_prev = 0.0;
  double loss_uncorrected = 0.0;
  double loss_corrected = 0.0;
  double tau_used = 0.0;
  bool accepted = false;
  bool divergence = false;  // corrected loss or coordinates went non-finite
  double sensitivity = 0.0;
  int max_effective_k = 0;
};

struct TrainResult {
  CorrectionTable table;
  std::vector<StepLog> log;
};

// Trains the per-step shared coordinates along the solver's own traversal:
// at each step, build per-trajectory bases from the live buffers, optimize
// the shared coordinates against teacher targets, accept or reject, and
// advance every trajectory with whichever direction won. Teacher targets are
// generated once from the uncorrected teacher run and stay fixed.
TrainResult train_correction_table(const DirectionField& field, const SolverSpec& student,
                                   const TimeSchedule& schedule,
                                   const std::vector<Eigen::VectorXd>& terminal_states,
                                   const TrainConfig& config);

// Convenience overload: draws config.trajectories terminal states from the
// model at schedule.t_max using per-sample streams of config.seed.
TrainResult train_correction_table(const ScoreModel& model, const SolverSpec& student,
                                   const TimeSchedule& schedule, const TrainConfig& config);

// Replays sampling with stored corrections: at table steps the basis is
// rebuilt from the live buffer and the stored coordinates replace the
// direction before the step; corrected directions enter the buffer. The
// requested solver and schedule must match the table's metadata exactly
// (IncompatibleTableError otherwise). An empty table reproduces sample()
// bit for bit.
TrajectoryRecord sample_with_correction(const DirectionField& field, const SolverSpec& spec,
                                        const TimeSchedule& schedule,
                                        const CorrectionTable& table,
                                        const Eigen::VectorXd& x_terminal);

}  // namespace pas
