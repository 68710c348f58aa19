#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "pas/solvers.hpp"

namespace pas {

enum class NormKind { l1, l2 };

std::string to_string(NormKind kind);
NormKind norm_kind_from_string(const std::string& name);

enum class LossKind { l1, l2, pseudo_huber };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

// Scalar training loss of a residual vector. The same functions back both the
// training objective and the reported metrics so the two can never drift:
//   l1           -> sum |r_i|
//   l2           -> sum r_i^2 (squared distance)
//   pseudo_huber -> sqrt(sum r_i^2 + scale^2) - scale
// per_dimension divides the value by the dimension (the convention the
// default tolerances are calibrated against).
struct LossOptions {
  LossKind kind = LossKind::l1;
  double huber_scale = 0.03;
  bool per_dimension = true;
};

double loss_value(const LossOptions& options, const Eigen::VectorXd& residual);
// d loss / d residual; for l1 the subgradient sign(r) with sign(0) = 0.
Eigen::VectorXd loss_gradient(const LossOptions& options, const Eigen::VectorXd& residual);

// Distance between states: l1 -> sum |r|, l2 -> sqrt(sum r^2). per_dimension
// rescales to a per-coordinate magnitude: l1 / D and l2 / sqrt(D).
double state_distance(NormKind norm, const Eigen::VectorXd& residual,
                      bool per_dimension = false);

// Distance to the reference at every schedule index, in traversal order
// (index n first, index 0 last). `reference` is indexed by schedule index,
// as produced by generate_ground_truth.
struct ErrorCurve {
  std::vector<int> step_indices;
  std::vector<double> times;
  std::vector<double> values;
};

ErrorCurve truncation_error_curve(const TrajectoryRecord& trajectory,
                                  const std::vector<Eigen::VectorXd>& reference, NormKind norm,
                                  bool per_dimension = false);

// Pointwise mean of curves over a batch; all curves must share the grid.
ErrorCurve average_error_curves(const std::vector<ErrorCurve>& curves);

// Where the error accumulates along the traversal. Increment j is
// values[j] - values[j-1], attributed to the j-th step taken (1-based).
// head/mid/tail are mean increments over the first, middle, and last third.
struct GrowthProfile {
  int argmax_position = 0;    // 1-based position of the largest increment
  int argmax_step_index = 0;  // schedule index reached by that step
  double head_mean = 0.0;
  double mid_mean = 0.0;
  double tail_mean = 0.0;
  bool argmax_interior() const { return argmax_position > 1 && argmax_position < positions; }
  int positions = 0;  // number of steps in the curve
};

GrowthProfile error_growth_profile(const ErrorCurve& curve);

// Batch mean of final-state errors. The l2 variant reports the mean *squared*
// distance (matching the l2 training loss); l1 reports the mean absolute sum.
double final_state_error(const std::vector<Eigen::VectorXd>& finals,
                         const std::vector<Eigen::VectorXd>& references, NormKind norm,
                         bool per_dimension = false);

}  // namespace pas
