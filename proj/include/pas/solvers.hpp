#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "pas/schedule.hpp"

namespace pas {

// Noise-prediction field epsilon(x, t); the sampling ODE is dx/dt = epsilon(x, t).
using DirectionField = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>;

enum class SolverKind { euler, ipndm, heun };

std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

struct SolverSpec {
  SolverKind kind = SolverKind::euler;
  int order = 3;  // multistep depth, meaningful for ipndm only (1..4)
};

// Everything a multistep solver has seen so far: terminal state plus the
// direction consumed at each completed step, oldest first.
struct HistoryBuffer {
  Eigen::VectorXd origin;
  std::vector<Eigen::VectorXd> directions;
};

// Linear-multistep weights (newest direction first) for effective order 1..4.
// These are the classical uniform-grid coefficients; the solver applies them
// unchanged on warped grids, which is exactly what makes a correctable
// truncation error.
const std::vector<double>& multistep_weights(int effective_order);

Eigen::VectorXd euler_step(const Eigen::VectorXd& x, const Eigen::VectorXd& d, double t,
                           double t_prev);

struct StepResult {
  Eigen::VectorXd state;
  // d(state)/d(current direction) as a scalar: every step here is affine in
  // the newest direction, with sensitivity (t_prev - t) * weights[0].
  double direction_sensitivity = 0.0;
};

// Multistep step using min(order, history + 1) past directions.
StepResult ipndm_step(const Eigen::VectorXd& x, const Eigen::VectorXd& d,
                      const HistoryBuffer& history, int order, double t, double t_prev);

// Two-evaluation trapezoidal step. Used as the reference (teacher) solver.
Eigen::VectorXd heun_step(const DirectionField& field, const Eigen::VectorXd& x, double t,
                          double t_prev);

struct TrajectoryRecord {
  TimeSchedule schedule;
  std::vector<Eigen::VectorXd> states;      // states[i] = x at times[i], size n+1
  std::vector<Eigen::VectorXd> directions;  // stored at [i-1] for the step taken at times[i]
  long field_evaluations = 0;

  const Eigen::VectorXd& state(int index) const { return states.at(static_cast<size_t>(index)); }
  // Direction consumed at schedule index `index`, valid for 1 <= index <= n.
  const Eigen::VectorXd& direction(int index) const {
    return directions.at(static_cast<size_t>(index - 1));
  }
};

// Runs the solver from x_terminal (at times[n]) down to times[0].
TrajectoryRecord sample(const DirectionField& field, const SolverSpec& spec,
                        const TimeSchedule& schedule, const Eigen::VectorXd& x_terminal);

// Reference states on the student grid: runs `teacher_kind` (euler or heun)
// on the refined grid from refine_for_teacher(student, min_teacher_steps) and
// returns the states at the shared indices, indexed by student schedule index.
std::vector<Eigen::VectorXd> generate_ground_truth(const DirectionField& field,
                                                   const TimeSchedule& student,
                                                   const Eigen::VectorXd& x_terminal,
                                                   int min_teacher_steps,
                                                   SolverKind teacher_kind);

namespace detail {

// Traversal shared by plain and corrected sampling. `adjust`, when non-null,
// may replace the direction about to be consumed at a step; the replacement
// is what gets recorded and buffered. With a null hook this is sample().
TrajectoryRecord sample_with_adjustment(
    const DirectionField& field, const SolverSpec& spec, const TimeSchedule& schedule,
    const Eigen::VectorXd& x_terminal,
    const std::function<Eigen::VectorXd(int, const Eigen::VectorXd&, const HistoryBuffer&)>&
        adjust);

}  // namespace detail

}  // namespace pas
