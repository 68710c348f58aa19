#include "pas/solvers.hpp"

#include <cmath>
#include <stdexcept>

#include "pas/errors.hpp"

namespace pas {

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::euler: return "euler";
    case SolverKind::ipndm: return "ipndm";
    case SolverKind::heun: return "heun";
  }
  return "unknown";
}

SolverKind solver_kind_from_string(const std::string& name) {
  if (name == "euler") return SolverKind::euler;
  if (name == "ipndm") return SolverKind::ipndm;
  if (name == "heun") return SolverKind::heun;
  throw ConfigError("unknown solver kind '" + name + "' (expected euler, ipndm, or heun)");
}

const std::vector<double>& multistep_weights(int effective_order) {
  static const std::vector<double> tables[4] = {
      {1.0},
      {3.0 / 2.0, -1.0 / 2.0},
      {23.0 / 12.0, -16.0 / 12.0, 5.0 / 12.0},
      {55.0 / 24.0, -59.0 / 24.0, 37.0 / 24.0, -9.0 / 24.0},
  };
  if (effective_order < 1 || effective_order > 4)
    throw std::invalid_argument("multistep_weights: order must be in [1, 4], got " +
                                std::to_string(effective_order));
  return tables[effective_order - 1];
}

Eigen::VectorXd euler_step(const Eigen::VectorXd& x, const Eigen::VectorXd& d, double t,
                           double t_prev) {
  if (d.size() != x.size())
    throw std::invalid_argument("euler_step: direction size does not match state size");
  return x + (t_prev - t) * d;
}

StepResult ipndm_step(const Eigen::VectorXd& x, const Eigen::VectorXd& d,
                      const HistoryBuffer& history, int order, double t, double t_prev) {
  if (order < 1 || order > 4)
    throw std::invalid_argument("ipndm_step: order must be in [1, 4], got " +
                                std::to_string(order));
  if (d.size() != x.size())
    throw std::invalid_argument("ipndm_step: direction size does not match state size");
  const int available = static_cast<int>(history.directions.size());
  const int effective = std::min(order, available + 1);
  const std::vector<double>& w = multistep_weights(effective);
  const double h = t_prev - t;

  StepResult out;
  Eigen::VectorXd combo = w[0] * d;
  for (int j = 1; j < effective; ++j) {
    const Eigen::VectorXd& past =
        history.directions[static_cast<size_t>(available - j)];
    if (past.size() != x.size())
      throw std::invalid_argument("ipndm_step: history direction size mismatch");
    combo.noalias() += w[static_cast<size_t>(j)] * past;
  }
  out.state = x + h * combo;
  out.direction_sensitivity = h * w[0];
  return out;
}

namespace {

Eigen::VectorXd heun_step_given(const DirectionField& field, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& d, double t, double t_prev) {
  const double h = t_prev - t;
  const Eigen::VectorXd predictor = x + h * d;
  const Eigen::VectorXd d_end = field(predictor, t_prev);
  return x + h * 0.5 * (d + d_end);
}

}  // namespace

Eigen::VectorXd heun_step(const DirectionField& field, const Eigen::VectorXd& x, double t,
                          double t_prev) {
  return heun_step_given(field, x, field(x, t), t, t_prev);
}

namespace detail {

// Single traversal shared by plain and corrected sampling so that a no-op
// correction reproduces plain sampling bit for bit. `adjust`, when non-null,
// may replace the direction about to be consumed; the replacement is what
// gets recorded and buffered.
TrajectoryRecord sample_with_adjustment(
    const DirectionField& field, const SolverSpec& spec, const TimeSchedule& schedule,
    const Eigen::VectorXd& x_terminal,
    const std::function<Eigen::VectorXd(int, const Eigen::VectorXd&, const HistoryBuffer&)>&
        adjust) {
  const int n = schedule.n_steps;
  if (schedule.times.size() != static_cast<size_t>(n) + 1)
    throw std::invalid_argument("sample: schedule not built");
  if (spec.kind == SolverKind::ipndm && (spec.order < 1 || spec.order > 4))
    throw std::invalid_argument("sample: ipndm order must be in [1, 4], got " +
                                std::to_string(spec.order));
  if (!x_terminal.allFinite())
    throw std::invalid_argument("sample: terminal state has non-finite entries");

  TrajectoryRecord rec;
  rec.schedule = schedule;
  rec.states.resize(static_cast<size_t>(n) + 1);
  rec.directions.resize(static_cast<size_t>(n));
  rec.states[static_cast<size_t>(n)] = x_terminal;

  HistoryBuffer buffer;
  buffer.origin = x_terminal;
  buffer.directions.reserve(static_cast<size_t>(n));

  Eigen::VectorXd x = x_terminal;
  for (int i = n; i >= 1; --i) {
    const double t = schedule.times[static_cast<size_t>(i)];
    const double t_prev = schedule.times[static_cast<size_t>(i) - 1];
    Eigen::VectorXd d = field(x, t);
    ++rec.field_evaluations;
    if (d.size() != x.size())
      throw std::invalid_argument("sample: field output size does not match state size");
    if (adjust) d = adjust(i, d, buffer);

    switch (spec.kind) {
      case SolverKind::euler:
        x = euler_step(x, d, t, t_prev);
        break;
      case SolverKind::ipndm:
        x = ipndm_step(x, d, buffer, spec.order, t, t_prev).state;
        break;
      case SolverKind::heun:
        x = heun_step_given(field, x, d, t, t_prev);
        ++rec.field_evaluations;
        break;
    }
    if (!x.allFinite())
      throw NumericalError("sample: state became non-finite at step index " + std::to_string(i));

    rec.directions[static_cast<size_t>(i) - 1] = d;
    rec.states[static_cast<size_t>(i) - 1] = x;
    buffer.directions.push_back(std::move(d));
  }
  return rec;
}

}  // namespace detail

TrajectoryRecord sample(const DirectionField& field, const SolverSpec& spec,
                        const TimeSchedule& schedule, const Eigen::VectorXd& x_terminal) {
  return detail::sample_with_adjustment(field, spec, schedule, x_terminal, nullptr);
}

std::vector<Eigen::VectorXd> generate_ground_truth(const DirectionField& field,
                                                   const TimeSchedule& student,
                                                   const Eigen::VectorXd& x_terminal,
                                                   int min_teacher_steps,
                                                   SolverKind teacher_kind) {
  if (teacher_kind == SolverKind::ipndm)
    throw std::invalid_argument("generate_ground_truth: teacher must be euler or heun");
  const TeacherRefinement refinement = refine_for_teacher(student, min_teacher_steps);
  SolverSpec teacher_spec;
  teacher_spec.kind = teacher_kind;
  const TrajectoryRecord rec = sample(field, teacher_spec, refinement.teacher, x_terminal);
  std::vector<Eigen::VectorXd> reference(static_cast<size_t>(student.n_steps) + 1);
  for (int i = 0; i <= student.n_steps; ++i)
    reference[static_cast<size_t>(i)] = rec.state(refinement.teacher_index(i));
  return reference;
}

}  // namespace pas
