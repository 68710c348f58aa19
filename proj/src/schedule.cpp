#include "pas/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pas {

TimeSchedule build_schedule(double rho, double t_min, double t_max, int n_steps) {
  if (!(std::isfinite(rho) && rho > 0.0))
    throw std::invalid_argument("build_schedule: rho must be finite and > 0, got " + std::to_string(rho));
  if (!(std::isfinite(t_min) && std::isfinite(t_max) && 0.0 < t_min && t_min < t_max))
    throw std::invalid_argument("build_schedule: need 0 < t_min < t_max, got t_min=" +
                                std::to_string(t_min) + " t_max=" + std::to_string(t_max));
  if (n_steps < 1)
    throw std::invalid_argument("build_schedule: n_steps must be >= 1, got " + std::to_string(n_steps));

  TimeSchedule s;
  s.rho = rho;
  s.t_min = t_min;
  s.t_max = t_max;
  s.n_steps = n_steps;
  s.times.resize(static_cast<size_t>(n_steps) + 1);

  const double inv_rho = 1.0 / rho;
  const double lo = std::pow(t_min, inv_rho);
  const double hi = std::pow(t_max, inv_rho);
  for (int i = 1; i < n_steps; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(n_steps);
    s.times[static_cast<size_t>(i)] = std::pow(lo + frac * (hi - lo), rho);
  }
  s.times.front() = t_min;
  s.times.back() = t_max;

  for (int i = 0; i < n_steps; ++i) {
    if (!(s.times[static_cast<size_t>(i)] < s.times[static_cast<size_t>(i) + 1]))
      throw std::invalid_argument("build_schedule: grid not strictly increasing at index " +
                                  std::to_string(i));
  }
  return s;
}

TeacherRefinement refine_for_teacher(const TimeSchedule& student, int min_teacher_steps) {
  if (student.times.size() != static_cast<size_t>(student.n_steps) + 1)
    throw std::invalid_argument("refine_for_teacher: student schedule not built");
  if (min_teacher_steps < student.n_steps)
    throw std::invalid_argument("refine_for_teacher: teacher resolution " +
                                std::to_string(min_teacher_steps) +
                                " is below the student's " + std::to_string(student.n_steps) +
                                " steps");

  const int n = student.n_steps;
  const int m = (min_teacher_steps + n - 1) / n - 1;
  TeacherRefinement r;
  r.inserted_per_step = m;
  r.teacher = build_schedule(student.rho, student.t_min, student.t_max, n * (m + 1));
  return r;
}

}  // namespace pas
