#pragma once

#include <vector>

namespace pas {

// Monotone time grid times[0] = t_min < ... < times[n_steps] = t_max.
// Sampling traverses indices n_steps..0, i.e. from t_max down to t_min.
struct TimeSchedule {
  double rho = 7.0;
  double t_min = 0.002;
  double t_max = 80.0;
  int n_steps = 10;
  std::vector<double> times;  // size n_steps + 1, strictly ascending
};

// Polynomial warp between the endpoints:
//   times[i] = (t_min^(1/rho) + (i/n) * (t_max^(1/rho) - t_min^(1/rho)))^rho.
// rho = 1 gives a uniform grid; larger rho concentrates points near t_min.
// Endpoints are stored exactly. Throws std::invalid_argument unless
// rho > 0, 0 < t_min < t_max, n_steps >= 1, all finite.
TimeSchedule build_schedule(double rho, double t_min, double t_max, int n_steps);

// Finer grid for a reference solver. Every student index i lands exactly on
// teacher index i * (inserted_per_step + 1); the grids share rho and endpoints.
struct TeacherRefinement {
  int inserted_per_step = 0;  // M: extra points inside each student interval
  TimeSchedule teacher;       // n_steps = student.n_steps * (M + 1)

  int teacher_index(int student_index) const {
    return student_index * (inserted_per_step + 1);
  }
};

// Chooses the smallest M >= 0 with student.n_steps * (M + 1) >= min_teacher_steps,
// so the teacher runs at least the requested number of steps while keeping the
// student grid as an exact subset. min_teacher_steps == student.n_steps gives
// M = 0 and a teacher grid identical to the student's.
TeacherRefinement refine_for_teacher(const TimeSchedule& student, int min_teacher_steps);

}  // namespace pas
