#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pas/errors.hpp"
#include "pas/metrics.hpp"
#include "pas/rng.hpp"
#include "pas/schedule.hpp"
#include "pas/score_model.hpp"
#include "pas/solvers.hpp"

using pas::ErrorCurve;
using pas::LossKind;
using pas::LossOptions;
using pas::NormKind;

namespace {

ErrorCurve curve_from(const std::vector<double>& values) {
  ErrorCurve curve;
  const int n = static_cast<int>(values.size()) - 1;
  for (int j = 0; j <= n; ++j) {
    curve.step_indices.push_back(n - j);
    curve.times.push_back(static_cast<double>(n - j));
    curve.values.push_back(values[static_cast<size_t>(j)]);
  }
  return curve;
}

}  // namespace

TEST_CASE("loss values and gradients: closed forms") {
  const Eigen::VectorXd r = (Eigen::VectorXd(4) << 1.0, -2.0, 0.0, 3.0).finished();
  CHECK(pas::loss_value({LossKind::l1, 0.03, false}, r) == 6.0);
  CHECK(pas::loss_value({LossKind::l1, 0.03, true}, r) == 1.5);
  CHECK(pas::loss_value({LossKind::l2, 0.03, false}, r) == 14.0);
  CHECK(pas::loss_value({LossKind::l2, 0.03, true}, r) == 3.5);
  const double huber = std::sqrt(14.0 + 0.03 * 0.03) - 0.03;
  CHECK(pas::loss_value({LossKind::pseudo_huber, 0.03, false}, r) ==
        doctest::Approx(huber).epsilon(1e-15));

  const Eigen::VectorXd g1 = pas::loss_gradient({LossKind::l1, 0.03, false}, r);
  CHECK(g1[0] == 1.0);
  CHECK(g1[1] == -1.0);
  CHECK(g1[2] == 0.0);  // subgradient convention at the kink
  CHECK(g1[3] == 1.0);
  const Eigen::VectorXd g2 = pas::loss_gradient({LossKind::l2, 0.03, true}, r);
  CHECK((g2 - 2.0 * r / 4.0).norm() < 1e-15);
}

TEST_CASE("loss gradient matches finite differences of loss_value") {
  pas::RandomStream rng(31, 0);
  for (const LossKind kind : {LossKind::l1, LossKind::l2, LossKind::pseudo_huber}) {
    for (const bool per_dim : {false, true}) {
      const LossOptions options{kind, 0.03, per_dim};
      const Eigen::VectorXd r = rng.normal_vector(6);
      const Eigen::VectorXd g = pas::loss_gradient(options, r);
      for (int j = 0; j < 6; ++j) {
        const double delta = 1e-7;
        Eigen::VectorXd hi = r, lo = r;
        hi[j] += delta;
        lo[j] -= delta;
        const double fd =
            (pas::loss_value(options, hi) - pas::loss_value(options, lo)) / (2.0 * delta);
        REQUIRE(std::abs(g[j] - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("state distance conventions") {
  const Eigen::VectorXd r = (Eigen::VectorXd(4) << 1.0, -2.0, 0.0, 3.0).finished();
  CHECK(pas::state_distance(NormKind::l1, r) == 6.0);
  CHECK(pas::state_distance(NormKind::l1, r, true) == 1.5);
  CHECK(pas::state_distance(NormKind::l2, r) == doctest::Approx(std::sqrt(14.0)));
  CHECK(pas::state_distance(NormKind::l2, r, true) ==
        doctest::Approx(std::sqrt(14.0) / 2.0));
  // The l1 loss and the l1 distance are the same sum, so reported metrics
  // cannot drift from the training objective.
  CHECK(pas::loss_value({LossKind::l1, 0.03, false}, r) ==
        pas::state_distance(NormKind::l1, r));
}

TEST_CASE("error curve is zero against the trajectory itself") {
  const pas::ScoreModel model = pas::isotropic_model(4);
  const pas::DirectionField field = [&model](const Eigen::VectorXd& x, double t) {
    return model.noise_prediction(x, t);
  };
  const pas::TimeSchedule grid = pas::build_schedule(7.0, 0.002, 80.0, 6);
  pas::RandomStream rng(32, 0);
  const pas::TrajectoryRecord record =
      pas::sample(field, {pas::SolverKind::euler, 1}, grid, model.draw_terminal_state(80.0, rng));
  std::vector<Eigen::VectorXd> reference(record.states.begin(), record.states.end());
  const ErrorCurve curve = pas::truncation_error_curve(record, reference, NormKind::l2);
  REQUIRE(curve.values.size() == 7);
  CHECK(curve.step_indices.front() == 6);  // traversal order: terminal first
  CHECK(curve.step_indices.back() == 0);
  CHECK(curve.times.front() == 80.0);
  for (double v : curve.values) REQUIRE(v == 0.0);
}

TEST_CASE("error curve on a 1-D Gaussian matches hand-computed gaps") {
  const pas::ScoreModel model = pas::isotropic_model(1);
  const pas::DirectionField field = [&model](const Eigen::VectorXd& x, double t) {
    return model.noise_prediction(x, t);
  };
  const pas::TimeSchedule grid = pas::build_schedule(7.0, 0.002, 80.0, 10);
  const Eigen::VectorXd x_terminal = Eigen::VectorXd::Constant(1, 3.0);
  const pas::TrajectoryRecord record =
      pas::sample(field, {pas::SolverKind::euler, 1}, grid, x_terminal);
  std::vector<Eigen::VectorXd> reference(grid.times.size());
  for (size_t i = 0; i < grid.times.size(); ++i)
    reference[i] = model.exact_trajectory(x_terminal, grid.times[i], 80.0);
  const ErrorCurve curve = pas::truncation_error_curve(record, reference, NormKind::l2);
  for (size_t j = 0; j < curve.values.size(); ++j) {
    const int i = curve.step_indices[j];
    const double expected = std::abs(record.state(i)[0] - reference[static_cast<size_t>(i)][0]);
    REQUIRE(curve.values[j] == doctest::Approx(expected).epsilon(1e-15));
  }
  CHECK(curve.values.front() == 0.0);  // both start from x_T
  CHECK(curve.values.back() > 0.0);
}

TEST_CASE("averaging error curves is pointwise and rejects mixed grids") {
  const ErrorCurve a = curve_from({0.0, 1.0, 2.0});
  const ErrorCurve b = curve_from({2.0, 3.0, 8.0});
  const ErrorCurve mean = pas::average_error_curves({a, b});
  CHECK(mean.values == std::vector<double>{1.0, 2.0, 5.0});
  CHECK(mean.step_indices == a.step_indices);

  ErrorCurve shifted = b;
  shifted.times[1] += 0.5;
  CHECK_THROWS_AS(pas::average_error_curves({a, shifted}), std::invalid_argument);
  CHECK_THROWS_AS(pas::average_error_curves({}), std::invalid_argument);
}

TEST_CASE("growth profile: linear, S-shaped, and short curves") {
  const ErrorCurve linear = curve_from({0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  const pas::GrowthProfile flat = pas::error_growth_profile(linear);
  CHECK(flat.head_mean == doctest::Approx(1.0));
  CHECK(flat.mid_mean == doctest::Approx(1.0));
  CHECK(flat.tail_mean == doctest::Approx(1.0));
  CHECK(flat.positions == 6);

  // Increments 0.1, 0.2, 2.0, 2.2, 0.3, 0.1 peak at the third step.
  const ErrorCurve s_shape = curve_from({0.0, 0.1, 0.3, 2.3, 4.5, 4.8, 4.9});
  const pas::GrowthProfile profile = pas::error_growth_profile(s_shape);
  CHECK(profile.argmax_position == 4);
  CHECK(profile.argmax_interior());
  CHECK(profile.mid_mean > profile.head_mean);
  CHECK(profile.mid_mean > profile.tail_mean);
  // Schedule index reached by the peak step: indices run 6..0, position 4
  // lands on index 2.
  CHECK(profile.argmax_step_index == 2);

  const ErrorCurve too_short = curve_from({0.0, 1.0, 2.0});
  CHECK_THROWS_AS(pas::error_growth_profile(too_short), std::invalid_argument);
}

TEST_CASE("edge-peaked curves are not interior") {
  const ErrorCurve head_peak = curve_from({0.0, 5.0, 5.5, 5.7, 5.8, 5.85});
  CHECK(pas::error_growth_profile(head_peak).argmax_position == 1);
  CHECK_FALSE(pas::error_growth_profile(head_peak).argmax_interior());
  const ErrorCurve tail_peak = curve_from({0.0, 0.1, 0.2, 0.3, 0.4, 5.0});
  CHECK(pas::error_growth_profile(tail_peak).argmax_position == 5);
  CHECK_FALSE(pas::error_growth_profile(tail_peak).argmax_interior());
}

TEST_CASE("final-state error conventions and validation") {
  const std::vector<Eigen::VectorXd> finals = {Eigen::VectorXd::Zero(2),
                                               Eigen::VectorXd::Zero(2)};
  std::vector<Eigen::VectorXd> refs = {(Eigen::VectorXd(2) << 1.0, 0.0).finished(),
                                       (Eigen::VectorXd(2) << 0.0, -3.0).finished()};
  // l1: mean of (1, 3) = 2; l2 reports mean *squared* distance: (1 + 9)/2 = 5.
  CHECK(pas::final_state_error(finals, refs, NormKind::l1) == 2.0);
  CHECK(pas::final_state_error(finals, refs, NormKind::l2) == 5.0);
  CHECK(pas::final_state_error(finals, refs, NormKind::l1, true) == 1.0);
  CHECK(pas::final_state_error(finals, refs, NormKind::l2, true) == 2.5);

  refs.pop_back();
  CHECK_THROWS_AS(pas::final_state_error(finals, refs, NormKind::l2), std::invalid_argument);
  CHECK_THROWS_AS(pas::final_state_error({}, {}, NormKind::l2), std::invalid_argument);
}

TEST_CASE("truncation_error_curve validates reference length") {
  const pas::ScoreModel model = pas::isotropic_model(2);
  const pas::DirectionField field = [&model](const Eigen::VectorXd& x, double t) {
    return model.noise_prediction(x, t);
  };
  const pas::TimeSchedule grid = pas::build_schedule(7.0, 0.002, 80.0, 4);
  pas::RandomStream rng(33, 0);
  const pas::TrajectoryRecord record =
      pas::sample(field, {pas::SolverKind::euler, 1}, grid, model.draw_terminal_state(80.0, rng));
  std::vector<Eigen::VectorXd> reference(record.states.begin(), record.states.end());
  reference.pop_back();
  CHECK_THROWS_AS(pas::truncation_error_curve(record, reference, NormKind::l2),
                  std::invalid_argument);
}

TEST_CASE("name round-trips and rejections") {
  CHECK(pas::norm_kind_from_string("l1") == NormKind::l1);
  CHECK(pas::norm_kind_from_string("l2") == NormKind::l2);
  CHECK(pas::to_string(NormKind::l2) == "l2");
  CHECK_THROWS_AS(pas::norm_kind_from_string("linf"), pas::ConfigError);
  CHECK(pas::loss_kind_from_string("pseudo-huber") == LossKind::pseudo_huber);
  CHECK(pas::to_string(LossKind::pseudo_huber) == "pseudo-huber");
  CHECK_THROWS_AS(pas::loss_kind_from_string("l3"), pas::ConfigError);
}
