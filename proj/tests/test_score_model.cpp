#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pas/errors.hpp"
#include "pas/rng.hpp"
#include "pas/score_model.hpp"

using pas::GaussianComponent;
using pas::ScoreModel;

namespace {

// Central finite differences of the implemented log-density: the independent
// oracle for the analytic score.
Eigen::VectorXd fd_score(const ScoreModel& model, const Eigen::VectorXd& x, double t) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 5e-6 * std::max(1.0, std::abs(x[j]));
    probe[j] = x[j] + h;
    const double up = model.log_density(probe, t);
    probe[j] = x[j] - h;
    const double down = model.log_density(probe, t);
    probe[j] = x[j];
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

ScoreModel mixture_at(double offset, int dimension) {
  GaussianComponent a;
  a.weight = 0.5;
  a.mean = Eigen::VectorXd::Zero(dimension);
  a.mean[0] = offset;
  a.eigenvalues = Eigen::VectorXd::Constant(dimension, 0.25);
  a.axes = Eigen::MatrixXd::Identity(dimension, dimension);
  GaussianComponent b = a;
  b.mean = -a.mean;
  return ScoreModel(dimension, {a, b});
}

}  // namespace

TEST_CASE("standard Gaussian closed forms at x = (2, 0), t = 1") {
  const ScoreModel model = pas::isotropic_model(2);
  const Eigen::VectorXd x = (Eigen::VectorXd(2) << 2.0, 0.0).finished();
  const Eigen::VectorXd s = model.score(x, 1.0);
  CHECK(s[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(0.0).epsilon(1e-12));
  const Eigen::VectorXd eps = model.noise_prediction(x, 1.0);
  CHECK(eps[0] == doctest::Approx(1.0).epsilon(1e-12));
  const Eigen::VectorXd x0 = model.data_prediction(x, 1.0);
  CHECK(x0[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x0[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("symmetric mixture has zero score at the origin") {
  const ScoreModel model = mixture_at(3.0, 4);
  const Eigen::VectorXd s = model.score(Eigen::VectorXd::Zero(4), 0.7);
  CHECK(s.norm() < 1e-14);
}

TEST_CASE("prediction-network relations hold bit-exactly") {
  const ScoreModel model = pas::rank_manifold_model(8, {25.0, 9.0}, 1e-4, 3);
  pas::RandomStream rng(42, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = 5.0 * rng.normal_vector(8);
    const double t = 0.05 + 10.0 * rng.uniform();
    const Eigen::VectorXd s = model.score(x, t);
    CHECK((model.noise_prediction(x, t) + t * s).norm() == 0.0);
    const Eigen::VectorXd via_noise = x - t * model.noise_prediction(x, t);
    CHECK((model.data_prediction(x, t) - via_noise).norm() <=
          1e-12 * (1.0 + via_noise.norm()));
  }
}

TEST_CASE("data prediction approaches x as t vanishes") {
  const ScoreModel model = pas::isotropic_model(3);
  const Eigen::VectorXd x = (Eigen::VectorXd(3) << 0.3, -1.2, 2.0).finished();
  CHECK((model.data_prediction(x, 1e-8) - x).norm() < 1e-6);
}

TEST_CASE("analytic score matches finite differences of the log-density") {
  const std::vector<ScoreModel> models = {pas::isotropic_model(4),
                                          pas::rank_manifold_model(8, {25.0, 9.0}, 1e-4, 7),
                                          mixture_at(2.0, 4),
                                          pas::symmetric_mixture_model(6, 11)};
  pas::RandomStream rng(99, 0);
  for (const ScoreModel& model : models) {
    for (int trial = 0; trial < 25; ++trial) {
      const Eigen::VectorXd x = 4.0 * rng.normal_vector(model.dimension());
      const double t = 0.1 + 5.0 * rng.uniform();
      const Eigen::VectorXd analytic = model.score(x, t);
      const Eigen::VectorXd numeric = fd_score(model, x, t);
      REQUIRE((analytic - numeric).norm() <= 1e-6 * (1.0 + analytic.norm()));
    }
  }
}

TEST_CASE("posterior weighting stays finite fifty sigmas out") {
  const ScoreModel model = mixture_at(4.0, 3);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  x[0] = 4.0 + 50.0 * 0.5;  // component sigma is 0.5
  const double t = 0.01;
  CHECK(std::isfinite(model.log_density(x, t)));
  CHECK(model.score(x, t).allFinite());
}

TEST_CASE("exact trajectory: frozen 1-D value and start-time identity") {
  GaussianComponent c;
  c.weight = 1.0;
  c.mean = Eigen::VectorXd::Zero(1);
  c.eigenvalues = Eigen::VectorXd::Constant(1, 1.0);
  c.axes = Eigen::MatrixXd::Identity(1, 1);
  const ScoreModel model(1, {c});
  const Eigen::VectorXd x_terminal = Eigen::VectorXd::Constant(1, 80.0);

  // 80 * sqrt((1 + 0.002^2) / (1 + 80^2)), evaluated at 50-digit precision.
  const double frozen = 0.99992388399585;
  const Eigen::VectorXd at_eps = model.exact_trajectory(x_terminal, 0.002, 80.0);
  CHECK(std::abs(at_eps[0] - frozen) < 1e-12);

  const Eigen::VectorXd at_start = model.exact_trajectory(x_terminal, 80.0, 80.0);
  CHECK(at_start[0] == 80.0);
}

TEST_CASE("exact trajectory solves the sampling ODE") {
  // d/dt of the closed form must equal the direction field on the closed form.
  const ScoreModel model = pas::rank_manifold_model(6, {9.0, 4.0}, 1e-3, 5);
  pas::RandomStream rng(7, 0);
  const double t_terminal = 80.0;
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::VectorXd x_terminal = t_terminal * rng.normal_vector(6);
    const double t = 0.5 + 30.0 * rng.uniform();
    const double h = 1e-5 * t;
    const Eigen::VectorXd ahead = model.exact_trajectory(x_terminal, t + h, t_terminal);
    const Eigen::VectorXd behind = model.exact_trajectory(x_terminal, t - h, t_terminal);
    const Eigen::VectorXd derivative = (ahead - behind) / (2.0 * h);
    const Eigen::VectorXd direction =
        model.noise_prediction(model.exact_trajectory(x_terminal, t, t_terminal), t);
    REQUIRE((derivative - direction).norm() <= 1e-5 * (1.0 + direction.norm()));
  }
}

TEST_CASE("exact trajectory rejects mixtures") {
  const ScoreModel mixture = mixture_at(2.0, 3);
  CHECK_THROWS_AS(mixture.exact_trajectory(Eigen::VectorXd::Ones(3), 1.0, 80.0),
                  pas::ConfigError);
}

TEST_CASE("terminal draws are seed-deterministic per stream") {
  const ScoreModel model = pas::symmetric_mixture_model(5, 21);
  pas::RandomStream a(123, 4);
  pas::RandomStream b(123, 4);
  pas::RandomStream c(123, 5);
  const Eigen::VectorXd draw_a = model.draw_terminal_state(80.0, a);
  const Eigen::VectorXd draw_b = model.draw_terminal_state(80.0, b);
  const Eigen::VectorXd draw_c = model.draw_terminal_state(80.0, c);
  CHECK((draw_a - draw_b).norm() == 0.0);
  CHECK((draw_a - draw_c).norm() > 0.0);
}

TEST_CASE("model validation rejects malformed inputs") {
  GaussianComponent c;
  c.weight = 0.7;  // weights must sum to 1
  c.mean = Eigen::VectorXd::Zero(2);
  c.eigenvalues = Eigen::VectorXd::Constant(2, 1.0);
  c.axes = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(ScoreModel(2, {c}), pas::ConfigError);

  GaussianComponent skewed = c;
  skewed.weight = 1.0;
  skewed.axes << 1.0, 0.9, 0.0, 0.1;  // not orthonormal
  CHECK_THROWS_AS(ScoreModel(2, {skewed}), pas::ConfigError);

  const ScoreModel ok = pas::isotropic_model(2);
  CHECK_THROWS_AS(ok.score(Eigen::VectorXd::Zero(2), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ok.score(Eigen::VectorXd::Zero(2), -1.0), std::invalid_argument);
}

TEST_CASE("rank-manifold preset: spectrum and determinism") {
  const ScoreModel a = pas::rank_manifold_model(16, {25.0, 9.0}, 1e-4, 77);
  const ScoreModel b = pas::rank_manifold_model(16, {25.0, 9.0}, 1e-4, 77);
  const GaussianComponent& ca = a.components().front();
  REQUIRE(ca.eigenvalues.size() == 16);
  CHECK(ca.eigenvalues[0] == 25.0);
  CHECK(ca.eigenvalues[1] == 9.0);
  for (int k = 2; k < 16; ++k) CHECK(ca.eigenvalues[k] == 1e-4);
  CHECK((ca.axes - b.components().front().axes).norm() == 0.0);
  const Eigen::MatrixXd gram =
      ca.axes.transpose() * ca.axes - Eigen::MatrixXd::Identity(16, 16);
  CHECK(gram.cwiseAbs().maxCoeff() < 1e-10);
}
