#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "pas/rng.hpp"

namespace pas {

// One Gaussian component stored by covariance eigenpairs. Columns of `axes`
// are orthonormal; every direction outside their span carries eigenvalue 0,
// so a rank-r covariance in dimension D only stores r pairs.
struct GaussianComponent {
  double weight = 1.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd eigenvalues;  // size r, each >= 0
  Eigen::MatrixXd axes;         // D x r
};

// Gaussian mixture whose time-smoothed score field is known in closed form:
// q_t is the mixture convolved with N(0, t^2 I), which keeps each component
// Gaussian with covariance eigenvalues lambda_k + t^2. Posterior weights are
// combined in the log domain so far-out states (tens of sigmas) stay finite.
class ScoreModel {
 public:
  ScoreModel(int dimension, std::vector<GaussianComponent> components);

  int dimension() const { return dimension_; }
  const std::vector<GaussianComponent>& components() const { return components_; }

  double log_density(const Eigen::VectorXd& x, double t) const;
  Eigen::VectorXd score(const Eigen::VectorXd& x, double t) const;        // grad_x log q_t
  Eigen::VectorXd noise_prediction(const Eigen::VectorXd& x, double t) const;  // -t * score
  Eigen::VectorXd data_prediction(const Eigen::VectorXd& x, double t) const;   // x + t^2 * score

  // Exact flow-map solution for a single-component model: each covariance
  // eigendirection of (x_T - mean) shrinks by sqrt((lambda + t^2)/(lambda + T^2)),
  // and the orthogonal remainder by t/T. Requires t > 0, T > 0.
  // Throws ConfigError for mixtures (no closed form).
  Eigen::VectorXd exact_trajectory(const Eigen::VectorXd& x_terminal, double t,
                                   double t_terminal) const;

  // One draw from q_T: component picked by weight, then mean + (Sigma + T^2 I)^(1/2) z.
  Eigen::VectorXd draw_terminal_state(double t_terminal, RandomStream& rng) const;

 private:
  struct ComponentEval {
    double log_posterior;      // log w + log N(x; mean, Sigma + t^2 I)
    Eigen::VectorXd gradient;  // grad_x of that component's log density
  };
  ComponentEval evaluate_component(const GaussianComponent& c, const Eigen::VectorXd& x,
                                   double t) const;

  int dimension_;
  std::vector<GaussianComponent> components_;
};

// Standard normal data: score has the closed form -x / (1 + t^2).
ScoreModel isotropic_model(int dimension);

// Data concentrated on a low-dimensional subspace: the listed eigenvalues sit
// on seed-derived random orthonormal directions, every remaining direction
// gets floor_eigenvalue. The acceptance model is top_eigenvalues = {25, 9}
// with floor 1e-4.
ScoreModel rank_manifold_model(int dimension, const std::vector<double>& top_eigenvalues,
                               double floor_eigenvalue, std::uint64_t seed);

// Two equal-weight components at +/- 4 u (u a seed-derived unit direction)
// with isotropic covariance 0.25 I: bimodal data whose sampling trajectories
// bend where the posterior switches modes.
ScoreModel symmetric_mixture_model(int dimension, std::uint64_t seed);

}  // namespace pas
