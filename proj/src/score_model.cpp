#include "pas/score_model.hpp"

#include <Eigen/QR>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pas/errors.hpp"

namespace pas {

namespace {

void validate_component(int dimension, size_t index, const GaussianComponent& c) {
  const std::string tag = "ScoreModel: component " + std::to_string(index);
  if (!(std::isfinite(c.weight) && c.weight > 0.0))
    throw ConfigError(tag + ": weight must be finite and > 0");
  if (c.mean.size() != dimension)
    throw ConfigError(tag + ": mean size " + std::to_string(c.mean.size()) +
                      " does not match dimension " + std::to_string(dimension));
  if (!c.mean.allFinite()) throw ConfigError(tag + ": mean has non-finite entries");
  if (c.eigenvalues.size() != c.axes.cols())
    throw ConfigError(tag + ": eigenvalue count does not match axis count");
  if (c.axes.cols() > 0) {
    if (c.axes.rows() != dimension)
      throw ConfigError(tag + ": axes row count does not match dimension");
    if (!c.axes.allFinite() || !c.eigenvalues.allFinite())
      throw ConfigError(tag + ": non-finite eigenpairs");
    if (c.eigenvalues.minCoeff() < 0.0)
      throw ConfigError(tag + ": eigenvalues must be >= 0");
    if (c.axes.cols() > dimension)
      throw ConfigError(tag + ": more eigenpairs than dimensions");
    const Eigen::MatrixXd gram = c.axes.transpose() * c.axes;
    const double defect =
        (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    if (defect > 1e-9)
      throw ConfigError(tag + ": axes are not orthonormal (defect " + std::to_string(defect) + ")");
  }
}

void validate_time(double t) {
  if (!(std::isfinite(t) && t > 0.0))
    throw std::invalid_argument("ScoreModel: time must be finite and > 0, got " +
                                std::to_string(t));
}

}  // namespace

ScoreModel::ScoreModel(int dimension, std::vector<GaussianComponent> components)
    : dimension_(dimension), components_(std::move(components)) {
  if (dimension_ < 1) throw ConfigError("ScoreModel: dimension must be >= 1");
  if (components_.empty()) throw ConfigError("ScoreModel: at least one component required");
  double total = 0.0;
  for (size_t i = 0; i < components_.size(); ++i) {
    validate_component(dimension_, i, components_[i]);
    total += components_[i].weight;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ConfigError("ScoreModel: weights must sum to 1, got " + std::to_string(total));
}

ScoreModel::ComponentEval ScoreModel::evaluate_component(const GaussianComponent& c,
                                                         const Eigen::VectorXd& x,
                                                         double t) const {
  const double t2 = t * t;
  const Eigen::VectorXd delta = x - c.mean;
  const Eigen::Index r = c.axes.cols();

  Eigen::VectorXd coeffs;
  Eigen::VectorXd residual = delta;
  double quad = 0.0;
  double log_det = 0.0;
  if (r > 0) {
    coeffs = c.axes.transpose() * delta;
    residual.noalias() -= c.axes * coeffs;
    const Eigen::ArrayXd var = c.eigenvalues.array() + t2;
    quad += (coeffs.array().square() / var).sum();
    log_det += var.log().sum();
  }
  quad += residual.squaredNorm() / t2;
  log_det += static_cast<double>(dimension_ - r) * std::log(t2);

  ComponentEval eval;
  eval.log_posterior = std::log(c.weight) -
                       0.5 * (dimension_ * std::log(2.0 * std::numbers::pi) + log_det + quad);
  eval.gradient = -residual / t2;
  if (r > 0) {
    const Eigen::ArrayXd var = c.eigenvalues.array() + t2;
    eval.gradient.noalias() -= c.axes * (coeffs.array() / var).matrix();
  }
  return eval;
}

double ScoreModel::log_density(const Eigen::VectorXd& x, double t) const {
  validate_time(t);
  if (x.size() != dimension_)
    throw std::invalid_argument("ScoreModel::log_density: state size mismatch");
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(components_.size());
  for (size_t m = 0; m < components_.size(); ++m) {
    logs[m] = evaluate_component(components_[m], x, t).log_posterior;
    max_log = std::max(max_log, logs[m]);
  }
  double sum = 0.0;
  for (const double v : logs) sum += std::exp(v - max_log);
  return max_log + std::log(sum);
}

Eigen::VectorXd ScoreModel::score(const Eigen::VectorXd& x, double t) const {
  validate_time(t);
  if (x.size() != dimension_)
    throw std::invalid_argument("ScoreModel::score: state size mismatch");
  std::vector<ComponentEval> evals;
  evals.reserve(components_.size());
  double max_log = -std::numeric_limits<double>::infinity();
  for (const auto& c : components_) {
    evals.push_back(evaluate_component(c, x, t));
    max_log = std::max(max_log, evals.back().log_posterior);
  }
  double total = 0.0;
  for (const auto& e : evals) total += std::exp(e.log_posterior - max_log);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(dimension_);
  for (const auto& e : evals)
    s.noalias() += (std::exp(e.log_posterior - max_log) / total) * e.gradient;
  return s;
}

Eigen::VectorXd ScoreModel::noise_prediction(const Eigen::VectorXd& x, double t) const {
  return -t * score(x, t);
}

Eigen::VectorXd ScoreModel::data_prediction(const Eigen::VectorXd& x, double t) const {
  return x + (t * t) * score(x, t);
}

Eigen::VectorXd ScoreModel::exact_trajectory(const Eigen::VectorXd& x_terminal, double t,
                                             double t_terminal) const {
  if (components_.size() != 1)
    throw ConfigError("ScoreModel::exact_trajectory: closed form exists only for a "
                      "single-component model; this one has " +
                      std::to_string(components_.size()));
  validate_time(t);
  validate_time(t_terminal);
  if (x_terminal.size() != dimension_)
    throw std::invalid_argument("ScoreModel::exact_trajectory: state size mismatch");

  const GaussianComponent& c = components_.front();
  const Eigen::VectorXd delta = x_terminal - c.mean;
  Eigen::VectorXd residual = delta;
  Eigen::VectorXd out = c.mean;
  if (c.axes.cols() > 0) {
    const Eigen::VectorXd coeffs = c.axes.transpose() * delta;
    residual.noalias() -= c.axes * coeffs;
    const Eigen::ArrayXd shrink = ((c.eigenvalues.array() + t * t) /
                                   (c.eigenvalues.array() + t_terminal * t_terminal))
                                      .sqrt();
    out.noalias() += c.axes * (shrink * coeffs.array()).matrix();
  }
  out.noalias() += (t / t_terminal) * residual;
  return out;
}

Eigen::VectorXd ScoreModel::draw_terminal_state(double t_terminal, RandomStream& rng) const {
  validate_time(t_terminal);
  const double pick = rng.uniform();
  double cumulative = 0.0;
  const GaussianComponent* chosen = &components_.back();
  for (const auto& c : components_) {
    cumulative += c.weight;
    if (pick <= cumulative) {
      chosen = &c;
      break;
    }
  }
  const Eigen::VectorXd z = rng.normal_vector(dimension_);
  Eigen::VectorXd x = chosen->mean + t_terminal * z;
  if (chosen->axes.cols() > 0) {
    const Eigen::VectorXd coeffs = chosen->axes.transpose() * z;
    const Eigen::ArrayXd stddev =
        (chosen->eigenvalues.array() + t_terminal * t_terminal).sqrt();
    x.noalias() += chosen->axes * ((stddev - t_terminal) * coeffs.array()).matrix();
  }
  return x;
}

ScoreModel isotropic_model(int dimension) {
  GaussianComponent c;
  c.weight = 1.0;
  c.mean = Eigen::VectorXd::Zero(dimension);
  c.eigenvalues = Eigen::VectorXd::Ones(dimension);
  c.axes = Eigen::MatrixXd::Identity(dimension, dimension);
  return ScoreModel(dimension, {std::move(c)});
}

namespace {

// Seed-derived orthonormal frame: QR of a standard normal matrix, with each
// column flipped to a deterministic sign so the frame is reproducible.
Eigen::MatrixXd random_orthonormal(int dimension, int columns, std::uint64_t seed) {
  RandomStream rng(seed, /*stream_index=*/0);
  Eigen::MatrixXd g(dimension, dimension);
  for (int j = 0; j < dimension; ++j) g.col(j) = rng.normal_vector(dimension);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dimension, columns);
  const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(columns, columns);
  for (int j = 0; j < columns; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

ScoreModel rank_manifold_model(int dimension, const std::vector<double>& top_eigenvalues,
                               double floor_eigenvalue, std::uint64_t seed) {
  const int r = static_cast<int>(top_eigenvalues.size());
  if (r > dimension)
    throw ConfigError("rank_manifold_model: more top eigenvalues than dimensions");
  if (!(std::isfinite(floor_eigenvalue) && floor_eigenvalue >= 0.0))
    throw ConfigError("rank_manifold_model: floor eigenvalue must be finite and >= 0");
  GaussianComponent c;
  c.weight = 1.0;
  c.mean = Eigen::VectorXd::Zero(dimension);
  c.axes = random_orthonormal(dimension, dimension, seed);
  c.eigenvalues = Eigen::VectorXd::Constant(dimension, floor_eigenvalue);
  for (int k = 0; k < r; ++k) c.eigenvalues[k] = top_eigenvalues[static_cast<size_t>(k)];
  return ScoreModel(dimension, {std::move(c)});
}

ScoreModel symmetric_mixture_model(int dimension, std::uint64_t seed) {
  const Eigen::MatrixXd frame = random_orthonormal(dimension, 1, seed);
  const Eigen::VectorXd offset = 4.0 * frame.col(0);
  GaussianComponent a;
  a.weight = 0.5;
  a.mean = offset;
  a.eigenvalues = Eigen::VectorXd::Constant(dimension, 0.25);
  a.axes = Eigen::MatrixXd::Identity(dimension, dimension);
  GaussianComponent b = a;
  b.mean = -offset;
  return ScoreModel(dimension, {std::move(a), std::move(b)});
}

}  // namespace pas
