#include "pas/subspace.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pas/errors.hpp"

namespace pas {

std::vector<Eigen::VectorXd> gram_schmidt(const std::vector<Eigen::VectorXd>& vectors,
                                          double drop_tol) {
  if (!(std::isfinite(drop_tol) && drop_tol >= 0.0))
    throw std::invalid_argument("gram_schmidt: drop_tol must be finite and >= 0");
  std::vector<Eigen::VectorXd> basis;
  basis.reserve(vectors.size());
  for (const Eigen::VectorXd& v : vectors) {
    if (!v.allFinite())
      throw std::invalid_argument("gram_schmidt: input vector has non-finite entries");
    const double input_norm = v.norm();
    if (input_norm == 0.0) continue;
    if (!basis.empty() && v.size() != basis.front().size())
      throw std::invalid_argument("gram_schmidt: inconsistent vector sizes");
    Eigen::VectorXd w = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const Eigen::VectorXd& u : basis) w.noalias() -= w.dot(u) * u;
    const double residual = w.norm();
    if (residual > drop_tol * input_norm) basis.push_back(w / residual);
  }
  if (basis.empty())
    throw NumericalError("gram_schmidt: all inputs degenerate, no basis survives");
  return basis;
}

namespace {

// Deterministic orientation: flip so the projection onto the origin row is
// positive, falling back to the direction row, then to the largest entry.
// Keeps bases reproducible across samples with similar geometry, which is
// what lets one shared coordinate vector serve many trajectories.
void orient(Eigen::VectorXd& v, const Eigen::VectorXd& origin, const Eigen::VectorXd& d) {
  constexpr double kTiny = 1e-12;
  const double along_origin = v.dot(origin);
  if (std::abs(along_origin) > kTiny * origin.norm()) {
    if (along_origin < 0.0) v = -v;
    return;
  }
  const double along_d = v.dot(d);
  if (std::abs(along_d) > kTiny * d.norm()) {
    if (along_d < 0.0) v = -v;
    return;
  }
  Eigen::Index argmax = 0;
  v.cwiseAbs().maxCoeff(&argmax);
  if (v[argmax] < 0.0) v = -v;
}

}  // namespace

Eigen::MatrixXd pca_basis(const HistoryBuffer& history, const Eigen::VectorXd& d, int k) {
  if (k < 1) throw std::invalid_argument("pca_basis: k must be >= 1, got " + std::to_string(k));
  if (!d.allFinite() || d.norm() == 0.0)
    throw DegenerateDirectionError("pca_basis: direction is zero or non-finite");
  const Eigen::Index dim = d.size();
  if (history.origin.size() != dim)
    throw std::invalid_argument("pca_basis: origin size does not match direction size");

  std::vector<Eigen::VectorXd> candidates;
  candidates.reserve(static_cast<size_t>(k));
  candidates.push_back(d.normalized());

  if (k > 1) {
    const Eigen::Index rows = 2 + static_cast<Eigen::Index>(history.directions.size());
    Eigen::MatrixXd stack(rows, dim);
    stack.row(0) = history.origin.transpose();
    for (size_t j = 0; j < history.directions.size(); ++j) {
      if (history.directions[j].size() != dim)
        throw std::invalid_argument("pca_basis: history direction size mismatch");
      stack.row(static_cast<Eigen::Index>(j) + 1) = history.directions[j].transpose();
    }
    stack.row(rows - 1) = d.transpose();
    if (!stack.allFinite())
      throw std::invalid_argument("pca_basis: history has non-finite entries");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(stack, Eigen::ComputeThinV);
    const Eigen::Index available = svd.matrixV().cols();
    // A negligible singular value marks a direction the rows never visit; its
    // singular vector is numerically arbitrary, so it must not enter the basis.
    const double sigma_floor = 1e-8 * svd.singularValues()[0];
    for (Eigen::Index j = 0; j < std::min<Eigen::Index>(k - 1, available); ++j) {
      if (svd.singularValues()[j] <= sigma_floor) break;
      Eigen::VectorXd v = svd.matrixV().col(j);
      orient(v, history.origin, d);
      candidates.push_back(std::move(v));
    }
  }

  std::vector<Eigen::VectorXd> basis = gram_schmidt(candidates);
  if (basis.size() > static_cast<size_t>(k)) basis.resize(static_cast<size_t>(k));
  Eigen::MatrixXd out(dim, static_cast<Eigen::Index>(basis.size()));
  for (size_t j = 0; j < basis.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = basis[j];
  return out;
}

Eigen::VectorXd init_coordinates(const Eigen::VectorXd& d, int k) {
  if (k < 1)
    throw std::invalid_argument("init_coordinates: k must be >= 1, got " + std::to_string(k));
  if (!d.allFinite() || d.norm() == 0.0)
    throw DegenerateDirectionError("init_coordinates: direction is zero or non-finite");
  Eigen::VectorXd coords = Eigen::VectorXd::Zero(k);
  coords[0] = d.norm();
  return coords;
}

Eigen::VectorXd reconstruct_direction(const Eigen::MatrixXd& basis,
                                      const Eigen::VectorXd& coords) {
  if (basis.cols() != coords.size())
    throw std::invalid_argument("reconstruct_direction: " + std::to_string(coords.size()) +
                                " coordinates for " + std::to_string(basis.cols()) +
                                " basis columns");
  return basis * coords;
}

std::vector<double> cumulative_variance(const Eigen::MatrixXd& rows, int max_k) {
  if (max_k < 1)
    throw std::invalid_argument("cumulative_variance: max_k must be >= 1, got " +
                                std::to_string(max_k));
  if (rows.size() == 0)
    throw std::invalid_argument("cumulative_variance: empty row matrix");
  if (!rows.allFinite())
    throw std::invalid_argument("cumulative_variance: non-finite entries");
  if (rows.cwiseAbs().maxCoeff() == 0.0)
    throw UndefinedVarianceError("cumulative_variance: all rows are zero");

  // BDC handles the tall pooled stacks; singular values only.
  Eigen::BDCSVD<Eigen::MatrixXd> svd(rows);
  const Eigen::VectorXd sigma = svd.singularValues();
  const double total = sigma.squaredNorm();
  std::vector<double> fractions(static_cast<size_t>(max_k), 1.0);
  double running = 0.0;
  for (Eigen::Index j = 0; j < sigma.size() && j < max_k; ++j) {
    running += sigma[j] * sigma[j];
    fractions[static_cast<size_t>(j)] = running / total;
  }
  // Past the spectrum the energy is complete; keep exact 1.0 there.
  for (Eigen::Index j = sigma.size(); j < max_k; ++j)
    fractions[static_cast<size_t>(j)] = 1.0;
  return fractions;
}

}  // namespace pas
