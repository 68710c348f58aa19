#pragma once

#include <Eigen/Core>
#include <vector>

#include "pas/solvers.hpp"

namespace pas {

// Orthonormalizes in input order (modified Gram-Schmidt with one
// re-orthogonalization pass). An input whose residual after projection falls
// below drop_tol times its own norm is dropped, so the output can be shorter
// than the input; zero vectors are always dropped.
std::vector<Eigen::VectorXd> gram_schmidt(const std::vector<Eigen::VectorXd>& vectors,
                                          double drop_tol = 1e-8);

// Per-trajectory orthonormal basis with k columns (fewer when the rows are
// too dependent). Column 0 is always d / |d|. The remaining columns come from
// the top right-singular vectors of the uncentered row stack
// [origin; history directions...; d], orthogonalized against column 0.
// Singular vectors have their sign fixed against the origin row (falling back
// to d, then to the largest entry) so that repeated and scaled inputs yield
// the same basis, not just the same subspace.
// Throws DegenerateDirectionError when d is zero or non-finite.
Eigen::MatrixXd pca_basis(const HistoryBuffer& history, const Eigen::VectorXd& d, int k);

// Coordinates that reproduce d exactly in any basis whose first column is
// d / |d|: (|d|, 0, ..., 0).
Eigen::VectorXd init_coordinates(const Eigen::VectorXd& d, int k);

// Sum of coords[j] * basis.col(j); sizes must match.
Eigen::VectorXd reconstruct_direction(const Eigen::MatrixXd& basis,
                                      const Eigen::VectorXd& coords);

// Cumulative spectral-energy fractions of the uncentered row matrix: entry j
// is the energy captured by the top (j+1) singular directions, padded with
// 1.0 past the spectrum. Throws UndefinedVarianceError when all rows are zero.
std::vector<double> cumulative_variance(const Eigen::MatrixXd& rows, int max_k);

}  // namespace pas
