#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace dpda {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// One n-vector per agent. Stacked quantities (x = [x_i]) are stored this way
// so that agent-local code never indexes into another agent's block.
using BlockVector = std::vector<Vector>;

struct PowerIterationOptions {
  double rel_tol = 1e-10;
  int max_iters = 10000;
};

// Largest singular value of `a` by power iteration on a^T a, started from a
// fixed pseudo-random vector so the result is reproducible.
double spectral_norm(const Matrix& a, PowerIterationOptions opts = {});

// Eigenvalues of a symmetric matrix in ascending order.
Vector symmetric_eigenvalues(const Matrix& sym);

double min_eigenvalue(const Matrix& sym);
double max_eigenvalue(const Matrix& sym);

// Squared Euclidean norm of a stacked vector.
double squared_norm(const BlockVector& x);
double norm(const BlockVector& x);

BlockVector zeros_like(const BlockVector& x);
BlockVector make_blocks(std::size_t count, Eigen::Index dim, double value = 0.0);

bool all_finite(const Vector& v);

}  // namespace dpda
