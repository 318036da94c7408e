#include "dpda/linalg.hpp"

#include <cmath>
#include <random>

namespace dpda {

double spectral_norm(const Matrix& a, PowerIterationOptions opts) {
  if (a.size() == 0) return 0.0;
  if (a.cwiseAbs().maxCoeff() == 0.0) return 0.0;

  // The all-ones start is orthogonal to the top singular vector of difference
  // operators, so use a fixed generic vector instead.
  std::mt19937_64 gen(0x5eed5eedULL);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  Vector v(a.cols());
  for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = unif(gen);
  v.normalize();

  double estimate = 0.0;
  for (int it = 0; it < opts.max_iters; ++it) {
    Vector w = a.transpose() * (a * v);
    const double next = w.norm();
    if (next == 0.0) return 0.0;
    v = w / next;
    if (std::abs(next - estimate) <= opts.rel_tol * next) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  // Rayleigh quotient of a^T a at the final vector.
  return std::sqrt((a * v).squaredNorm());
}

Vector symmetric_eigenvalues(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

double min_eigenvalue(const Matrix& sym) {
  return symmetric_eigenvalues(sym).minCoeff();
}

double max_eigenvalue(const Matrix& sym) {
  return symmetric_eigenvalues(sym).maxCoeff();
}

double squared_norm(const BlockVector& x) {
  double s = 0.0;
  for (const auto& b : x) s += b.squaredNorm();
  return s;
}

double norm(const BlockVector& x) { return std::sqrt(squared_norm(x)); }

BlockVector zeros_like(const BlockVector& x) {
  BlockVector out;
  out.reserve(x.size());
  for (const auto& b : x) out.push_back(Vector::Zero(b.size()));
  return out;
}

BlockVector make_blocks(std::size_t count, Eigen::Index dim, double value) {
  return BlockVector(count, Vector::Constant(dim, value));
}

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace dpda
