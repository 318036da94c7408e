#include "dpda/cones_prox.hpp"

#include <cmath>
#include <stdexcept>

namespace dpda {

std::string to_string(ConeKind kind) {
  switch (kind) {
    case ConeKind::NonpositiveOrthant: return "nonpositive_orthant";
    case ConeKind::NonnegativeOrthant: return "nonnegative_orthant";
    case ConeKind::Zero: return "zero";
    case ConeKind::SecondOrder: return "second_order";
  }
  throw std::invalid_argument("unsupported cone kind");
}

ConeKind cone_kind_from_string(std::string_view name) {
  if (name == "nonpositive_orthant") return ConeKind::NonpositiveOrthant;
  if (name == "nonnegative_orthant") return ConeKind::NonnegativeOrthant;
  if (name == "zero") return ConeKind::Zero;
  if (name == "second_order") return ConeKind::SecondOrder;
  throw std::invalid_argument("unsupported cone kind: " + std::string(name));
}

Vector prox_l1_box(const Vector& x, double threshold,
                   std::optional<double> box_half_width) {
  if (threshold < 0.0) throw std::invalid_argument("prox_l1_box: negative threshold");
  Vector y(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double mag = std::max(std::abs(x(j)) - threshold, 0.0);
    y(j) = std::copysign(mag, x(j));
    if (mag == 0.0) y(j) = 0.0;
  }
  if (box_half_width) {
    const double h = *box_half_width;
    y = y.cwiseMax(-h).cwiseMin(h);
  }
  return y;
}

namespace {

void check_dim(const ConeTag& tag, const Vector& v) {
  if (v.size() != tag.dim)
    throw std::invalid_argument("cone projection: dimension mismatch");
}

Vector project_soc(const Vector& v) {
  const Eigen::Index m = v.size();
  if (m == 0) return v;
  const double t = v(m - 1);
  const double u_norm = v.head(m - 1).norm();
  if (u_norm <= t) return v;
  if (u_norm <= -t) return Vector::Zero(m);
  const double scale = 0.5 * (u_norm + t);
  Vector out(m);
  out.head(m - 1) = (scale / u_norm) * v.head(m - 1);
  out(m - 1) = scale;
  return out;
}

}  // namespace

Vector project_cone(const ConeTag& tag, const Vector& v) {
  check_dim(tag, v);
  switch (tag.kind) {
    case ConeKind::NonpositiveOrthant: return v.cwiseMin(0.0);
    case ConeKind::NonnegativeOrthant: return v.cwiseMax(0.0);
    case ConeKind::Zero: return Vector::Zero(v.size());
    case ConeKind::SecondOrder: return project_soc(v);
  }
  throw std::invalid_argument("unsupported cone kind");
}

Vector project_polar(const ConeTag& tag, const Vector& v) {
  check_dim(tag, v);
  switch (tag.kind) {
    case ConeKind::NonpositiveOrthant: return v.cwiseMax(0.0);
    case ConeKind::NonnegativeOrthant: return v.cwiseMin(0.0);
    case ConeKind::Zero: return v;
    // The second-order cone is self-dual, so its polar is its negation.
    case ConeKind::SecondOrder: return -project_soc(-v);
  }
  throw std::invalid_argument("unsupported cone kind");
}

double distance_to_cone(const ConeTag& tag, const Vector& v) {
  return (v - project_cone(tag, v)).norm();
}

double distance_to_polar(const ConeTag& tag, const Vector& v) {
  return (v - project_polar(tag, v)).norm();
}

Vector project_ball(const Vector& x, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("project_ball: radius must be positive");
  const double nrm = x.norm();
  if (nrm <= radius) return x;
  return x * (radius / nrm);
}

BlockVector prox_support_consensus(const BlockVector& omega, double gamma,
                                   const BlockVector& average_of_omega) {
  if (!(gamma > 0.0)) throw std::invalid_argument("prox_support_consensus: gamma must be positive");
  if (omega.size() != average_of_omega.size())
    throw std::invalid_argument("prox_support_consensus: dimension mismatch");
  BlockVector out(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i) {
    if (omega[i].size() != average_of_omega[i].size())
      throw std::invalid_argument("prox_support_consensus: dimension mismatch");
    out[i] = gamma * (omega[i] - average_of_omega[i]);
  }
  return out;
}

}  // namespace dpda
