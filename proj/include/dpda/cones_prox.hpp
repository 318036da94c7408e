#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "dpda/linalg.hpp"

namespace dpda {

enum class ConeKind {
  NonpositiveOrthant,
  NonnegativeOrthant,
  Zero,
  SecondOrder,  // experimental; {(u, t) : ||u|| <= t}, t is the last entry
};

std::string to_string(ConeKind kind);
ConeKind cone_kind_from_string(std::string_view name);

struct ConeTag {
  ConeKind kind = ConeKind::NonpositiveOrthant;
  Eigen::Index dim = 0;
};

// Exact prox of threshold*||.||_1 + indicator{|x_j| <= box_half_width}:
// soft-threshold, then clip.
Vector prox_l1_box(const Vector& x, double threshold,
                   std::optional<double> box_half_width = std::nullopt);

Vector project_cone(const ConeTag& tag, const Vector& v);

// Projection onto the polar cone K° = -K*.
Vector project_polar(const ConeTag& tag, const Vector& v);

// Euclidean distance from v to K.
double distance_to_cone(const ConeTag& tag, const Vector& v);
double distance_to_polar(const ConeTag& tag, const Vector& v);

// Radial projection onto {x : ||x|| <= radius}.
Vector project_ball(const Vector& x, double radius);

// gamma * (omega - avg): the prox of the support function of the bounded
// consensus set evaluated by extended Moreau decomposition, where `avg` is
// the caller's (possibly inexact) projection of omega onto that set.
BlockVector prox_support_consensus(const BlockVector& omega, double gamma,
                                   const BlockVector& average_of_omega);

}  // namespace dpda
