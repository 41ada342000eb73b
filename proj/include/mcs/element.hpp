#pragma once

#include <array>

#include <Eigen/Dense>

#include "mcs/mesh.hpp"
#include "mcs/reference_basis.hpp"

namespace mcs {

/// Affine map x = v0 + J xhat of one triangle plus its facet orientation data.
struct ElementGeometry {
  int index = -1;
  std::array<Vec2, 3> vertex;
  Mat2 jac, jac_inv;
  double det = 0.0, area = 0.0, diameter = 0.0;
  std::array<int, 3> facet{};
  /// +1 when the facet normal is the outward normal of this element.
  std::array<double, 3> normal_sign{};
  /// Local edge direction opposite to the facet's global vertex order.
  std::array<bool, 3> reversed{};
  std::array<Vec2, 3> outward_normal;
  std::array<Vec2, 3> facet_tangent;
  std::array<double, 3> edge_length{};

  Vec2 map(const Vec2& xhat) const { return vertex[0] + jac * xhat; }
  /// Facet parameter (global orientation) for a local edge parameter.
  double facet_param(int e, double s) const { return reversed[e] ? 1.0 - s : s; }
};

ElementGeometry element_geometry(const Mesh& mesh, int t);

/// Physical values of a vector basis at a set of points (points x functions);
/// grad[i][j] = d u_i / d x_j.
struct VectorTable {
  Eigen::MatrixXd x, y;
  Eigen::MatrixXd grad[2][2];
  Eigen::MatrixXd div;
};

/// Physical values of a matrix basis, component (r, c) at m[2r + c]; row-wise divergence.
struct MatrixTable {
  Eigen::MatrixXd m[4];
  Eigen::MatrixXd div[2];
};

/// Contravariant Piola map u = J uhat / det J, with per-function sign flips.
VectorTable piola_vector(const Tabulation& ref, const ElementGeometry& g, const Eigen::VectorXd& sign,
                         bool with_derivatives = true);

/// tau = J^{-T} tauhat J^T, which keeps trace and normal-tangential degree.
MatrixTable map_stress(const Tabulation& ref, const ElementGeometry& g, bool with_derivatives = true);

/// Composition for matrix-valued skew bases (no derivatives).
MatrixTable map_compose(const Tabulation& ref);

}  // namespace mcs
