#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "mcs/element.hpp"
#include "mcs/mesh.hpp"
#include "mcs/polynomials.hpp"
#include "mcs/reference_basis.hpp"

namespace mcs {

/// Global numbering of all six spaces.
///
/// Global velocity dofs: facet f owns u dofs f*(k+1)+j (normal moments), element t owns
/// bubbles nf*(k+1) + t*nb + i. Tangential facet dofs are f*k + j. Pressure, stress and
/// rotation dofs are element-local blocks. V̄ dofs are 2*vertex + component.
///
/// The condensed velocity vector x is ordered [free facet u | free û | bubbles], so
/// the coupling block used by the double Schur complement is a leading segment.
struct DofMap {
  int k = 2;
  int n_vertices = 0, n_facets = 0, n_elements = 0;
  int u_per_facet = 0, bubbles_per_element = 0, uhat_per_facet = 0;
  int q_per_element = 0, sigma_per_element = 0, omega_per_element = 0;
  int n_u = 0, n_uhat = 0, n_q = 0, n_sigma = 0, n_omega = 0, n_vbar = 0;

  std::vector<char> u_constrained, uhat_constrained, vbar_constrained;
  std::vector<int> x_of_u, x_of_uhat;  // -1 for constrained dofs
  int n_x = 0;
  int n_x_facet_u = 0;   // free facet u dofs
  int n_x_uhat = 0;      // free û dofs
  int n_x_coupling = 0;  // n_x_facet_u + n_x_uhat
  std::vector<int> vbar_free;  // -1 for constrained
  int n_vbar_free = 0;

  int u_facet(int f, int j) const { return f * u_per_facet + j; }
  int u_bubble(int t, int i) const { return n_facets * u_per_facet + t * bubbles_per_element + i; }
  int uhat(int f, int j) const { return f * uhat_per_facet + j; }
  int q(int t, int i) const { return t * q_per_element + i; }
  int local_u_size() const { return 3 * u_per_facet + bubbles_per_element; }
  int local_uhat_size() const { return 3 * uhat_per_facet; }
  /// Local condensed block: u (edge functions, then bubbles) followed by û.
  int local_x_size() const { return local_u_size() + local_uhat_size(); }
  int local_coupling_size() const { return 3 * u_per_facet + local_uhat_size(); }
  /// Free velocity plus pressure dofs.
  int total_free() const { return n_x + n_q; }
};

/// Reference bases, quadrature, tables and dof maps for a mesh and degree k.
class FeSystem {
 public:
  FeSystem(Mesh mesh, BoundaryRegions regions, int k);

  const Mesh& mesh() const { return mesh_; }
  const BoundaryRegions& regions() const { return regions_; }
  int k() const { return k_; }
  const DofMap& dofs() const { return dofs_; }

  const ReferenceBasis& bdm() const { return bdm_; }
  const ReferenceBasis& sigma() const { return sigma_; }
  const ReferenceBasis& skew() const { return skew_; }
  const ReferenceBasis& pressure() const { return pressure_; }
  const FacetBasis& facet() const { return facet_; }

  const TriangleRule& volume_rule() const { return volume_rule_; }
  const LineRule& edge_rule() const { return edge_rule_; }
  const Tabulation& bdm_volume() const { return bdm_vol_; }
  const Tabulation& sigma_volume() const { return sigma_vol_; }
  const Tabulation& skew_volume() const { return skew_vol_; }
  const Tabulation& pressure_volume() const { return pressure_vol_; }
  const Tabulation& bdm_edge(int e) const { return bdm_edge_[e]; }
  const Tabulation& sigma_edge(int e) const { return sigma_edge_[e]; }
  /// Legendre values L_j(s_q), j < k, at the edge rule points (points x k).
  const Eigen::MatrixXd& facet_values() const { return facet_vals_; }
  /// Same at reversed points 1 - s_q.
  const Eigen::MatrixXd& facet_values_reversed() const { return facet_vals_rev_; }

  ElementGeometry geometry(int t) const { return element_geometry(mesh_, t); }
  /// Orientation signs of the local u functions of element t.
  Eigen::VectorXd u_signs(const ElementGeometry& g) const;
  /// Global u dof of each local u function.
  std::vector<int> u_global(int t) const;
  std::vector<int> uhat_global(int t) const;
  /// Condensed x index for the local (u, û) block; -1 for constrained dofs.
  std::vector<int> x_local(int t) const;

  /// Dirichlet values of all global u and û dofs (zero where unconstrained).
  void dirichlet_values(Eigen::VectorXd& g_u, Eigen::VectorXd& g_uhat) const;

 private:
  Mesh mesh_;
  BoundaryRegions regions_;
  int k_;
  DofMap dofs_;
  ReferenceBasis bdm_, sigma_, skew_, pressure_;
  FacetBasis facet_;
  TriangleRule volume_rule_;
  LineRule edge_rule_;
  Tabulation bdm_vol_, sigma_vol_, skew_vol_, pressure_vol_;
  std::array<Tabulation, 3> bdm_edge_, sigma_edge_;
  Eigen::MatrixXd facet_vals_, facet_vals_rev_;
};

DofMap build_dof_maps(const Mesh& m, const BoundaryRegions& regions, int k);

}  // namespace mcs
