#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mcs/polynomials.hpp"

namespace mcs {

/// Geometry of the reference triangle (0,0), (1,0), (0,1).
/// Local edge e runs from vertex (e+1)%3 to vertex (e+2)%3.
namespace reference {
Vec2 vertex(int i);
Vec2 edge_point(int e, double s);
Vec2 edge_normal(int e);   // unit outward normal
Vec2 edge_tangent(int e);  // unit vector along the edge direction
double edge_length(int e);
}  // namespace reference

enum class DofKind { Coupling, Interior };

/// Values (components x points x functions) and first derivatives of a basis.
struct Tabulation {
  std::vector<Eigen::MatrixXd> val, dx, dy;  // one (points x functions) block per component
};

/// Polynomial basis on the reference triangle stored as coefficients in an
/// orthogonal Dubiner expansion, one coefficient block per component.
/// Components: 1 (scalar), 2 (vector), 4 (matrix, row major).
class ReferenceBasis {
 public:
  ReferenceBasis(int degree, int components);

  int degree() const { return degree_; }
  int components() const { return static_cast<int>(coef_.size()); }
  int size() const { return static_cast<int>(coef_[0].rows()); }
  const DubinerBasis& dubiner() const { return dubiner_; }
  /// functions x Dubiner coefficients for component c
  const Eigen::MatrixXd& coefficients(int c) const { return coef_[c]; }

  const std::vector<DofKind>& kind() const { return kind_; }
  /// Edge owning a coupling function (-1 for interior ones) and its moment index.
  const std::vector<int>& edge() const { return edge_; }
  const std::vector<int>& moment() const { return moment_; }
  int count(DofKind k) const;

  Tabulation tabulate(const std::vector<Vec2>& pts) const;

  /// Vector bases: M(j, i) = int_0^1 (phi_i . n_e) L_j ds, j = 0..max_degree.
  Eigen::MatrixXd normal_moments(int e, int max_degree) const;
  /// Matrix bases: M(j, i) = int_0^1 (t_e^T tau_i n_e) L_j ds.
  Eigen::MatrixXd nt_moments(int e, int max_degree) const;

  /// Mean-value Gram matrix, (1/|T|) int phi_i . phi_j over the reference triangle.
  Eigen::MatrixXd gram() const;

  // construction helpers
  void append(const std::vector<Eigen::VectorXd>& component_coefficients, DofKind kind, int edge,
              int moment);

 private:
  int degree_;
  DubinerBasis dubiner_;
  std::vector<Eigen::MatrixXd> coef_;
  std::vector<DofKind> kind_;
  std::vector<int> edge_, moment_;
};

/// Hierarchical P^k: barycentric vertex functions followed by Dubiner functions of
/// degree 2..k.
ReferenceBasis scalar_basis(int k);
/// Orthogonal P^k (Dubiner), first function is the constant 1.
ReferenceBasis orthogonal_scalar_basis(int k);
/// Full vector P^k split into 3(k+1) edge functions and (k+1)(k-1) normal bubbles.
/// Edge function (e, j) has normal trace L_j(s) / |e| on edge e and zero on the others.
ReferenceBasis bdm_basis(int k);
/// Trace-free matrix P^k with normal-tangential trace in P^{k-1} on each edge.
ReferenceBasis sigma_basis(int k);
/// kappa(psi_i) for orthogonal scalar P^degree.
ReferenceBasis skew_basis(int degree);

/// Legendre functions of degree < k on an edge, used as tangential traces.
struct FacetBasis {
  int k = 2;
  int size() const { return k; }
  Eigen::VectorXd evaluate(double s) const;
};
FacetBasis facet_basis(int k);

}  // namespace mcs
