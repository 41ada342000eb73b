#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mcs/assembly.hpp"

namespace mcs {

/// Per-element factors of the (sigma, omega) elimination and of the bubble elimination.
///
/// Local (u, û) ordering: 3(k+1) edge functions, then bubbles, then 3k facet functions.
struct ElementCondensation {
  std::vector<int> x;            // condensed index per local dof, -1 if constrained
  Eigen::VectorXd dirichlet;     // prescribed values of constrained local dofs (0 elsewhere)
  Eigen::LLT<Eigen::MatrixXd> mass;  // stress mass (1/nu)(sigma, tau)
  Eigen::MatrixXd H;             // mass^{-1} B_ws^T
  Eigen::LLT<Eigen::MatrixXd> P; // B_ws mass^{-1} B_ws^T
  Eigen::MatrixXd R_sigma;       // sigma = R_sigma * local (u, û)
  Eigen::MatrixXd R_omega;       // omega = R_omega * local (u, û)
  Eigen::MatrixXd S;             // local Schur complement
  Eigen::MatrixXd A_div;         // (nu/2) div-div on local (u, û)
  Eigen::MatrixXd B_p;           // pressure x local (u, û)
  Eigen::VectorXd F;             // load on local (u, û)
  Eigen::MatrixXd S_bb, S_cb;    // bubble and coupling x bubble blocks of S
  Eigen::LLT<Eigen::MatrixXd> S_bubble;
  Eigen::MatrixXd extension;     // S_bb^{-1} S_bc over local coupling dofs
};

/// Local index lists of coupling (edge u, û) and bubble dofs.
struct LocalSplit {
  std::vector<int> coupling, bubble;
};
LocalSplit local_split(const DofMap& d);

/// Eliminates (sigma, omega) and the bubbles on element t.
ElementCondensation condense_element(const FeSystem& fes, int t, double nu, const VectorField& f);

/// Local solve of -(1/nu)(sigma, tau) + (tau, omega) = g(tau), (sigma, eta) = 0.
void local_projection_solve(const ElementCondensation& ec, const Eigen::VectorXd& g, Eigen::VectorXd& sigma,
                            Eigen::VectorXd& omega);

/// Condensed velocity system and its factors.
class CondensedSystem {
 public:
  CondensedSystem(const FeSystem& fes, double nu, const VectorField& f, int threads = 1);

  const FeSystem& fes() const { return *fes_; }
  double nu() const { return nu_; }
  const SparseMatrix& S() const { return S_; }
  /// Double Schur complement over the leading coupling block of x.
  const SparseMatrix& S_boundary() const { return S_boundary_; }
  /// Divergence constraint over x, rows are pressure dofs.
  const SparseMatrix& B() const { return B_; }
  const Eigen::VectorXd& rhs_u() const { return rhs_u_; }
  const Eigen::VectorXd& rhs_p() const { return rhs_p_; }
  const std::vector<ElementCondensation>& elements() const { return elements_; }

  /// Local (u, û) block of element t from x, Dirichlet values filled in.
  Eigen::VectorXd local_values(int t, const Eigen::VectorXd& x, bool with_dirichlet = true) const;
  /// Global u, û coefficient vectors from x (constrained dofs get their Dirichlet values).
  void expand(const Eigen::VectorXd& x, Eigen::VectorXd& u, Eigen::VectorXd& uhat, bool with_dirichlet = true) const;

  /// Element-wise recovery of (sigma, omega) for given velocities.
  void recover_stress(const Eigen::VectorXd& x, Eigen::VectorXd& sigma, Eigen::VectorXd& omega,
                      bool with_dirichlet = true) const;

  /// (x^T S x, (1/nu)||sigma||^2 + (nu/2)||div u||^2) for homogeneous data.
  std::pair<double, double> schur_norm_identity(const Eigen::VectorXd& x) const;

  /// Completes the bubble dofs of x by the discrete harmonic extension.
  Eigen::VectorXd harmonic_extend(const Eigen::VectorXd& x) const;

  /// y = S x through the block factorization with S_boundary.
  Eigen::VectorXd apply_factorized(const Eigen::VectorXd& x) const;

  /// Bubble part of the block factorization: y_b = S_bb^{-1} r_b, element by element.
  Eigen::VectorXd solve_bubbles(const Eigen::VectorXd& r) const;
  /// y_c -= S_cb z_b, summed over elements.
  void subtract_coupling_from_bubbles(const Eigen::VectorXd& z, Eigen::VectorXd& y) const;
  /// z_b -= S_bb^{-1} S_bc y_c.
  void subtract_extension(const Eigen::VectorXd& y, Eigen::VectorXd& z) const;

  int n_x() const { return fes_->dofs().n_x; }
  int n_coupling() const { return fes_->dofs().n_x_coupling; }

 private:
  const FeSystem* fes_;
  double nu_;
  SparseMatrix S_, S_boundary_, B_;
  Eigen::VectorXd rhs_u_, rhs_p_;
  std::vector<ElementCondensation> elements_;
  LocalSplit split_;
};

}  // namespace mcs
