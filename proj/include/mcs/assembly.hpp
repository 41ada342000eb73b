#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mcs/fe_system.hpp"

namespace mcs {

using SparseMatrix = Eigen::SparseMatrix<double>;
using VectorField = std::function<Vec2(const Vec2&)>;

/// Physical basis tables of one element at the volume and edge quadrature points.
struct ElementFields {
  ElementGeometry geo;
  Eigen::VectorXd u_sign;
  Eigen::VectorXd weights;           // volume weights including det J
  std::vector<Vec2> points;          // physical volume points
  VectorTable u;                     // BDM
  MatrixTable sigma;                 // stress
  MatrixTable omega;                 // skew
  Eigen::MatrixXd q;                 // pressure
  std::array<VectorTable, 3> u_edge;
  std::array<MatrixTable, 3> sigma_edge;
  std::array<Eigen::VectorXd, 3> edge_weights;  // including edge length
  std::array<std::vector<Vec2>, 3> edge_points;
  /// Facet Legendre values at edge points, parametrised along the global facet direction.
  std::array<Eigen::MatrixXd, 3> uhat_edge;

  ElementFields(const FeSystem& fes, int t, bool with_stress = true);
};

/// All local blocks of the saddle system for one element.
struct ElementBlocks {
  Eigen::MatrixXd M_ss;   // (1/nu) stress mass
  Eigen::MatrixXd B_ws;   // rotation x stress
  Eigen::MatrixXd B_us;   // velocity x stress
  Eigen::MatrixXd B_uhs;  // tangential facet velocity x stress
  Eigen::MatrixXd A_div;  // (nu/2) div-div
  Eigen::MatrixXd B_pu;   // pressure x velocity, (div phi_j, q_i)
  Eigen::VectorXd F;      // (f, phi_i)
};

ElementBlocks assemble_element_blocks(const FeSystem& fes, int t, double nu, const VectorField& f);

/// Block offsets [sigma, omega, x, p, end] of the assembled full system; x is the condensed
/// velocity ordering of DofMap.
struct SaddleSystem {
  SparseMatrix K;
  Eigen::VectorXd rhs;
  std::array<int, 5> offset{};
};

/// Full matrix in the layout ((sigma, omega), (u, û), p) with Dirichlet dofs eliminated.
/// The pressure unknown of this system is the negative of the physical pressure.
SaddleSystem assemble_full_system(const FeSystem& fes, double nu, const VectorField& f, int threads = 1);
/// Same without the pressure row and column.
SaddleSystem assemble_elliptic_system(const FeSystem& fes, double nu, const VectorField& f, int threads = 1);

/// Canonical interpolant into V_h x V̂_h: facet normal moments, tangential facet moments
/// and an L2 fit of the bubbles. Exact for vector polynomials of degree <= k.
void interpolate_velocity(const FeSystem& fes, const VectorField& field, Eigen::VectorXd& u, Eigen::VectorXd& uhat);

/// Runs fn(t) for all elements, split into contiguous chunks over `threads` workers.
void parallel_for_elements(int n, int threads, const std::function<void(int)>& fn);

}  // namespace mcs
