#pragma once

#include <utility>

#include <Eigen/Dense>

#include "mcs/assembly.hpp"

namespace mcs {

/// Jump norm of a facet polynomial given by its coefficients in the orthonormal
/// Legendre basis L_j(s) on [0,1] (s along the facet).
///
/// Weighted formula: h^{-1} sum_j k (k - j + 1) |F| c_j^2.
double jump_norm_formula(const Eigen::VectorXd& legendre_coefficients, int k, double h, double facet_length);

/// Dual definition: sup over vector P^k(T) of (w, sigma)_F^2 / ||sigma||_T^2, evaluated
/// as g^T G^{-1} g. Coefficients are in the local edge parameter of edge e.
double jump_norm_sup(const Eigen::VectorXd& legendre_coefficients, const ElementGeometry& g, int e, int k);

/// Legendre coefficients (j < k, global facet parameter) of the tangential trace
/// (u - û)_t on local edge e as a linear map of the local (u, û) block.
Eigen::MatrixXd tangential_jump_moments(const FeSystem& fes, const ElementFields& ef, int e);

/// Two realisations of the facet jump norm: the dual definition (sup over scalar P^k(T))
/// and the equivalent weighted Legendre formula.
enum class JumpNorm { Dual, Weighted };

/// Gram matrix on the local (u, û) block of ||Pi^{k-1}(u - û)_t||_{j,F}^2 on local edge e.
Eigen::MatrixXd facet_jump_matrix(const FeSystem& fes, const ElementFields& ef, int e, JumpNorm kind);

/// Local Gram matrices on the (u, û) block of one element.
struct ElementNormMatrices {
  Eigen::MatrixXd eps;        // ||eps(u)||_T^2
  Eigen::MatrixXd jump;       // sum_F ||Pi^{k-1}(u - û)_t||_{j,F}^2, weighted formula
  Eigen::MatrixXd jump_sup;   // same with the dual (sup over P^k(T)) definition
  Eigen::MatrixXd jump_l2;    // h^{-1} ||Pi^{k-1}(u - û)_t||_{dT}^2
  Eigen::MatrixXd div;        // ||div u||_T^2
  Eigen::MatrixXd grad;       // ||grad u||_T^2
};

ElementNormMatrices element_norm_matrices(const FeSystem& fes, int t);

/// Gram matrix of ||.||_{eps,h}^2 over the condensed x numbering (free dofs only).
SparseMatrix assemble_eps_gram(const FeSystem& fes);

/// ||(u, û)||_{eps,h} for global coefficient vectors (n_u, n_uhat), constrained entries included.
double hdg_eps_norm(const FeSystem& fes, const Eigen::VectorXd& u, const Eigen::VectorXd& uhat);

/// (||(u, û, omega)||_{U_h}, |(u, û, omega)|_{U_h,*}) for global coefficient vectors.
std::pair<double, double> uh_norms(const FeSystem& fes, const Eigen::VectorXd& u, const Eigen::VectorXd& uhat,
                                   const Eigen::VectorXd& omega);

/// Gathers the local (u, û) block of element t from global vectors.
Eigen::VectorXd gather_local(const FeSystem& fes, int t, const Eigen::VectorXd& u, const Eigen::VectorXd& uhat);

}  // namespace mcs
