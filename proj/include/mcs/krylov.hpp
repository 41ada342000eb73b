#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mcs/linear_map.hpp"

namespace mcs {

struct KrylovReport {
  int iterations = 0;
  /// Relative residual norms, starting with the initial residual.
  std::vector<double> residuals;
  bool converged = false;
  /// CG only: p^T A p <= 0 or r^T z <= 0 was met.
  bool negative_curvature = false;
};

struct GmresOptions {
  double rtol = 1e-6;
  int maxit = 500;
  /// Optional projection applied to every preconditioned direction and the final iterate
  /// (e.g. removal of the constant pressure mode).
  std::function<void(Eigen::VectorXd&)> project;
};

/// Full (non-restarted) right-preconditioned GMRES with modified Gram-Schmidt. An empty
/// preconditioner means the identity. The reported residuals are those of the least-squares
/// problem, which equal the true residuals in exact arithmetic.
Eigen::VectorXd gmres(const LinearMap& A, const LinearMap& preconditioner, const Eigen::VectorXd& b,
                      const GmresOptions& options, KrylovReport& report);

/// Preconditioned conjugate gradients. Stops and flags the report when negative curvature
/// is detected.
Eigen::VectorXd cg(const LinearMap& A, const LinearMap& preconditioner, const Eigen::VectorXd& b, double rtol,
                   int maxit, KrylovReport& report);

struct SpectrumEstimate {
  double lambda_min = 0.0, lambda_max = 0.0, cond = 0.0;
  int steps = 0;
  int restarts = 0;
};

/// Extreme eigenvalues of P A for SPD A and SPD P by Lanczos in the P^{-1} inner product with
/// full reorthogonalization. On breakdown the recursion restarts from a fresh random vector
/// orthogonal to the current basis, at most three times.
SpectrumEstimate lanczos_spectrum(const LinearMap& A, const LinearMap& P, int n, int steps, unsigned seed = 7);

}  // namespace mcs
