#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mcs/mesh.hpp"

namespace mcs {

/// Number of scalar polynomials of total degree <= k in two variables.
constexpr int scalar_dim(int k) { return k < 0 ? 0 : (k + 1) * (k + 2) / 2; }

/// Gauss-Legendre rule on [0, 1].
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
  int exactness = 0;
};

/// Rule on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2.
struct TriangleRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
  int exactness = 0;
};

LineRule gauss_line(int exactness);
/// Collapsed (Duffy) tensor product of Gauss-Legendre rules.
TriangleRule gauss_triangle(int exactness);

/// Legendre polynomials on [0,1] normalised so that int_0^1 L_i L_j = delta_ij.
/// Returns values L_0..L_n at s.
Eigen::VectorXd legendre_unit(int n, double s);

/// Orthogonal (Dubiner) basis of P^n on the reference triangle, scaled so that
/// the mean of psi_i * psi_j over the triangle is delta_ij (psi_0 == 1).
class DubinerBasis {
 public:
  explicit DubinerBasis(int degree);
  int degree() const { return degree_; }
  int size() const { return scalar_dim(degree_); }

  /// Values and gradients of all basis functions at one point.
  void evaluate(const Vec2& x, double* values, double* dx, double* dy) const;

  /// Tables (points x functions).
  Eigen::MatrixXd values(const std::vector<Vec2>& pts) const;
  void tabulate(const std::vector<Vec2>& pts, Eigen::MatrixXd& val, Eigen::MatrixXd& dx,
                Eigen::MatrixXd& dy) const;

 private:
  int degree_;
  std::vector<double> scale_;
};

}  // namespace mcs
