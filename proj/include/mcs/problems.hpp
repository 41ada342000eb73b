#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "mcs/assembly.hpp"
#include "mcs/mesh.hpp"

namespace mcs {

using ScalarField = std::function<double(const Vec2&)>;
using MatrixField = std::function<Mat2(const Vec2&)>;

/// Geometry, boundary data, load and (if known) the exact solution of a benchmark.
struct Problem {
  std::string name;
  Mesh mesh;
  BoundaryRegions regions;
  VectorField force;
  VectorField exact_velocity;
  MatrixField exact_gradient;
  ScalarField exact_pressure;
};

/// [0,4] x [0,1] with 8 x 2 cells refined `level` times. Parabolic inflow of peak `inflow`
/// on the left, no-slip walls, and on the right the normal-natural, tangential-no-slip
/// outflow.
Problem make_channel(int level, double inflow = 1.0);
/// Unit square with 4 x 4 cells refined `level` times, lid velocity (1, 0) on the top side,
/// no-slip elsewhere and mean-zero pressure.
Problem make_cavity(int level);
/// Unit square, u = (x^2 + 2xy, -2xy - y^2), p = x + y - 1. Reproduced exactly for k >= 2.
Problem make_polynomial_solution(int level, double nu);
/// Unit square, u = (sin(pi x) cos(pi y), -cos(pi x) sin(pi y)), p = cos(pi x) cos(pi y).
Problem make_smooth_solution(int level, double nu);

/// Problem by name: channel | cavity | polynomial | smooth.
Problem make_problem(const std::string& name, int level, double nu);

/// Removes the mean of a piecewise pressure in the orthonormal element basis, where the
/// first function of each element is the constant.
void remove_pressure_mean(const FeSystem& fes, Eigen::VectorXd& p);

/// Error norms of a discrete solution against an exact one.
struct SolutionErrors {
  double velocity_l2 = 0.0;
  double strain = 0.0;    // broken ||eps(u_h) - eps(u)||
  double pressure_l2 = 0.0;
  double stress = 0.0;    // ||sigma_h + nu dev eps(u)||
};

/// `pressure` is the physical pressure (mean-corrected when needed).
SolutionErrors solution_errors(const FeSystem& fes, const Problem& problem, double nu, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& pressure, const Eigen::VectorXd& sigma);

}  // namespace mcs
