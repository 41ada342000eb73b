#pragma once

#include <random>

#include <Eigen/Dense>

#include "mcs/assembly.hpp"

namespace testing_support {

using mcs::Vec2;

inline Eigen::VectorXd random_vector(int n, std::mt19937& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

/// a + b x^perp
inline mcs::VectorField rigid_mode(double ax, double ay, double b) {
  return [=](const Vec2& x) { return Vec2(ax - b * x.y(), ay + b * x.x()); };
}

/// A non-square two-element mesh with one interior facet.
inline mcs::Mesh two_triangles() {
  std::vector<Vec2> v = {Vec2(0, 0), Vec2(1.2, 0.1), Vec2(0.9, 1.1), Vec2(-0.2, 0.8)};
  return mcs::Mesh(v, {{0, 1, 2}, {0, 2, 3}});
}

/// Dense copy of a sparse matrix.
inline Eigen::MatrixXd dense(const mcs::SparseMatrix& A) { return Eigen::MatrixXd(A); }

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

/// Mesh with the right side as Neumann outflow and the rest Dirichlet.
inline mcs::BoundaryRegions right_outflow(const mcs::Mesh& m, double x_right, mcs::VectorField g = {}) {
  mcs::RegionPredicates p;
  p.dirichlet = [x_right](const Vec2& c, int) { return std::abs(c.x() - x_right) > 1e-12; };
  p.neumann = [x_right](const Vec2& c, int) { return std::abs(c.x() - x_right) <= 1e-12; };
  return mcs::classify_boundary(m, p, std::move(g));
}

}  // namespace testing_support
