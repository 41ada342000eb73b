#include "mcs/problems.hpp"

#include <cmath>

namespace mcs {

namespace {

Mesh refined(Mesh m, int level) {
  if (level < 0) throw ConfigError("refinement level must be >= 0");
  for (int l = 0; l < level; ++l) m = refine_uniform(m);
  return m;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

Problem make_channel(int level, double inflow) {
  Problem p;
  p.name = "channel";
  p.mesh = refined(build_structured(8, 2, Rect{0.0, 0.0, 4.0, 1.0}), level);
  RegionPredicates pred;
  pred.dirichlet = [](const Vec2&, int tag) { return tag != kRight; };
  pred.tilde_neumann = [](const Vec2&, int tag) { return tag == kRight; };
  p.regions = classify_boundary(p.mesh, pred, [inflow](const Vec2& x) {
    if (x.x() < 1e-12) return Vec2(4.0 * inflow * x.y() * (1.0 - x.y()), 0.0);
    return Vec2(0.0, 0.0);
  });
  p.force = [](const Vec2&) { return Vec2(0.0, 0.0); };
  return p;
}

Problem make_cavity(int level) {
  Problem p;
  p.name = "cavity";
  p.mesh = refined(build_structured(4, 4, Rect{}), level);
  p.regions = all_dirichlet(p.mesh, [](const Vec2& x) { return Vec2(x.y() > 1.0 - 1e-12 ? 1.0 : 0.0, 0.0); });
  p.force = [](const Vec2&) { return Vec2(0.0, 0.0); };
  return p;
}

Problem make_polynomial_solution(int level, double nu) {
  Problem p;
  p.name = "polynomial";
  p.mesh = refined(build_structured(2, 2, Rect{}), level);
  p.exact_velocity = [](const Vec2& x) {
    return Vec2(x.x() * x.x() + 2.0 * x.x() * x.y(), -2.0 * x.x() * x.y() - x.y() * x.y());
  };
  p.exact_gradient = [](const Vec2& x) {
    Mat2 g;
    g << 2.0 * x.x() + 2.0 * x.y(), 2.0 * x.x(), -2.0 * x.y(), -2.0 * x.x() - 2.0 * x.y();
    return g;
  };
  p.exact_pressure = [](const Vec2& x) { return x.x() + x.y() - 1.0; };
  // -div(nu eps(u)) + grad p with div u = 0 and Laplace u = (2, -2)
  p.force = [nu](const Vec2&) { return Vec2(1.0 - nu, 1.0 + nu); };
  p.regions = all_dirichlet(p.mesh, p.exact_velocity);
  return p;
}

Problem make_smooth_solution(int level, double nu) {
  Problem p;
  p.name = "smooth";
  p.mesh = refined(build_structured(2, 2, Rect{}), level);
  p.exact_velocity = [](const Vec2& x) {
    return Vec2(std::sin(kPi * x.x()) * std::cos(kPi * x.y()), -std::cos(kPi * x.x()) * std::sin(kPi * x.y()));
  };
  p.exact_gradient = [](const Vec2& x) {
    const double sx = std::sin(kPi * x.x()), cx = std::cos(kPi * x.x());
    const double sy = std::sin(kPi * x.y()), cy = std::cos(kPi * x.y());
    Mat2 g;
    g << kPi * cx * cy, -kPi * sx * sy, kPi * sx * sy, -kPi * cx * cy;
    return g;
  };
  p.exact_pressure = [](const Vec2& x) { return std::cos(kPi * x.x()) * std::cos(kPi * x.y()); };
  // Laplace u = -2 pi^2 u
  p.force = [nu, u = p.exact_velocity](const Vec2& x) {
    const Vec2 grad_p(-kPi * std::sin(kPi * x.x()) * std::cos(kPi * x.y()),
                      -kPi * std::cos(kPi * x.x()) * std::sin(kPi * x.y()));
    return Vec2(nu * kPi * kPi * u(x) + grad_p);
  };
  p.regions = all_dirichlet(p.mesh, p.exact_velocity);
  return p;
}

Problem make_problem(const std::string& name, int level, double nu) {
  if (name == "channel") return make_channel(level);
  if (name == "cavity") return make_cavity(level);
  if (name == "polynomial" || name == "manufactured") return make_polynomial_solution(level, nu);
  if (name == "smooth") return make_smooth_solution(level, nu);
  throw ConfigError("unknown problem '" + name + "' (channel | cavity | polynomial | smooth)");
}

void remove_pressure_mean(const FeSystem& fes, Eigen::VectorXd& p) {
  const DofMap& d = fes.dofs();
  double mean = 0.0, area = 0.0;
  for (int t = 0; t < d.n_elements; ++t) {
    const double a = fes.mesh().area(t);
    mean += a * p[d.q(t, 0)];
    area += a;
  }
  for (int t = 0; t < d.n_elements; ++t) p[d.q(t, 0)] -= mean / area;
}

SolutionErrors solution_errors(const FeSystem& fes, const Problem& problem, double nu, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& pressure, const Eigen::VectorXd& sigma) {
  const DofMap& d = fes.dofs();
  SolutionErrors err;
  for (int t = 0; t < d.n_elements; ++t) {
    const ElementFields ef(fes, t, true);
    const std::vector<int> ug = fes.u_global(t);
    Eigen::VectorXd ul(ug.size());
    for (size_t i = 0; i < ug.size(); ++i) ul[i] = u[ug[i]];
    const Eigen::VectorXd ux = ef.u.x * ul, uy = ef.u.y * ul;
    Eigen::VectorXd g[2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) g[i][j] = ef.u.grad[i][j] * ul;
    const Eigen::VectorXd ph = ef.q * pressure.segment(t * d.q_per_element, d.q_per_element);
    const Eigen::VectorXd st = sigma.segment(t * d.sigma_per_element, d.sigma_per_element);
    Eigen::VectorXd s[4];
    for (int c = 0; c < 4; ++c) s[c] = ef.sigma.m[c] * st;
    for (int q = 0; q < ef.weights.size(); ++q) {
      const Vec2& x = ef.points[q];
      const double w = ef.weights[q];
      const Vec2 ue = problem.exact_velocity(x);
      err.velocity_l2 += w * (Vec2(ux[q], uy[q]) - ue).squaredNorm();
      Mat2 G;
      G << g[0][0][q], g[0][1][q], g[1][0][q], g[1][1][q];
      const Mat2 Ge = problem.exact_gradient(x);
      const Mat2 eh = 0.5 * (G + G.transpose()), ee = 0.5 * (Ge + Ge.transpose());
      err.strain += w * (eh - ee).squaredNorm();
      if (problem.exact_pressure) err.pressure_l2 += w * std::pow(ph[q] - problem.exact_pressure(x), 2);
      Mat2 S;
      S << s[0][q], s[1][q], s[2][q], s[3][q];
      const Mat2 dev = ee - 0.5 * ee.trace() * Mat2::Identity();
      err.stress += w * (S + nu * dev).squaredNorm();
    }
  }
  err.velocity_l2 = std::sqrt(err.velocity_l2);
  err.strain = std::sqrt(err.strain);
  err.pressure_l2 = std::sqrt(err.pressure_l2);
  err.stress = std::sqrt(err.stress);
  return err;
}

}  // namespace mcs
