#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "mcs/norms.hpp"

using namespace mcs;
using namespace testing_support;

TEST_CASE("element blocks: mass, div-div kernel, rigid modes") {
  Mesh m = two_triangles();
  for (int k : {2, 3}) {
    FeSystem fes(m, all_natural(m), k);
    for (int t = 0; t < 2; ++t) {
      ElementBlocks b = assemble_element_blocks(fes, t, 1.0, {});
      // stress mass for nu = 1 equals the stress Gram matrix
      ElementFields ef(fes, t);
      const auto W = ef.weights.asDiagonal();
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(b.M_ss.rows(), b.M_ss.cols());
      for (int c = 0; c < 4; ++c) G += ef.sigma.m[c].transpose() * W * ef.sigma.m[c];
      CHECK((G - b.M_ss).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(b.M_ss.llt().info() == Eigen::Success);
      {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.A_div);
        CHECK(es.eigenvalues().minCoeff() > -1e-12 * es.eigenvalues().maxCoeff());
      }
      ElementBlocks b2 = assemble_element_blocks(fes, t, 1e-3, {});
      CHECK((b2.M_ss * 1e-3 - b.M_ss).cwiseAbs().maxCoeff() < 1e-12);
    }
    // divergence-free fields lie in the div-div kernel; rigid modes are orthogonal to all stresses
    Eigen::VectorXd u, uh;
    auto field = [](const Vec2& x) { return Vec2(x.x() * x.x() - 2 * x.y(), -2 * x.x() * x.y() + 1.0); };
    interpolate_velocity(fes, field, u, uh);
    for (int t = 0; t < 2; ++t) {
      ElementBlocks b = assemble_element_blocks(fes, t, 1.0, {});
      Eigen::VectorXd ul(fes.dofs().local_u_size());
      auto ug = fes.u_global(t);
      for (size_t i = 0; i < ug.size(); ++i) ul[i] = u[ug[i]];
      CHECK((b.A_div * ul).cwiseAbs().maxCoeff() < 1e-12);
    }
    Eigen::VectorXd ur, uhr;
    const double rot = 0.7;
    interpolate_velocity(fes, rigid_mode(0.3, -1.1, rot), ur, uhr);
    for (int t = 0; t < 2; ++t) {
      ElementBlocks b = assemble_element_blocks(fes, t, 1.0, {});
      Eigen::VectorXd x = gather_local(fes, t, ur, uhr);
      Eigen::MatrixXd Bs(x.size(), b.M_ss.cols());
      Bs << b.B_us, b.B_uhs;
      // omega = kappa(curl u) = kappa(2 rot); kappa(psi_0) has psi_0 = 1
      Eigen::VectorXd w = Eigen::VectorXd::Zero(b.B_ws.rows());
      w[0] = 2 * rot;
      Eigen::VectorXd residual = Bs.transpose() * x + b.B_ws.transpose() * w;
      CHECK(residual.cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("full and elliptic systems") {
  Mesh m = two_triangles();
  FeSystem fes(m, all_dirichlet(m), 2);
  SaddleSystem full = assemble_full_system(fes, 1.0, {});
  SaddleSystem ell = assemble_elliptic_system(fes, 1.0, {});
  const DofMap& d = fes.dofs();
  CHECK(full.K.rows() == d.n_sigma + d.n_omega + d.n_x + d.n_q);
  CHECK(ell.K.rows() == full.offset[3]);
  CHECK((dense(full.K) - dense(full.K).transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(full.rhs.cwiseAbs().maxCoeff() == 0.0);
  const int n = ell.K.rows();
  CHECK((dense(full.K).topLeftCorner(n, n) - dense(ell.K)).cwiseAbs().maxCoeff() == 0.0);

  // same counts on a refined mesh with threads
  Mesh r = refine_uniform(build_structured(2, 2, Rect{}));
  FeSystem fr(r, all_dirichlet(r), 3);
  auto f = [](const Vec2& x) { return Vec2(std::sin(x.x()), x.y()); };
  SaddleSystem a = assemble_full_system(fr, 0.5, f, 1), b = assemble_full_system(fr, 0.5, f, 3);
  CHECK((dense(a.K) - dense(b.K)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.rhs - b.rhs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("divergence constraint equals the projected divergence") {
  Mesh m = refine_uniform(build_structured(1, 1, Rect{0, 0, 1.5, 1}));
  FeSystem fes(m, all_natural(m), 3);
  std::mt19937 rng(11);
  Eigen::VectorXd u = random_vector(fes.dofs().n_u, rng);
  for (int t = 0; t < m.num_elements(); ++t) {
    ElementBlocks b = assemble_element_blocks(fes, t, 1.0, {});
    ElementFields ef(fes, t, false);
    auto ug = fes.u_global(t);
    Eigen::VectorXd ul(ug.size());
    for (size_t i = 0; i < ug.size(); ++i) ul[i] = u[ug[i]];
    const auto W = ef.weights.asDiagonal();
    Eigen::MatrixXd Mq = ef.q.transpose() * W * ef.q;
    Eigen::VectorXd p = Mq.ldlt().solve(b.B_pu * ul);
    CHECK((ef.q * p - ef.u.div * ul).cwiseAbs().maxCoeff() < 1e-10 * (1 + ul.norm()));
  }
}

TEST_CASE("jump norm formula and definition") {
  // constant trace, k = 2: weight k(k+1) = 6
  Eigen::VectorXd c = Eigen::VectorXd::Zero(3);
  c[0] = 1.7;
  const double h = 0.4, len = 0.3;
  CHECK(jump_norm_formula(c, 2, h, len) == doctest::Approx(6.0 / h * len * c[0] * c[0]));
  CHECK(jump_norm_formula(Eigen::VectorXd::Zero(3), 2, h, len) == 0.0);

  Mesh m = two_triangles();
  ElementGeometry g = element_geometry(m, 0);
  CHECK(jump_norm_sup(Eigen::VectorXd::Zero(3), g, 0, 2) == 0.0);
  std::mt19937 rng(5);
  double lo = 1e300, hi = 0.0;
  for (int k = 2; k <= 6; ++k)
    for (int s = 0; s < 40; ++s) {
      Eigen::VectorXd v = random_vector(k + 1, rng);
      for (int e = 0; e < 3; ++e) {
        const double a = jump_norm_sup(v, g, e, k);
        const double b = jump_norm_formula(v, k, g.diameter, g.edge_length[e]);
        lo = std::min(lo, a / b);
        hi = std::max(hi, a / b);
      }
    }
  MESSAGE("jump norm ratio definition/formula in [" << lo << ", " << hi << "]");
  CHECK(lo > 0.05);
  CHECK(hi < 20.0);
}

TEST_CASE("HDG norms") {
  Mesh m = refine_uniform(build_structured(1, 1, Rect{}));
  FeSystem fes(m, all_natural(m), 2);
  const DofMap& d = fes.dofs();
  // rigid modes lie in the kernel when û is the tangential moment of u
  Eigen::VectorXd u, uh;
  interpolate_velocity(fes, rigid_mode(1.0, -0.5, 0.8), u, uh);
  CHECK(hdg_eps_norm(fes, u, uh) < 1e-6);  // square root of round-off
  // u = 0 and û on one facet
  Eigen::VectorXd z = Eigen::VectorXd::Zero(d.n_u), w = Eigen::VectorXd::Zero(d.n_uhat);
  CHECK(hdg_eps_norm(fes, z, w) == 0.0);
  w[d.uhat(3, 1)] = 1.0;
  CHECK(hdg_eps_norm(fes, z, w) > 0.0);
  // homogeneity and triangle inequality
  std::mt19937 rng(3);
  for (int s = 0; s < 20; ++s) {
    Eigen::VectorXd u1 = random_vector(d.n_u, rng), h1 = random_vector(d.n_uhat, rng);
    Eigen::VectorXd u2 = random_vector(d.n_u, rng), h2 = random_vector(d.n_uhat, rng);
    const double a = hdg_eps_norm(fes, u1, h1), b = hdg_eps_norm(fes, u2, h2);
    CHECK(hdg_eps_norm(fes, -2.5 * u1, -2.5 * h1) == doctest::Approx(2.5 * a).epsilon(1e-12));
    CHECK(hdg_eps_norm(fes, u1 + u2, h1 + h2) <= a + b + 1e-12);
  }
  // a conforming field with matching facet values has no jump contribution
  auto field = [](const Vec2& x) { return Vec2(x.x() * x.y(), x.x() - x.y() * x.y()); };
  interpolate_velocity(fes, field, u, uh);
  for (int t = 0; t < d.n_elements; ++t) {
    ElementNormMatrices nm = element_norm_matrices(fes, t);
    Eigen::VectorXd x = gather_local(fes, t, u, uh);
    CHECK(x.dot(nm.jump * x) < 1e-14);
  }
}

TEST_CASE("U_h norms") {
  Mesh m = refine_uniform(build_structured(1, 1, Rect{}));
  FeSystem fes(m, all_natural(m), 2);
  const DofMap& d = fes.dofs();
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(d.n_u), z1 = Eigen::VectorXd::Zero(d.n_uhat),
                  z2 = Eigen::VectorXd::Zero(d.n_omega);
  auto zero = uh_norms(fes, z0, z1, z2);
  CHECK(zero.first == 0.0);
  CHECK(zero.second == 0.0);

  // conforming u, û = u_t and omega = kappa(curl u): ||.||_{U_h} = ||eps(u)||
  auto field = [](const Vec2& x) { return Vec2(x.y() * x.y(), x.x() * x.x()); };  // curl = 2x - 2y
  Eigen::VectorXd u, uh;
  interpolate_velocity(fes, field, u, uh);
  Eigen::VectorXd omega = Eigen::VectorXd::Zero(d.n_omega);
  double eps2 = 0.0;
  for (int t = 0; t < d.n_elements; ++t) {
    ElementFields ef(fes, t);
    const auto W = ef.weights.asDiagonal();
    Eigen::VectorXd curl(ef.points.size());
    for (size_t q = 0; q < ef.points.size(); ++q) {
      curl[q] = 2 * ef.points[q].x() - 2 * ef.points[q].y();
      const double off = ef.points[q].x() + ef.points[q].y();  // eps_01
      eps2 += ef.weights[q] * 2 * off * off;
    }
    // omega = kappa(psi) with psi the L2 projection of curl; kappa(psi)_{10} = psi/2
    const Eigen::MatrixXd& K10 = ef.omega.m[2];
    Eigen::MatrixXd G = K10.transpose() * W * K10;
    omega.segment(t * d.omega_per_element, d.omega_per_element) = G.ldlt().solve(K10.transpose() * W * (0.5 * curl));
  }
  auto n = uh_norms(fes, u, uh, omega);
  CHECK(n.first * n.first == doctest::Approx(eps2).epsilon(1e-10));

  // equivalence with the div-corrected star norm on divergence-free fields
  std::mt19937 rng(9);
  double lo = 1e300, hi = 0.0;
  for (int s = 0; s < 200; ++s) {
    const Eigen::VectorXd c = random_vector(6, rng);
    Eigen::VectorXd uu;
    auto psi_field = [c](const Vec2& x) {
      const double X = x.x(), Y = x.y();
      // psi = c0 X Y + c1 X^2 Y + c2 X Y^2 + c3 Y^3 + c4 X^3 + c5 X^2
      const double px = c[0] * Y + 2 * c[1] * X * Y + c[2] * Y * Y + 3 * c[4] * X * X + 2 * c[5] * X;
      const double py = c[0] * X + c[1] * X * X + 2 * c[2] * X * Y + 3 * c[3] * Y * Y;
      return Vec2(py, -px);
    };
    interpolate_velocity(fes, psi_field, uu, uh);
    Eigen::VectorXd hh = uh + 0.3 * random_vector(d.n_uhat, rng);
    Eigen::VectorXd ww = random_vector(d.n_omega, rng);
    auto nn = uh_norms(fes, uu, hh, ww);
    if (nn.second < 1e-12) continue;
    const double r = nn.first * nn.first / (nn.second * nn.second);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  MESSAGE("U_h / star-norm ratio on divergence-free samples in [" << lo << ", " << hi << "]");
  // in two dimensions ||A||^2 = ||dev A||^2 + tr(A)^2 / 2, so the equivalence is an identity
  CHECK(lo == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-10));
  for (int s = 0; s < 20; ++s) {
    Eigen::VectorXd uu = random_vector(d.n_u, rng), hh = random_vector(d.n_uhat, rng),
                    ww = random_vector(d.n_omega, rng);
    auto nn = uh_norms(fes, uu, hh, ww);
    double div2 = 0.0;
    for (int t = 0; t < d.n_elements; ++t) {
      Eigen::VectorXd x = gather_local(fes, t, uu, hh);
      div2 += x.dot(element_norm_matrices(fes, t).div * x);
    }
    CHECK(nn.first * nn.first == doctest::Approx(nn.second * nn.second + 0.5 * div2).epsilon(1e-10));
  }
}
