#include <cmath>
#include <random>

#include "doctest.h"
#include "mcs/assembly.hpp"
#include "mcs/fe_system.hpp"

using namespace mcs;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// int_T x^a y^b over the reference triangle
double monomial_integral(int a, int b) { return factorial(a) * factorial(b) / factorial(a + b + 2); }

}  // namespace

TEST_CASE("triangle quadrature is exact for monomials up to its degree") {
  for (int k = 2; k <= 6; ++k) {
    TriangleRule r = gauss_triangle(2 * k + 2);
    CHECK(r.exactness >= 2 * k + 2);
    for (int a = 0; a <= 2 * k + 2; ++a)
      for (int b = 0; a + b <= 2 * k + 2; ++b) {
        double s = 0.0;
        for (size_t q = 0; q < r.points.size(); ++q)
          s += r.weights[q] * std::pow(r.points[q].x(), a) * std::pow(r.points[q].y(), b);
        double exact = monomial_integral(a, b);
        CHECK(std::abs(s - exact) <= 1e-13 * exact);
      }
  }
}

TEST_CASE("line quadrature and Legendre orthonormality") {
  LineRule r = gauss_line(12);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(6, 6);
  for (size_t q = 0; q < r.points.size(); ++q) {
    Eigen::VectorXd L = legendre_unit(5, r.points[q]);
    G += r.weights[q] * L * L.transpose();
  }
  CHECK((G - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Dubiner basis is orthonormal for the mean inner product") {
  DubinerBasis db(5);
  TriangleRule r = gauss_triangle(12);
  Eigen::MatrixXd V = db.values(r.points);
  Eigen::VectorXd w = Eigen::Map<Eigen::VectorXd>(r.weights.data(), r.weights.size());
  Eigen::MatrixXd G = 2.0 * V.transpose() * w.asDiagonal() * V;
  CHECK((G - Eigen::MatrixXd::Identity(db.size(), db.size())).cwiseAbs().maxCoeff() < 1e-12);
  // gradients against central differences
  Vec2 x(0.23, 0.41);
  std::vector<double> v(db.size()), gx(db.size()), gy(db.size()), vp(db.size()), vm(db.size());
  db.evaluate(x, v.data(), gx.data(), gy.data());
  const double h = 1e-6;
  db.evaluate(x + Vec2(h, 0), vp.data(), nullptr, nullptr);
  db.evaluate(x - Vec2(h, 0), vm.data(), nullptr, nullptr);
  for (int i = 0; i < db.size(); ++i) CHECK(gx[i] == doctest::Approx((vp[i] - vm[i]) / (2 * h)).epsilon(1e-6));
  db.evaluate(x + Vec2(0, h), vp.data(), nullptr, nullptr);
  db.evaluate(x - Vec2(0, h), vm.data(), nullptr, nullptr);
  for (int i = 0; i < db.size(); ++i) CHECK(gy[i] == doctest::Approx((vp[i] - vm[i]) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("scalar bases") {
  CHECK(scalar_basis(1).size() == 3);
  CHECK(scalar_basis(2).size() == 6);
  ReferenceBasis b = scalar_basis(1);
  TriangleRule r = gauss_triangle(4);
  Tabulation t = b.tabulate(r.points);
  for (size_t q = 0; q < r.points.size(); ++q) CHECK(t.val[0].row(q).sum() == doctest::Approx(1.0).epsilon(1e-14));
  ReferenceBasis o = orthogonal_scalar_basis(3);
  Tabulation to = o.tabulate(r.points);
  for (size_t q = 0; q < r.points.size(); ++q) CHECK(to.val[0](q, 0) == doctest::Approx(1.0));
}

TEST_CASE("BDM basis split and normal traces") {
  for (int k : {2, 3, 4, 5, 6}) {
    ReferenceBasis b = bdm_basis(k);
    CHECK(b.size() == (k + 1) * (k + 2));
    CHECK(b.count(DofKind::Coupling) == 3 * (k + 1));
    CHECK(b.count(DofKind::Interior) == (k + 1) * (k - 1));
    CHECK(b.gram().determinant() > 0);
    LineRule lr = gauss_line(2 * k + 2);
    for (int e = 0; e < 3; ++e) {
      std::vector<Vec2> pts;
      for (double s : lr.points) pts.push_back(reference::edge_point(e, s));
      Tabulation t = b.tabulate(pts);
      Vec2 n = reference::edge_normal(e);
      for (int i = 0; i < b.size(); ++i)
        for (size_t q = 0; q < pts.size(); ++q) {
          double un = n.x() * t.val[0](q, i) + n.y() * t.val[1](q, i);
          double expected = 0.0;
          if (b.kind()[i] == DofKind::Coupling && b.edge()[i] == e)
            expected = legendre_unit(k, lr.points[q])[b.moment()[i]] / reference::edge_length(e);
          CHECK(std::abs(un - expected) <= 1e-12);
        }
    }
  }
  CHECK(bdm_basis(2).size() == 12);
  CHECK(bdm_basis(4).count(DofKind::Coupling) == 15);
}

TEST_CASE("stress basis is trace free with degree k-1 nt traces") {
  for (int k : {2, 3, 4, 5, 6}) {
    ReferenceBasis b = sigma_basis(k);
    CHECK(b.size() == 3 * (k + 1) * (k + 2) / 2 - 3);
    CHECK(b.gram().determinant() > 0);
    TriangleRule r = gauss_triangle(2 * k);
    Tabulation t = b.tabulate(r.points);
    CHECK((t.val[0] + t.val[3]).cwiseAbs().maxCoeff() <= 1e-12);
    for (int e = 0; e < 3; ++e) {
      Eigen::MatrixXd m = b.nt_moments(e, k);
      CHECK(m.row(k).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  CHECK(sigma_basis(2).size() == 15);
}

TEST_CASE("skew and facet bases") {
  ReferenceBasis s = skew_basis(1);
  CHECK(s.size() == 3);
  CHECK(skew_basis(3).size() == 10);
  TriangleRule r = gauss_triangle(4);
  Tabulation t = s.tabulate(r.points);
  CHECK((t.val[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t.val[1] + t.val[2]).cwiseAbs().maxCoeff() <= 1e-15);
  // first function is kappa(1)
  for (size_t q = 0; q < r.points.size(); ++q) {
    CHECK(t.val[1](q, 0) == doctest::Approx(-0.5));
    CHECK(t.val[2](q, 0) == doctest::Approx(0.5));
  }
  CHECK(facet_basis(2).size() == 2);
  CHECK(facet_basis(4).size() == 4);
  CHECK_THROWS(facet_basis(1));
}

TEST_CASE("dof maps") {
  Mesh m = build_structured(1, 1, Rect{});
  BoundaryRegions reg = all_dirichlet(m);
  DofMap d = build_dof_maps(m, reg, 2);
  CHECK(d.n_u == 3 * m.num_facets() + 3 * m.num_elements());
  CHECK(d.n_q == m.num_elements() * 3);
  CHECK(d.n_x_uhat == 2 * 1);  // one interior facet
  CHECK_THROWS_AS(build_dof_maps(m, reg, 1), ConfigError);
  Mesh m2 = build_structured(3, 2, Rect{});
  DofMap d2 = build_dof_maps(m2, all_dirichlet(m2), 3);
  int interior = 0;
  for (int f = 0; f < m2.num_facets(); ++f) interior += !m2.is_boundary_facet(f);
  CHECK(d2.n_x_uhat == 3 * interior);
  CHECK(d2.n_x_facet_u == 4 * interior);
  CHECK(d2.n_x == d2.n_x_coupling + m2.num_elements() * 8);
}

TEST_CASE("divergence of BDM functions lies in the pressure space") {
  Mesh m = build_structured(1, 1, Rect{0, 0, 2, 1});
  FeSystem fes(m, all_dirichlet(m), 3);
  for (int t = 0; t < m.num_elements(); ++t) {
    ElementFields ef(fes, t, false);
    const auto W = ef.weights.asDiagonal();
    Eigen::MatrixXd Mq = ef.q.transpose() * W * ef.q;
    Eigen::MatrixXd rhs = ef.q.transpose() * W * ef.u.div;
    Eigen::MatrixXd proj = ef.q * Mq.ldlt().solve(rhs);
    CHECK((proj - ef.u.div).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + ef.u.div.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("normal continuity across shared facets") {
  std::vector<Vec2> v = {Vec2(0, 0), Vec2(1.2, 0.1), Vec2(0.9, 1.1), Vec2(-0.2, 0.8)};
  Mesh m(v, {{0, 1, 2}, {0, 2, 3}});
  RegionPredicates p;
  p.neumann = [](const Vec2&, int) { return true; };
  RegionPredicates pd;
  pd.dirichlet = [](const Vec2&, int) { return true; };
  for (int k : {2, 3, 4}) {
    FeSystem fes(m, classify_boundary(m, pd), k);
    ElementFields a(fes, 0, false), b(fes, 1, false);
    int f = -1;
    for (int i = 0; i < m.num_facets(); ++i)
      if (!m.is_boundary_facet(i)) f = i;
    int ea = -1, eb = -1;
    for (int e = 0; e < 3; ++e) {
      if (a.geo.facet[e] == f) ea = e;
      if (b.geo.facet[e] == f) eb = e;
    }
    Vec2 nf = m.facet_normal(f);
    const auto ga = fes.u_global(0), gb = fes.u_global(1);
    for (size_t qa = 0; qa < a.edge_points[ea].size(); ++qa) {
      size_t qb = 0;
      while ((b.edge_points[eb][qb] - a.edge_points[ea][qa]).norm() > 1e-12) ++qb;
      for (size_t i = 0; i < ga.size(); ++i) {
        double ua = nf.x() * a.u_edge[ea].x(qa, i) + nf.y() * a.u_edge[ea].y(qa, i);
        double ub = 0.0;
        for (size_t j = 0; j < gb.size(); ++j)
          if (gb[j] == ga[i]) ub = nf.x() * b.u_edge[eb].x(qb, j) + nf.y() * b.u_edge[eb].y(qb, j);
        CHECK(std::abs(ua - ub) <= 1e-12);
      }
    }
    // global mass matrix symmetric
    std::vector<Eigen::Triplet<double>> trip;
    for (int t = 0; t < 2; ++t) {
      ElementFields ef(fes, t, false);
      const auto W = ef.weights.asDiagonal();
      Eigen::MatrixXd M = ef.u.x.transpose() * W * ef.u.x + ef.u.y.transpose() * W * ef.u.y;
      auto g = fes.u_global(t);
      for (size_t i = 0; i < g.size(); ++i)
        for (size_t j = 0; j < g.size(); ++j) trip.emplace_back(g[i], g[j], M(i, j));
    }
    SparseMatrix M(fes.dofs().n_u, fes.dofs().n_u);
    M.setFromTriplets(trip.begin(), trip.end());
    CHECK((Eigen::MatrixXd(M) - Eigen::MatrixXd(M.transpose())).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("Dirichlet values reproduce normal and tangential traces") {
  Mesh m = build_structured(2, 2, Rect{});
  auto g = [](const Vec2& x) { return Vec2(x.y() * x.y() + x.x(), 2.0 * x.x() * x.y()); };
  FeSystem fes(m, all_dirichlet(m, g), 2);
  Eigen::VectorXd gu, guh;
  fes.dirichlet_values(gu, guh);
  // a quadratic field: normal trace exact; tangential trace projected to P1
  for (int t = 0; t < m.num_elements(); ++t) {
    ElementFields ef(fes, t, false);
    auto ug = fes.u_global(t);
    for (int e = 0; e < 3; ++e) {
      int f = ef.geo.facet[e];
      if (!m.is_boundary_facet(f)) continue;
      for (size_t q = 0; q < ef.edge_points[e].size(); ++q) {
        double un = 0.0;
        for (int j = 0; j <= 2; ++j) {
          int li = e * 3 + j;
          un += gu[ug[li]] * (ef.u_edge[e].x(q, li) * ef.geo.outward_normal[e].x() +
                              ef.u_edge[e].y(q, li) * ef.geo.outward_normal[e].y());
        }
        CHECK(un == doctest::Approx(g(ef.edge_points[e][q]).dot(ef.geo.outward_normal[e])).epsilon(1e-12));
      }
    }
  }
}
