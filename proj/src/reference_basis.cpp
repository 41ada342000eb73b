#include "mcs/reference_basis.hpp"

#include <cmath>
#include <stdexcept>

namespace mcs {

namespace reference {

Vec2 vertex(int i) {
  switch (i) {
    case 0: return Vec2(0.0, 0.0);
    case 1: return Vec2(1.0, 0.0);
    default: return Vec2(0.0, 1.0);
  }
}

Vec2 edge_point(int e, double s) {
  Vec2 a = vertex((e + 1) % 3), b = vertex((e + 2) % 3);
  return a + s * (b - a);
}

Vec2 edge_tangent(int e) {
  Vec2 d = vertex((e + 2) % 3) - vertex((e + 1) % 3);
  return d.normalized();
}

Vec2 edge_normal(int e) {
  Vec2 t = edge_tangent(e);
  return Vec2(t.y(), -t.x());
}

double edge_length(int e) { return (vertex((e + 2) % 3) - vertex((e + 1) % 3)).norm(); }

}  // namespace reference

ReferenceBasis::ReferenceBasis(int degree, int components)
    : degree_(degree), dubiner_(degree), coef_(components, Eigen::MatrixXd(0, scalar_dim(degree))) {}

int ReferenceBasis::count(DofKind k) const {
  int c = 0;
  for (auto x : kind_) c += (x == k);
  return c;
}

void ReferenceBasis::append(const std::vector<Eigen::VectorXd>& cc, DofKind kind, int edge, int moment) {
  const int n = size();
  for (int c = 0; c < components(); ++c) {
    coef_[c].conservativeResize(n + 1, Eigen::NoChange);
    coef_[c].row(n) = cc[c].transpose();
  }
  kind_.push_back(kind);
  edge_.push_back(edge);
  moment_.push_back(moment);
}

Tabulation ReferenceBasis::tabulate(const std::vector<Vec2>& pts) const {
  Eigen::MatrixXd v, gx, gy;
  dubiner_.tabulate(pts, v, gx, gy);
  Tabulation t;
  for (int c = 0; c < components(); ++c) {
    t.val.push_back(v * coef_[c].transpose());
    t.dx.push_back(gx * coef_[c].transpose());
    t.dy.push_back(gy * coef_[c].transpose());
  }
  return t;
}

Eigen::MatrixXd ReferenceBasis::normal_moments(int e, int max_degree) const {
  if (components() != 2) throw std::logic_error("normal_moments: vector basis required");
  LineRule rule = gauss_line(degree_ + max_degree);
  std::vector<Vec2> pts;
  for (double s : rule.points) pts.push_back(reference::edge_point(e, s));
  Tabulation tab = tabulate(pts);
  Vec2 n = reference::edge_normal(e);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(max_degree + 1, size());
  for (size_t q = 0; q < pts.size(); ++q) {
    Eigen::VectorXd L = legendre_unit(max_degree, rule.points[q]);
    Eigen::RowVectorXd un = n.x() * tab.val[0].row(q) + n.y() * tab.val[1].row(q);
    m += rule.weights[q] * L * un;
  }
  return m;
}

Eigen::MatrixXd ReferenceBasis::nt_moments(int e, int max_degree) const {
  if (components() != 4) throw std::logic_error("nt_moments: matrix basis required");
  LineRule rule = gauss_line(degree_ + max_degree);
  std::vector<Vec2> pts;
  for (double s : rule.points) pts.push_back(reference::edge_point(e, s));
  Tabulation tab = tabulate(pts);
  Vec2 n = reference::edge_normal(e), t = reference::edge_tangent(e);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(max_degree + 1, size());
  for (size_t q = 0; q < pts.size(); ++q) {
    Eigen::VectorXd L = legendre_unit(max_degree, rule.points[q]);
    Eigen::RowVectorXd nt = Eigen::RowVectorXd::Zero(size());
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) nt += t[r] * n[c] * tab.val[2 * r + c].row(q);
    m += rule.weights[q] * L * nt;
  }
  return m;
}

Eigen::MatrixXd ReferenceBasis::gram() const {
  // the Dubiner expansion is orthonormal for the mean inner product
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(size(), size());
  for (int c = 0; c < components(); ++c) g += coef_[c] * coef_[c].transpose();
  return g;
}

namespace {

Eigen::VectorXd unit(int n, int i) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v[i] = 1.0;
  return v;
}

// mean-value projection of a polynomial onto the Dubiner expansion
template <class F>
Eigen::VectorXd project(const DubinerBasis& db, F&& f) {
  TriangleRule rule = gauss_triangle(2 * db.degree() + 2);
  Eigen::MatrixXd V = db.values(rule.points);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(db.size());
  for (size_t q = 0; q < rule.points.size(); ++q)
    c += 2.0 * rule.weights[q] * f(rule.points[q]) * V.row(q).transpose();
  return c;
}

}  // namespace

ReferenceBasis scalar_basis(int k) {
  if (k < 0) throw std::invalid_argument("scalar_basis: negative degree");
  ReferenceBasis b(k, 1);
  const int n = scalar_dim(k);
  if (k == 0) {
    b.append({unit(n, 0)}, DofKind::Interior, -1, 0);
    return b;
  }
  const DubinerBasis& db = b.dubiner();
  b.append({project(db, [](const Vec2& x) { return 1.0 - x.x() - x.y(); })}, DofKind::Coupling, -1, 0);
  b.append({project(db, [](const Vec2& x) { return x.x(); })}, DofKind::Coupling, -1, 0);
  b.append({project(db, [](const Vec2& x) { return x.y(); })}, DofKind::Coupling, -1, 0);
  for (int i = 3; i < n; ++i) b.append({unit(n, i)}, DofKind::Interior, -1, 0);
  return b;
}

ReferenceBasis orthogonal_scalar_basis(int k) {
  if (k < 0) throw std::invalid_argument("orthogonal_scalar_basis: negative degree");
  ReferenceBasis b(k, 1);
  const int n = scalar_dim(k);
  for (int i = 0; i < n; ++i) b.append({unit(n, i)}, DofKind::Interior, -1, 0);
  return b;
}

ReferenceBasis bdm_basis(int k) {
  if (k < 1) throw std::invalid_argument("bdm_basis: degree must be >= 1");
  const int n = scalar_dim(k);
  // full vector P^k, used to measure normal moments of every candidate
  ReferenceBasis full(k, 2);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < n; ++i) {
      std::vector<Eigen::VectorXd> cc(2, Eigen::VectorXd::Zero(n));
      cc[c][i] = 1.0;
      full.append(cc, DofKind::Interior, -1, 0);
    }
  const int nm = 3 * (k + 1);
  Eigen::MatrixXd D(nm, 2 * n);
  for (int e = 0; e < 3; ++e) D.middleRows(e * (k + 1), k + 1) = full.normal_moments(e, k);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv[nm - 1] < 1e-10 * sv[0]) throw std::logic_error("bdm_basis: normal moment map rank deficient");
  Eigen::MatrixXd pinv = svd.matrixV().leftCols(nm) * sv.cwiseInverse().asDiagonal() *
                         svd.matrixU().transpose();
  ReferenceBasis b(k, 2);
  for (int e = 0; e < 3; ++e)
    for (int j = 0; j <= k; ++j) {
      Eigen::VectorXd c = pinv.col(e * (k + 1) + j) / reference::edge_length(e);
      b.append({c.head(n), c.tail(n)}, DofKind::Coupling, e, j);
    }
  Eigen::MatrixXd null = svd.matrixV().rightCols(2 * n - nm);
  for (int i = 0; i < null.cols(); ++i)
    b.append({null.col(i).head(n), null.col(i).tail(n)}, DofKind::Interior, -1, 0);
  return b;
}

ReferenceBasis sigma_basis(int k) {
  if (k < 2) throw std::invalid_argument("sigma_basis: degree must be >= 2");
  const int n = scalar_dim(k);
  const int nlow = scalar_dim(k - 1);
  const double r = 1.0 / std::sqrt(2.0);
  // trace-free directions: diag(1,-1)/sqrt2, e01, e10
  auto make = [&](int dir, const Eigen::VectorXd& s) {
    std::vector<Eigen::VectorXd> cc(4, Eigen::VectorXd::Zero(n));
    if (dir == 0) {
      cc[0] = r * s;
      cc[3] = -r * s;
    } else if (dir == 1) {
      cc[1] = s;
    } else {
      cc[2] = s;
    }
    return cc;
  };
  ReferenceBasis b(k, 4);
  // matrix P^{k-1}: nt-trace automatically of degree k-1
  for (int dir = 0; dir < 3; ++dir)
    for (int i = 0; i < nlow; ++i) b.append(make(dir, unit(n, i)), DofKind::Interior, -1, 0);
  // degree-k candidates, constrained to zero leading nt moment on every edge
  ReferenceBasis top(k, 4);
  for (int dir = 0; dir < 3; ++dir)
    for (int i = nlow; i < n; ++i) top.append(make(dir, unit(n, i)), DofKind::Interior, -1, 0);
  Eigen::MatrixXd C(3, top.size());
  for (int e = 0; e < 3; ++e) C.row(e) = top.nt_moments(e, k).row(k);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv[2] < 1e-10 * sv[0]) throw std::logic_error("sigma_basis: nt constraint rank deficient");
  Eigen::MatrixXd null = svd.matrixV().rightCols(top.size() - 3);
  for (int i = 0; i < null.cols(); ++i) {
    std::vector<Eigen::VectorXd> cc(4, Eigen::VectorXd::Zero(n));
    for (int c = 0; c < 4; ++c) cc[c] = top.coefficients(c).transpose() * null.col(i);
    b.append(cc, DofKind::Interior, -1, 0);
  }
  return b;
}

ReferenceBasis skew_basis(int degree) {
  const int n = scalar_dim(degree);
  ReferenceBasis b(degree, 4);
  for (int i = 0; i < n; ++i) {
    std::vector<Eigen::VectorXd> cc(4, Eigen::VectorXd::Zero(n));
    cc[1][i] = -0.5;
    cc[2][i] = 0.5;
    b.append(cc, DofKind::Interior, -1, 0);
  }
  return b;
}

Eigen::VectorXd FacetBasis::evaluate(double s) const { return legendre_unit(k - 1, s); }

FacetBasis facet_basis(int k) {
  if (k < 2) throw std::invalid_argument("facet_basis: degree must be >= 2");
  return FacetBasis{k};
}

}  // namespace mcs
