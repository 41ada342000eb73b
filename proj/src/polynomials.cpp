#include "mcs/polynomials.hpp"

#include <cmath>
#include <stdexcept>

namespace mcs {

namespace {

// value with gradient, enough to push derivatives through the recurrences
struct Dual {
  double v = 0.0, dx = 0.0, dy = 0.0;
};
Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.dx + b.dx, a.dy + b.dy}; }
Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.dx - b.dx, a.dy - b.dy}; }
Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.dx * b.v + a.v * b.dx, a.dy * b.v + a.v * b.dy}; }
Dual operator*(double s, Dual a) { return {s * a.v, s * a.dx, s * a.dy}; }

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at converged node
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace

LineRule gauss_line(int exactness) {
  int n = std::max(1, (exactness + 2) / 2);
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  LineRule r;
  r.exactness = 2 * n - 1;
  // ascending order in s
  for (int i = n - 1; i >= 0; --i) {
    r.points.push_back(0.5 * (x[i] + 1.0));
    r.weights.push_back(0.5 * w[i]);
  }
  return r;
}

TriangleRule gauss_triangle(int exactness) {
  LineRule a = gauss_line(exactness);
  LineRule b = gauss_line(exactness + 1);
  TriangleRule r;
  r.exactness = std::min(a.exactness, b.exactness - 1);
  for (size_t j = 0; j < b.points.size(); ++j)
    for (size_t i = 0; i < a.points.size(); ++i) {
      double eta = b.points[j], xi = a.points[i];
      r.points.emplace_back(xi * (1.0 - eta), eta);
      r.weights.push_back(a.weights[i] * b.weights[j] * (1.0 - eta));
    }
  return r;
}

Eigen::VectorXd legendre_unit(int n, double s) {
  Eigen::VectorXd out(n + 1);
  double z = 2.0 * s - 1.0;
  double p0 = 1.0, p1 = z;
  for (int j = 0; j <= n; ++j) {
    double pj;
    if (j == 0) pj = 1.0;
    else if (j == 1) pj = z;
    else {
      pj = ((2 * j - 1) * z * p1 - (j - 1) * p0) / j;
      p0 = p1;
      p1 = pj;
    }
    out[j] = std::sqrt(2.0 * j + 1.0) * pj;
  }
  return out;
}

namespace {

// unnormalised Dubiner functions psi_{p,q}, ordered by total degree
void dubiner_raw(int n, const Vec2& pt, std::vector<Dual>& out) {
  const Dual x{pt.x(), 1.0, 0.0}, y{pt.y(), 0.0, 1.0};
  const Dual a = 2.0 * x + y - Dual{1.0, 0.0, 0.0};
  const Dual b = Dual{1.0, 0.0, 0.0} - y;
  const Dual z = 2.0 * y - Dual{1.0, 0.0, 0.0};
  std::vector<Dual> Q(n + 1);
  Q[0] = {1.0, 0.0, 0.0};
  if (n >= 1) Q[1] = a;
  for (int m = 1; m < n; ++m)
    Q[m + 1] = (1.0 / (m + 1)) * ((2.0 * m + 1.0) * (a * Q[m]) - double(m) * (b * b * Q[m - 1]));
  // Jacobi P_q^{(2p+1,0)}(z) for each p
  std::vector<std::vector<Dual>> J(n + 1);
  for (int p = 0; p <= n; ++p) {
    const double al = 2.0 * p + 1.0;
    auto& P = J[p];
    P.resize(n - p + 1);
    P[0] = {1.0, 0.0, 0.0};
    if (n - p >= 1) P[1] = 0.5 * ((al + 2.0) * z + Dual{al, 0.0, 0.0});
    for (int q = 2; q <= n - p; ++q) {
      double a1 = 2.0 * q * (q + al) * (2.0 * q + al - 2.0);
      double c1 = (2.0 * q + al - 1.0);
      double c2 = (2.0 * q + al) * (2.0 * q + al - 2.0);
      double c3 = 2.0 * (q + al - 1.0) * (q - 1.0) * (2.0 * q + al);
      P[q] = (1.0 / a1) * (c1 * (c2 * z + Dual{al * al, 0.0, 0.0}) * P[q - 1] - c3 * P[q - 2]);
    }
  }
  out.clear();
  for (int d = 0; d <= n; ++d)
    for (int q = 0; q <= d; ++q) {
      int p = d - q;
      out.push_back(Q[p] * J[p][q]);
    }
}

}  // namespace

DubinerBasis::DubinerBasis(int degree) : degree_(degree) {
  if (degree < 0) throw std::invalid_argument("DubinerBasis: negative degree");
  TriangleRule rule = gauss_triangle(2 * degree);
  scale_.assign(size(), 0.0);
  std::vector<Dual> vals;
  for (size_t q = 0; q < rule.points.size(); ++q) {
    dubiner_raw(degree, rule.points[q], vals);
    for (int i = 0; i < size(); ++i) scale_[i] += 2.0 * rule.weights[q] * vals[i].v * vals[i].v;
  }
  for (double& s : scale_) s = 1.0 / std::sqrt(s);
}

void DubinerBasis::evaluate(const Vec2& x, double* values, double* dx, double* dy) const {
  std::vector<Dual> vals;
  dubiner_raw(degree_, x, vals);
  for (int i = 0; i < size(); ++i) {
    if (values) values[i] = scale_[i] * vals[i].v;
    if (dx) dx[i] = scale_[i] * vals[i].dx;
    if (dy) dy[i] = scale_[i] * vals[i].dy;
  }
}

Eigen::MatrixXd DubinerBasis::values(const std::vector<Vec2>& pts) const {
  Eigen::MatrixXd v(pts.size(), size());
  std::vector<double> buf(size());
  for (size_t q = 0; q < pts.size(); ++q) {
    evaluate(pts[q], buf.data(), nullptr, nullptr);
    for (int i = 0; i < size(); ++i) v(q, i) = buf[i];
  }
  return v;
}

void DubinerBasis::tabulate(const std::vector<Vec2>& pts, Eigen::MatrixXd& val, Eigen::MatrixXd& dx,
                            Eigen::MatrixXd& dy) const {
  const int n = size();
  val.resize(pts.size(), n);
  dx.resize(pts.size(), n);
  dy.resize(pts.size(), n);
  std::vector<double> v(n), gx(n), gy(n);
  for (size_t q = 0; q < pts.size(); ++q) {
    evaluate(pts[q], v.data(), gx.data(), gy.data());
    for (int i = 0; i < n; ++i) {
      val(q, i) = v[i];
      dx(q, i) = gx[i];
      dy(q, i) = gy[i];
    }
  }
}

}  // namespace mcs
