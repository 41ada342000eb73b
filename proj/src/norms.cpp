#include "mcs/norms.hpp"

#include <cmath>

namespace mcs {

double jump_norm_formula(const Eigen::VectorXd& c, int k, double h, double facet_length) {
  double s = 0.0;
  for (int j = 0; j < c.size() && j <= k; ++j) s += k * (k - j + 1) * c[j] * c[j];
  return facet_length * s / h;
}

double jump_norm_sup(const Eigen::VectorXd& c, const ElementGeometry& g, int e, int k) {
  DubinerBasis db(k);
  LineRule r = gauss_line(2 * k + 2);
  Eigen::VectorXd moments = Eigen::VectorXd::Zero(db.size());
  std::vector<double> vals(db.size());
  for (size_t q = 0; q < r.points.size(); ++q) {
    const double s = r.points[q];
    const double w = Eigen::VectorXd(legendre_unit(static_cast<int>(c.size()) - 1, s)).dot(c);
    db.evaluate(reference::edge_point(e, s), vals.data(), nullptr, nullptr);
    for (int i = 0; i < db.size(); ++i) moments[i] += r.weights[q] * w * vals[i];
  }
  moments *= g.edge_length[e];
  // the mapped Dubiner functions are L2(T)-orthogonal with norm^2 = |T|
  return moments.squaredNorm() / g.area;
}

Eigen::MatrixXd tangential_jump_moments(const FeSystem& fes, const ElementFields& ef, int e) {
  const int k = fes.k();
  const DofMap& d = fes.dofs();
  const int nu = d.local_u_size();
  const auto& w = fes.edge_rule().weights;
  const Vec2 t = ef.geo.facet_tangent[e];
  const Eigen::MatrixXd ut = t.x() * ef.u_edge[e].x + t.y() * ef.u_edge[e].y;
  const Eigen::MatrixXd& L = ef.uhat_edge[e];
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, d.local_x_size());
  for (size_t q = 0; q < w.size(); ++q) out.leftCols(nu) += w[q] * L.row(q).transpose() * ut.row(q);
  for (int j = 0; j < k; ++j) out(j, nu + e * k + j) -= 1.0;
  return out;
}

Eigen::MatrixXd facet_jump_matrix(const FeSystem& fes, const ElementFields& ef, int e, JumpNorm kind) {
  const int k = fes.k();
  const Eigen::MatrixXd C = tangential_jump_moments(fes, ef, e);
  const double len = ef.geo.edge_length[e];
  if (kind == JumpNorm::Weighted) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(C.cols(), C.cols());
    for (int j = 0; j < k; ++j) out += (len * k * (k - j + 1) / ef.geo.diameter) * C.row(j).transpose() * C.row(j);
    return out;
  }
  // P^k(T) moments of the projected jump; Dubiner functions have squared norm |T|
  DubinerBasis db(k);
  std::vector<double> vals(db.size());
  const LineRule& er = fes.edge_rule();
  const Eigen::MatrixXd values = ef.uhat_edge[e] * C;
  Eigen::MatrixXd moments = Eigen::MatrixXd::Zero(db.size(), C.cols());
  for (size_t q = 0; q < er.points.size(); ++q) {
    db.evaluate(reference::edge_point(e, er.points[q]), vals.data(), nullptr, nullptr);
    for (int i = 0; i < db.size(); ++i) moments.row(i) += (len * er.weights[q] * vals[i]) * values.row(q);
  }
  return moments.transpose() * moments / ef.geo.area;
}

ElementNormMatrices element_norm_matrices(const FeSystem& fes, int t) {
  const ElementFields ef(fes, t, false);
  const DofMap& d = fes.dofs();
  const int nx = d.local_x_size(), nu = d.local_u_size();
  const auto W = ef.weights.asDiagonal();
  ElementNormMatrices out;
  out.eps = Eigen::MatrixXd::Zero(nx, nx);
  out.grad = Eigen::MatrixXd::Zero(nx, nx);
  out.div = Eigen::MatrixXd::Zero(nx, nx);
  const auto& g = ef.u.grad;
  const Eigen::MatrixXd off = 0.5 * (g[0][1] + g[1][0]);
  out.eps.topLeftCorner(nu, nu) = g[0][0].transpose() * W * g[0][0] + g[1][1].transpose() * W * g[1][1] +
                                  2.0 * off.transpose() * W * off;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.grad.topLeftCorner(nu, nu) += g[i][j].transpose() * W * g[i][j];
  out.div.topLeftCorner(nu, nu) = ef.u.div.transpose() * W * ef.u.div;
  out.jump = Eigen::MatrixXd::Zero(nx, nx);
  out.jump_sup = Eigen::MatrixXd::Zero(nx, nx);
  out.jump_l2 = Eigen::MatrixXd::Zero(nx, nx);
  const double h = ef.geo.diameter;
  for (int e = 0; e < 3; ++e) {
    out.jump += facet_jump_matrix(fes, ef, e, JumpNorm::Weighted);
    out.jump_sup += facet_jump_matrix(fes, ef, e, JumpNorm::Dual);
    const Eigen::MatrixXd C = tangential_jump_moments(fes, ef, e);
    out.jump_l2 += (ef.geo.edge_length[e] / h) * C.transpose() * C;
  }
  return out;
}

SparseMatrix assemble_eps_gram(const FeSystem& fes) {
  const DofMap& d = fes.dofs();
  std::vector<Eigen::Triplet<double>> trip;
  for (int t = 0; t < d.n_elements; ++t) {
    const ElementNormMatrices nm = element_norm_matrices(fes, t);
    const Eigen::MatrixXd G = nm.eps + nm.jump;
    const std::vector<int> xl = fes.x_local(t);
    for (size_t i = 0; i < xl.size(); ++i)
      for (size_t j = 0; j < xl.size(); ++j)
        if (xl[i] >= 0 && xl[j] >= 0) trip.emplace_back(xl[i], xl[j], G(i, j));
  }
  SparseMatrix G(d.n_x, d.n_x);
  G.setFromTriplets(trip.begin(), trip.end());
  return G;
}

Eigen::VectorXd gather_local(const FeSystem& fes, int t, const Eigen::VectorXd& u, const Eigen::VectorXd& uhat) {
  const std::vector<int> ug = fes.u_global(t), uh = fes.uhat_global(t);
  Eigen::VectorXd out(ug.size() + uh.size());
  for (size_t i = 0; i < ug.size(); ++i) out[i] = u[ug[i]];
  for (size_t i = 0; i < uh.size(); ++i) out[ug.size() + i] = uhat[uh[i]];
  return out;
}

double hdg_eps_norm(const FeSystem& fes, const Eigen::VectorXd& u, const Eigen::VectorXd& uhat) {
  double s = 0.0;
  for (int t = 0; t < fes.dofs().n_elements; ++t) {
    const ElementNormMatrices nm = element_norm_matrices(fes, t);
    const Eigen::VectorXd x = gather_local(fes, t, u, uhat);
    s += x.dot((nm.eps + nm.jump) * x);
  }
  return std::sqrt(std::max(s, 0.0));
}

std::pair<double, double> uh_norms(const FeSystem& fes, const Eigen::VectorXd& u, const Eigen::VectorXd& uhat,
                                   const Eigen::VectorXd& omega) {
  const DofMap& d = fes.dofs();
  double full = 0.0, star = 0.0;
  for (int t = 0; t < d.n_elements; ++t) {
    const ElementFields ef(fes, t, true);
    const ElementNormMatrices nm = element_norm_matrices(fes, t);
    const Eigen::VectorXd x = gather_local(fes, t, u, uhat);
    const Eigen::VectorXd ul = x.head(d.local_u_size());
    const Eigen::VectorXd w = omega.segment(t * d.omega_per_element, d.omega_per_element);
    const double jump = x.dot(nm.jump_l2 * x);
    // grad u and omega at the quadrature points
    Eigen::VectorXd g[2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) g[i][j] = ef.u.grad[i][j] * ul;
    Eigen::VectorXd om[4];
    for (int c = 0; c < 4; ++c) om[c] = ef.omega.m[c] * w;
    double a = 0.0, b = 0.0;
    for (int q = 0; q < ef.weights.size(); ++q) {
      Mat2 G;
      G << g[0][0][q], g[0][1][q], g[1][0][q], g[1][1][q];
      Mat2 O;
      O << om[0][q], om[1][q], om[2][q], om[3][q];
      const Mat2 eps = 0.5 * (G + G.transpose());
      const Mat2 skew = 0.5 * (G - G.transpose());  // kappa(curl u)
      Mat2 dev = G - O;
      dev -= 0.5 * dev.trace() * Mat2::Identity();
      a += ef.weights[q] * (eps.squaredNorm() + (skew - O).squaredNorm());
      b += ef.weights[q] * dev.squaredNorm();
    }
    full += a + jump;
    star += b + jump;
  }
  return {std::sqrt(full), std::sqrt(star)};
}

}  // namespace mcs
