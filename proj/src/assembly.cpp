#include "mcs/assembly.hpp"

#include <exception>
#include <thread>

namespace mcs {

void parallel_for_elements(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n < 2 * threads) {
    for (int t = 0; t < n; ++t) fn(t);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const int chunk = (n + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    const int lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn, &err = errors[w]] {
      try {
        for (int t = lo; t < hi; ++t) fn(t);
      } catch (...) {
        err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

ElementFields::ElementFields(const FeSystem& fes, int t, bool with_stress) : geo(fes.geometry(t)) {
  u_sign = fes.u_signs(geo);
  const auto& rule = fes.volume_rule();
  const int nq = static_cast<int>(rule.points.size());
  weights.resize(nq);
  points.resize(nq);
  for (int q = 0; q < nq; ++q) {
    weights[q] = geo.det * rule.weights[q];
    points[q] = geo.map(rule.points[q]);
  }
  u = piola_vector(fes.bdm_volume(), geo, u_sign, true);
  if (with_stress) {
    sigma = map_stress(fes.sigma_volume(), geo, true);
    omega = map_compose(fes.skew_volume());
  }
  q = fes.pressure_volume().val[0];
  const auto& er = fes.edge_rule();
  const int ne = static_cast<int>(er.points.size());
  for (int e = 0; e < 3; ++e) {
    u_edge[e] = piola_vector(fes.bdm_edge(e), geo, u_sign, false);
    if (with_stress) sigma_edge[e] = map_stress(fes.sigma_edge(e), geo, false);
    edge_weights[e].resize(ne);
    edge_points[e].resize(ne);
    for (int i = 0; i < ne; ++i) {
      edge_weights[e][i] = geo.edge_length[e] * er.weights[i];
      edge_points[e][i] = geo.map(reference::edge_point(e, er.points[i]));
    }
    uhat_edge[e] = geo.reversed[e] ? fes.facet_values_reversed() : fes.facet_values();
  }
}

ElementBlocks assemble_element_blocks(const FeSystem& fes, int t, double nu, const VectorField& f) {
  const ElementFields ef(fes, t);
  const auto W = ef.weights.asDiagonal();
  const int k = fes.k();
  ElementBlocks b;
  const auto& S = ef.sigma;
  b.M_ss = Eigen::MatrixXd::Zero(S.m[0].cols(), S.m[0].cols());
  for (int c = 0; c < 4; ++c) b.M_ss.noalias() += S.m[c].transpose() * W * S.m[c];
  b.M_ss /= nu;
  b.B_ws = Eigen::MatrixXd::Zero(ef.omega.m[0].cols(), S.m[0].cols());
  for (int c = 0; c < 4; ++c) b.B_ws.noalias() += ef.omega.m[c].transpose() * W * S.m[c];
  b.B_us = ef.u.x.transpose() * W * S.div[0] + ef.u.y.transpose() * W * S.div[1];
  b.B_uhs = Eigen::MatrixXd::Zero(3 * k, S.m[0].cols());
  for (int e = 0; e < 3; ++e) {
    const Vec2 n = ef.geo.outward_normal[e];
    const Vec2 tf = ef.geo.facet_tangent[e];
    const auto& se = ef.sigma_edge[e];
    const auto& ue = ef.u_edge[e];
    const auto We = ef.edge_weights[e].asDiagonal();
    Eigen::MatrixXd tnn = Eigen::MatrixXd::Zero(se.m[0].rows(), se.m[0].cols());
    Eigen::MatrixXd tnt = tnn;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        tnn += n[r] * n[c] * se.m[2 * r + c];
        tnt += tf[r] * n[c] * se.m[2 * r + c];
      }
    Eigen::MatrixXd un = n.x() * ue.x + n.y() * ue.y;
    b.B_us.noalias() -= un.transpose() * We * tnn;
    b.B_uhs.middleRows(e * k, k).noalias() -= ef.uhat_edge[e].transpose() * We * tnt;
  }
  b.A_div = (nu / 2.0) * ef.u.div.transpose() * W * ef.u.div;
  b.B_pu = ef.q.transpose() * W * ef.u.div;
  b.F = Eigen::VectorXd::Zero(ef.u.x.cols());
  if (f) {
    for (int q = 0; q < static_cast<int>(ef.points.size()); ++q) {
      const Vec2 fv = f(ef.points[q]);
      b.F += ef.weights[q] * (fv.x() * ef.u.x.row(q) + fv.y() * ef.u.y.row(q)).transpose();
    }
  }
  return b;
}

namespace {

SaddleSystem assemble_saddle(const FeSystem& fes, double nu, const VectorField& f, int threads,
                             bool with_pressure) {
  const DofMap& d = fes.dofs();
  const int ne = d.n_elements;
  std::vector<ElementBlocks> blocks(ne);
  parallel_for_elements(ne, threads, [&](int t) { blocks[t] = assemble_element_blocks(fes, t, nu, f); });

  SaddleSystem sys;
  sys.offset[0] = 0;
  sys.offset[1] = d.n_sigma;
  sys.offset[2] = d.n_sigma + d.n_omega;
  sys.offset[3] = sys.offset[2] + d.n_x;
  sys.offset[4] = sys.offset[3] + (with_pressure ? d.n_q : 0);
  const int n = sys.offset[4];
  sys.rhs = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g_u, g_uhat;
  fes.dirichlet_values(g_u, g_uhat);

  std::vector<Eigen::Triplet<double>> trip;
  auto add_sym = [&](int r, int c, double v) {
    trip.emplace_back(r, c, v);
    if (r != c) trip.emplace_back(c, r, v);
  };
  for (int t = 0; t < ne; ++t) {
    const ElementBlocks& b = blocks[t];
    const int ns = d.sigma_per_element, nw = d.omega_per_element;
    const int s0 = sys.offset[0] + t * ns, w0 = sys.offset[1] + t * nw;
    const std::vector<int> xl = fes.x_local(t);
    const std::vector<int> ug = fes.u_global(t), uhg = fes.uhat_global(t);
    const int nu_loc = static_cast<int>(ug.size());
    // Dirichlet values of the local (u, û) block
    Eigen::VectorXd gl = Eigen::VectorXd::Zero(xl.size());
    for (int i = 0; i < nu_loc; ++i) gl[i] = g_u[ug[i]];
    for (size_t i = 0; i < uhg.size(); ++i) gl[nu_loc + i] = g_uhat[uhg[i]];

    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < ns; ++j) trip.emplace_back(s0 + i, s0 + j, -b.M_ss(i, j));
    for (int i = 0; i < nw; ++i)
      for (int j = 0; j < ns; ++j) add_sym(w0 + i, s0 + j, b.B_ws(i, j));
    // stacked (u, û) x stress coupling
    Eigen::MatrixXd Bs(xl.size(), ns);
    Bs << b.B_us, b.B_uhs;
    for (size_t i = 0; i < xl.size(); ++i) {
      for (int j = 0; j < ns; ++j) {
        if (xl[i] >= 0) add_sym(sys.offset[2] + xl[i], s0 + j, Bs(i, j));
        else sys.rhs[s0 + j] -= Bs(i, j) * gl[i];
      }
    }
    for (int i = 0; i < nu_loc; ++i) {
      if (xl[i] < 0) continue;
      sys.rhs[sys.offset[2] + xl[i]] += b.F[i];
      for (int j = 0; j < nu_loc; ++j) {
        if (xl[j] >= 0) trip.emplace_back(sys.offset[2] + xl[i], sys.offset[2] + xl[j], b.A_div(i, j));
        else sys.rhs[sys.offset[2] + xl[i]] -= b.A_div(i, j) * gl[j];
      }
    }
    if (with_pressure) {
      for (int i = 0; i < d.q_per_element; ++i) {
        const int row = sys.offset[3] + d.q(t, i);
        for (int j = 0; j < nu_loc; ++j) {
          if (xl[j] >= 0) add_sym(row, sys.offset[2] + xl[j], b.B_pu(i, j));
          else sys.rhs[row] -= b.B_pu(i, j) * gl[j];
        }
      }
    }
  }
  sys.K.resize(n, n);
  sys.K.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

}  // namespace

SaddleSystem assemble_full_system(const FeSystem& fes, double nu, const VectorField& f, int threads) {
  return assemble_saddle(fes, nu, f, threads, true);
}

SaddleSystem assemble_elliptic_system(const FeSystem& fes, double nu, const VectorField& f, int threads) {
  return assemble_saddle(fes, nu, f, threads, false);
}

void interpolate_velocity(const FeSystem& fes, const VectorField& field, Eigen::VectorXd& u, Eigen::VectorXd& uhat) {
  const DofMap& d = fes.dofs();
  const Mesh& m = fes.mesh();
  const int k = fes.k();
  u = Eigen::VectorXd::Zero(d.n_u);
  uhat = Eigen::VectorXd::Zero(d.n_uhat);
  const LineRule rule = gauss_line(2 * k + 4);
  for (int f = 0; f < d.n_facets; ++f) {
    const Vec2 a = m.vertices()[m.facets()[f][0]], b = m.vertices()[m.facets()[f][1]];
    const Vec2 n = m.facet_normal(f), t = m.facet_tangent(f);
    const double len = (b - a).norm();
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const double s = rule.points[q];
      const Vec2 v = field(a + s * (b - a));
      const Eigen::VectorXd L = legendre_unit(k, s);
      for (int j = 0; j <= k; ++j) u[d.u_facet(f, j)] += rule.weights[q] * len * v.dot(n) * L[j];
      for (int j = 0; j < k; ++j) uhat[d.uhat(f, j)] += rule.weights[q] * v.dot(t) * L[j];
    }
  }
  const int ne = 3 * d.u_per_facet, nb = d.bubbles_per_element;
  for (int t = 0; t < d.n_elements; ++t) {
    const ElementFields ef(fes, t, false);
    const std::vector<int> ug = fes.u_global(t);
    Eigen::VectorXd vx(ef.points.size()), vy(ef.points.size());
    for (size_t q = 0; q < ef.points.size(); ++q) {
      const Vec2 v = field(ef.points[q]);
      vx[q] = v.x();
      vy[q] = v.y();
    }
    Eigen::VectorXd edge(ne);
    for (int i = 0; i < ne; ++i) edge[i] = u[ug[i]];
    vx -= ef.u.x.leftCols(ne) * edge;
    vy -= ef.u.y.leftCols(ne) * edge;
    const auto W = ef.weights.asDiagonal();
    const auto bx = ef.u.x.middleCols(ne, nb), by = ef.u.y.middleCols(ne, nb);
    const Eigen::MatrixXd G = bx.transpose() * W * bx + by.transpose() * W * by;
    const Eigen::VectorXd rhs = bx.transpose() * W * vx + by.transpose() * W * vy;
    const Eigen::VectorXd c = G.ldlt().solve(rhs);
    for (int i = 0; i < nb; ++i) u[ug[ne + i]] = c[i];
  }
}

}  // namespace mcs
