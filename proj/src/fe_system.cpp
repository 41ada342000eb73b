#include "mcs/fe_system.hpp"

#include <stdexcept>

namespace mcs {

DofMap build_dof_maps(const Mesh& m, const BoundaryRegions& regions, int k) {
  if (k < 2)
    throw ConfigError("polynomial degree k must be >= 2; the lowest-order case k = 1 is not stable and not supported");
  if (static_cast<int>(regions.kind.size()) != m.num_facets())
    throw ConfigError("boundary regions do not match the mesh");
  DofMap d;
  d.k = k;
  d.n_vertices = m.num_vertices();
  d.n_facets = m.num_facets();
  d.n_elements = m.num_elements();
  d.u_per_facet = k + 1;
  d.bubbles_per_element = (k + 1) * (k - 1);
  d.uhat_per_facet = k;
  d.q_per_element = scalar_dim(k - 1);
  d.sigma_per_element = 3 * scalar_dim(k) - 3;
  d.omega_per_element = scalar_dim(k - 1);
  d.n_u = d.n_facets * d.u_per_facet + d.n_elements * d.bubbles_per_element;
  d.n_uhat = d.n_facets * d.uhat_per_facet;
  d.n_q = d.n_elements * d.q_per_element;
  d.n_sigma = d.n_elements * d.sigma_per_element;
  d.n_omega = d.n_elements * d.omega_per_element;
  d.n_vbar = 2 * d.n_vertices;

  d.u_constrained.assign(d.n_u, 0);
  d.uhat_constrained.assign(d.n_uhat, 0);
  d.vbar_constrained.assign(d.n_vbar, 0);
  for (int f = 0; f < d.n_facets; ++f) {
    BoundaryKind kind = regions.of(f);
    if (kind == BoundaryKind::Dirichlet) {
      for (int j = 0; j < d.u_per_facet; ++j) d.u_constrained[d.u_facet(f, j)] = 1;
      for (int v : m.facets()[f])
        for (int c = 0; c < 2; ++c) d.vbar_constrained[2 * v + c] = 1;
    }
    if (kind == BoundaryKind::Dirichlet || kind == BoundaryKind::TildeNeumann)
      for (int j = 0; j < d.uhat_per_facet; ++j) d.uhat_constrained[d.uhat(f, j)] = 1;
  }

  d.x_of_u.assign(d.n_u, -1);
  d.x_of_uhat.assign(d.n_uhat, -1);
  int next = 0;
  for (int i = 0; i < d.n_facets * d.u_per_facet; ++i)
    if (!d.u_constrained[i]) d.x_of_u[i] = next++;
  d.n_x_facet_u = next;
  for (int i = 0; i < d.n_uhat; ++i)
    if (!d.uhat_constrained[i]) d.x_of_uhat[i] = next++;
  d.n_x_uhat = next - d.n_x_facet_u;
  d.n_x_coupling = next;
  for (int i = d.n_facets * d.u_per_facet; i < d.n_u; ++i) d.x_of_u[i] = next++;
  d.n_x = next;

  d.vbar_free.assign(d.n_vbar, -1);
  d.n_vbar_free = 0;
  for (int i = 0; i < d.n_vbar; ++i)
    if (!d.vbar_constrained[i]) d.vbar_free[i] = d.n_vbar_free++;
  return d;
}

FeSystem::FeSystem(Mesh mesh, BoundaryRegions regions, int k)
    : mesh_(std::move(mesh)),
      regions_(std::move(regions)),
      k_(k),
      dofs_(build_dof_maps(mesh_, regions_, k)),
      bdm_(bdm_basis(k)),
      sigma_(sigma_basis(k)),
      skew_(skew_basis(k - 1)),
      pressure_(orthogonal_scalar_basis(k - 1)),
      facet_(facet_basis(k)),
      volume_rule_(gauss_triangle(2 * k + 2)),
      edge_rule_(gauss_line(2 * k + 2)) {
  bdm_vol_ = bdm_.tabulate(volume_rule_.points);
  sigma_vol_ = sigma_.tabulate(volume_rule_.points);
  skew_vol_ = skew_.tabulate(volume_rule_.points);
  pressure_vol_ = pressure_.tabulate(volume_rule_.points);
  const int nqe = static_cast<int>(edge_rule_.points.size());
  for (int e = 0; e < 3; ++e) {
    std::vector<Vec2> pts;
    for (double s : edge_rule_.points) pts.push_back(reference::edge_point(e, s));
    bdm_edge_[e] = bdm_.tabulate(pts);
    sigma_edge_[e] = sigma_.tabulate(pts);
  }
  facet_vals_.resize(nqe, k);
  facet_vals_rev_.resize(nqe, k);
  for (int q = 0; q < nqe; ++q) {
    facet_vals_.row(q) = facet_.evaluate(edge_rule_.points[q]).transpose();
    facet_vals_rev_.row(q) = facet_.evaluate(1.0 - edge_rule_.points[q]).transpose();
  }
}

Eigen::VectorXd FeSystem::u_signs(const ElementGeometry& g) const {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(dofs_.local_u_size());
  for (int e = 0; e < 3; ++e)
    for (int j = 0; j <= k_; ++j) {
      double v = g.normal_sign[e];
      if (g.reversed[e] && (j % 2 == 1)) v = -v;
      s[e * (k_ + 1) + j] = v;
    }
  return s;
}

std::vector<int> FeSystem::u_global(int t) const {
  std::vector<int> out;
  out.reserve(dofs_.local_u_size());
  for (int e = 0; e < 3; ++e) {
    int f = mesh_.element_facets()[t][e];
    for (int j = 0; j <= k_; ++j) out.push_back(dofs_.u_facet(f, j));
  }
  for (int i = 0; i < dofs_.bubbles_per_element; ++i) out.push_back(dofs_.u_bubble(t, i));
  return out;
}

std::vector<int> FeSystem::uhat_global(int t) const {
  std::vector<int> out;
  out.reserve(dofs_.local_uhat_size());
  for (int e = 0; e < 3; ++e) {
    int f = mesh_.element_facets()[t][e];
    for (int j = 0; j < k_; ++j) out.push_back(dofs_.uhat(f, j));
  }
  return out;
}

std::vector<int> FeSystem::x_local(int t) const {
  std::vector<int> out;
  out.reserve(dofs_.local_x_size());
  for (int g : u_global(t)) out.push_back(dofs_.x_of_u[g]);
  for (int g : uhat_global(t)) out.push_back(dofs_.x_of_uhat[g]);
  return out;
}

void FeSystem::dirichlet_values(Eigen::VectorXd& g_u, Eigen::VectorXd& g_uhat) const {
  g_u = Eigen::VectorXd::Zero(dofs_.n_u);
  g_uhat = Eigen::VectorXd::Zero(dofs_.n_uhat);
  if (!regions_.dirichlet_value) return;
  LineRule rule = gauss_line(2 * k_ + 4);
  for (int f : regions_.dirichlet_facets) {
    const Vec2 a = mesh_.vertices()[mesh_.facets()[f][0]];
    const Vec2 b = mesh_.vertices()[mesh_.facets()[f][1]];
    const double len = (b - a).norm();
    const Vec2 n = mesh_.facet_normal(f), t = mesh_.facet_tangent(f);
    Eigen::VectorXd cu = Eigen::VectorXd::Zero(k_ + 1), ct = Eigen::VectorXd::Zero(k_);
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const double s = rule.points[q];
      const Vec2 val = regions_.dirichlet_value(a + s * (b - a));
      Eigen::VectorXd L = legendre_unit(k_, s);
      cu += rule.weights[q] * val.dot(n) * L;
      ct += rule.weights[q] * val.dot(t) * L.head(k_);
    }
    for (int j = 0; j <= k_; ++j) g_u[dofs_.u_facet(f, j)] = len * cu[j];
    for (int j = 0; j < k_; ++j) g_uhat[dofs_.uhat(f, j)] = ct[j];
  }
}

}  // namespace mcs
