#include "mcs/condensation.hpp"

#include <stdexcept>

namespace mcs {

LocalSplit local_split(const DofMap& d) {
  LocalSplit s;
  const int ne = 3 * d.u_per_facet, nb = d.bubbles_per_element;
  for (int i = 0; i < ne; ++i) s.coupling.push_back(i);
  for (int i = 0; i < nb; ++i) s.bubble.push_back(ne + i);
  for (int i = 0; i < d.local_uhat_size(); ++i) s.coupling.push_back(ne + nb + i);
  return s;
}

namespace {

Eigen::MatrixXd select(const Eigen::MatrixXd& A, const std::vector<int>& rows, const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < cols.size(); ++j) out(i, j) = A(rows[i], cols[j]);
  return out;
}

}  // namespace

ElementCondensation condense_element(const FeSystem& fes, int t, double nu, const VectorField& f) {
  const DofMap& d = fes.dofs();
  const ElementBlocks b = assemble_element_blocks(fes, t, nu, f);
  const int nu_loc = d.local_u_size(), nx = d.local_x_size();
  ElementCondensation ec;
  ec.x = fes.x_local(t);
  ec.dirichlet = Eigen::VectorXd::Zero(nx);
  ec.mass.compute(b.M_ss);
  if (ec.mass.info() != Eigen::Success) throw std::logic_error("stress mass matrix not positive definite");
  ec.H = ec.mass.solve(b.B_ws.transpose());
  ec.P.compute(b.B_ws * ec.H);
  if (ec.P.info() != Eigen::Success) throw std::logic_error("local rotation block singular");
  Eigen::MatrixXd Bs(nx, b.M_ss.cols());
  Bs << b.B_us, b.B_uhs;
  const Eigen::MatrixXd G = ec.mass.solve(Bs.transpose());
  const Eigen::MatrixXd Y = ec.P.solve(b.B_ws * G);
  ec.R_sigma = G - ec.H * Y;
  ec.R_omega = -Y;
  ec.A_div = Eigen::MatrixXd::Zero(nx, nx);
  ec.A_div.topLeftCorner(nu_loc, nu_loc) = b.A_div;
  ec.S = ec.A_div + Bs * ec.R_sigma;
  ec.S = 0.5 * (ec.S + ec.S.transpose()).eval();
  ec.B_p = Eigen::MatrixXd::Zero(b.B_pu.rows(), nx);
  ec.B_p.leftCols(nu_loc) = b.B_pu;
  ec.F = Eigen::VectorXd::Zero(nx);
  ec.F.head(nu_loc) = b.F;

  const LocalSplit sp = local_split(d);
  ec.S_bb = select(ec.S, sp.bubble, sp.bubble);
  ec.S_cb = select(ec.S, sp.coupling, sp.bubble);
  ec.S_bubble.compute(ec.S_bb);
  if (ec.S_bubble.info() != Eigen::Success) throw std::logic_error("bubble block of the Schur complement singular");
  ec.extension = ec.S_bubble.solve(select(ec.S, sp.bubble, sp.coupling));
  return ec;
}

void local_projection_solve(const ElementCondensation& ec, const Eigen::VectorXd& g, Eigen::VectorXd& sigma,
                            Eigen::VectorXd& omega) {
  omega = ec.P.solve(ec.H.transpose() * g);
  sigma = ec.H * omega - ec.mass.solve(g);
}

CondensedSystem::CondensedSystem(const FeSystem& fes, double nu, const VectorField& f, int threads)
    : fes_(&fes), nu_(nu), split_(local_split(fes.dofs())) {
  const DofMap& d = fes.dofs();
  elements_.resize(d.n_elements);
  parallel_for_elements(d.n_elements, threads,
                        [&](int t) { elements_[t] = condense_element(fes, t, nu, f); });
  Eigen::VectorXd g_u, g_uhat;
  fes.dirichlet_values(g_u, g_uhat);
  const int nu_loc = d.local_u_size();
  for (int t = 0; t < d.n_elements; ++t) {
    ElementCondensation& ec = elements_[t];
    const std::vector<int> ug = fes.u_global(t), uh = fes.uhat_global(t);
    for (int i = 0; i < nu_loc; ++i)
      if (ec.x[i] < 0) ec.dirichlet[i] = g_u[ug[i]];
    for (size_t i = 0; i < uh.size(); ++i)
      if (ec.x[nu_loc + i] < 0) ec.dirichlet[nu_loc + i] = g_uhat[uh[i]];
  }

  std::vector<Eigen::Triplet<double>> ts, tb, tp;
  rhs_u_ = Eigen::VectorXd::Zero(d.n_x);
  rhs_p_ = Eigen::VectorXd::Zero(d.n_q);
  const int nc = d.n_x_coupling;
  for (int t = 0; t < d.n_elements; ++t) {
    const ElementCondensation& ec = elements_[t];
    const int nx = static_cast<int>(ec.x.size());
    for (int i = 0; i < nx; ++i) {
      const int xi = ec.x[i];
      if (xi < 0) continue;
      rhs_u_[xi] += ec.F[i];
      for (int j = 0; j < nx; ++j) {
        if (ec.x[j] >= 0) ts.emplace_back(xi, ec.x[j], ec.S(i, j));
        else rhs_u_[xi] -= ec.S(i, j) * ec.dirichlet[j];
      }
    }
    for (int i = 0; i < ec.B_p.rows(); ++i) {
      const int row = d.q(t, i);
      for (int j = 0; j < nx; ++j) {
        if (ec.x[j] >= 0) tp.emplace_back(row, ec.x[j], ec.B_p(i, j));
        else rhs_p_[row] -= ec.B_p(i, j) * ec.dirichlet[j];
      }
    }
    const Eigen::MatrixXd Sc = select(ec.S, split_.coupling, split_.coupling) - ec.S_cb * ec.extension;
    for (size_t i = 0; i < split_.coupling.size(); ++i) {
      const int xi = ec.x[split_.coupling[i]];
      if (xi < 0) continue;
      for (size_t j = 0; j < split_.coupling.size(); ++j) {
        const int xj = ec.x[split_.coupling[j]];
        if (xj >= 0) tb.emplace_back(xi, xj, 0.5 * (Sc(i, j) + Sc(j, i)));
      }
    }
  }
  S_.resize(d.n_x, d.n_x);
  S_.setFromTriplets(ts.begin(), ts.end());
  S_boundary_.resize(nc, nc);
  S_boundary_.setFromTriplets(tb.begin(), tb.end());
  B_.resize(d.n_q, d.n_x);
  B_.setFromTriplets(tp.begin(), tp.end());
}

Eigen::VectorXd CondensedSystem::local_values(int t, const Eigen::VectorXd& x, bool with_dirichlet) const {
  const ElementCondensation& ec = elements_[t];
  Eigen::VectorXd out(ec.x.size());
  for (size_t i = 0; i < ec.x.size(); ++i)
    out[i] = ec.x[i] >= 0 ? x[ec.x[i]] : (with_dirichlet ? ec.dirichlet[i] : 0.0);
  return out;
}

void CondensedSystem::expand(const Eigen::VectorXd& x, Eigen::VectorXd& u, Eigen::VectorXd& uhat,
                             bool with_dirichlet) const {
  const DofMap& d = fes_->dofs();
  u = Eigen::VectorXd::Zero(d.n_u);
  uhat = Eigen::VectorXd::Zero(d.n_uhat);
  const int nu_loc = d.local_u_size();
  for (int t = 0; t < d.n_elements; ++t) {
    const Eigen::VectorXd l = local_values(t, x, with_dirichlet);
    const std::vector<int> ug = fes_->u_global(t), uh = fes_->uhat_global(t);
    for (int i = 0; i < nu_loc; ++i) u[ug[i]] = l[i];
    for (size_t i = 0; i < uh.size(); ++i) uhat[uh[i]] = l[nu_loc + i];
  }
}

void CondensedSystem::recover_stress(const Eigen::VectorXd& x, Eigen::VectorXd& sigma, Eigen::VectorXd& omega,
                                     bool with_dirichlet) const {
  const DofMap& d = fes_->dofs();
  sigma.resize(d.n_sigma);
  omega.resize(d.n_omega);
  for (int t = 0; t < d.n_elements; ++t) {
    const Eigen::VectorXd l = local_values(t, x, with_dirichlet);
    sigma.segment(t * d.sigma_per_element, d.sigma_per_element) = elements_[t].R_sigma * l;
    omega.segment(t * d.omega_per_element, d.omega_per_element) = elements_[t].R_omega * l;
  }
}

std::pair<double, double> CondensedSystem::schur_norm_identity(const Eigen::VectorXd& x) const {
  const double lhs = x.dot(S_ * x);
  double rhs = 0.0;
  for (int t = 0; t < fes_->dofs().n_elements; ++t) {
    const ElementCondensation& ec = elements_[t];
    const Eigen::VectorXd l = local_values(t, x, false);
    const Eigen::VectorXd sigma = ec.R_sigma * l;
    rhs += (ec.mass.matrixU() * sigma).squaredNorm() + l.dot(ec.A_div * l);
  }
  return {lhs, rhs};
}

namespace {

Eigen::VectorXd gather(const ElementCondensation& ec, const std::vector<int>& idx, const Eigen::VectorXd& x) {
  Eigen::VectorXd out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    const int xi = ec.x[idx[i]];
    out[i] = xi >= 0 ? x[xi] : 0.0;
  }
  return out;
}

void scatter_add(const ElementCondensation& ec, const std::vector<int>& idx, const Eigen::VectorXd& v,
                 Eigen::VectorXd& y) {
  for (size_t i = 0; i < idx.size(); ++i) {
    const int xi = ec.x[idx[i]];
    if (xi >= 0) y[xi] += v[i];
  }
}

}  // namespace

Eigen::VectorXd CondensedSystem::harmonic_extend(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = x;
  for (const ElementCondensation& ec : elements_) {
    const Eigen::VectorXd b = -ec.extension * gather(ec, split_.coupling, x);
    for (size_t i = 0; i < split_.bubble.size(); ++i) out[ec.x[split_.bubble[i]]] = b[i];
  }
  return out;
}

Eigen::VectorXd CondensedSystem::apply_factorized(const Eigen::VectorXd& x) const {
  const int nc = n_coupling();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  y.head(nc) = S_boundary_ * x.head(nc);
  for (const ElementCondensation& ec : elements_) {
    const Eigen::VectorXd xb = gather(ec, split_.bubble, x) + ec.extension * gather(ec, split_.coupling, x);
    scatter_add(ec, split_.bubble, ec.S_bb * xb, y);
    scatter_add(ec, split_.coupling, ec.S_cb * xb, y);
  }
  return y;
}

Eigen::VectorXd CondensedSystem::solve_bubbles(const Eigen::VectorXd& r) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(r.size());
  for (const ElementCondensation& ec : elements_)
    scatter_add(ec, split_.bubble, ec.S_bubble.solve(gather(ec, split_.bubble, r)), y);
  return y;
}

void CondensedSystem::subtract_coupling_from_bubbles(const Eigen::VectorXd& z, Eigen::VectorXd& y) const {
  for (const ElementCondensation& ec : elements_) {
    scatter_add(ec, split_.coupling, -(ec.S_cb * gather(ec, split_.bubble, z)), y);
  }
}

void CondensedSystem::subtract_extension(const Eigen::VectorXd& y, Eigen::VectorXd& z) const {
  for (const ElementCondensation& ec : elements_)
    scatter_add(ec, split_.bubble, -(ec.extension * gather(ec, split_.coupling, y)), z);
}

}  // namespace mcs
