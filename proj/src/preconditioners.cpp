#include "mcs/preconditioners.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "mcs/mesh.hpp"

namespace mcs {

SparseMatrix build_embedding(const FeSystem& fes) {
  const DofMap& d = fes.dofs();
  const Mesh& m = fes.mesh();
  const int k = fes.k();
  const LineRule rule = gauss_line(2 * k + 2);

  // facet moments of the hat functions of both facet endpoints, columns (endpoint, component)
  std::vector<Eigen::MatrixXd> normal(d.n_facets), tangential(d.n_facets);
  std::vector<Eigen::Triplet<double>> trip;
  for (int f = 0; f < d.n_facets; ++f) {
    const auto& fv = m.facets()[f];
    const Vec2 n = m.facet_normal(f), t = m.facet_tangent(f);
    const double len = m.facet_length(f);
    normal[f] = Eigen::MatrixXd::Zero(k + 1, 4);
    tangential[f] = Eigen::MatrixXd::Zero(k, 4);
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const double s = rule.points[q], w = rule.weights[q];
      const double hat[2] = {1.0 - s, s};
      const Eigen::VectorXd L = legendre_unit(k, s);
      for (int e = 0; e < 2; ++e)
        for (int c = 0; c < 2; ++c) {
          for (int j = 0; j <= k; ++j) normal[f](j, 2 * e + c) += w * len * n[c] * hat[e] * L[j];
          for (int j = 0; j < k; ++j) tangential[f](j, 2 * e + c) += w * t[c] * hat[e] * L[j];
        }
    }
    for (int e = 0; e < 2; ++e)
      for (int c = 0; c < 2; ++c) {
        const int col = d.vbar_free[2 * fv[e] + c];
        if (col < 0) continue;
        for (int j = 0; j <= k; ++j) {
          const int row = d.x_of_u[d.u_facet(f, j)];
          if (row >= 0) trip.emplace_back(row, col, normal[f](j, 2 * e + c));
        }
        for (int j = 0; j < k; ++j) {
          const int row = d.x_of_uhat[d.uhat(f, j)];
          if (row >= 0) trip.emplace_back(row, col, tangential[f](j, 2 * e + c));
        }
      }
  }

  const int ne = 3 * d.u_per_facet, nb = d.bubbles_per_element;
  for (int t = 0; t < d.n_elements; ++t) {
    const ElementFields ef(fes, t, false);
    const std::vector<int> ug = fes.u_global(t);
    const auto& tri = m.triangles()[t];
    const int nq = static_cast<int>(ef.points.size());
    Eigen::MatrixXd lambda(nq, 3);
    for (int q = 0; q < nq; ++q) {
      const Vec2 xi = ef.geo.jac_inv * (ef.points[q] - ef.geo.vertex[0]);
      lambda(q, 0) = 1.0 - xi.x() - xi.y();
      lambda(q, 1) = xi.x();
      lambda(q, 2) = xi.y();
    }
    const auto W = ef.weights.asDiagonal();
    const auto bx = ef.u.x.middleCols(ne, nb), by = ef.u.y.middleCols(ne, nb);
    const Eigen::LDLT<Eigen::MatrixXd> gram(Eigen::MatrixXd(bx.transpose() * W * bx + by.transpose() * W * by));
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 2; ++c) {
        const int col = d.vbar_free[2 * tri[i] + c];
        if (col < 0) continue;
        Eigen::VectorXd edge = Eigen::VectorXd::Zero(ne);
        for (int a = 0; a < ne; ++a) {
          const int f = ug[a] / d.u_per_facet, j = ug[a] % d.u_per_facet;
          const auto& fv = m.facets()[f];
          if (fv[0] == tri[i]) edge[a] = normal[f](j, c);
          else if (fv[1] == tri[i]) edge[a] = normal[f](j, 2 + c);
        }
        Eigen::VectorXd vx = Eigen::VectorXd::Zero(nq), vy = Eigen::VectorXd::Zero(nq);
        (c == 0 ? vx : vy) = lambda.col(i);
        vx -= ef.u.x.leftCols(ne) * edge;
        vy -= ef.u.y.leftCols(ne) * edge;
        const Eigen::VectorXd coef = gram.solve(bx.transpose() * W * vx + by.transpose() * W * vy);
        for (int b = 0; b < nb; ++b) {
          if (std::abs(coef[b]) > 0.0) trip.emplace_back(d.x_of_u[ug[ne + b]], col, coef[b]);
        }
      }
  }
  SparseMatrix E(d.n_x, d.n_vbar_free);
  E.setFromTriplets(trip.begin(), trip.end());
  return E;
}

SparseMatrix assemble_coarse_matrix(const FeSystem& fes, double nu, double penalty) {
  const DofMap& d = fes.dofs();
  const Mesh& m = fes.mesh();
  const int k = fes.k();
  std::vector<Eigen::Triplet<double>> trip;
  auto add = [&](int gi, int gj, double v) {
    const int i = d.vbar_free[gi], j = d.vbar_free[gj];
    if (i >= 0 && j >= 0) trip.emplace_back(i, j, v);
  };
  for (int t = 0; t < d.n_elements; ++t) {
    const ElementGeometry g = fes.geometry(t);
    const auto& tri = m.triangles()[t];
    Vec2 grad[3];
    grad[1] = g.jac_inv.row(0).transpose();
    grad[2] = g.jac_inv.row(1).transpose();
    grad[0] = -grad[1] - grad[2];
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 2; ++c)
        for (int j = 0; j < 3; ++j)
          for (int e = 0; e < 2; ++e) {
            // eps(lambda_i e_c) : eps(lambda_j e_e)
            const double v = 0.5 * ((c == e ? grad[i].dot(grad[j]) : 0.0) + grad[i][e] * grad[j][c]);
            add(2 * tri[i] + c, 2 * tri[j] + e, nu * g.area * v);
          }
  }
  for (int f : fes.regions().tilde_neumann_facets) {
    const auto& fv = m.facets()[f];
    const Vec2 tan = m.facet_tangent(f);
    const double len = m.facet_length(f);
    const double h = m.diameter(m.facet_elements()[f][0]);
    const double weight = nu * penalty * k * k / h;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const double mass = len / 6.0 * (a == b ? 2.0 : 1.0);
        for (int c = 0; c < 2; ++c)
          for (int e = 0; e < 2; ++e) add(2 * fv[a] + c, 2 * fv[b] + e, weight * mass * tan[c] * tan[e]);
      }
  }
  SparseMatrix A(d.n_vbar_free, d.n_vbar_free);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

CoarseSolver::CoarseSolver(SparseMatrix matrix) : matrix_(std::move(matrix)) {
  factor_.compute(matrix_);
  if (factor_.info() != Eigen::Success) throw std::logic_error("coarse matrix factorization failed");
  const Eigen::VectorXd D = factor_.vectorD();
  if (D.size() > 0 && D.minCoeff() <= 1e-14 * D.cwiseAbs().maxCoeff())
    throw std::logic_error("coarse matrix singular (no essential boundary for the continuous space?)");
}

Eigen::VectorXd CoarseSolver::solve(const Eigen::VectorXd& r) const { return factor_.solve(r) / scale_; }

SmootherVariant parse_smoother(const std::string& name) {
  if (name == "jacobi") return SmootherVariant::Jacobi;
  if (name == "gauss-seidel" || name == "gs") return SmootherVariant::GaussSeidel;
  if (name == "l1-jacobi" || name == "l1") return SmootherVariant::L1Jacobi;
  throw ConfigError("unknown smoother '" + name + "' (jacobi | gauss-seidel | l1-jacobi)");
}

std::string to_string(SmootherVariant v) {
  switch (v) {
    case SmootherVariant::Jacobi: return "jacobi";
    case SmootherVariant::GaussSeidel: return "gauss-seidel";
    case SmootherVariant::L1Jacobi: return "l1-jacobi";
  }
  return "";
}

Composition parse_composition(const std::string& name) {
  if (name == "additive") return Composition::Additive;
  if (name == "multiplicative") return Composition::Multiplicative;
  throw ConfigError("unknown composition '" + name + "' (additive | multiplicative)");
}

std::string to_string(Composition c) { return c == Composition::Additive ? "additive" : "multiplicative"; }

Target parse_target(const std::string& name) {
  if (name == "full") return Target::Full;
  if (name == "condensed") return Target::Condensed;
  throw ConfigError("unknown preconditioner target '" + name + "' (full | condensed)");
}

std::string to_string(Target t) { return t == Target::Full ? "full" : "condensed"; }

std::vector<std::vector<int>> facet_blocks(const FeSystem& fes) {
  const DofMap& d = fes.dofs();
  std::vector<std::vector<int>> blocks;
  for (int f = 0; f < d.n_facets; ++f) {
    std::vector<int> b;
    for (int j = 0; j < d.u_per_facet; ++j)
      if (d.x_of_u[d.u_facet(f, j)] >= 0) b.push_back(d.x_of_u[d.u_facet(f, j)]);
    for (int j = 0; j < d.uhat_per_facet; ++j)
      if (d.x_of_uhat[d.uhat(f, j)] >= 0) b.push_back(d.x_of_uhat[d.uhat(f, j)]);
    if (!b.empty()) blocks.push_back(std::move(b));
  }
  return blocks;
}

std::vector<std::vector<int>> overlapping_blocks(const FeSystem& fes) {
  const DofMap& d = fes.dofs();
  const Mesh& m = fes.mesh();
  std::vector<char> covered(d.n_x, 0);
  std::vector<std::vector<int>> blocks;
  const std::vector<std::vector<int>> facets = facet_blocks(fes);
  int next = 0;
  for (int f = 0; f < d.n_facets; ++f) {
    bool free_facet = false;
    for (int j = 0; j < d.u_per_facet; ++j) free_facet |= d.x_of_u[d.u_facet(f, j)] >= 0;
    for (int j = 0; j < d.uhat_per_facet; ++j) free_facet |= d.x_of_uhat[d.uhat(f, j)] >= 0;
    if (!free_facet) continue;
    std::vector<int> b = facets[next++];
    for (int t : m.facet_elements()[f]) {
      if (t < 0) continue;
      for (int x : fes.x_local(t))
        if (x >= 0) b.push_back(x);
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    for (int x : b) covered[x] = 1;
    blocks.push_back(std::move(b));
  }
  for (int t = 0; t < d.n_elements; ++t) {
    std::vector<int> b;
    for (int x : fes.x_local(t))
      if (x >= 0 && !covered[x]) b.push_back(x), covered[x] = 1;
    if (!b.empty()) blocks.push_back(std::move(b));
  }
  return blocks;
}

BlockSmoother::BlockSmoother(const SparseMatrix& A, std::vector<std::vector<int>> blocks, SmootherVariant variant,
                             int steps, int threads)
    : A_(&A), blocks_(std::move(blocks)), variant_(variant), steps_(steps) {
  if (steps_ < 1) throw ConfigError("smoothing steps must be >= 1");
  for (auto& b : blocks_) std::sort(b.begin(), b.end());
  factors_.resize(blocks_.size());
  parallel_for_elements(static_cast<int>(blocks_.size()), threads, [&](int i) {
    const std::vector<int>& b = blocks_[i];
    const int n = static_cast<int>(b.size());
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a) {
      double off = 0.0;
      for (SparseMatrix::InnerIterator it(A, b[a]); it; ++it) {
        const auto pos = std::lower_bound(b.begin(), b.end(), static_cast<int>(it.row()));
        if (pos != b.end() && *pos == it.row()) D(pos - b.begin(), a) = it.value();
        else off += std::abs(it.value());
      }
      if (variant_ == SmootherVariant::L1Jacobi) D(a, a) += off;
    }
    factors_[i].compute(D);
    if (factors_[i].info() != Eigen::Success) throw std::logic_error("smoother block not positive definite");
  });
}

Eigen::VectorXd BlockSmoother::jacobi_correction(const Eigen::VectorXd& r) const {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(r.size());
  for (size_t i = 0; i < blocks_.size(); ++i) {
    const std::vector<int>& b = blocks_[i];
    Eigen::VectorXd rb(b.size());
    for (size_t a = 0; a < b.size(); ++a) rb[a] = r[b[a]];
    const Eigen::VectorXd y = factors_[i].solve(rb);
    for (size_t a = 0; a < b.size(); ++a) z[b[a]] += damping_ * y[a];
  }
  return z;
}

void BlockSmoother::smooth(const Eigen::VectorXd& b, Eigen::VectorXd& x, bool backward) const {
  const SparseMatrix& A = *A_;
  if (variant_ != SmootherVariant::GaussSeidel) {
    for (int s = 0; s < steps_; ++s) x += jacobi_correction(b - A * x);
    return;
  }
  Eigen::VectorXd r = b - A * x;
  const int nb = static_cast<int>(blocks_.size());
  for (int s = 0; s < steps_; ++s) {
    for (int ii = 0; ii < nb; ++ii) {
      const int i = backward ? nb - 1 - ii : ii;
      const std::vector<int>& blk = blocks_[i];
      Eigen::VectorXd rb(blk.size());
      for (size_t a = 0; a < blk.size(); ++a) rb[a] = r[blk[a]];
      const Eigen::VectorXd delta = factors_[i].solve(rb);
      for (size_t a = 0; a < blk.size(); ++a) {
        x[blk[a]] += delta[a];
        for (SparseMatrix::InnerIterator it(A, blk[a]); it; ++it) r[it.row()] -= it.value() * delta[a];
      }
    }
  }
}

Eigen::VectorXd BlockSmoother::apply(const Eigen::VectorXd& r) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(r.size());
  smooth(r, x, false);
  if (variant_ == SmootherVariant::GaussSeidel) smooth(r, x, true);
  return x;
}

double BlockSmoother::estimate_lambda_max(int iterations, unsigned seed) const {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  Eigen::VectorXd v(A_->rows());
  for (int i = 0; i < v.size(); ++i) v[i] = dist(rng);
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd Av = *A_ * v;
    const Eigen::VectorXd z = apply(Av);
    lambda = Av.dot(z) / v.dot(Av);
    v = z / z.norm();
  }
  return lambda;
}

AuxiliarySpacePreconditioner::AuxiliarySpacePreconditioner(const SparseMatrix& A, SparseMatrix embedding,
                                                           std::shared_ptr<const CoarseSolver> coarse,
                                                           std::shared_ptr<const BlockSmoother> smoother,
                                                           Composition composition)
    : A_(&A),
      embedding_(std::move(embedding)),
      coarse_(std::move(coarse)),
      smoother_(std::move(smoother)),
      composition_(composition) {}

Eigen::VectorXd AuxiliarySpacePreconditioner::coarse_correction(const Eigen::VectorXd& r) const {
  if (embedding_.cols() == 0) return Eigen::VectorXd::Zero(r.size());
  return embedding_ * coarse_->solve(embedding_.transpose() * r);
}

Eigen::VectorXd AuxiliarySpacePreconditioner::apply(const Eigen::VectorXd& r) const {
  if (composition_ == Composition::Additive) return smoother_->apply(r) + coarse_correction(r);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(r.size());
  smoother_->smooth(r, x, false);
  x += coarse_correction(r - *A_ * x);
  smoother_->smooth(r, x, true);
  return x;
}

Eigen::VectorXd apply_extended(const CondensedSystem& cs, const LinearMap& boundary_inverse, const Eigen::VectorXd& r) {
  const int nc = cs.n_coupling();
  const Eigen::VectorXd w = cs.solve_bubbles(r);
  Eigen::VectorXd t = r;
  cs.subtract_coupling_from_bubbles(w, t);
  Eigen::VectorXd out = w;
  out.head(nc) = boundary_inverse(t.head(nc));
  const Eigen::VectorXd coupling = out;
  cs.subtract_extension(coupling, out);
  return out;
}

VelocityPreconditioner::VelocityPreconditioner(const CondensedSystem& cs, const VelocityPreconditionerOptions& options)
    : cs_(&cs), options_(options) {
  const FeSystem& fes = cs.fes();
  SparseMatrix E = build_embedding(fes);
  if (options.target == Target::Condensed) E = SparseMatrix(E.topRows(cs.n_coupling()));
  const SparseMatrix& A = inner_matrix();
  coarse_ = std::make_shared<CoarseSolver>(assemble_coarse_matrix(fes, cs.nu(), options.penalty));
  smoother_ = std::make_shared<BlockSmoother>(
      A, options.target == Target::Condensed ? facet_blocks(fes) : overlapping_blocks(fes), options.smoother,
      options.steps, options.threads);
  if (options.composition == Composition::Multiplicative) {
    // the smoother must dominate A and the coarse correction must not overshoot
    if (options.smoother != SmootherVariant::GaussSeidel) {
      const double lambda = smoother_->estimate_lambda_max(options.power_iterations, options.seed);
      smoother_->set_damping(1.0 / (options.safety * lambda));
    }
    Eigen::VectorXd v = Eigen::VectorXd::Ones(E.cols());
    double lambda = 0.0;
    for (int it = 0; it < options.power_iterations && v.size() > 0; ++it) {
      const Eigen::VectorXd Av = E.transpose() * (A * (E * v));
      const Eigen::VectorXd z = coarse_->solve(Av);
      lambda = Av.dot(z) / v.dot(Av);
      v = z / z.norm();
    }
    if (lambda > 1.0 + 1e-10) coarse_->set_scale(options.safety * lambda);
  }
  asp_ = std::make_unique<AuxiliarySpacePreconditioner>(A, std::move(E), coarse_, smoother_, options.composition);
}

const SparseMatrix& VelocityPreconditioner::inner_matrix() const {
  return options_.target == Target::Condensed ? cs_->S_boundary() : cs_->S();
}

Eigen::VectorXd VelocityPreconditioner::apply(const Eigen::VectorXd& r) const {
  ++applications_;
  if (options_.target == Target::Full) return asp_->apply(r);
  return apply_extended(*cs_, [this](const Eigen::VectorXd& v) { return asp_->apply(v); }, r);
}

PressureMass::PressureMass(const FeSystem& fes, double nu) {
  const DofMap& d = fes.dofs();
  block_ = d.q_per_element;
  blocks_.resize(d.n_elements);
  factors_.resize(d.n_elements);
  for (int t = 0; t < d.n_elements; ++t) {
    const ElementFields ef(fes, t, false);
    blocks_[t] = ef.q.transpose() * ef.weights.asDiagonal() * ef.q / nu;
    factors_[t].compute(blocks_[t]);
  }
}

Eigen::VectorXd PressureMass::apply(const Eigen::VectorXd& p) const {
  Eigen::VectorXd out(p.size());
  for (size_t t = 0; t < blocks_.size(); ++t) out.segment(t * block_, block_) = blocks_[t] * p.segment(t * block_, block_);
  return out;
}

Eigen::VectorXd PressureMass::solve(const Eigen::VectorXd& r) const {
  ++solves_;
  Eigen::VectorXd out(r.size());
  for (size_t t = 0; t < blocks_.size(); ++t)
    out.segment(t * block_, block_) = factors_[t].solve(Eigen::VectorXd(r.segment(t * block_, block_)));
  return out;
}

SparseMatrix PressureMass::matrix() const {
  std::vector<Eigen::Triplet<double>> trip;
  for (size_t t = 0; t < blocks_.size(); ++t)
    for (int i = 0; i < block_; ++i)
      for (int j = 0; j < block_; ++j) trip.emplace_back(t * block_ + i, t * block_ + j, blocks_[t](i, j));
  const int n = static_cast<int>(blocks_.size()) * block_;
  SparseMatrix M(n, n);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

SaddlePreconditioner::SaddlePreconditioner(const SparseMatrix& B, LinearMap velocity_inverse,
                                           LinearMap pressure_inverse)
    : B_(&B), velocity_inverse_(std::move(velocity_inverse)), pressure_inverse_(std::move(pressure_inverse)) {}

Eigen::VectorXd SaddlePreconditioner::apply(const Eigen::VectorXd& r) const {
  const int nu = static_cast<int>(B_->cols()), np = static_cast<int>(B_->rows());
  const Eigen::VectorXd y = velocity_inverse_(r.head(nu));
  const Eigen::VectorXd zp = -pressure_inverse_(r.tail(np) - *B_ * y);
  Eigen::VectorXd out(nu + np);
  out.head(nu) = y - velocity_inverse_(B_->transpose() * zp);
  out.tail(np) = zp;
  return out;
}

}  // namespace mcs
