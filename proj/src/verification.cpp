#include "mcs/verification.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "mcs/preconditioners.hpp"

namespace mcs {

namespace {

using Index = std::vector<int>;

Eigen::MatrixXd take(const Eigen::MatrixXd& A, const Index& rows, const Index& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < cols.size(); ++j) out(i, j) = A(rows[i], cols[j]);
  return out;
}

/// Minimum of the quadratic form over `eliminated` for fixed `kept`.
Eigen::MatrixXd schur_onto(const Eigen::MatrixXd& A, const Index& kept, const Index& eliminated) {
  const Eigen::MatrixXd Akk = take(A, kept, kept);
  if (eliminated.empty()) return Akk;
  const Eigen::LLT<Eigen::MatrixXd> llt(take(A, eliminated, eliminated));
  if (llt.info() != Eigen::Success) throw std::runtime_error("eliminated block is not positive definite");
  return Akk - take(A, kept, eliminated) * llt.solve(take(A, eliminated, kept));
}

Index range(int begin, int end) {
  Index out;
  for (int i = begin; i < end; ++i) out.push_back(i);
  return out;
}

Mesh reference_triangle() { return Mesh({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}, {{0, 1, 2}}); }

/// Orthonormal basis of the complement of the numerically zero eigenspace of a PSD matrix.
Eigen::MatrixXd range_basis(const Eigen::MatrixXd& A, double rel_tol, int& kernel) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  kernel = 0;
  while (kernel < A.rows() && es.eigenvalues()[kernel] <= rel_tol * top) ++kernel;
  return es.eigenvectors().rightCols(A.rows() - kernel);
}

/// Extreme eigenvalues of A v = lambda B v with B positive definite.
std::pair<double, double> generalized_extremes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(A, B, Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success) throw std::runtime_error("generalized eigensolve failed");
  return {ges.eigenvalues().minCoeff(), ges.eigenvalues().maxCoeff()};
}

/// Local Gram of ||.||_{eps,h}^2 scattered to the condensed numbering.
Eigen::MatrixXd eps_gram_dense(const FeSystem& fes, JumpNorm jump) {
  const DofMap& d = fes.dofs();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d.n_x, d.n_x);
  for (int t = 0; t < d.n_elements; ++t) {
    const ElementNormMatrices nm = element_norm_matrices(fes, t);
    const Eigen::MatrixXd local = nm.eps + (jump == JumpNorm::Dual ? nm.jump_sup : nm.jump);
    const Index xl = fes.x_local(t);
    for (size_t i = 0; i < xl.size(); ++i)
      for (size_t j = 0; j < xl.size(); ++j)
        if (xl[i] >= 0 && xl[j] >= 0) G(xl[i], xl[j]) += local(i, j);
  }
  return G;
}

double rel_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

std::string jump_name(JumpNorm j) { return j == JumpNorm::Dual ? "dual" : "weighted"; }

}  // namespace

std::vector<double> ConstantReport::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("no column '" + name + "' in " + experiment);
  const size_t c = it - columns.begin();
  std::vector<double> out;
  for (const Row& r : rows) out.push_back(r.values.at(c));
  return out;
}

const std::vector<double>& ConstantReport::row(const std::string& label) const {
  for (const Row& r : rows)
    if (r.label == label) return r.values;
  throw std::out_of_range("no row '" + label + "' in " + experiment);
}

void ConstantReport::write_csv(std::ostream& os) const {
  os << "case";
  for (const auto& c : columns) os << ',' << c;
  os << '\n' << std::setprecision(12);
  for (const Row& r : rows) {
    os << r.label;
    for (double v : r.values) os << ',' << v;
    os << '\n';
  }
}

void ConstantReport::write_text(std::ostream& os) const {
  os << "== " << experiment << (passed() ? "" : "  [FAILED]") << '\n';
  if (!method.empty()) os << "   " << method << '\n';
  size_t label_width = 4;
  for (const Row& r : rows) label_width = std::max(label_width, r.label.size());
  os << "   " << std::left << std::setw(static_cast<int>(label_width)) << "case" << std::right;
  for (const auto& c : columns) os << ' ' << std::setw(14) << c;
  os << '\n';
  for (const Row& r : rows) {
    os << "   " << std::left << std::setw(static_cast<int>(label_width)) << r.label << std::right;
    for (double v : r.values) os << ' ' << std::setw(14) << std::setprecision(6) << v;
    os << '\n';
  }
  for (const auto& n : notes) os << "   note: " << n << '\n';
  for (const auto& f : failures) os << "   FAILURE: " << f << '\n';
}

double fit_log_power(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(std::log(x[i])), b = std::log(y[i]);
    sx += a, sy += b, sxx += a * a, sxy += a * b;
  }
  const double den = n * sxx - sx * sx;
  return den != 0.0 ? (n * sxy - sx * sy) / den : std::numeric_limits<double>::quiet_NaN();
}

StructureChecks check_solution_structure(const CondensedSystem& cs, const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& sigma) {
  const FeSystem& fes = cs.fes();
  const DofMap& d = fes.dofs();
  const Mesh& m = fes.mesh();
  std::vector<ElementFields> ef;
  ef.reserve(d.n_elements);
  for (int t = 0; t < d.n_elements; ++t) ef.emplace_back(fes, t, true);
  StructureChecks out;
  for (int t = 0; t < d.n_elements; ++t) {
    const Eigen::VectorXd ul = cs.local_values(t, x).head(d.local_u_size());
    out.divergence_max = std::max(out.divergence_max, (ef[t].u.div * ul).cwiseAbs().maxCoeff());
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        out.gradient_max = std::max(out.gradient_max, (ef[t].u.grad[i][j] * ul).cwiseAbs().maxCoeff());
  }
  auto nt_values = [&](int t, int e) {
    const Eigen::VectorXd st = sigma.segment(t * d.sigma_per_element, d.sigma_per_element);
    const MatrixTable& tab = ef[t].sigma_edge[e];
    const int f = ef[t].geo.facet[e];
    const Vec2 n = m.facet_normal(f), tan = m.facet_tangent(f);
    Eigen::VectorXd v(tab.m[0].rows());
    for (int q = 0; q < v.size(); ++q) {
      Mat2 s;
      s << tab.m[0].row(q).dot(st), tab.m[1].row(q).dot(st), tab.m[2].row(q).dot(st), tab.m[3].row(q).dot(st);
      v[q] = tan.dot(s * n);
    }
    return v;
  };
  for (int f = 0; f < d.n_facets; ++f) {
    const auto& fe = m.facet_elements()[f];
    if (fe[1] < 0) continue;
    int e0 = 0, e1 = 0;
    while (ef[fe[0]].geo.facet[e0] != f) ++e0;
    while (ef[fe[1]].geo.facet[e1] != f) ++e1;
    const Eigen::VectorXd a = nt_values(fe[0], e0), b = nt_values(fe[1], e1);
    const auto& pa = ef[fe[0]].edge_points[e0];
    const auto& pb = ef[fe[1]].edge_points[e1];
    for (size_t q = 0; q < pa.size(); ++q) {
      size_t r = 0;
      while (r + 1 < pb.size() && (pb[r] - pa[q]).norm() > 1e-10 * m.facet_length(f)) ++r;
      if ((pb[r] - pa[q]).norm() > 1e-10 * m.facet_length(f)) throw std::logic_error("facet quadrature points do not match");
      out.nt_jump_max = std::max(out.nt_jump_max, std::abs(a[q] - b[r]));
      out.nt_max = std::max(out.nt_max, std::abs(a[q]));
    }
  }
  return out;
}

DenseOracleResult dense_oracle_check(const FeSystem& fes, double nu, const VectorField& force) {
  if (fes.regions().mean_zero_pressure)
    throw ConfigError("dense oracle needs a natural boundary part (pressure must be unique)");
  const DofMap& d = fes.dofs();
  DenseOracleResult out;
  const SaddleSystem full = assemble_full_system(fes, nu, force);
  const CondensedSystem cs(fes, nu, force);
  const int nsw = full.offset[2], nx = d.n_x;
  const Eigen::MatrixXd K(full.K);

  // eliminate (sigma, omega) by brute force
  const Eigen::MatrixXd Kss = K.topLeftCorner(nsw, nsw);
  const Eigen::MatrixXd S_ref =
      K.block(nsw, nsw, nx, nx) - K.block(nsw, 0, nx, nsw) * Kss.fullPivLu().solve(K.block(0, nsw, nsw, nx));
  const Eigen::MatrixXd S(cs.S());
  out.schur_error = (S_ref - S).cwiseAbs().maxCoeff() / S_ref.cwiseAbs().maxCoeff();

  const int nc = d.n_x_coupling;
  const Eigen::MatrixXd Sb_ref = S.topLeftCorner(nc, nc) - S.topRightCorner(nc, nx - nc) *
                                                              S.bottomRightCorner(nx - nc, nx - nc).llt().solve(
                                                                  S.bottomLeftCorner(nx - nc, nc));
  out.boundary_schur_error =
      (Sb_ref - Eigen::MatrixXd(cs.S_boundary())).cwiseAbs().maxCoeff() / Sb_ref.cwiseAbs().maxCoeff();

  const Eigen::VectorXd sol = K.fullPivLu().solve(full.rhs);
  Eigen::MatrixXd Kc = Eigen::MatrixXd::Zero(nx + d.n_q, nx + d.n_q);
  Kc.topLeftCorner(nx, nx) = S;
  Kc.bottomLeftCorner(d.n_q, nx) = Eigen::MatrixXd(cs.B());
  Kc.topRightCorner(nx, d.n_q) = Eigen::MatrixXd(cs.B()).transpose();
  Eigen::VectorXd rc(nx + d.n_q);
  rc << cs.rhs_u(), cs.rhs_p();
  const Eigen::VectorXd solc = Kc.fullPivLu().solve(rc);
  Eigen::VectorXd sigma, omega;
  cs.recover_stress(solc.head(nx), sigma, omega);
  Eigen::VectorXd cond(full.K.rows());
  cond << sigma, omega, solc;
  out.solution_error = (cond - sol).cwiseAbs().maxCoeff() / sol.cwiseAbs().maxCoeff();
  return out;
}

Vec2 BrokenField::value(const Mesh& mesh, int t, const Vec2& x) const {
  const ElementGeometry g = element_geometry(mesh, t);
  DubinerBasis db(degree);
  std::vector<double> vals(db.size());
  db.evaluate(g.jac_inv * (x - g.vertex[0]), vals.data(), nullptr, nullptr);
  const Eigen::Map<const Eigen::VectorXd> v(vals.data(), db.size());
  return Vec2(coefficients.row(2 * t).dot(v), coefficients.row(2 * t + 1).dot(v));
}

Mat2 BrokenField::gradient(const Mesh& mesh, int t, const Vec2& x) const {
  const ElementGeometry g = element_geometry(mesh, t);
  DubinerBasis db(degree);
  std::vector<double> vals(db.size()), dx(db.size()), dy(db.size());
  db.evaluate(g.jac_inv * (x - g.vertex[0]), vals.data(), dx.data(), dy.data());
  Mat2 out;
  for (int c = 0; c < 2; ++c) {
    Vec2 ref(0.0, 0.0);
    for (int i = 0; i < db.size(); ++i) ref += coefficients(2 * t + c, i) * Vec2(dx[i], dy[i]);
    out.row(c) = (g.jac_inv.transpose() * ref).transpose();
  }
  return out;
}

BrokenField random_broken_field(const Mesh& mesh, int degree, std::mt19937& rng) {
  std::normal_distribution<double> dist;
  BrokenField u;
  u.degree = degree;
  u.coefficients.resize(2 * mesh.num_elements(), scalar_dim(degree));
  for (int i = 0; i < u.coefficients.size(); ++i) u.coefficients.data()[i] = dist(rng);
  return u;
}

BrokenField broken_from_field(const Mesh& mesh, int degree, const VectorField& field) {
  BrokenField u;
  u.degree = degree;
  DubinerBasis db(degree);
  const TriangleRule rule = gauss_triangle(2 * degree + 4);
  u.coefficients = Eigen::MatrixXd::Zero(2 * mesh.num_elements(), db.size());
  std::vector<double> vals(db.size());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const ElementGeometry g = element_geometry(mesh, t);
    for (size_t q = 0; q < rule.points.size(); ++q) {
      db.evaluate(rule.points[q], vals.data(), nullptr, nullptr);
      const Vec2 f = field(g.map(rule.points[q]));
      // reference weights sum to 1/2 and the basis has mean square one
      for (int i = 0; i < db.size(); ++i) {
        u.coefficients(2 * t, i) += 2.0 * rule.weights[q] * f.x() * vals[i];
        u.coefficients(2 * t + 1, i) += 2.0 * rule.weights[q] * f.y() * vals[i];
      }
    }
  }
  return u;
}

std::vector<Vec2> interp_nodal_average(const Mesh& mesh, const BrokenField& u, const std::vector<char>& zeroed) {
  std::vector<Vec2> sum(mesh.num_vertices(), Vec2::Zero());
  std::vector<int> count(mesh.num_vertices(), 0);
  for (int t = 0; t < mesh.num_elements(); ++t)
    for (int v : mesh.triangles()[t]) {
      sum[v] += u.value(mesh, t, mesh.vertices()[v]);
      ++count[v];
    }
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    sum[v] /= count[v];
    if (!zeroed.empty() && zeroed[v]) sum[v].setZero();
  }
  return sum;
}

std::vector<char> dirichlet_vertices(const Mesh& mesh, const BoundaryRegions& regions) {
  std::vector<char> out(mesh.num_vertices(), 0);
  for (int f : regions.dirichlet_facets)
    for (int v : mesh.facets()[f]) out[v] = 1;
  return out;
}

InterpolationTerms interpolation_terms(const Mesh& mesh, const BrokenField& u, const BoundaryRegions* regions) {
  const int k = u.degree;
  const std::vector<char> zeroed = regions ? dirichlet_vertices(mesh, *regions) : std::vector<char>{};
  const std::vector<Vec2> iv = interp_nodal_average(mesh, u, zeroed);
  const TriangleRule rule = gauss_triangle(2 * k);
  const LineRule line = gauss_line(2 * k + 2);
  const int nq = static_cast<int>(rule.points.size());

  std::vector<int> facets;
  for (int f = 0; f < mesh.num_facets(); ++f)
    if (!mesh.is_boundary_facet(f) || (regions && regions->of(f) == BoundaryKind::Dirichlet)) facets.push_back(f);

  InterpolationTerms out;
  out.lhs.resize(mesh.num_elements() * nq * 6);
  out.rhs.resize(mesh.num_elements() * nq * 3 + 3 * facets.size());
  int li = 0, ri = 0;
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const ElementGeometry g = element_geometry(mesh, t);
    const auto& tri = mesh.triangles()[t];
    const double h = g.diameter;
    const Vec2 grad_l1 = g.jac_inv.row(0).transpose(), grad_l2 = g.jac_inv.row(1).transpose();
    const Vec2 grad_l0 = -grad_l1 - grad_l2;
    const Mat2 grad_i = iv[tri[0]] * grad_l0.transpose() + iv[tri[1]] * grad_l1.transpose() + iv[tri[2]] * grad_l2.transpose();
    for (int q = 0; q < nq; ++q) {
      const Vec2& xh = rule.points[q];
      const Vec2 x = g.map(xh);
      const double sw = std::sqrt(rule.weights[q] * std::abs(g.det));
      const Vec2 ix = (1.0 - xh.x() - xh.y()) * iv[tri[0]] + xh.x() * iv[tri[1]] + xh.y() * iv[tri[2]];
      const Vec2 diff = u.value(mesh, t, x) - ix;
      const Mat2 G = u.gradient(mesh, t, x);
      const Mat2 dg = G - grad_i;
      out.lhs.segment<6>(li) << sw * diff.x() / h, sw * diff.y() / h, sw * dg(0, 0), sw * dg(0, 1), sw * dg(1, 0),
          sw * dg(1, 1);
      li += 6;
      out.rhs.segment<3>(ri) << sw * G(0, 0), sw * G(1, 1), sw * std::sqrt(0.5) * (G(0, 1) + G(1, 0));
      ri += 3;
    }
  }
  for (int f : facets) {
    const auto& fe = mesh.facet_elements()[f];
    const Vec2 a = mesh.vertices()[mesh.facets()[f][0]], b = mesh.vertices()[mesh.facets()[f][1]];
    const Vec2 mid = 0.5 * (a + b);
    const double len = (b - a).norm();
    double h = mesh.diameter(fe[0]);
    if (fe[1] >= 0) h = std::max(h, mesh.diameter(fe[1]));
    // rigid modes on F, centred at the midpoint, orthonormalised in L2(F)
    Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
    Eigen::Vector3d mom = Eigen::Vector3d::Zero();
    for (size_t q = 0; q < line.points.size(); ++q) {
      const Vec2 x = a + line.points[q] * (b - a);
      const double w = len * line.weights[q];
      Eigen::Matrix<double, 2, 3> r;
      r << 1.0, 0.0, -(x.y() - mid.y()), 0.0, 1.0, x.x() - mid.x();
      Vec2 jump = u.value(mesh, fe[0], x);
      if (fe[1] >= 0) jump -= u.value(mesh, fe[1], x);
      gram += w * r.transpose() * r;
      mom += w * r.transpose() * jump;
    }
    const Eigen::Matrix3d L = gram.llt().matrixL();
    out.rhs.segment<3>(ri) = L.triangularView<Eigen::Lower>().solve(mom) / std::sqrt(h);
    ri += 3;
  }
  return out;
}

ConstantReport check_interp_bound(const std::vector<Mesh>& meshes, int k, int samples, unsigned seed,
                                  bool with_boundary) {
  ConstantReport rep;
  rep.experiment = with_boundary ? "interpolation bound (boundary vertices zeroed)" : "interpolation bound";
  rep.method = "max lhs/rhs over " + std::to_string(samples) +
               " broken P" + std::to_string(k) +
               " fields with unit normal Dubiner coefficients; exact sup by generalized eigensolve with the rhs "
               "kernel deflated";
  rep.columns = {"elements", "sampled_max", "exact_max", "rhs_kernel", "kernel_lhs"};
  std::mt19937 rng(seed);
  double previous = 0.0;
  for (const Mesh& m : meshes) {
    const BoundaryRegions regions = all_dirichlet(m);
    const BoundaryRegions* reg = with_boundary ? &regions : nullptr;
    double sampled = 0.0;
    for (int s = 0; s < samples; ++s) {
      const InterpolationTerms it = interpolation_terms(m, random_broken_field(m, k, rng), reg);
      const double lhs = it.lhs.squaredNorm(), rhs = it.rhs.squaredNorm();
      if (rhs > 0.0) sampled = std::max(sampled, lhs / rhs);
    }
    // both sides as Gram matrices over all broken coefficients
    BrokenField unit;
    unit.degree = k;
    const int dim = scalar_dim(k), n = 2 * m.num_elements() * dim;
    unit.coefficients = Eigen::MatrixXd::Zero(2 * m.num_elements(), dim);
    InterpolationTerms probe = interpolation_terms(m, unit, reg);
    Eigen::MatrixXd Lmap(probe.lhs.size(), n), Rmap(probe.rhs.size(), n);
    for (int i = 0; i < n; ++i) {
      unit.coefficients.setZero();
      unit.coefficients(i / dim, i % dim) = 1.0;
      const InterpolationTerms it = interpolation_terms(m, unit, reg);
      Lmap.col(i) = it.lhs;
      Rmap.col(i) = it.rhs;
    }
    const Eigen::MatrixXd Lg = Lmap.transpose() * Lmap, Rg = Rmap.transpose() * Rmap;
    int kernel = 0;
    const Eigen::MatrixXd Q = range_basis(Rg, 1e-11, kernel);
    // the lhs must vanish on the rhs kernel
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(Rg);
    const Eigen::MatrixXd K = full.eigenvectors().leftCols(kernel);
    const double kernel_lhs = kernel > 0 ? (K.transpose() * Lg * K).cwiseAbs().maxCoeff() / Lg.cwiseAbs().maxCoeff() : 0.0;
    const double exact = generalized_extremes(Q.transpose() * Lg * Q, Q.transpose() * Rg * Q).second;
    rep.add_row("", {double(m.num_elements()), sampled, exact, double(kernel), kernel_lhs});
    if (!std::isfinite(sampled) || !std::isfinite(exact)) rep.failures.push_back("non-finite ratio");
    if (kernel_lhs > 1e-10) rep.failures.push_back("lhs does not vanish where rhs does");
    if (sampled > exact * (1.0 + 1e-8)) rep.failures.push_back("sampled ratio exceeds the exact supremum");
    if (previous > 0.0 && std::abs(sampled - previous) > 0.25 * previous)
      rep.failures.push_back("sampled maximum varies by more than 25% under refinement");
    previous = sampled;
  }
  return rep;
}

namespace {

struct TraceSetup {
  Eigen::MatrixXd eps;
  std::array<Eigen::MatrixXd, 3> jump;
  int k = 0, nu = 0;
  Eigen::MatrixXd rigid;  // 3 x (k+1 + k) for the facet
};

TraceSetup trace_setup(int k, int facet, JumpNorm kind) {
  const Mesh m = reference_triangle();
  const FeSystem fes(m, all_natural(m), k);
  const ElementFields ef(fes, 0, false);
  TraceSetup s;
  s.k = k;
  s.nu = fes.dofs().local_u_size();
  s.eps = element_norm_matrices(fes, 0).eps;
  for (int e = 0; e < 3; ++e) s.jump[e] = facet_jump_matrix(fes, ef, e, kind);
  const Vec2 n = ef.geo.outward_normal[facet], t = ef.geo.facet_tangent[facet];
  s.rigid = Eigen::MatrixXd::Zero(3, 2 * k + 1);
  const auto& pts = ef.edge_points[facet];
  for (size_t q = 0; q < pts.size(); ++q) {
    const double w = ef.edge_weights[facet][q];
    Eigen::Matrix<double, 2, 3> r;
    r << 1.0, 0.0, -pts[q].y(), 0.0, 1.0, pts[q].x();
    const Eigen::RowVector3d rn = n.transpose() * r, rt = t.transpose() * r;
    for (int j = 0; j <= k; ++j) {
      const int c = facet * (k + 1) + j;
      const double un = n.x() * ef.u_edge[facet].x(q, c) + n.y() * ef.u_edge[facet].y(q, c);
      s.rigid.col(j) += w * un * rn.transpose();
    }
    for (int j = 0; j < k; ++j) s.rigid.col(k + 1 + j) += w * ef.uhat_edge[facet](q, j) * rt.transpose();
  }
  return s;
}

Index data_indices(const TraceSetup& s, int facet) {
  Index out;
  for (int j = 0; j <= s.k; ++j) out.push_back(facet * (s.k + 1) + j);
  for (int j = 0; j < s.k; ++j) out.push_back(s.nu + facet * s.k + j);
  return out;
}

Index bubble_indices(const TraceSetup& s) { return range(3 * (s.k + 1), s.nu); }

}  // namespace

TraceNormForms trace_norm_forms(int k, int facet, JumpNorm jump) {
  const TraceSetup s = trace_setup(k, facet, jump);
  const Index data = data_indices(s, facet), bubbles = bubble_indices(s);
  TraceNormForms out;
  Index free_dofs = bubbles;
  for (int e = 0; e < 3; ++e)
    if (e != facet)
      for (int j = 0; j <= k; ++j) free_dofs.push_back(e * (k + 1) + j);
  out.free_form = schur_onto(s.eps + s.jump[facet], data, free_dofs);
  out.zero_form = schur_onto(s.eps + s.jump[0] + s.jump[1] + s.jump[2], data, bubbles);
  out.rigid_constraint = s.rigid;
  return out;
}

std::pair<double, double> trace_norms(int k, int facet, const Eigen::VectorXd& u_normal, const Eigen::VectorXd& uhat,
                                      JumpNorm jump) {
  if (u_normal.size() != k + 1 || uhat.size() != k) throw ConfigError("trace data has the wrong size");
  const TraceSetup s = trace_setup(k, facet, jump);
  const int n = static_cast<int>(s.eps.rows());
  auto minimize = [&](const Eigen::MatrixXd& G, bool zero_other_normals) {
    // constraints: data on the facet, û = 0 elsewhere, optionally w_n = 0 elsewhere
    std::vector<std::pair<int, double>> fixed;
    for (int j = 0; j <= k; ++j) fixed.push_back({facet * (k + 1) + j, u_normal[j]});
    for (int e = 0; e < 3; ++e)
      for (int j = 0; j < k; ++j) fixed.push_back({s.nu + e * k + j, e == facet ? uhat[j] : 0.0});
    if (zero_other_normals)
      for (int e = 0; e < 3; ++e)
        if (e != facet)
          for (int j = 0; j <= k; ++j) fixed.push_back({e * (k + 1) + j, 0.0});
    const int m = static_cast<int>(fixed.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
    kkt.topLeftCorner(n, n) = 2.0 * G;
    for (int i = 0; i < m; ++i) {
      kkt(n + i, fixed[i].first) = kkt(fixed[i].first, n + i) = 1.0;
      rhs[n + i] = fixed[i].second;
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) throw std::runtime_error("trace norm KKT system is singular");
    const Eigen::VectorXd w = lu.solve(rhs).head(n);
    return w.dot(G * w);
  };
  const double free_value = minimize(s.eps + s.jump[facet], false);
  const double zero_value = minimize(s.eps + s.jump[0] + s.jump[1] + s.jump[2], true);
  return {std::sqrt(std::max(free_value, 0.0)), std::sqrt(std::max(zero_value, 0.0))};
}

double trace_ratio(int k, int facet, JumpNorm jump) {
  const TraceNormForms forms = trace_norm_forms(k, facet, jump);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(forms.rigid_constraint);
  const Eigen::MatrixXd Z = Eigen::HouseholderQR<Eigen::MatrixXd>(lu.kernel()).householderQ() *
                            Eigen::MatrixXd::Identity(forms.free_form.rows(), lu.kernel().cols());
  const Eigen::MatrixXd A = Z.transpose() * forms.free_form * Z, B = Z.transpose() * forms.zero_form * Z;
  if (Eigen::LLT<Eigen::MatrixXd>(A).info() != Eigen::Success)
    throw std::runtime_error("free trace norm is not definite on the constrained subspace");
  return generalized_extremes(B, A).second;
}

ConstantReport estimate_trace_ratio(const std::vector<int>& degrees, JumpNorm jump) {
  ConstantReport rep;
  rep.experiment = "trace norm ratio";
  rep.method = "max generalized eigenvalue of the zero-extension trace form against the free trace form on data "
               "with vanishing rigid moments, reference triangle, max over its three facets, " +
               jump_name(jump) + " jump norm";
  rep.columns = {"k", "ratio", "log_k_cubed", "ratio_over_log_k_cubed"};
  std::vector<double> ks, ratios;
  for (int k : degrees) {
    double r = 0.0;
    for (int f = 0; f < 3; ++f) r = std::max(r, trace_ratio(k, f, jump));
    const double lk3 = std::pow(std::log(double(k)), 3);
    rep.add_row("k=" + std::to_string(k), {double(k), r, lk3, r / lk3});
    if (!std::isfinite(r) || r < 1.0 - 1e-10) rep.failures.push_back("ratio not finite or below one at k=" + std::to_string(k));
    ks.push_back(k);
    ratios.push_back(r);
  }
  if (ks.size() >= 2) rep.notes.push_back("fitted exponent l in ratio ~ (log k)^l: " + std::to_string(fit_log_power(ks, ratios)));
  return rep;
}

double gamma_constant(int k, double nu, JumpNorm jump) {
  const Mesh m = reference_triangle();
  const FeSystem fes(m, all_natural(m), k);
  const CondensedSystem cs(fes, nu, {});
  const int nc = fes.dofs().n_x_coupling;
  const Eigen::MatrixXd G = eps_gram_dense(fes, jump);
  const Eigen::MatrixXd eps_boundary = nu * schur_onto(G, range(0, nc), range(nc, fes.dofs().n_x));
  const Eigen::MatrixXd Sb(cs.S_boundary());
  int kernel = 0;
  const Eigen::MatrixXd Q = range_basis(Sb, 1e-10, kernel);
  if (kernel != 3) throw std::logic_error("expected the three rigid modes in the kernel, found " + std::to_string(kernel));
  return generalized_extremes(Q.transpose() * eps_boundary * Q, Q.transpose() * Sb * Q).second;
}

ConstantReport estimate_gamma(const std::vector<int>& degrees, const std::vector<double>& viscosities, JumpNorm jump) {
  ConstantReport rep;
  rep.experiment = "gamma";
  rep.method = "max generalized eigenvalue of nu |.|^2_{eps,h,boundary} against S_boundary on the unit triangle, "
               "rigid modes deflated, " + jump_name(jump) + " jump norm";
  rep.columns = {"k", "gamma", "nu_spread"};
  std::vector<double> ks, gs;
  for (int k : degrees) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double nu : viscosities) {
      const double g = gamma_constant(k, nu, jump);
      lo = std::min(lo, g);
      hi = std::max(hi, g);
    }
    const double spread = hi > 0.0 ? (hi - lo) / hi : 0.0;
    rep.add_row("k=" + std::to_string(k), {double(k), hi, spread});
    const std::string at = " at k=" + std::to_string(k);
    if (!std::isfinite(hi)) rep.failures.push_back("gamma not finite" + at);
    if (lo < 1.0 - 1e-8) rep.failures.push_back("gamma below one" + at);
    if (spread > 1e-8) rep.failures.push_back("gamma depends on nu" + at);
    ks.push_back(k);
    gs.push_back(hi);
  }
  if (ks.size() >= 2) rep.notes.push_back("fitted exponent l in gamma ~ (log k)^l: " + std::to_string(fit_log_power(ks, gs)));
  return rep;
}

InfSupResult infsup_spectrum(int level, int k, double nu) {
  Mesh m = build_structured(2, 2, Rect{});
  for (int l = 0; l < level; ++l) m = refine_uniform(m);
  const FeSystem fes(m, all_dirichlet(m), k);
  const CondensedSystem cs(fes, nu, {});
  const Eigen::MatrixXd S(cs.S()), B(cs.B());
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw std::runtime_error("S is not positive definite");
  Eigen::MatrixXd P = B * llt.solve(B.transpose());
  P = 0.5 * (P + P.transpose()).eval();
  const Eigen::MatrixXd Mp(PressureMass(fes, nu).matrix());
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(P, Mp, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = ges.eigenvalues();
  InfSupResult out;
  out.elements = m.num_elements();
  out.lambda_max = ev.maxCoeff();
  out.lambda_min = out.lambda_max;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] <= 1e-10 * out.lambda_max)
      ++out.zero_modes;
    else
      out.lambda_min = std::min(out.lambda_min, ev[i]);
  }
  return out;
}

ConstantReport estimate_infsup(const std::vector<int>& levels, int k, double nu) {
  ConstantReport rep;
  rep.experiment = "pressure Schur complement";
  rep.method = "dense eigenvalues of M_p^{-1} B S^{-1} B^T, unit square, no-slip, k=" + std::to_string(k) +
               ", constant mode excluded";
  rep.columns = {"elements", "lambda_min", "lambda_max", "zero_modes"};
  double prev_min = 0.0, prev_max = 0.0;
  for (size_t i = 0; i < levels.size(); ++i) {
    const InfSupResult r = infsup_spectrum(levels[i], k, nu);
    rep.add_row("level=" + std::to_string(levels[i]), {double(r.elements), r.lambda_min, r.lambda_max, double(r.zero_modes)});
    if (r.zero_modes != 1) rep.failures.push_back("expected exactly one zero eigenvalue, found " + std::to_string(r.zero_modes));
    if (i > 0) {
      const std::string step = " from level " + std::to_string(levels[i - 1]) + " to " + std::to_string(levels[i]);
      if (std::abs(r.lambda_min - prev_min) > 0.2 * prev_min)
        rep.failures.push_back("smallest eigenvalue varies by more than 20%" + step);
      if (std::abs(r.lambda_max - prev_max) > 0.2 * prev_max)
        rep.failures.push_back("largest eigenvalue varies by more than 20%" + step);
    }
    prev_min = r.lambda_min;
    prev_max = r.lambda_max;
  }
  return rep;
}

ConstantReport check_norm_equivalences(const FeSystem& fes, double nu, int samples, unsigned seed) {
  ConstantReport rep;
  rep.experiment = "norm identities and equivalences";
  rep.method = std::to_string(samples) + " random coefficient vectors (unit normal, seed " + std::to_string(seed) +
               "); equivalence extremes by dense generalized eigensolve";
  rep.columns = {"min", "max"};
  const DofMap& d = fes.dofs();
  const CondensedSystem cs(fes, nu, {});
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  auto random = [&](int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
  };
  std::vector<ElementNormMatrices> nm;
  for (int t = 0; t < d.n_elements; ++t) nm.push_back(element_norm_matrices(fes, t));

  // ||x||_S^2 = (1/nu)||sigma||^2 + (nu/2)||div u||^2
  double schur_err = 0.0;
  for (int s = 0; s < samples; ++s) {
    const auto [a, b] = cs.schur_norm_identity(random(d.n_x));
    schur_err = std::max(schur_err, rel_error(a, b));
  }
  rep.add_row("schur_identity_error", {0.0, schur_err});
  if (schur_err > 1e-10) rep.failures.push_back("Schur energy identity violated");

  // conforming inputs: ||E v||_S^2 = nu ||eps(v)||^2
  const SparseMatrix E = build_embedding(fes);
  const SparseMatrix A = assemble_coarse_matrix(fes, nu, 0.0);
  // on tilde-Neumann facets û_t = 0 while the embedded u_t is free, so E v is not conforming there
  if (fes.regions().tilde_neumann_facets.empty()) {
    double conf_err = 0.0;
    for (int s = 0; s < samples && d.n_vbar_free > 0; ++s) {
      const Eigen::VectorXd v = random(d.n_vbar_free);
      const Eigen::VectorXd x = E * v;
      conf_err = std::max(conf_err, rel_error(x.dot(cs.S() * x), v.dot(A * v)));
    }
    rep.add_row("conforming_identity_error", {0.0, conf_err});
    if (conf_err > 1e-10) rep.failures.push_back("conforming energy identity violated");
  } else {
    rep.notes.push_back("conforming identity skipped: tilde-Neumann facets present");
  }

  // discrete harmonic inputs: ||H x||_S^2 = x_c^T S_boundary x_c
  const int nc = d.n_x_coupling;
  double harm_err = 0.0;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d.n_x);
    x.head(nc) = random(nc);
    const Eigen::VectorXd hx = cs.harmonic_extend(x);
    const Eigen::VectorXd xc = x.head(nc);
    harm_err = std::max(harm_err, rel_error(hx.dot(cs.S() * hx), xc.dot(cs.S_boundary() * xc)));
  }
  rep.add_row("harmonic_identity_error", {0.0, harm_err});
  if (harm_err > 1e-10) rep.failures.push_back("harmonic extension identity violated");

  // ||x||_S^2 against nu ||x||_{eps,h}^2
  const Eigen::MatrixXd S(cs.S());
  int kernel = 0;
  const Eigen::MatrixXd Q = range_basis(S, 1e-10, kernel);
  for (JumpNorm j : {JumpNorm::Dual, JumpNorm::Weighted}) {
    const Eigen::MatrixXd G = nu * eps_gram_dense(fes, j);
    const auto [lo, hi] = generalized_extremes(Q.transpose() * S * Q, Q.transpose() * G * Q);
    double slo = std::numeric_limits<double>::infinity(), shi = 0.0;
    for (int s = 0; s < samples; ++s) {
      const Eigen::VectorXd x = Q * random(static_cast<int>(Q.cols()));
      const double r = x.dot(S * x) / x.dot(G * x);
      slo = std::min(slo, r);
      shi = std::max(shi, r);
    }
    const std::string name = "schur_over_eps_h_" + jump_name(j);
    rep.add_row(name, {lo, hi});
    rep.add_row(name + "_sampled", {slo, shi});
    if (slo < lo * (1 - 1e-8) || shi > hi * (1 + 1e-8)) rep.failures.push_back("sampled ratio outside eigenvalue range");
    if (!(lo > 0.0)) rep.failures.push_back("lower equivalence constant is not positive");
    if (j == JumpNorm::Dual) {
      // the element-wise triangle inequality over one volume and three facet terms gives 4
      if (hi > 4.0 * (1 + 1e-10)) rep.failures.push_back("upper bound exceeds the triangle-inequality constant 4");
      if (hi > 1.0 + 1e-10)
        rep.notes.push_back("upper ratio " + std::to_string(hi) +
                            " exceeds 1: the constant-one upper bound does not hold; cross terms between the volume "
                            "and facet contributions are not absorbed");
    }
  }

  // ||.||_{U_h}^2 against |.|_{U_h,*}^2 + (1/2)||div u||^2
  double uh_lo = std::numeric_limits<double>::infinity(), uh_hi = 0.0;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd u, uhat;
    cs.expand(random(d.n_x), u, uhat, false);
    const Eigen::VectorXd omega = random(d.n_omega);
    const auto [full, star] = uh_norms(fes, u, uhat, omega);
    double div = 0.0;
    for (int t = 0; t < d.n_elements; ++t) {
      const Eigen::VectorXd xl = gather_local(fes, t, u, uhat);
      div += xl.dot(nm[t].div * xl);
    }
    const double r = full * full / (star * star + 0.5 * div);
    uh_lo = std::min(uh_lo, r);
    uh_hi = std::max(uh_hi, r);
  }
  rep.add_row("uh_over_star_plus_div", {uh_lo, uh_hi});
  if (std::abs(uh_lo - 1.0) > 1e-10 || std::abs(uh_hi - 1.0) > 1e-10)
    rep.failures.push_back("in two dimensions the U_h norm equals the star norm plus the divergence term");

  // zero field
  Eigen::VectorXd u0, uh0;
  cs.expand(Eigen::VectorXd::Zero(d.n_x), u0, uh0, false);
  const auto [z1, z2] = cs.schur_norm_identity(Eigen::VectorXd::Zero(d.n_x));
  const auto [z3, z4] = uh_norms(fes, u0, uh0, Eigen::VectorXd::Zero(d.n_omega));
  const double zero = std::abs(z1) + std::abs(z2) + z3 + z4 + hdg_eps_norm(fes, u0, uh0);
  rep.add_row("zero_field", {0.0, zero});
  if (zero != 0.0) rep.failures.push_back("zero field has nonzero norm");
  return rep;
}

}  // namespace mcs
