// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mcs/driver.hpp"
#include "mcs/krylov.hpp"
#include "mcs/problems.hpp"
#include "mcs/verification.hpp"

using namespace mcs;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<void(Outcome&)> run;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

RunConfig base_config() {
  RunConfig c;
  c.nu = 1e-3;
  c.seed = 1;
  c.threads = 1;
  return c;
}

bool residuals_monotone(const std::vector<double>& r) {
  for (size_t i = 1; i < r.size(); ++i)
    if (r[i] > r[i - 1] * (1.0 + 1e-12)) return false;
  return true;
}

// 1 -------------------------------------------------------------------------------------
void exact_identities(Outcome& out) {
  const Mesh eight = build_structured(2, 2, Rect{});
  double worst_schur = 0.0, worst_conf = 0.0;
  for (int k : {2, 3}) {
    const FeSystem fes(eight, all_dirichlet(eight), k);
    const ConstantReport rep = check_norm_equivalences(fes, 1e-3, 200, 11 + k);
    worst_schur = std::max(worst_schur, rep.row("schur_identity_error")[1]);
    worst_conf = std::max(worst_conf, rep.row("conforming_identity_error")[1]);
    out.require(eight.num_elements() == 8, "mesh has 8 elements");
  }
  out.detail << "max rel error: Schur-norm identity " << fmt(worst_schur) << ", conforming embedding "
             << fmt(worst_conf) << " (k=2,3, 200 fields each)";
  out.require(worst_schur <= 1e-10, "Schur-norm identity <= 1e-10");
  out.require(worst_conf <= 1e-10, "conforming embedding identity <= 1e-10");
}

// 2 -------------------------------------------------------------------------------------
void dense_oracle(Outcome& out) {
  const Mesh two = build_structured(1, 1, Rect{});
  RegionPredicates p;
  p.neumann = [](const Vec2& c, int) { return std::abs(c.x() - 1.0) < 1e-12; };
  p.dirichlet = [](const Vec2& c, int) { return std::abs(c.x() - 1.0) >= 1e-12; };
  const FeSystem fes(two, classify_boundary(two, p, [](const Vec2& x) { return Vec2(x.y() * (1 - x.y()), 0.0); }), 2);
  const DenseOracleResult r =
      dense_oracle_check(fes, 1e-3, [](const Vec2& x) { return Vec2(std::sin(x.x()) + 1.0, x.x() * x.y()); });
  out.detail << "S " << fmt(r.schur_error) << ", S_boundary " << fmt(r.boundary_schur_error) << ", solution "
             << fmt(r.solution_error);
  out.require(two.num_elements() == 2, "2-element mesh");
  out.require(r.schur_error <= 1e-10, "S vs dense Schur <= 1e-10");
  out.require(r.boundary_schur_error <= 1e-10, "S_boundary vs dense Schur of S <= 1e-10");
  out.require(r.solution_error <= 1e-9, "dense vs condensed solution <= 1e-9");
}

// 3 -------------------------------------------------------------------------------------
void structure(Outcome& out) {
  double div = 0.0, nt = 0.0, ritz_s = 1e300, ritz_b = 1e300;
  bool monotone = true, curvature = false, converged = true;
  int solves = 0;
  struct Case {
    std::string problem;
    int level, k;
  };
  const std::vector<Case> cases = {{"channel", 0, 2}, {"channel", 1, 2}, {"channel", 2, 2}, {"channel", 0, 3},
                                   {"cavity", 0, 2},  {"cavity", 1, 3},  {"manufactured", 1, 2}};
  for (const Case& cs_case : cases) {
    RunConfig c = base_config();
    c.problem = cs_case.problem;
    c.level = cs_case.level;
    c.k = cs_case.k;
    c.rtol = 1e-12;
    c.maxit = 800;
    RunSolution sol;
    const RunRecord r = run_solve(c, &sol);
    ++solves;
    converged &= r.converged;
    monotone &= residuals_monotone(sol.residuals);
    div = std::max(div, r.structure.divergence_scaled());
    nt = std::max(nt, r.structure.nt_jump_scaled());

    const Problem p = make_problem(c.problem == "manufactured" ? "polynomial" : c.problem, c.level, c.nu);
    const FeSystem fes(p.mesh, p.regions, c.k);
    const CondensedSystem cs(fes, c.nu, p.force);
    VelocityPreconditionerOptions o;
    const VelocityPreconditioner vp(cs, o);
    const SparseMatrix& Sb = cs.S_boundary();
    const LinearMap apply_s = [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(cs.S() * v); };
    const LinearMap apply_b = [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(Sb * v); };
    const LinearMap identity = [](const Eigen::VectorXd& v) { return v; };
    KrylovReport rep;
    cg(apply_s, identity, cs.rhs_u(), 1e-10, 2000, rep);
    curvature |= rep.negative_curvature;
    cg(apply_s, [&](const Eigen::VectorXd& v) { return vp.apply(v); }, cs.rhs_u(), 1e-10, 2000, rep);
    curvature |= rep.negative_curvature;
    const Eigen::VectorXd rb = cs.rhs_u().head(cs.n_coupling());
    cg(apply_b, [&](const Eigen::VectorXd& v) { return vp.inner().apply(v); }, rb, 1e-10, 2000, rep);
    curvature |= rep.negative_curvature;
    ritz_s = std::min(ritz_s, lanczos_spectrum(apply_s, identity, cs.n_x(), 60, 3).lambda_min);
    ritz_b = std::min(ritz_b, lanczos_spectrum(apply_b, identity, cs.n_coupling(), 60, 3).lambda_min);
  }
  out.detail << solves << " Stokes solves at rtol 1e-12: max scaled |div u| " << fmt(div) << ", max scaled nt-jump "
             << fmt(nt) << ", residuals monotone " << (monotone ? "yes" : "no") << "; CG negative curvature "
             << (curvature ? "detected" : "never") << "; min Ritz S " << fmt(ritz_s) << ", S_boundary "
             << fmt(ritz_b);
  out.require(converged, "all solves converged");
  out.require(div <= 1e-9, "scaled divergence <= 1e-9");
  out.require(nt <= 1e-9, "scaled nt-jump <= 1e-9");
  out.require(monotone, "GMRES residual monotone");
  out.require(!curvature, "CG never detects negative curvature");
  out.require(ritz_s > 0.0 && ritz_b > 0.0, "smallest Ritz values positive");
}

// 4 -------------------------------------------------------------------------------------
double boundary_condition_number(int level, int k, int steps) {
  const Problem p = make_channel(level);
  const FeSystem fes(p.mesh, p.regions, k);
  const CondensedSystem cs(fes, 1e-3, p.force);
  VelocityPreconditionerOptions o;
  o.composition = Composition::Multiplicative;
  o.target = Target::Condensed;
  const VelocityPreconditioner vp(cs, o);
  const SparseMatrix& A = vp.inner_matrix();
  return lanczos_spectrum([&](const Eigen::VectorXd& v) { return Eigen::VectorXd(A * v); },
                          [&](const Eigen::VectorXd& v) { return vp.inner().apply(v); }, static_cast<int>(A.rows()),
                          steps, 5)
      .cond;
}

void spectral_certificate(Outcome& out) {
  std::vector<double> by_level;
  for (int level = 0; level <= 3; ++level) by_level.push_back(boundary_condition_number(level, 2, 100));
  const double lo = *std::min_element(by_level.begin(), by_level.end());
  const double hi = *std::max_element(by_level.begin(), by_level.end());
  const double variation = hi / lo - 1.0;
  out.detail << "k=2 cond over levels 0-3:";
  for (double c : by_level) out.detail << ' ' << fmt(c);
  out.detail << " (variation " << fmt(100 * variation, 3) << "%); level 0 cond(k), k=2..6:";
  std::vector<double> by_degree;
  for (int k = 2; k <= 6; ++k) {
    by_degree.push_back(boundary_condition_number(0, k, 100));
    out.detail << ' ' << fmt(by_degree.back());
  }
  const double c = std::max(by_degree[0] / std::pow(std::log(2.0), 3), by_degree[1] / std::pow(std::log(3.0), 3));
  out.detail << "; c = " << fmt(c);
  out.require(variation <= 0.25, "level variation <= 25%");
  for (int k = 4; k <= 6; ++k)
    out.require(by_degree[k - 2] <= c * std::pow(std::log(double(k)), 3), "cond(" + std::to_string(k) + ") <= c (log k)^3");
}

// 5 -------------------------------------------------------------------------------------
void composition_ordering(Outcome& out) {
  RunConfig c = base_config();
  c.rtol = 1e-6;
  c.maxit = 500;
  int configs = 0, violations = 0;
  std::ostringstream table;
  struct Sweep {
    std::vector<int> degrees, levels;
    std::vector<SmootherVariant> smoothers;
  };
  const std::vector<Sweep> sweeps = {
      {{2}, {0, 1, 2}, {SmootherVariant::GaussSeidel, SmootherVariant::Jacobi, SmootherVariant::L1Jacobi}},
      {{3, 4}, {0, 1}, {SmootherVariant::GaussSeidel}}};
  for (const Sweep& s : sweeps)
    for (SmootherVariant sm : s.smoothers) {
      RunConfig sc = c;
      sc.smoother = sm;
      sc.study_degrees = s.degrees;
      sc.study_levels = s.levels;
      sc.study_targets = {Target::Condensed, Target::Full};
      sc.study_compositions = {Composition::Additive, Composition::Multiplicative};
      std::ostringstream csv;
      const std::vector<RunRecord> rec = run_study(sc, csv);
      for (size_t i = 0; i + 1 < rec.size(); i += 2) {
        const RunRecord& add = rec[i];
        const RunRecord& mul = rec[i + 1];
        ++configs;
        const bool ok = mul.error.empty() && mul.converged && mul.iterations <= add.iterations;
        violations += !ok;
        table << ' ' << to_string(sm) << "/k" << mul.k << "/l" << mul.level << '/' << to_string(mul.target) << ':'
              << add.iterations << (add.converged ? "" : "*") << '>' << mul.iterations;
      }
    }
  out.detail << configs << " configurations, #IT additive>multiplicative (* = additive hit maxit):" << table.str();
  out.require(violations == 0, "multiplicative #IT <= additive #IT everywhere");
}

// 6 -------------------------------------------------------------------------------------
void gamma_experiment(Outcome& out) {
  const ConstantReport rep = estimate_gamma({2, 3, 4, 5, 6}, {1.0, 1e-3});
  const auto gamma = rep.column("gamma");
  const auto spread = rep.column("nu_spread");
  out.detail << "gamma(k), k=2..6:";
  for (double g : gamma) out.detail << ' ' << fmt(g, 4);
  out.detail << "; max nu spread " << fmt(*std::max_element(spread.begin(), spread.end()));
  for (const auto& f : rep.failures) out.require(false, f);
  for (double g : gamma) {
    out.require(std::isfinite(g), "gamma finite");
    out.require(g >= 1.0 - 1e-8, "gamma >= 1 - 1e-8");
    out.require(g <= 10.0, "gamma <= 10");
  }
  for (double s : spread) out.require(s <= 1e-8, "nu-independent to 1e-8");
}

// 7 -------------------------------------------------------------------------------------
void infsup_experiment(Outcome& out) {
  const ConstantReport rep = estimate_infsup({1, 2}, 2, 1e-3);
  const auto el = rep.column("elements");
  const auto lmin = rep.column("lambda_min");
  const auto lmax = rep.column("lambda_max");
  for (size_t i = 0; i < el.size(); ++i)
    out.detail << (i ? "; " : "") << el[i] << " elements: [" << fmt(lmin[i], 4) << ", " << fmt(lmax[i], 4) << "]";
  out.detail << "; variation min " << fmt(100 * std::abs(lmin[1] / lmin[0] - 1)) << "%, max "
             << fmt(100 * std::abs(lmax[1] / lmax[0] - 1)) << "%";
  for (const auto& f : rep.failures) out.require(false, f);
  out.require(std::abs(lmin[1] - lmin[0]) <= 0.2 * lmin[0], "lambda_min within 20%");
  out.require(std::abs(lmax[1] - lmax[0]) <= 0.2 * lmax[0], "lambda_max within 20%");
}

// 8 -------------------------------------------------------------------------------------
void trace_experiment(Outcome& out) {
  const ConstantReport rep = estimate_trace_ratio({2, 3, 4, 5, 6});
  const auto ratio = rep.column("ratio");
  const double c = ratio[0] / std::pow(std::log(2.0), 3);
  out.detail << "max ratio, k=2..6:";
  for (double r : ratio) out.detail << ' ' << fmt(r, 4);
  out.detail << "; c = " << fmt(c, 4) << "; ratio / (c (log k)^3):";
  for (int k = 3; k <= 6; ++k) out.detail << ' ' << fmt(ratio[k - 2] / (c * std::pow(std::log(double(k)), 3)));
  for (const auto& f : rep.failures) out.require(false, f);
  for (int k = 3; k <= 6; ++k)
    out.require(std::isfinite(ratio[k - 2]) && ratio[k - 2] <= c * std::pow(std::log(double(k)), 3),
                "ratio(" + std::to_string(k) + ") <= c (log k)^3");
}

// 9 -------------------------------------------------------------------------------------
void interpolation_experiment(Outcome& out) {
  const Mesh coarse = build_structured(2, 2, Rect{});
  const std::vector<Mesh> meshes = {coarse, refine_uniform(coarse)};
  for (bool bc : {false, true}) {
    const ConstantReport rep = check_interp_bound(meshes, 2, 500, 1, bc);
    const auto el = rep.column("elements");
    const auto mx = rep.column("sampled_max");
    const auto exact = rep.column("exact_max");
    const double variation = std::abs(mx[1] / mx[0] - 1.0);
    const double exact_variation = std::abs(exact[1] / exact[0] - 1.0);
    out.detail << (bc ? "; boundary-zeroed variant (reported only): " : "500 fields: ") << el[0] << "->" << el[1]
               << " elements, sampled max " << fmt(mx[0], 4) << "->" << fmt(mx[1], 4) << " (" << fmt(100 * variation)
               << "%), exact sup " << fmt(exact[0], 4) << "->" << fmt(exact[1], 4) << " (" << fmt(100 * exact_variation)
               << "%)";
    if (bc) continue;
    for (const auto& f : rep.failures) out.require(false, f);
    out.require(std::isfinite(mx[0]) && std::isfinite(mx[1]), "finite");
    out.require(variation <= 0.25, "sampled max refinement-stable within 25%");
    out.require(exact_variation <= 0.25, "exact sup refinement-stable within 25%");
  }
}

// 10 ------------------------------------------------------------------------------------
void exactness(Outcome& out) {
  double worst = 0.0;
  for (int k : {2, 3}) {
    RunConfig c = base_config();
    c.problem = "manufactured";
    c.k = k;
    c.level = 1;
    c.rtol = 1e-13;
    c.maxit = 1000;
    RunSolution sol;
    const RunRecord r = run_solve(c, &sol);
    out.require(r.converged, "polynomial solve converged");
    const Problem p = make_polynomial_solution(c.level, c.nu);
    const FeSystem fes(p.mesh, p.regions, k);
    const SolutionErrors e = solution_errors(fes, p, c.nu, sol.u, sol.pressure, sol.sigma);
    worst = std::max({worst, e.velocity_l2, e.strain, e.pressure_l2, e.stress});
  }
  out.detail << "polynomial solution max error " << fmt(worst) << "; smooth solution k=2 strain errors:";
  out.require(worst <= 1e-8, "polynomial solution reproduced to 1e-8");

  std::vector<double> err;
  for (int level = 0; level <= 2; ++level) {
    RunConfig c = base_config();
    c.problem = "smooth";
    c.level = level;
    c.rtol = 1e-12;
    c.maxit = 1000;
    RunSolution sol;
    run_solve(c, &sol);
    const Problem p = make_smooth_solution(level, c.nu);
    const FeSystem fes(p.mesh, p.regions, 2);
    err.push_back(solution_errors(fes, p, c.nu, sol.u, sol.pressure, sol.sigma).strain);
    out.detail << ' ' << fmt(err.back());
  }
  out.detail << ", rates";
  for (size_t i = 1; i < err.size(); ++i) {
    const double rate = std::log2(err[i - 1] / err[i]);
    out.detail << ' ' << fmt(rate);
    out.require(rate >= 2 - 0.3, "rate >= k - 0.3");
  }
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "exact identities", 30, exact_identities},
      {2, "dense oracle equivalence", 10, dense_oracle},
      {3, "structural postconditions", 300, structure},
      {4, "preconditioner spectral certificate", 300, spectral_certificate},
      {5, "additive vs multiplicative ordering", 300, composition_ordering},
      {6, "gamma experiment", 120, gamma_experiment},
      {7, "pressure Schur complement", 120, infsup_experiment},
      {8, "trace inverse estimate", 120, trace_experiment},
      {9, "interpolation bound", 60, interpolation_experiment},
      {10, "method exactness and convergence", 300, exactness},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.require(seconds <= c.budget_seconds, "runtime <= " + fmt(c.budget_seconds) + " s");
    failed += !out.pass;
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << ", " << fmt(seconds)
              << " s): " << out.detail.str() << std::endl;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - failed << "/" << criteria.size() << std::endl;
  return failed ? 1 : 0;
}
