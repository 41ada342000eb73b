#include "mcs/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <toml.hpp>
#include <unsupported/Eigen/SparseExtra>

#include "json.hpp"
#include "mcs/krylov.hpp"
#include "mcs/problems.hpp"

namespace mcs {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------- TOML reading

void reject_unknown_keys(const toml::table& table, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, node] : table) {
    const std::string name(key.str());
    if (!allowed.count(name)) throw ConfigError("unknown key '" + name + "' in " + where);
  }
}

template <class Fn>
void read_node(const toml::table& table, const char* key, const std::string& where, Fn&& fn) {
  if (const toml::node* node = table.get(key)) fn(*node, where + "." + key);
}

int as_int(const toml::node& node, const std::string& name) {
  const auto v = node.value_exact<int64_t>();
  if (!v) throw ConfigError(name + " must be an integer");
  return static_cast<int>(*v);
}

double as_double(const toml::node& node, const std::string& name) {
  if (!node.is_number()) throw ConfigError(name + " must be a number");
  return *node.value<double>();
}

bool as_bool(const toml::node& node, const std::string& name) {
  const auto v = node.value_exact<bool>();
  if (!v) throw ConfigError(name + " must be true or false");
  return *v;
}

std::string as_string(const toml::node& node, const std::string& name) {
  const auto v = node.value_exact<std::string>();
  if (!v) throw ConfigError(name + " must be a string");
  return *v;
}

template <class T, class Convert>
std::vector<T> as_list(const toml::node& node, const std::string& name, Convert&& convert) {
  const toml::array* arr = node.as_array();
  if (!arr) throw ConfigError(name + " must be an array");
  std::vector<T> out;
  for (size_t i = 0; i < arr->size(); ++i) out.push_back(convert((*arr)[i], name + "[" + std::to_string(i) + "]"));
  return out;
}

const toml::table& subtable(const toml::table& root, const char* key) {
  static const toml::table empty;
  const toml::node* node = root.get(key);
  if (!node) return empty;
  if (!node->is_table()) throw ConfigError(std::string("[") + key + "] must be a table");
  return *node->as_table();
}

// ---------------------------------------------------------------- run pieces

std::string problem_factory_name(const std::string& problem) {
  return problem == "manufactured" ? "polynomial" : problem;
}

VelocityPreconditionerOptions preconditioner_options(const RunConfig& c) {
  VelocityPreconditionerOptions o;
  o.composition = c.composition;
  o.target = c.target;
  o.smoother = c.smoother;
  o.steps = c.smoother_steps;
  o.penalty = c.penalty;
  o.seed = c.seed;
  o.threads = c.threads;
  return o;
}

bool monotone(const std::vector<double>& r) {
  for (size_t i = 1; i < r.size(); ++i)
    if (r[i] > r[i - 1] * (1.0 + 1e-12)) return false;
  return true;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string optional_double(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!out.empty() && out.back() != '_')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

void write_vector(const Eigen::VectorXd& v, const std::filesystem::path& path) {
  if (!Eigen::saveMarketVector(v, path.string())) throw std::runtime_error("cannot write " + path.string());
}

void write_matrix(const SparseMatrix& A, const std::filesystem::path& path) {
  if (!Eigen::saveMarket(A, path.string())) throw std::runtime_error("cannot write " + path.string());
}

std::vector<RunConfig> sweep_entries(const RunConfig& config) {
  std::vector<RunConfig> out;
  for (int k : config.study_degrees)
    for (int level : config.study_levels)
      for (Target target : config.study_targets)
        for (Composition composition : config.study_compositions) {
          RunConfig c = config;
          c.k = k;
          c.level = level;
          c.target = target;
          c.composition = composition;
          out.push_back(c);
        }
  return out;
}

}  // namespace

SolveMode parse_mode(const std::string& name) {
  if (name == "stokes") return SolveMode::Stokes;
  if (name == "elliptic") return SolveMode::Elliptic;
  throw ConfigError("unknown mode '" + name + "' (stokes | elliptic)");
}

std::string to_string(SolveMode m) { return m == SolveMode::Stokes ? "stokes" : "elliptic"; }

void validate(const RunConfig& c) {
  static const std::set<std::string> problems = {"channel", "cavity", "manufactured", "smooth"};
  if (!problems.count(c.problem))
    throw ConfigError("unknown problem '" + c.problem + "' (channel | cavity | manufactured | smooth)");
  auto check_degree = [](int k) {
    if (k < 2)
      throw ConfigError("k = " + std::to_string(k) +
                        " is out of scope: the discretization is implemented for k >= 2 only; "
                        "the lowest-order case k = 1 is not supported");
  };
  check_degree(c.k);
  for (int k : c.study_degrees) check_degree(k);
  if (c.level < 0) throw ConfigError("level must be >= 0");
  for (int l : c.study_levels)
    if (l < 0) throw ConfigError("study levels must be >= 0");
  if (!(c.nu > 0.0) || !std::isfinite(c.nu)) throw ConfigError("nu must be positive");
  if (!(c.rtol > 0.0 && c.rtol < 1.0)) throw ConfigError("rtol must lie in (0, 1)");
  if (c.maxit < 1) throw ConfigError("maxit must be >= 1");
  if (c.smoother_steps < 1) throw ConfigError("smoother steps must be >= 1");
  if (!(c.penalty > 0.0)) throw ConfigError("penalty must be positive");
  if (c.lanczos_steps < 2) throw ConfigError("lanczos_steps must be >= 2");
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
}

RunConfig parse_config(const std::string& toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "TOML syntax error: " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(os.str());
  }
  RunConfig c;
  reject_unknown_keys(root,
                      {"problem", "mode", "k", "level", "nu", "seed", "threads", "preconditioner", "solver", "study",
                       "output"},
                      "the top level");
  read_node(root, "problem", "", [&](const auto& n, const auto& w) { c.problem = as_string(n, w); });
  read_node(root, "mode", "", [&](const auto& n, const auto& w) { c.mode = parse_mode(as_string(n, w)); });
  read_node(root, "k", "", [&](const auto& n, const auto& w) { c.k = as_int(n, w); });
  read_node(root, "level", "", [&](const auto& n, const auto& w) { c.level = as_int(n, w); });
  read_node(root, "nu", "", [&](const auto& n, const auto& w) { c.nu = as_double(n, w); });
  read_node(root, "seed", "", [&](const auto& n, const auto& w) {
    const int s = as_int(n, w);
    if (s < 0) throw ConfigError("seed must be >= 0");
    c.seed = static_cast<unsigned>(s);
  });
  read_node(root, "threads", "", [&](const auto& n, const auto& w) { c.threads = as_int(n, w); });

  const toml::table& pc = subtable(root, "preconditioner");
  reject_unknown_keys(pc, {"composition", "target", "smoother", "steps", "penalty"}, "[preconditioner]");
  read_node(pc, "composition", "preconditioner", [&](const auto& n, const auto& w) { c.composition = parse_composition(as_string(n, w)); });
  read_node(pc, "target", "preconditioner", [&](const auto& n, const auto& w) { c.target = parse_target(as_string(n, w)); });
  read_node(pc, "smoother", "preconditioner", [&](const auto& n, const auto& w) { c.smoother = parse_smoother(as_string(n, w)); });
  read_node(pc, "steps", "preconditioner", [&](const auto& n, const auto& w) { c.smoother_steps = as_int(n, w); });
  read_node(pc, "penalty", "preconditioner", [&](const auto& n, const auto& w) { c.penalty = as_double(n, w); });

  const toml::table& solver = subtable(root, "solver");
  reject_unknown_keys(solver, {"rtol", "maxit", "spectrum", "lanczos_steps"}, "[solver]");
  read_node(solver, "rtol", "solver", [&](const auto& n, const auto& w) { c.rtol = as_double(n, w); });
  read_node(solver, "maxit", "solver", [&](const auto& n, const auto& w) { c.maxit = as_int(n, w); });
  read_node(solver, "spectrum", "solver", [&](const auto& n, const auto& w) { c.spectrum = as_bool(n, w); });
  read_node(solver, "lanczos_steps", "solver", [&](const auto& n, const auto& w) { c.lanczos_steps = as_int(n, w); });

  // the sweep defaults to the single run described above
  c.study_degrees = {c.k};
  c.study_levels = {c.level};
  c.study_compositions = {c.composition};
  c.study_targets = {c.target};
  const toml::table& study = subtable(root, "study");
  reject_unknown_keys(study, {"degrees", "levels", "compositions", "targets"}, "[study]");
  read_node(study, "degrees", "study", [&](const auto& n, const auto& w) { c.study_degrees = as_list<int>(n, w, as_int); });
  read_node(study, "levels", "study", [&](const auto& n, const auto& w) { c.study_levels = as_list<int>(n, w, as_int); });
  read_node(study, "compositions", "study", [&](const auto& n, const auto& w) {
    c.study_compositions =
        as_list<Composition>(n, w, [](const auto& e, const auto& ew) { return parse_composition(as_string(e, ew)); });
  });
  read_node(study, "targets", "study", [&](const auto& n, const auto& w) {
    c.study_targets = as_list<Target>(n, w, [](const auto& e, const auto& ew) { return parse_target(as_string(e, ew)); });
  });

  const toml::table& output = subtable(root, "output");
  reject_unknown_keys(output, {"dir", "residuals", "solution"}, "[output]");
  read_node(output, "dir", "output", [&](const auto& n, const auto& w) { c.output_dir = as_string(n, w); });
  read_node(output, "residuals", "output", [&](const auto& n, const auto& w) { c.write_residuals = as_bool(n, w); });
  read_node(output, "solution", "output", [&](const auto& n, const auto& w) { c.write_solution = as_bool(n, w); });

  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------- records

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> cols = {
      "problem", "k",          "level",      "composition", "target",  "elements", "dofs",
      "iterations", "t_tot",   "t_sup",      "t_sol",       "converged", "lambda_min", "lambda_max",
      "cond",    "divergence", "nt_jump",    "error"};
  return cols;
}

void write_record_csv_header(std::ostream& os) {
  const auto& cols = record_columns();
  for (size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\r\n";
}

void write_record_csv_row(std::ostream& os, const RunRecord& r) {
  os << csv_escape(r.problem) << ',' << r.k << ',' << r.level << ',' << to_string(r.composition) << ','
     << to_string(r.target) << ',' << r.elements << ',' << r.dofs << ',' << r.iterations << ','
     << format_double(r.t_tot) << ',' << format_double(r.t_sup) << ',' << format_double(r.t_sol) << ','
     << (r.converged ? 1 : 0) << ',' << optional_double(r.lambda_min) << ',' << optional_double(r.lambda_max) << ','
     << optional_double(r.cond) << ',' << format_double(r.structure.divergence_scaled()) << ','
     << format_double(r.structure.nt_jump_scaled()) << ',' << csv_escape(r.error) << "\r\n";
}

// ---------------------------------------------------------------- solve

RunRecord run_solve(const RunConfig& config, RunSolution* solution) {
  validate(config);
  const Clock::time_point start = Clock::now();
  RunRecord rec;
  rec.problem = config.problem;
  rec.k = config.k;
  rec.level = config.level;
  rec.composition = config.composition;
  rec.target = config.target;

  const Problem problem = make_problem(problem_factory_name(config.problem), config.level, config.nu);
  const FeSystem fes(problem.mesh, problem.regions, config.k);
  const DofMap& d = fes.dofs();
  const bool stokes = config.mode == SolveMode::Stokes;
  rec.elements = d.n_elements;
  rec.dofs = stokes ? d.total_free() : d.n_x;

  const Clock::time_point setup_start = Clock::now();
  const CondensedSystem cs(fes, config.nu, problem.force, config.threads);
  const VelocityPreconditioner vp(cs, preconditioner_options(config));
  const PressureMass mass(fes, config.nu);
  const LinearMap velocity_inverse = [&](const Eigen::VectorXd& r) { return vp.apply(r); };
  const SaddlePreconditioner saddle(cs.B(), velocity_inverse,
                                    [&](const Eigen::VectorXd& r) { return mass.solve(r); });
  rec.t_sup = seconds_since(setup_start);

  const int nx = cs.n_x();
  const int nq = d.n_q;
  LinearMap op, prec;
  Eigen::VectorXd rhs;
  GmresOptions opt;
  opt.rtol = config.rtol;
  opt.maxit = config.maxit;
  if (stokes) {
    op = [&](const Eigen::VectorXd& v) {
      Eigen::VectorXd out(v.size());
      out.head(nx) = cs.S() * v.head(nx) + cs.B().transpose() * v.tail(nq);
      out.tail(nq) = cs.B() * v.head(nx);
      return out;
    };
    prec = [&](const Eigen::VectorXd& r) { return saddle.apply(r); };
    rhs.resize(nx + nq);
    rhs << cs.rhs_u(), cs.rhs_p();
    if (problem.regions.mean_zero_pressure)
      opt.project = [&](Eigen::VectorXd& v) {
        Eigen::VectorXd p = v.tail(nq);
        remove_pressure_mean(fes, p);
        v.tail(nq) = p;
      };
  } else {
    op = [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(cs.S() * v); };
    prec = velocity_inverse;
    rhs = cs.rhs_u();
  }

  const Clock::time_point solve_start = Clock::now();
  KrylovReport report;
  const Eigen::VectorXd sol = gmres(op, prec, rhs, opt, report);
  rec.t_sol = seconds_since(solve_start);
  rec.iterations = report.iterations;
  rec.converged = report.converged;
  rec.residual_monotone = monotone(report.residuals);

  Eigen::VectorXd x = sol.head(nx), sigma, omega;
  cs.recover_stress(x, sigma, omega);
  rec.structure = check_solution_structure(cs, x, sigma);

  if (config.spectrum) {
    const SparseMatrix& A = vp.inner_matrix();
    const SpectrumEstimate est =
        lanczos_spectrum([&](const Eigen::VectorXd& v) { return Eigen::VectorXd(A * v); },
                         [&](const Eigen::VectorXd& v) { return vp.inner().apply(v); }, static_cast<int>(A.rows()),
                         config.lanczos_steps, config.seed);
    rec.lambda_min = est.lambda_min;
    rec.lambda_max = est.lambda_max;
    rec.cond = est.cond;
  }

  RunSolution local;
  RunSolution& out = solution ? *solution : local;
  if (solution || config.write_solution || config.write_residuals) {
    out.x = x;
    cs.expand(x, out.u, out.uhat);
    out.sigma = sigma;
    out.omega = omega;
    out.residuals = report.residuals;
    if (stokes) {
      out.pressure = -sol.tail(nq);
      if (problem.regions.mean_zero_pressure) remove_pressure_mean(fes, out.pressure);
    } else {
      out.pressure.resize(0);
    }
  }
  if (config.write_residuals || config.write_solution) std::filesystem::create_directories(config.output_dir);
  if (config.write_residuals) {
    std::ofstream os(config.output_dir / "residuals.csv");
    os << "iteration,relative_residual\r\n";
    for (size_t i = 0; i < report.residuals.size(); ++i) os << i << ',' << format_double(report.residuals[i]) << "\r\n";
    if (!os) throw std::runtime_error("cannot write residuals.csv");
  }
  if (config.write_solution) {
    write_vector(out.u, config.output_dir / "u.mtx");
    write_vector(out.uhat, config.output_dir / "uhat.mtx");
    write_vector(out.sigma, config.output_dir / "sigma.mtx");
    write_vector(out.omega, config.output_dir / "omega.mtx");
    if (stokes) write_vector(out.pressure, config.output_dir / "pressure.mtx");
  }
  rec.t_tot = seconds_since(start);
  return rec;
}

std::vector<RunRecord> run_study(const RunConfig& config, std::ostream& csv) {
  write_record_csv_header(csv);
  std::vector<RunRecord> records;
  for (const RunConfig& c : sweep_entries(config)) {
    RunRecord r;
    try {
      r = run_solve(c);
    } catch (const std::exception& e) {
      r.problem = c.problem;
      r.k = c.k;
      r.level = c.level;
      r.composition = c.composition;
      r.target = c.target;
      r.error = e.what();
    }
    write_record_csv_row(csv, r);
    csv.flush();
    records.push_back(r);
  }
  return records;
}

// ---------------------------------------------------------------- verification

const std::vector<std::string>& verification_suites() {
  static const std::vector<std::string> suites = {"identities", "constants"};
  return suites;
}

namespace {

bool emit_report(const ConstantReport& rep, const std::filesystem::path& dir, std::ostream& log) {
  std::filesystem::create_directories(dir);
  const std::string base = slug(rep.experiment);
  std::ofstream csv(dir / (base + ".csv"));
  rep.write_csv(csv);
  std::ofstream txt(dir / (base + ".txt"));
  rep.write_text(txt);
  if (!csv || !txt) throw std::runtime_error("cannot write report " + base);
  log << (rep.passed() ? "PASS " : "FAIL ") << rep.experiment << '\n';
  for (const auto& f : rep.failures) log << "  failure: " << f << '\n';
  return rep.passed();
}

ConstantReport identity_report(const RunConfig& config) {
  ConstantReport rep;
  rep.experiment = "exact identities";
  rep.method = "norm identities on a no-slip 8-element mesh (k = 2, 3, 200 fields), dense oracle on a 2-element "
               "mesh, structural checks of a channel solve";
  rep.columns = {"value", "tolerance"};
  auto add = [&](const std::string& label, double value, double tol) {
    rep.add_row(label, {value, tol});
    if (!(value <= tol)) rep.failures.push_back(label + " = " + format_double(value));
  };
  const Mesh eight = build_structured(2, 2, Rect{});
  for (int k : {2, 3}) {
    const FeSystem fes(eight, all_dirichlet(eight), k);
    const ConstantReport eq = check_norm_equivalences(fes, config.nu, 200, config.seed);
    const std::string suffix = "_k" + std::to_string(k);
    add("schur_identity" + suffix, eq.row("schur_identity_error")[1], 1e-10);
    add("conforming_identity" + suffix, eq.row("conforming_identity_error")[1], 1e-10);
    add("harmonic_identity" + suffix, eq.row("harmonic_identity_error")[1], 1e-10);
    for (const auto& f : eq.failures) rep.failures.push_back("k=" + std::to_string(k) + ": " + f);
  }
  const Mesh two = build_structured(1, 1, Rect{});
  RegionPredicates outflow;
  outflow.neumann = [](const Vec2& c, int) { return std::abs(c.x() - 1.0) < 1e-12; };
  outflow.dirichlet = [](const Vec2& c, int) { return std::abs(c.x() - 1.0) >= 1e-12; };
  const FeSystem small(two, classify_boundary(two, outflow), 2);
  const DenseOracleResult oracle =
      dense_oracle_check(small, config.nu, [](const Vec2& x) { return Vec2(1.0 + x.y(), x.x() * x.x()); });
  add("dense_schur", oracle.schur_error, 1e-10);
  add("dense_boundary_schur", oracle.boundary_schur_error, 1e-10);
  add("dense_solution", oracle.solution_error, 1e-9);

  RunConfig channel = config;
  channel.problem = "channel";
  channel.mode = SolveMode::Stokes;
  channel.k = 2;
  channel.level = 0;
  channel.spectrum = false;
  // divergence and nt-continuity hold for the discrete solution, so the iterate must be
  // converged well below the structural tolerance
  channel.rtol = 1e-12;
  channel.maxit = std::max(channel.maxit, 500);
  channel.write_residuals = channel.write_solution = false;
  const RunRecord r = run_solve(channel);
  add("channel_divergence", r.structure.divergence_scaled(), 1e-9);
  add("channel_nt_jump", r.structure.nt_jump_scaled(), 1e-9);
  add("channel_not_converged", r.converged ? 0.0 : 1.0, 0.0);
  add("channel_residual_not_monotone", r.residual_monotone ? 0.0 : 1.0, 0.0);
  return rep;
}

}  // namespace

bool run_verification(const std::string& suite, const RunConfig& config, std::ostream& log) {
  const std::filesystem::path dir = config.output_dir / suite;
  if (suite == "identities") return emit_report(identity_report(config), dir, log);
  if (suite == "constants") {
    bool ok = true;
    ok &= emit_report(estimate_gamma({2, 3, 4, 5, 6}, {1.0, 1e-3}), dir, log);
    ok &= emit_report(estimate_trace_ratio({2, 3, 4, 5, 6}), dir, log);
    ok &= emit_report(estimate_infsup({1, 2}, 2, config.nu), dir, log);
    const std::vector<Mesh> meshes = {build_structured(2, 2, Rect{}), refine_uniform(build_structured(2, 2, Rect{}))};
    ok &= emit_report(check_interp_bound(meshes, 2, 500, config.seed, false), dir, log);
    ok &= emit_report(check_interp_bound(meshes, 2, 500, config.seed, true), dir, log);
    return ok;
  }
  throw ConfigError("unknown verification suite '" + suite + "' (identities | constants)");
}

// ---------------------------------------------------------------- export

ExportedFiles export_system(const RunConfig& config, const std::filesystem::path& dir) {
  validate(config);
  std::filesystem::create_directories(dir);
  const Problem problem = make_problem(problem_factory_name(config.problem), config.level, config.nu);
  const FeSystem fes(problem.mesh, problem.regions, config.k);
  const DofMap& d = fes.dofs();
  const bool stokes = config.mode == SolveMode::Stokes;
  const SaddleSystem full = stokes ? assemble_full_system(fes, config.nu, problem.force, config.threads)
                                   : assemble_elliptic_system(fes, config.nu, problem.force, config.threads);
  const CondensedSystem cs(fes, config.nu, problem.force, config.threads);
  const PressureMass mass(fes, config.nu);
  const bool boundary = config.target == Target::Condensed;

  ExportedFiles files;
  files.full = dir / "K.mtx";
  files.velocity = dir / (boundary ? "S_boundary.mtx" : "S.mtx");
  files.divergence = dir / "B.mtx";
  files.pressure_mass = dir / "M_p.mtx";
  files.sidecar = dir / "system.json";
  write_matrix(full.K, files.full);
  write_matrix(boundary ? cs.S_boundary() : cs.S(), files.velocity);
  write_matrix(cs.B(), files.divergence);
  write_matrix(mass.matrix(), files.pressure_mass);

  using nlohmann::json;
  auto block = [](const std::string& name, int offset, int size) {
    return json{{"name", name}, {"offset", offset}, {"size", size}};
  };
  json full_blocks = json::array();
  const char* names[] = {"sigma", "omega", "velocity", "pressure"};
  for (int b = 0; b < (stokes ? 4 : 3); ++b)
    full_blocks.push_back(block(names[b], full.offset[b], full.offset[b + 1] - full.offset[b]));
  json velocity_blocks = json::array({block("facet_u", 0, d.n_x_facet_u), block("uhat", d.n_x_facet_u, d.n_x_uhat)});
  if (!boundary) velocity_blocks.push_back(block("bubbles", d.n_x_coupling, d.n_x - d.n_x_coupling));

  json side;
  side["problem"] = config.problem;
  side["mode"] = to_string(config.mode);
  side["k"] = config.k;
  side["level"] = config.level;
  side["nu"] = config.nu;
  side["elements"] = d.n_elements;
  side["format"] = "MatrixMarket coordinate real general, 1-based indices, 17 significant digits";
  side["full"] = {{"file", files.full.filename().string()},
                  {"dimension", full.K.rows()},
                  {"blocks", full_blocks},
                  {"pressure_sign", "the pressure unknown is the negative of the physical pressure"}};
  side["velocity"] = {{"file", files.velocity.filename().string()},
                      {"matrix", boundary ? "S_boundary" : "S"},
                      {"dimension", boundary ? d.n_x_coupling : d.n_x},
                      {"blocks", velocity_blocks}};
  side["divergence"] = {{"file", files.divergence.filename().string()}, {"rows", d.n_q}, {"cols", d.n_x}};
  side["pressure_mass"] = {{"file", files.pressure_mass.filename().string()},
                           {"dimension", d.n_q},
                           {"scaling", "(1/nu) (p, q)"}};
  if (problem.regions.mean_zero_pressure)
    side["pressure_null_space"] =
        "pure Dirichlet boundary: constant pressures span the kernel of B^T; K is singular and solutions are "
        "fixed by a mean-zero pressure";
  else
    side["pressure_null_space"] = nullptr;
  std::ofstream os(files.sidecar);
  os << side.dump(2) << '\n';
  if (!os) throw std::runtime_error("cannot write " + files.sidecar.string());
  return files;
}

SparseMatrix read_matrix_market(const std::filesystem::path& path) {
  SparseMatrix A;
  if (!Eigen::loadMarket(A, path.string())) throw std::runtime_error("cannot read " + path.string());
  return A;
}

// ---------------------------------------------------------------- spectrum

std::vector<SpectrumRecord> run_spectrum(const RunConfig& config, std::ostream& csv) {
  csv << "k,level,composition,target,size,lambda_min,lambda_max,cond,steps,s_ritz_min\r\n";
  std::vector<SpectrumRecord> out;
  for (const RunConfig& c : sweep_entries(config)) {
    validate(c);
    const Problem problem = make_problem(problem_factory_name(c.problem), c.level, c.nu);
    const FeSystem fes(problem.mesh, problem.regions, c.k);
    const CondensedSystem cs(fes, c.nu, problem.force, c.threads);
    const VelocityPreconditioner vp(cs, preconditioner_options(c));
    const SparseMatrix& A = vp.inner_matrix();
    SpectrumRecord r;
    r.k = c.k;
    r.level = c.level;
    r.composition = c.composition;
    r.target = c.target;
    r.size = static_cast<int>(A.rows());
    r.preconditioned = lanczos_spectrum([&](const Eigen::VectorXd& v) { return Eigen::VectorXd(A * v); },
                                        [&](const Eigen::VectorXd& v) { return vp.inner().apply(v); }, r.size,
                                        c.lanczos_steps, c.seed);
    const SpectrumEstimate plain =
        lanczos_spectrum([&](const Eigen::VectorXd& v) { return Eigen::VectorXd(cs.S() * v); },
                         [](const Eigen::VectorXd& v) { return v; }, cs.n_x(), c.lanczos_steps, c.seed);
    r.s_ritz_min = plain.lambda_min;
    csv << r.k << ',' << r.level << ',' << to_string(r.composition) << ',' << to_string(r.target) << ',' << r.size
        << ',' << format_double(r.preconditioned.lambda_min) << ',' << format_double(r.preconditioned.lambda_max)
        << ',' << format_double(r.preconditioned.cond) << ',' << r.preconditioned.steps << ','
        << format_double(r.s_ritz_min) << "\r\n";
    out.push_back(r);
  }
  return out;
}

}  // namespace mcs
