#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "doctest.h"
#include "json.hpp"
#include "mcs/driver.hpp"
#include "mcs/problems.hpp"

using namespace mcs;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mcs_test_driver_" + std::to_string(getpid())) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string error_of(const std::string& toml) {
  try {
    parse_config(toml);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  const RunConfig defaults = parse_config("");
  CHECK(defaults.problem == "channel");
  CHECK(defaults.k == 2);
  CHECK(defaults.rtol == 1e-6);
  CHECK(defaults.nu == 1e-3);
  CHECK(defaults.study_degrees == std::vector<int>{2});

  const RunConfig c = parse_config(R"(
problem = "cavity"
mode = "elliptic"
k = 3
level = 1
nu = 1
seed = 9
[preconditioner]
composition = "additive"
target = "full"
smoother = "jacobi"
steps = 2
penalty = 8.5
[solver]
rtol = 1e-9
maxit = 77
spectrum = true
[study]
degrees = [2, 3]
levels = []
[output]
dir = "results"
residuals = true
)");
  CHECK(c.problem == "cavity");
  CHECK(c.mode == SolveMode::Elliptic);
  CHECK(c.k == 3);
  CHECK(c.nu == 1.0);
  CHECK(c.seed == 9u);
  CHECK(c.composition == Composition::Additive);
  CHECK(c.target == Target::Full);
  CHECK(c.smoother == SmootherVariant::Jacobi);
  CHECK(c.smoother_steps == 2);
  CHECK(c.penalty == 8.5);
  CHECK(c.rtol == 1e-9);
  CHECK(c.maxit == 77);
  CHECK(c.spectrum);
  CHECK(c.study_degrees == std::vector<int>{2, 3});
  CHECK(c.study_levels.empty());
  CHECK(c.study_compositions == std::vector<Composition>{Composition::Additive});
  CHECK(c.output_dir == "results");
  CHECK(c.write_residuals);

  const std::string lowest = error_of("k = 1");
  CHECK(lowest.find("k >= 2") != std::string::npos);
  CHECK(lowest.find("lowest-order") != std::string::npos);
  CHECK(error_of("[study]\ndegrees = [2, 1]").find("lowest-order") != std::string::npos);
  CHECK(error_of("[solver]\nrtol = 1.0").find("rtol") != std::string::npos);
  CHECK(error_of("[solver]\nrtol = 0").find("rtol") != std::string::npos);
  CHECK(error_of("nu = -1").find("nu") != std::string::npos);
  CHECK(error_of("problem = \"pipe\"").find("unknown problem") != std::string::npos);
  CHECK(error_of("[preconditioner]\nsmoother = \"sor\"") != "");
  CHECK(error_of("viscosity = 1").find("unknown key 'viscosity'") != std::string::npos);
  CHECK(error_of("[solver]\nmaxit = 1.5").find("integer") != std::string::npos);
  CHECK(error_of("k = \"two\"").find("integer") != std::string::npos);
  CHECK(error_of("k = ").find("TOML") != std::string::npos);
  CHECK(error_of("solver = 3").find("table") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/config.toml"), ConfigError);
}

TEST_CASE("study CSV schema") {
  std::ostringstream header;
  write_record_csv_header(header);
  const std::string h = header.str();
  CHECK(h.substr(h.size() - 2) == "\r\n");
  const auto cols = split_line(h.substr(0, h.size() - 2));
  CHECK(cols == record_columns());
  // the study table columns keep their order
  const auto pos = [&](const std::string& n) { return std::find(cols.begin(), cols.end(), n) - cols.begin(); };
  CHECK(pos("elements") < pos("dofs"));
  CHECK(pos("dofs") < pos("iterations"));
  CHECK(pos("iterations") < pos("t_tot"));
  CHECK(pos("t_tot") < pos("t_sup"));
  CHECK(pos("t_sup") < pos("t_sol"));

  RunConfig empty = parse_config("[study]\nlevels = []");
  std::ostringstream csv;
  CHECK(run_study(empty, csv).empty());
  CHECK(csv.str() == h);

  RunRecord r;
  r.problem = "a,\"b\"";
  r.error = "line\nbreak";
  std::ostringstream row;
  write_record_csv_row(row, r);
  CHECK(row.str().rfind("\"a,\"\"b\"\"\",", 0) == 0);
  CHECK(row.str().find("\"line\nbreak\"") != std::string::npos);
}

TEST_CASE("solve records") {
  RunConfig c = parse_config("[solver]\nrtol = 1e-12\nspectrum = true");
  RunSolution sol;
  const RunRecord r = run_solve(c, &sol);
  const Problem p = make_channel(0);
  CHECK(r.elements == p.mesh.num_elements());
  CHECK(r.converged);
  CHECK(r.iterations <= c.maxit);
  CHECK(r.residual_monotone);
  CHECK(r.t_tot >= r.t_sup + r.t_sol);
  CHECK(r.structure.divergence_scaled() <= 1e-9);
  CHECK(r.structure.nt_jump_scaled() <= 1e-9);
  REQUIRE(r.cond);
  CHECK(*r.lambda_min > 0.0);
  CHECK(*r.cond >= 1.0);
  CHECK(sol.x.size() + sol.pressure.size() == r.dofs);
  CHECK(sol.residuals.size() == static_cast<size_t>(r.iterations) + 1);

  // identical configuration: identical iteration count and bitwise identical iterate
  RunSolution again;
  const RunRecord r2 = run_solve(c, &again);
  CHECK(r2.iterations == r.iterations);
  CHECK(again.x == sol.x);
  CHECK(*r2.cond == *r.cond);

  c.maxit = 2;
  c.spectrum = false;
  const RunRecord capped = run_solve(c);
  CHECK_FALSE(capped.converged);
  CHECK(capped.iterations == 2);

  RunConfig el = parse_config("mode = \"elliptic\"\n[solver]\nrtol = 1e-8");
  RunSolution esol;
  const RunRecord e = run_solve(el, &esol);
  CHECK(e.converged);
  CHECK(e.dofs == esol.x.size());
  CHECK(esol.pressure.size() == 0);
}

TEST_CASE("polynomial manufactured solution through the driver") {
  RunConfig c = parse_config("problem = \"manufactured\"\nnu = 1\n[solver]\nrtol = 1e-13\nmaxit = 800");
  RunSolution sol;
  const RunRecord r = run_solve(c, &sol);
  CHECK(r.converged);
  const Problem p = make_polynomial_solution(0, 1.0);
  const FeSystem fes(p.mesh, p.regions, 2);
  const SolutionErrors err = solution_errors(fes, p, 1.0, sol.u, sol.pressure, sol.sigma);
  CHECK(err.velocity_l2 < 1e-8);
  CHECK(err.pressure_l2 < 1e-8);
  CHECK(err.stress < 1e-8);
}

TEST_CASE("residual and solution files") {
  const auto dir = scratch_dir("files");
  RunConfig c = parse_config("[output]\nresiduals = true\nsolution = true");
  c.output_dir = dir;
  const RunRecord r = run_solve(c);
  std::ifstream in(dir / "residuals.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "iteration,relative_residual\r");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == r.iterations + 1);
  for (const char* f : {"u.mtx", "uhat.mtx", "sigma.mtx", "omega.mtx", "pressure.mtx"})
    CHECK(std::filesystem::exists(dir / f));
}

TEST_CASE("matrix export") {
  const auto dir = scratch_dir("export");
  SUBCASE("channel") {
    const ExportedFiles f = export_system(parse_config("[preconditioner]\ntarget = \"full\""), dir);
    const Problem p = make_channel(0);
    const FeSystem fes(p.mesh, p.regions, 2);
    const CondensedSystem cs(fes, 1e-3, p.force);
    const SparseMatrix S = read_matrix_market(f.velocity);
    CHECK(f.velocity.filename() == "S.mtx");
    CHECK(S.rows() == cs.S().rows());
    CHECK((Eigen::MatrixXd(S) - Eigen::MatrixXd(cs.S())).cwiseAbs().maxCoeff() == 0.0);
    const SparseMatrix B = read_matrix_market(f.divergence);
    CHECK((Eigen::MatrixXd(B) - Eigen::MatrixXd(cs.B())).cwiseAbs().maxCoeff() == 0.0);

    std::ifstream in(f.sidecar);
    const auto side = nlohmann::json::parse(in);
    const SparseMatrix K = read_matrix_market(f.full);
    int total = 0, expected_offset = 0;
    for (const auto& b : side["full"]["blocks"]) {
      CHECK(b["offset"].get<int>() == expected_offset);
      expected_offset += b["size"].get<int>();
      total += b["size"].get<int>();
    }
    CHECK(total == side["full"]["dimension"].get<int>());
    CHECK(total == K.rows());
    int vtotal = 0;
    for (const auto& b : side["velocity"]["blocks"]) vtotal += b["size"].get<int>();
    CHECK(vtotal == S.rows());
    CHECK(side["pressure_null_space"].is_null());
    const Eigen::MatrixXd Kd(K);
    CHECK((Kd - Kd.transpose()).cwiseAbs().maxCoeff() <= 1e-13 * Kd.cwiseAbs().maxCoeff());
  }
  SUBCASE("pure Dirichlet cavity, double Schur complement") {
    const ExportedFiles f = export_system(parse_config("problem = \"cavity\""), dir);
    CHECK(f.velocity.filename() == "S_boundary.mtx");
    std::ifstream in(f.sidecar);
    const auto side = nlohmann::json::parse(in);
    CHECK(side["pressure_null_space"].is_string());
    const SparseMatrix Sb = read_matrix_market(f.velocity);
    int vtotal = 0;
    for (const auto& b : side["velocity"]["blocks"]) vtotal += b["size"].get<int>();
    CHECK(vtotal == Sb.rows());
    const Problem p = make_cavity(0);
    const FeSystem fes(p.mesh, p.regions, 2);
    const CondensedSystem cs(fes, 1e-3, p.force);
    CHECK((Eigen::MatrixXd(Sb) - Eigen::MatrixXd(cs.S_boundary())).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS(read_matrix_market(dir / "missing.mtx"));
}

TEST_CASE("verification suite selection") {
  RunConfig c;
  c.output_dir = scratch_dir("verify");
  std::ostringstream log;
  CHECK_THROWS_AS(run_verification("everything", c, log), ConfigError);
  CHECK(run_verification("identities", c, log));
  CHECK(log.str().find("PASS exact identities") != std::string::npos);
  CHECK(std::filesystem::exists(c.output_dir / "identities" / "exact_identities.csv"));
}

TEST_CASE("spectrum sweep") {
  RunConfig c = parse_config("[study]\nlevels = [0]\ncompositions = [\"additive\", \"multiplicative\"]");
  std::ostringstream csv;
  const auto recs = run_spectrum(c, csv);
  REQUIRE(recs.size() == 2);
  for (const auto& r : recs) {
    CHECK(r.s_ritz_min > 0.0);
    CHECK(r.preconditioned.lambda_min > 0.0);
  }
  // multiplicative Ritz values lie below one
  CHECK(recs[1].preconditioned.lambda_max <= 1.0 + 1e-8);
  std::string header;
  std::istringstream in(csv.str());
  std::getline(in, header);
  CHECK(header == "k,level,composition,target,size,lambda_min,lambda_max,cond,steps,s_ritz_min\r");
}
