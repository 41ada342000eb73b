#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "mcs/krylov.hpp"
#include "mcs/preconditioners.hpp"
#include "mcs/verification.hpp"

namespace mcs {

enum class SolveMode { Stokes, Elliptic };
SolveMode parse_mode(const std::string& name);
std::string to_string(SolveMode m);

/// Everything a run needs. Defaults are the values used when a TOML key is absent.
struct RunConfig {
  std::string problem = "channel";  // channel | cavity | manufactured | smooth
  SolveMode mode = SolveMode::Stokes;
  int k = 2;
  int level = 0;
  double nu = 1e-3;

  Composition composition = Composition::Multiplicative;
  Target target = Target::Condensed;
  SmootherVariant smoother = SmootherVariant::GaussSeidel;
  int smoother_steps = 1;
  double penalty = 4.0;

  double rtol = 1e-6;
  int maxit = 500;
  bool spectrum = false;
  int lanczos_steps = 60;

  unsigned seed = 1;
  int threads = 1;

  /// Study sweep: every (k, level) pair for every composition and target listed. Empty
  /// lists on the pair axes give an empty sweep.
  std::vector<int> study_degrees{2};
  std::vector<int> study_levels{0};
  std::vector<Composition> study_compositions{Composition::Multiplicative};
  std::vector<Target> study_targets{Target::Condensed};

  std::filesystem::path output_dir = "out";
  bool write_residuals = false;
  bool write_solution = false;
};

/// Throws ConfigError when an invariant of the configuration is violated.
void validate(const RunConfig& config);

/// Parses TOML text; unknown keys and wrongly typed values are errors. The result is validated.
RunConfig parse_config(const std::string& toml_text);
RunConfig load_config(const std::filesystem::path& path);

/// One solve. Spectral fields are set only when requested.
struct RunRecord {
  std::string problem;
  int k = 0, level = 0;
  Composition composition = Composition::Multiplicative;
  Target target = Target::Condensed;
  int elements = 0;
  int dofs = 0;  // free velocity plus pressure dofs (velocity only in elliptic mode)
  int iterations = 0;
  double t_tot = 0.0, t_sup = 0.0, t_sol = 0.0;
  bool converged = false;
  std::optional<double> lambda_min, lambda_max, cond;
  bool residual_monotone = true;
  StructureChecks structure;
  std::string error;  // set when the run threw
};

/// Column names of the study CSV, in output order.
const std::vector<std::string>& record_columns();
void write_record_csv_header(std::ostream& os);
void write_record_csv_row(std::ostream& os, const RunRecord& r);

/// Full solution of a run, in condensed ordering plus recovered fields.
struct RunSolution {
  Eigen::VectorXd x;         // free velocity dofs
  Eigen::VectorXd pressure;  // physical pressure (mean-zero when required); empty in elliptic mode
  Eigen::VectorXd u, uhat, sigma, omega;
  std::vector<double> residuals;
};

/// Assemble, condense, precondition, solve with GMRES, recover the stresses and run the
/// structural checks. Writes residuals and solution to the output directory when asked.
RunRecord run_solve(const RunConfig& config, RunSolution* solution = nullptr);

/// One record per sweep entry; a failing entry records its error and the sweep continues.
std::vector<RunRecord> run_study(const RunConfig& config, std::ostream& csv);

/// Names of the verification suites.
const std::vector<std::string>& verification_suites();
/// Runs a suite, writing each report as <dir>/<experiment>.csv and .txt plus a summary to
/// `log`. Returns whether every hard assertion passed. Throws ConfigError for unknown suites.
bool run_verification(const std::string& suite, const RunConfig& config, std::ostream& log);

/// Files written by export_system.
struct ExportedFiles {
  std::filesystem::path full, velocity, divergence, pressure_mass, sidecar;
};

/// Writes K (blocks sigma, omega, velocity, pressure), S or S_boundary (by target), B and
/// M_p in MatrixMarket coordinate format, plus a JSON sidecar with block offsets.
ExportedFiles export_system(const RunConfig& config, const std::filesystem::path& dir);

SparseMatrix read_matrix_market(const std::filesystem::path& path);

/// Lanczos estimate of the preconditioned target matrix and the smallest Ritz value of the
/// unpreconditioned S against the identity, for every entry of the study sweep.
struct SpectrumRecord {
  int k = 0, level = 0;
  Composition composition = Composition::Multiplicative;
  Target target = Target::Condensed;
  int size = 0;
  SpectrumEstimate preconditioned;
  double s_ritz_min = 0.0;  // smallest Ritz value of S (positivity check)
};
std::vector<SpectrumRecord> run_spectrum(const RunConfig& config, std::ostream& csv);

}  // namespace mcs
