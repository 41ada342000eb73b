#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "mcs/driver.hpp"
#include "mcs/mesh.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<int> threads;
  std::optional<std::string> out;
  std::optional<unsigned> seed;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "TOML configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--threads", flags.threads, "worker threads for assembly and smoothing (1 = reproducible)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--seed", flags.seed, "seed for Lanczos start vectors, power iterations and random fields");
}

mcs::RunConfig resolve(const CommonFlags& flags) {
  mcs::RunConfig c = flags.config.empty() ? mcs::RunConfig{} : mcs::load_config(flags.config);
  if (flags.threads) c.threads = *flags.threads;
  if (flags.out) c.output_dir = *flags.out;
  if (flags.seed) c.seed = *flags.seed;
  mcs::validate(c);
  return c;
}

std::ofstream open_output(const mcs::RunConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.output_dir);
  std::ofstream os(c.output_dir / name, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + (c.output_dir / name).string());
  return os;
}

int cmd_solve(const mcs::RunConfig& c) {
  const mcs::RunRecord r = mcs::run_solve(c);
  std::ostringstream table;
  mcs::write_record_csv_header(table);
  mcs::write_record_csv_row(table, r);
  open_output(c, "run.csv") << table.str();
  std::cout << table.str();
  if (!r.converged) {
    std::cerr << "GMRES did not reach rtol " << c.rtol << " within " << c.maxit << " iterations\n";
    return 1;
  }
  return 0;
}

int cmd_study(const mcs::RunConfig& c) {
  std::ostringstream table;
  const auto records = mcs::run_study(c, table);
  open_output(c, "study.csv") << table.str();
  std::cout << table.str();
  int failed = 0;
  for (const auto& r : records) failed += !r.error.empty() || !r.converged;
  if (failed) std::cerr << failed << " of " << records.size() << " runs failed or did not converge\n";
  return failed ? 1 : 0;
}

int cmd_verify(const mcs::RunConfig& c, const std::string& suite) {
  std::vector<std::string> suites = {suite};
  if (suite == "all") suites = mcs::verification_suites();
  bool ok = true;
  for (const auto& s : suites) ok &= mcs::run_verification(s, c, std::cout);
  return ok ? 0 : 1;
}

int cmd_export(const mcs::RunConfig& c) {
  const mcs::ExportedFiles f = mcs::export_system(c, c.output_dir);
  for (const auto& p : {f.full, f.velocity, f.divergence, f.pressure_mass, f.sidecar}) std::cout << p.string() << '\n';
  return 0;
}

int cmd_spectrum(const mcs::RunConfig& c) {
  std::ostringstream table;
  const auto records = mcs::run_spectrum(c, table);
  open_output(c, "spectrum.csv") << table.str();
  std::cout << table.str();
  for (const auto& r : records)
    if (!(r.s_ritz_min > 0.0) || !(r.preconditioned.lambda_min > 0.0)) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mass conserving mixed stress Stokes solver with auxiliary space preconditioning"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::string suite;
  CLI::App* solve = app.add_subcommand("solve", "solve one configuration and write run.csv");
  CLI::App* study = app.add_subcommand("study", "run the configured sweep and write study.csv");
  CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
  CLI::App* exporter = app.add_subcommand("export", "write the system matrices in MatrixMarket format");
  CLI::App* spectrum = app.add_subcommand("spectrum", "Lanczos spectra of the preconditioned operator");
  for (CLI::App* cmd : {solve, study, verify, exporter, spectrum}) add_common(cmd, flags);
  verify->add_option("--suite", suite, "identities | constants | all")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const mcs::RunConfig c = resolve(flags);
    if (*solve) return cmd_solve(c);
    if (*study) return cmd_study(c);
    if (*verify) return cmd_verify(c, suite);
    if (*exporter) return cmd_export(c);
    if (*spectrum) return cmd_spectrum(c);
  } catch (const mcs::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
