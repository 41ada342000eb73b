#pragma once

#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mcs/condensation.hpp"
#include "mcs/norms.hpp"

namespace mcs {

/// Table of measured constants. Hard assertion failures go to `failures`; observations
/// that are reported but not asserted go to `notes`.
struct ConstantReport {
  struct Row {
    std::string label;
    std::vector<double> values;
  };
  std::string experiment;
  std::string method;
  std::vector<std::string> columns;  // names of the numeric values of each row
  std::vector<Row> rows;
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  bool passed() const { return failures.empty(); }
  void add_row(std::string label, std::vector<double> values) { rows.push_back({std::move(label), std::move(values)}); }
  /// Column by name over all rows.
  std::vector<double> column(const std::string& name) const;
  /// Values of the row with the given label; throws if absent.
  const std::vector<double>& row(const std::string& label) const;
  void write_csv(std::ostream& os) const;
  void write_text(std::ostream& os) const;
};

/// Least squares exponent l in y = c * (log x)^l.
double fit_log_power(const std::vector<double>& x, const std::vector<double>& y);

/// Pointwise structure of a computed solution.
struct StructureChecks {
  double divergence_max = 0.0;  // max |div u_h| over volume quadrature points
  double gradient_max = 0.0;    // max |grad u_h| entry, the scale of the divergence
  double nt_jump_max = 0.0;     // max jump of (sigma_h)_nt over interior facet points
  double nt_max = 0.0;          // max |(sigma_h)_nt|, the scale of the jump
  double divergence_scaled() const { return gradient_max > 0.0 ? divergence_max / gradient_max : divergence_max; }
  double nt_jump_scaled() const { return nt_max > 0.0 ? nt_jump_max / nt_max : nt_jump_max; }
};

StructureChecks check_solution_structure(const CondensedSystem& cs, const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& sigma);

/// Brute-force comparison of the condensed system against the full saddle point system.
struct DenseOracleResult {
  double schur_error = 0.0;           // max |S - dense Schur| / max |dense Schur|
  double boundary_schur_error = 0.0;  // same for S_boundary
  double solution_error = 0.0;        // max over (u, û, p, sigma, omega), relative to max |solution|
};

DenseOracleResult dense_oracle_check(const FeSystem& fes, double nu, const VectorField& force);

/// Element-wise vector polynomials of degree k; row 2t + c holds the Dubiner coefficients
/// of component c on element t.
struct BrokenField {
  int degree = 0;
  Eigen::MatrixXd coefficients;
  Vec2 value(const Mesh& mesh, int t, const Vec2& x) const;
  Mat2 gradient(const Mesh& mesh, int t, const Vec2& x) const;
};

BrokenField random_broken_field(const Mesh& mesh, int degree, std::mt19937& rng);
/// Broken field whose pieces are the restrictions of a global vector field (L2 fit).
BrokenField broken_from_field(const Mesh& mesh, int degree, const VectorField& field);

/// Vertex values of the averaging interpolant: the mean of the element traces at each
/// vertex. Vertices flagged in `zeroed` are set to zero afterwards.
std::vector<Vec2> interp_nodal_average(const Mesh& mesh, const BrokenField& u, const std::vector<char>& zeroed = {});

/// Vertices on the closure of the Dirichlet boundary.
std::vector<char> dirichlet_vertices(const Mesh& mesh, const BoundaryRegions& regions);

/// The two sides of the interpolation estimate as vectors whose squared norms are
///   lhs: sum_T h^{-2} ||u - I u||_T^2 + ||grad(u - I u)||_T^2,
///   rhs: sum_T ||eps(u)||_T^2 + sum_F h^{-1} ||Pi^R_F [u]||_F^2.
/// Without `regions` the facet sum runs over interior facets and I averages only; with it,
/// Dirichlet vertices are zeroed and the Dirichlet facets (where [u] = u) join the sum.
struct InterpolationTerms {
  Eigen::VectorXd lhs, rhs;
};
InterpolationTerms interpolation_terms(const Mesh& mesh, const BrokenField& u, const BoundaryRegions* regions = nullptr);

/// Sampled and exact (generalized eigenvalue) maxima of lhs / rhs per mesh.
ConstantReport check_interp_bound(const std::vector<Mesh>& meshes, int k, int samples, unsigned seed,
                                  bool with_boundary);

/// Facet trace norms on the reference triangle for data (normal moments of u on facet F,
/// û on F), as quadratic forms:
///   free_form: inf over w in P^k(T) with w_n = u_n on F of ||eps(w)||^2 + ||Pi(w - û)_t||_{j,F}^2
///   zero_form: additionally w_n = 0 on the other facets plus their ||Pi w_t||_{j}^2 terms.
/// `rigid_constraint` (3 x data) holds the L2(F) moments of u_n n + û t against rigid modes.
struct TraceNormForms {
  Eigen::MatrixXd free_form, zero_form, rigid_constraint;
};
TraceNormForms trace_norm_forms(int k, int facet, JumpNorm jump = JumpNorm::Dual);

/// Both trace norms of one data vector by solving the constrained minimizations through
/// their KKT systems.
std::pair<double, double> trace_norms(int k, int facet, const Eigen::VectorXd& u_normal, const Eigen::VectorXd& uhat,
                                      JumpNorm jump = JumpNorm::Dual);

/// Largest ratio zero_form / free_form over data with vanishing rigid moments.
double trace_ratio(int k, int facet, JumpNorm jump = JumpNorm::Dual);
ConstantReport estimate_trace_ratio(const std::vector<int>& degrees, JumpNorm jump = JumpNorm::Dual);

/// Largest generalized eigenvalue of nu ||.||^2_{eps,h,boundary} against ||.||^2_{S_boundary}
/// on the reference triangle without essential boundary, rigid modes deflated.
double gamma_constant(int k, double nu, JumpNorm jump = JumpNorm::Dual);
ConstantReport estimate_gamma(const std::vector<int>& degrees, const std::vector<double>& viscosities,
                              JumpNorm jump = JumpNorm::Dual);

/// Eigenvalues of M_p^{-1} B S^{-1} B^T (M_p the 1/nu-scaled pressure mass) on the unit
/// square with no-slip boundary; the constant pressure mode is excluded.
struct InfSupResult {
  double lambda_min = 0.0, lambda_max = 0.0;
  int zero_modes = 0;
  int elements = 0;
};
InfSupResult infsup_spectrum(int level, int k, double nu);
ConstantReport estimate_infsup(const std::vector<int>& levels, int k, double nu);

/// Identities and equivalence ratios on random fields of `fes`.
ConstantReport check_norm_equivalences(const FeSystem& fes, double nu, int samples, unsigned seed);

}  // namespace mcs
