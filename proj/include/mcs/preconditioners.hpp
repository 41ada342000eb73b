#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "mcs/condensation.hpp"
#include "mcs/linear_map.hpp"

namespace mcs {

/// Matrix of the embedding of continuous P1 velocities (free V̄ dofs) into the condensed x
/// space: normal facet moments, tangential facet moments and the L2 bubble fit.
/// Tangential facet dofs on tilde-Neumann facets are constrained in x and therefore absent.
/// The leading n_x_coupling rows form the embedding into the double Schur complement space.
SparseMatrix build_embedding(const FeSystem& fes);

/// nu (eps(u), eps(v)) on continuous P1 plus nu C k^2 / h (u_t, v_t) on tilde-Neumann facets,
/// over free V̄ dofs.
SparseMatrix assemble_coarse_matrix(const FeSystem& fes, double nu, double penalty);

/// Sparse Cholesky of the coarse matrix, optionally scaled by a factor >= 1.
class CoarseSolver {
 public:
  CoarseSolver(SparseMatrix matrix);
  Eigen::VectorXd solve(const Eigen::VectorXd& r) const;
  const SparseMatrix& matrix() const { return matrix_; }
  /// The solver then inverts scale * matrix.
  void set_scale(double s) { scale_ = s; }
  double scale() const { return scale_; }

 private:
  SparseMatrix matrix_;
  Eigen::SimplicialLDLT<SparseMatrix> factor_;
  double scale_ = 1.0;
};

enum class SmootherVariant { Jacobi, GaussSeidel, L1Jacobi };
SmootherVariant parse_smoother(const std::string& name);
std::string to_string(SmootherVariant v);

/// One block per free facet: its normal moments and tangential facet dofs.
std::vector<std::vector<int>> facet_blocks(const FeSystem& fes);
/// One block per free facet: all free dofs of the facet and of its incident elements.
/// Bubbles of elements without a free facet get an extra block per element.
std::vector<std::vector<int>> overlapping_blocks(const FeSystem& fes);

/// Block smoother for a symmetric positive definite matrix.
class BlockSmoother {
 public:
  BlockSmoother(const SparseMatrix& A, std::vector<std::vector<int>> blocks, SmootherVariant variant, int steps,
                int threads = 1);

  /// `steps` smoothing steps for A x = b starting from x. Gauss-Seidel runs the blocks in
  /// reverse order when `backward` is set, giving the adjoint sweep.
  void smooth(const Eigen::VectorXd& b, Eigen::VectorXd& x, bool backward) const;
  /// Symmetric M^{-1} r: Jacobi-type steps, or a forward and a backward Gauss-Seidel sweep.
  Eigen::VectorXd apply(const Eigen::VectorXd& r) const;
  /// Largest eigenvalue of M^{-1} A by power iteration (Rayleigh quotient in the A inner product).
  double estimate_lambda_max(int iterations, unsigned seed) const;

  /// Multiplies every Jacobi-type correction by `d`.
  void set_damping(double d) { damping_ = d; }
  double damping() const { return damping_; }
  SmootherVariant variant() const { return variant_; }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }

 private:
  Eigen::VectorXd jacobi_correction(const Eigen::VectorXd& r) const;

  const SparseMatrix* A_;
  std::vector<std::vector<int>> blocks_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors_;
  SmootherVariant variant_;
  int steps_;
  double damping_ = 1.0;
};

enum class Composition { Additive, Multiplicative };
Composition parse_composition(const std::string& name);
std::string to_string(Composition c);

/// Smoother plus embedded coarse correction for an SPD matrix A.
class AuxiliarySpacePreconditioner {
 public:
  AuxiliarySpacePreconditioner(const SparseMatrix& A, SparseMatrix embedding, std::shared_ptr<const CoarseSolver> coarse,
                               std::shared_ptr<const BlockSmoother> smoother, Composition composition);

  Eigen::VectorXd apply(const Eigen::VectorXd& r) const;
  /// E C^{-1} E^T r.
  Eigen::VectorXd coarse_correction(const Eigen::VectorXd& r) const;
  const SparseMatrix& embedding() const { return embedding_; }
  Composition composition() const { return composition_; }

 private:
  const SparseMatrix* A_;
  SparseMatrix embedding_;
  std::shared_ptr<const CoarseSolver> coarse_;
  std::shared_ptr<const BlockSmoother> smoother_;
  Composition composition_;
};

/// Preconditioner for S built from a preconditioner of the double Schur complement and the
/// exact bubble factors.
Eigen::VectorXd apply_extended(const CondensedSystem& cs, const LinearMap& boundary_inverse, const Eigen::VectorXd& r);

enum class Target { Full, Condensed };
Target parse_target(const std::string& name);
std::string to_string(Target t);

struct VelocityPreconditionerOptions {
  Composition composition = Composition::Multiplicative;
  Target target = Target::Condensed;
  SmootherVariant smoother = SmootherVariant::GaussSeidel;
  int steps = 1;
  double penalty = 4.0;
  int power_iterations = 20;
  /// Safety factor on power-iteration estimates used for scaling.
  double safety = 1.05;
  unsigned seed = 1;
  int threads = 1;
};

/// Approximate inverse of S on the condensed x space.
class VelocityPreconditioner {
 public:
  VelocityPreconditioner(const CondensedSystem& cs, const VelocityPreconditionerOptions& options);

  Eigen::VectorXd apply(const Eigen::VectorXd& r) const;
  /// The preconditioner of the matrix the auxiliary space method acts on (S or S_boundary).
  const AuxiliarySpacePreconditioner& inner() const { return *asp_; }
  const SparseMatrix& inner_matrix() const;
  const CoarseSolver& coarse() const { return *coarse_; }
  const BlockSmoother& smoother() const { return *smoother_; }
  int applications() const { return applications_; }

 private:
  const CondensedSystem* cs_;
  VelocityPreconditionerOptions options_;
  std::shared_ptr<CoarseSolver> coarse_;
  std::shared_ptr<BlockSmoother> smoother_;
  std::unique_ptr<AuxiliarySpacePreconditioner> asp_;
  mutable int applications_ = 0;
};

/// Block-diagonal pressure mass (1/nu)(p, q) and its inverse.
class PressureMass {
 public:
  PressureMass(const FeSystem& fes, double nu);
  Eigen::VectorXd apply(const Eigen::VectorXd& p) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& r) const;
  SparseMatrix matrix() const;
  int solves() const { return solves_; }

 private:
  int block_ = 0;
  std::vector<Eigen::MatrixXd> blocks_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors_;
  mutable int solves_ = 0;
};

/// Block triangular preconditioner for [[S, B^T], [B, 0]] acting on (r_u, r_p), with two
/// velocity solves per application:
///   y = Ŝ^{-1} r_u,  z_p = -M_p^{-1}(r_p - B y),  z_u = y - Ŝ^{-1} B^T z_p.
class SaddlePreconditioner {
 public:
  SaddlePreconditioner(const SparseMatrix& B, LinearMap velocity_inverse, LinearMap pressure_inverse);
  Eigen::VectorXd apply(const Eigen::VectorXd& r) const;

 private:
  const SparseMatrix* B_;
  LinearMap velocity_inverse_, pressure_inverse_;
};

}  // namespace mcs
