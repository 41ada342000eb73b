#include "mcs/krylov.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace mcs {

Eigen::VectorXd gmres(const LinearMap& A, const LinearMap& preconditioner, const Eigen::VectorXd& b,
                      const GmresOptions& options, KrylovReport& report) {
  const int n = static_cast<int>(b.size());
  report = KrylovReport{};
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  report.residuals.push_back(bnorm > 0.0 ? 1.0 : 0.0);
  if (bnorm == 0.0) {
    report.converged = true;
    return x;
  }
  auto precondition = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd z = preconditioner ? preconditioner(v) : v;
    if (options.project) options.project(z);
    return z;
  };

  const int m = std::min(options.maxit, n);
  std::vector<Eigen::VectorXd> V;
  V.reserve(m + 1);
  V.push_back(b / bnorm);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  Eigen::VectorXd cs = Eigen::VectorXd::Zero(m), sn = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
  g[0] = bnorm;
  int j = 0;
  for (; j < m; ++j) {
    Eigen::VectorXd w = A(precondition(V[j]));
    const double wnorm = w.norm();
    for (int i = 0; i <= j; ++i) {
      H(i, j) = w.dot(V[i]);
      w -= H(i, j) * V[i];
    }
    // one reorthogonalization pass when cancellation was severe
    if (w.norm() < 0.7 * wnorm) {
      for (int i = 0; i <= j; ++i) {
        const double c = w.dot(V[i]);
        H(i, j) += c;
        w -= c * V[i];
      }
    }
    H(j + 1, j) = w.norm();
    for (int i = 0; i < j; ++i) {
      const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
      H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
      H(i, j) = t;
    }
    const double r = std::hypot(H(j, j), H(j + 1, j));
    const double hnext = H(j + 1, j);
    cs[j] = H(j, j) / r;
    sn[j] = H(j + 1, j) / r;
    H(j, j) = r;
    H(j + 1, j) = 0.0;
    g[j + 1] = -sn[j] * g[j];
    g[j] = cs[j] * g[j];
    const double rel = std::abs(g[j + 1]) / bnorm;
    if (!std::isfinite(rel)) throw std::runtime_error("GMRES: non-finite residual");
    report.residuals.push_back(rel);
    report.iterations = j + 1;
    const bool happy = hnext <= 1e-14 * wnorm;
    if (rel <= options.rtol || happy) {
      report.converged = true;
      ++j;
      break;
    }
    V.push_back(w / hnext);
  }
  const int k = j;
  const Eigen::VectorXd y =
      H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
  Eigen::VectorXd comb = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < k; ++i) comb += y[i] * V[i];
  x = precondition(comb);
  return x;
}

Eigen::VectorXd cg(const LinearMap& A, const LinearMap& preconditioner, const Eigen::VectorXd& b, double rtol,
                   int maxit, KrylovReport& report) {
  report = KrylovReport{};
  const int n = static_cast<int>(b.size());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  report.residuals.push_back(bnorm > 0.0 ? 1.0 : 0.0);
  if (bnorm == 0.0) {
    report.converged = true;
    return x;
  }
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = preconditioner ? preconditioner(r) : r;
  double rz = r.dot(z);
  if (!(rz > 0.0)) {
    report.negative_curvature = true;
    return x;
  }
  Eigen::VectorXd p = z;
  for (int it = 0; it < maxit; ++it) {
    const Eigen::VectorXd Ap = A(p);
    const double curvature = p.dot(Ap);
    if (!(curvature > 0.0)) {
      report.negative_curvature = true;
      break;
    }
    const double alpha = rz / curvature;
    x += alpha * p;
    r -= alpha * Ap;
    const double rel = r.norm() / bnorm;
    if (!std::isfinite(rel)) throw std::runtime_error("CG: non-finite residual");
    report.residuals.push_back(rel);
    report.iterations = it + 1;
    if (rel <= rtol) {
      report.converged = true;
      break;
    }
    z = preconditioner ? preconditioner(r) : r;
    const double rz_new = r.dot(z);
    if (!(rz_new > 0.0)) {
      report.negative_curvature = true;
      break;
    }
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return x;
}

SpectrumEstimate lanczos_spectrum(const LinearMap& A, const LinearMap& P, int n, int steps, unsigned seed) {
  SpectrumEstimate est;
  steps = std::min(steps, n);
  if (steps <= 0) return est;
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  auto random_vector = [&] {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
  };
  // primal vectors v_i and their duals u_i = P^{-1} v_i, orthonormal in <x, y> = x^T P^{-1} y
  std::vector<Eigen::VectorXd> V, U;
  std::vector<double> alpha, beta;
  auto orthogonalize = [&](Eigen::VectorXd& r) {
    for (int pass = 0; pass < 2; ++pass)
      for (size_t i = 0; i < V.size(); ++i) r -= r.dot(V[i]) * U[i];
  };
  auto start = [&](Eigen::VectorXd r) -> bool {
    orthogonalize(r);
    const Eigen::VectorXd s = P(r);
    const double nrm2 = r.dot(s);
    if (!(nrm2 > 0.0)) return false;
    const double nrm = std::sqrt(nrm2);
    U.push_back(r / nrm);
    V.push_back(s / nrm);
    return true;
  };
  if (!start(random_vector())) throw std::runtime_error("Lanczos: preconditioner not positive definite");
  double scale = 0.0;
  while (static_cast<int>(V.size()) <= steps) {
    const size_t j = V.size() - 1;
    Eigen::VectorXd r = A(V[j]);
    const double a = V[j].dot(r);
    alpha.push_back(a);
    scale = std::max(scale, std::abs(a));
    r -= a * U[j];
    if (j > 0) r -= beta[j - 1] * U[j - 1];
    orthogonalize(r);
    if (static_cast<int>(V.size()) == steps) break;
    const Eigen::VectorXd s = P(r);
    const double b2 = r.dot(s);
    if (!std::isfinite(b2)) throw std::runtime_error("Lanczos: non-finite value");
    if (b2 <= (1e-24 * scale * scale)) {
      if (est.restarts >= 3 || !start(random_vector())) break;
      ++est.restarts;
      beta.push_back(0.0);
      continue;
    }
    const double b = std::sqrt(b2);
    beta.push_back(b);
    U.push_back(r / b);
    V.push_back(s / b);
  }
  const int m = static_cast<int>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    T(i, i) = alpha[i];
    if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
  est.lambda_min = es.eigenvalues().minCoeff();
  est.lambda_max = es.eigenvalues().maxCoeff();
  est.cond = est.lambda_max / est.lambda_min;
  est.steps = m;
  return est;
}

}  // namespace mcs
