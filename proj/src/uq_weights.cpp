#include "uwadmm/uq_weights.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "uwadmm/operators.hpp"

namespace uwadmm {

Vector misfit_hessian_apply(const Subproblem& sub, const Vector& x_lin,
                            const Vector& v) {
  const Vector jv = sub.op->jacobian_apply(x_lin, v);
  return sub.op->jacobian_transpose_apply(x_lin,
                                          jv.cwiseQuotient(sub.noise.diag));
}

Vector prior_conditioned_apply(const Subproblem& sub, const Vector& x_lin,
                               const Vector& v) {
  const Vector s = sub.prior.cov_sqrt_diag();
  return s.cwiseProduct(
      misfit_hessian_apply(sub, x_lin, s.cwiseProduct(v)));
}

LowRankEig lanczos_low_rank(const LinOp& op_apply, int n, int r, uint64_t seed,
                            int oversample) {
  if (r < 0 || r > n) {
    throw std::invalid_argument("lanczos_low_rank: need 0 <= r <= n");
  }
  LowRankEig out;
  if (r == 0) {
    out.eigenvalues = Vector(0);
    out.vectors = Eigen::MatrixXd(n, 0);
    return out;
  }
  const int m_steps = std::min(n, r + oversample);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&] {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
  };

  Eigen::MatrixXd basis(n, m_steps);
  Vector alpha = Vector::Zero(m_steps), beta = Vector::Zero(m_steps);

  // Lanczos with full reorthogonalization. On breakdown (the Krylov branch
  // spans an invariant subspace) the recurrence restarts with a fresh random
  // vector deflated against the basis, so degenerate eigenspaces are still
  // mined; a restart vector annihilated by the operator ends the iteration
  // with reduced rank.
  int k = 0;
  int branch_start = 0;
  double scale = 0.0;
  while (k < m_steps) {
    if (k == branch_start) {
      Vector q = draw();
      if (k > 0) {
        for (int pass = 0; pass < 2; ++pass) {
          q -= basis.leftCols(k) * (basis.leftCols(k).transpose() * q);
        }
      }
      const double qn = q.norm();
      if (qn <= 1e-12) break;
      basis.col(k) = q / qn;
    }
    Vector w = op_apply(basis.col(k));
    alpha[k] = basis.col(k).dot(w);
    scale = std::max(scale, std::abs(alpha[k]));
    w -= alpha[k] * basis.col(k);
    if (k > branch_start) w -= beta[k - 1] * basis.col(k - 1);
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
    }
    beta[k] = w.norm();
    if (beta[k] <= 1e-12 * std::max(1.0, scale)) {
      beta[k] = 0.0;
      const bool annihilated = k == branch_start &&
                               std::abs(alpha[k]) <= 1e-12 * std::max(1.0, scale);
      ++k;
      if (annihilated) break;  // remaining complement is (numerically) null
      branch_start = k;
      continue;
    }
    if (k + 1 < m_steps) basis.col(k + 1) = w / beta[k];
    ++k;
  }
  const int dim = k;
  // A positive trailing beta means the budget cut the recurrence mid-branch;
  // it bounds the residual of each Ritz pair below.
  const double beta_end = dim == m_steps ? beta[dim - 1] : 0.0;

  Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    tri(i, i) = alpha[i];
    if (i + 1 < dim) {
      tri(i, i + 1) = beta[i];
      tri(i + 1, i) = beta[i];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);

  // Take the top pairs, clamped at 0, skipping pairs whose Lanczos residual
  // bound beta_end * |s_last| marks them as far from converged (pairs from
  // completed branches have a zero bound).
  out.eigenvalues = Vector(std::min(r, dim));
  out.vectors = Eigen::MatrixXd(n, std::min(r, dim));
  int kept = 0;
  for (int i = 0; i < dim && kept < r; ++i) {
    const int src = dim - 1 - i;
    const double lambda = std::max(0.0, es.eigenvalues()[src]);
    const double bound = beta_end * std::abs(es.eigenvectors()(dim - 1, src));
    if (bound > 0.1 * std::max(lambda, 1e-300)) continue;
    out.eigenvalues[kept] = lambda;
    out.vectors.col(kept) = basis.leftCols(dim) * es.eigenvectors().col(src);
    ++kept;
  }
  out.eigenvalues.conservativeResize(kept);
  out.vectors.conservativeResize(Eigen::NoChange, kept);
  return out;
}

Vector posterior_diag(const PriorSpec& prior, const LowRankEig& eig) {
  const Vector p = prior.cov_sqrt_diag();
  const int n = prior.n();
  Vector reduction = Vector::Zero(n);
  for (int k = 0; k < eig.rank(); ++k) {
    const double dk = eig.eigenvalues[k] / (eig.eigenvalues[k] + 1.0);
    reduction += dk * eig.vectors.col(k).cwiseProduct(eig.vectors.col(k));
  }
  Vector d =
      p.cwiseProduct(p).cwiseProduct((1.0 - reduction.array()).matrix());
  return d.cwiseMax(1e-12);
}

WeightReport compute_weights(const std::vector<Subproblem>& subs,
                             const Vector& x_lin, int r, uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  WeightReport report;
  report.requested_rank = r;
  report.seed = seed;

  const int n = static_cast<int>(x_lin.size());
  for (const auto& sub : subs) {
    auto apply = [&](const Vector& v) {
      return prior_conditioned_apply(sub, x_lin, v);
    };
    const LowRankEig eig = lanczos_low_rank(apply, n, r, seed);
    const Vector d = posterior_diag(sub.prior, eig);
    DiagonalWeight w;
    w.diag = d.cwiseInverse().cwiseMax(kWeightFloor).cwiseMin(kWeightCap);
    report.weights.push_back(std::move(w));
    report.ranks.push_back(eig.rank());
  }
  if (r == n) report.truncation_tail = 0.0;
  report.wall_s = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  return report;
}

}  // namespace uwadmm
