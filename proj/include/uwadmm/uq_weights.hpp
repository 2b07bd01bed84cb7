#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "uwadmm/core.hpp"
#include "uwadmm/solvers.hpp"
#include "uwadmm/types.hpp"

namespace uwadmm {

/// Truncated eigenpairs of the prior-conditioned misfit Hessian: eigenvalues
/// descending and clamped at 0, columns of vectors orthonormal.
struct LowRankEig {
  Vector eigenvalues;
  Eigen::MatrixXd vectors;

  int rank() const { return static_cast<int>(eigenvalues.size()); }
};

/// Gauss-Newton misfit Hessian action J^T Gamma_noise^-1 J v at the
/// linearization point, matrix-free.
Vector misfit_hessian_apply(const Subproblem& sub, const Vector& x_lin,
                            const Vector& v);

/// Prior-conditioned Hessian action
/// Gamma_prior^{1/2} H Gamma_prior^{1/2} v using the diagonal surrogate.
Vector prior_conditioned_apply(const Subproblem& sub, const Vector& x_lin,
                               const Vector& v);

/// Lanczos tridiagonalization with full reorthogonalization and a seeded
/// random start vector; runs min(n, r + oversample) steps and lifts the
/// top-r eigenpairs of the tridiagonal matrix through the Lanczos basis.
/// Breakdown (vanishing recurrence beta) returns the invariant subspace
/// found so far with reduced rank.
LowRankEig lanczos_low_rank(const LinOp& op_apply, int n, int r, uint64_t seed,
                            int oversample = 5);

/// diag(Gamma_prior^{1/2} (I - V_r D_r V_r^T) Gamma_prior^{1/2}) with
/// D_r = diag(lambda_i / (lambda_i + 1)), entries clamped to >= 1e-12.
Vector posterior_diag(const PriorSpec& prior, const LowRankEig& eig);

struct WeightReport {
  std::vector<DiagonalWeight> weights;
  std::vector<int> ranks;  // retained rank per subproblem
  int requested_rank = 0;
  uint64_t seed = 0;
  /// Truncation tail sum_{i>r} lambda_i/(lambda_i+1); only known when
  /// r = n (where it is 0), otherwise unavailable.
  std::optional<double> truncation_tail;
  double wall_s = 0.0;
};

/// The five-step weight pipeline: per subproblem, low-rank posterior
/// diagonal at x_lin, then W_j = clamp(1 / diag, weight floor, weight cap).
WeightReport compute_weights(const std::vector<Subproblem>& subs,
                             const Vector& x_lin, int r, uint64_t seed);

}  // namespace uwadmm
