#pragma once

#include <Eigen/Dense>

#include "uwadmm/types.hpp"

namespace uwadmm {

/// Noise-weighted half squared residual: 0.5 ||F_j(x) - y_j||^2_{Gamma^-1}.
double misfit(const Subproblem& sub, const Vector& x);

/// Gradient of the misfit: J(x)^T Gamma^-1 (F(x) - y).
Vector misfit_gradient(const Subproblem& sub, const Vector& x);

struct RegEval {
  double value = 0.0;
  Vector gradient;
};

/// Regularizer value and gradient. Smallness: (alpha/2)||x - x_ref||^2.
/// Diffusion: (alpha/2)||L x||^2 with L the grid forward-difference stencil.
RegEval regularizer(const PriorSpec& prior, const Vector& x);

/// Action of the exact regularizer Hessian: alpha*I or alpha*L^T L.
Vector regularizer_hessian_apply(const PriorSpec& prior, const Vector& v);

/// Exact diagonal of the regularizer Hessian, for Jacobi preconditioning.
Vector regularizer_hessian_diag(const PriorSpec& prior);

/// Forward-difference stencil L applied to x (length: #horizontal edges +
/// #vertical edges for grids, n-1 for chains).
Vector gradient_stencil_apply(const PriorSpec& prior, const Vector& x);

/// Dense posterior-covariance oracle:
/// (A^T Gamma_noise^-1 A + diag(prior.inv_cov_diag))^-1 by dense
/// factorization. Test oracle only; refuses n > cap.
Eigen::MatrixXd dense_posterior_covariance(const Eigen::MatrixXd& a,
                                           const NoiseCov& noise,
                                           const PriorSpec& prior,
                                           int cap = 500);

}  // namespace uwadmm
