#pragma once

#include <Eigen/Core>

#include <memory>
#include <vector>

namespace uwadmm {

/// Model vector: length-n real parameters (x, z, or duals u).
using Vector = Eigen::VectorXd;

class ForwardOperator;

/// Diagonal noise covariance. Entries are variances and must be strictly
/// positive.
struct NoiseCov {
  Vector diag;

  static NoiseCov unit(int m) { return NoiseCov{Vector::Ones(m)}; }
  Vector inv() const { return diag.cwiseInverse(); }
  void validate() const;
};

enum class PriorKind { Smallness, Diffusion };

/// Gaussian prior on the model. Smallness penalizes (alpha/2)||x - x_ref||^2;
/// diffusion penalizes (alpha/2)||L x||^2 with L the forward-difference
/// stencil on the grid. inv_cov_diag is the diagonal surrogate of
/// Gamma_prior^{-1} used wherever a diagonal or square root of the prior is
/// needed (exact for smallness, diag(alpha L^T L) + 1e-8 for diffusion).
struct PriorSpec {
  PriorKind kind = PriorKind::Smallness;
  double alpha = 1.0;
  Vector x_ref;         // empty means zero reference
  Vector inv_cov_diag;  // strictly positive, length n
  int grid_w = 0;       // diffusion stencil geometry; 0 means 1-D chain
  int grid_h = 0;

  static PriorSpec smallness(int n, double alpha, Vector x_ref = Vector());
  static PriorSpec diffusion(int width, int height, double alpha,
                             Vector x_ref = Vector());
  static PriorSpec diffusion_chain(int n, double alpha, Vector x_ref = Vector());

  int n() const { return static_cast<int>(inv_cov_diag.size()); }
  Vector ref_or_zero() const {
    return x_ref.size() ? x_ref : Vector::Zero(n());
  }
  /// Diagonal of Gamma_prior^{1/2} (surrogate): inv_cov_diag^{-1/2}.
  Vector cov_sqrt_diag() const {
    return inv_cov_diag.cwiseSqrt().cwiseInverse();
  }
  void validate() const;
};

/// Positive diagonal weight matrix W_j applied elementwise. All-ones reduces
/// weighted consensus ADMM to the standard unweighted scheme.
struct DiagonalWeight {
  Vector diag;

  static DiagonalWeight identity(int n) {
    return DiagonalWeight{Vector::Ones(n)};
  }
  int n() const { return static_cast<int>(diag.size()); }
};

// Clamp bounds applied to weights after inverting posterior diagonals.
inline constexpr double kWeightFloor = 1e-6;
inline constexpr double kWeightCap = 1e6;

/// One consensus term: forward operator F_j, data y_j, noise covariance,
/// local regularizer, and weight W_j.
struct Subproblem {
  std::shared_ptr<const ForwardOperator> op;
  Vector y;
  NoiseCov noise;
  PriorSpec prior;
  DiagonalWeight weight;

  void validate() const;
};

/// A full estimation problem: the consensus terms plus the global
/// regularizer used by the monolithic baselines (Gauss-Newton, NLCG).
/// Generators assign each subproblem a local prior with alpha/N so that the
/// consensus objective sum_j (Phi_j + R_j) equals the MAP objective
/// sum_j Phi_j + R.
struct Problem {
  std::vector<Subproblem> subs;
  PriorSpec prior;

  int n() const { return prior.n(); }
  int n_subs() const { return static_cast<int>(subs.size()); }
};

/// Mutable consensus state, owned by exactly one coordinator at a time.
struct ConsensusState {
  Vector z;
  std::vector<Vector> x;
  std::vector<Vector> u;
  double rho = 1.0;
  int iter = 0;
  std::vector<int> staleness;
};

}  // namespace uwadmm
