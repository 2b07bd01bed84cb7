#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "uwadmm/solvers.hpp"
#include "uwadmm/types.hpp"

namespace uwadmm {

enum class TimingMode { Logical, Wall };

struct AdmmConfig {
  double rho0 = 5.0;
  double rho_min = 1e-12;
  double mu = 10.0;
  double tau_incr = 2.0;
  double tau_decr = 2.0;
  /// Explicit tolerances when > 0; otherwise the absolute+relative recipe
  /// sqrt(N n) * 1e-4 + 1e-3 * max(||W x||, ||W z||) is used per iteration.
  double eps_pri = 0.0;
  double eps_dual = 0.0;
  int max_outer = 10;
  SolverConfig inner;      // x-step solver settings
  int inner_gn_iters = 3;  // Gauss-Newton iterations per nonlinear x-step
  bool parallel_x = true;  // run the N x-steps as independent tasks
  /// Logical timing keeps traces reproducible; wall reports real seconds.
  TimingMode timing = TimingMode::Logical;
  /// Off by default: when > 0, recompute rank-r weights at the current z
  /// before every iteration instead of using the offline weights.
  int weight_refresh_rank = 0;
  uint64_t weight_refresh_seed = 0;
};

struct AdmmRecord {
  int iter = 0;
  double time_s = 0.0;
  double misfit = 0.0;  // sum_j Phi_j(z)
  double relerr = std::numeric_limits<double>::quiet_NaN();
  double r_norm = 0.0;
  double s_norm = 0.0;
  double rho = 0.0;
  // async extension columns
  int updates = 0;
  std::string reporter_set;
  int max_staleness = 0;
};

struct AdmmTrace {
  std::vector<AdmmRecord> rows;
  std::string status = "ok";
  bool async = false;  // adds updates,reporter_set,max_staleness columns

  void write_csv(std::ostream& os,
                 const std::vector<std::string>& header_comments = {}) const;
};

struct XStepResult {
  Vector x;
  bool ok = true;
  int iters = 0;
};

/// Approximately minimize Phi_j(x) + R_j(x) + u^T W x
/// + (rho/2)||W (x - z)||^2: PCG on the normal equations for linear F_j,
/// warm-started inner Gauss-Newton otherwise.
XStepResult x_step(const Subproblem& sub, const Vector& z, const Vector& u,
                   double rho, const AdmmConfig& cfg, const Vector& x_warm);

/// z = (sum_j W_j^2)^-1 sum_j (W_j^2 x_j + (1/rho) W_j u_j), elementwise,
/// fixed summation order.
Vector z_step(const std::vector<Vector>& x, const std::vector<Vector>& u,
              const std::vector<DiagonalWeight>& w, double rho);

/// u' = u + rho W (x - z).
Vector u_step(const Vector& u, const Vector& x, const Vector& z,
              const DiagonalWeight& w, double rho);

struct ResidualNorms {
  double r_norm = 0.0;
  double s_norm = 0.0;
};

/// Stacked primal residual ||(W_1(x_1-z), ..., W_N(x_N-z))|| and dual
/// residual rho ||(W_1(z-z_prev), ..., W_N(z-z_prev))||.
ResidualNorms residuals(const ConsensusState& state, const Vector& z_prev,
                        const std::vector<DiagonalWeight>& w);

/// rho * tau_incr when ||r|| > mu ||s||; rho / tau_decr (floored at
/// rho_min) when ||s|| > mu ||r||; unchanged otherwise. Duals are kept
/// as-is on a rho change (unscaled-multiplier form).
double adapt_rho(double rho, double r_norm, double s_norm,
                 const AdmmConfig& cfg);

struct AdmmResult {
  Vector z;
  AdmmTrace trace;
  ConsensusState state;
};

/// Synchronous weighted consensus ADMM: x-steps (all j), z-step, u-steps,
/// residuals, adaptive rho, until both residual tests pass or max_outer.
AdmmResult run_sync(const Problem& prob, const AdmmConfig& cfg,
                    const Vector* truth = nullptr);

}  // namespace uwadmm
