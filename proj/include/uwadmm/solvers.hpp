#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "uwadmm/core.hpp"
#include "uwadmm/types.hpp"

namespace uwadmm {

struct SolverConfig {
  int max_outer = 30;
  int max_pcg = 200;
  double pcg_tol = 1e-8;
  int linesearch_max = 20;
  double armijo_c = 1e-4;
  double grad_tol = 1e-10;  // stop when ||g|| <= grad_tol * (1 + |f|)
  bool nlcg_force_beta_zero = false;  // diagnostic: plain steepest descent
};

struct IterRecord {
  int iter = 0;
  double time_s = 0.0;
  double misfit = 0.0;
  double reg = 0.0;
  double relerr = std::numeric_limits<double>::quiet_NaN();
  double gradnorm = 0.0;
  double step = 0.0;  // accepted linesearch gamma (not serialized)
};

struct IterTrace {
  std::vector<IterRecord> rows;
  std::string status = "ok";

  /// CSV with the fixed header iter,time_s,misfit,reg,relerr,gradnorm.
  void write_csv(std::ostream& os,
                 const std::vector<std::string>& header_comments = {}) const;
};

enum class PcgStatus { Converged, MaxIter, NegativeCurvature, ZeroRhs };

struct PcgResult {
  Vector x;
  int iters = 0;
  double rel_res = 0.0;
  PcgStatus status = PcgStatus::Converged;
  std::vector<double> res_history;  // ||r|| after each iteration
};

using LinOp = std::function<Vector(const Vector&)>;

/// Preconditioned CG on a symmetric PSD operator action. Jacobi
/// preconditioner from precond_diag (pass empty for identity). Stops when
/// ||A x - b|| / ||b|| <= tol or max_iter; negative curvature returns the
/// current iterate flagged. b = 0 returns x = 0 immediately.
PcgResult pcg(const LinOp& op_apply, const Vector& b, const Vector& precond_diag,
              int max_iter, double tol, const Vector* x0 = nullptr);

struct LinesearchResult {
  double gamma = 0.0;
  bool ok = false;
  int halvings = 0;
};

/// Backtracking Armijo: largest gamma in {1, 1/2, 1/4, ...} with
/// f(x + gamma p) <= f(x) + c gamma g^T p. Throws if p is not a descent
/// direction; returns ok=false when halvings are exhausted.
LinesearchResult armijo_linesearch(const std::function<double(const Vector&)>& f,
                                   const Vector& x, const Vector& p, double fx,
                                   const Vector& g, double c = 1e-4,
                                   int max_halvings = 20);

struct SolveResult {
  Vector x;
  IterTrace trace;
};

/// Gauss-Newton with PCG inner solves on
/// (sum_j J_j^T Gamma_j^-1 J_j + Hess R) dx = -(sum_j grad Phi_j + grad R),
/// Armijo step, stopping on max_outer, gradient tolerance, or linesearch
/// failure.
SolveResult gauss_newton(const Problem& prob, const Vector& x0,
                         const SolverConfig& cfg, const Vector* truth = nullptr);

/// Nonlinear CG: p0 = -grad f; d = grad f_{k+1} - grad f_k;
/// beta = (d - 2 p ||d||^2 / (p^T d))^T grad f_{k+1} / (p^T d);
/// p_{k+1} = -grad f_{k+1} + beta p_k; Armijo step. Degenerate p^T d
/// restarts with steepest descent.
SolveResult nlcg(const Problem& prob, const Vector& x0, const SolverConfig& cfg,
                 const Vector* truth = nullptr);

/// Objective shared by the baselines: sum_j Phi_j(x) + R(x) with the
/// problem's global prior.
double problem_objective(const Problem& prob, const Vector& x);
Vector problem_gradient(const Problem& prob, const Vector& x);

}  // namespace uwadmm
