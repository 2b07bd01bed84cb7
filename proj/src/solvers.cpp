#include "uwadmm/solvers.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "uwadmm/image_io.hpp"
#include "uwadmm/operators.hpp"

namespace uwadmm {

void IterTrace::write_csv(std::ostream& os,
                          const std::vector<std::string>& comments) const {
  for (const auto& c : comments) os << "# " << c << "\n";
  os << "iter,time_s,misfit,reg,relerr,gradnorm\n";
  for (const auto& r : rows) {
    os << r.iter << "," << format_double(r.time_s) << ","
       << format_double(r.misfit) << "," << format_double(r.reg) << ","
       << format_double(r.relerr) << "," << format_double(r.gradnorm) << "\n";
  }
}

PcgResult pcg(const LinOp& op_apply, const Vector& b, const Vector& precond_diag,
              int max_iter, double tol, const Vector* x0) {
  PcgResult out;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.x = Vector::Zero(b.size());
    out.status = PcgStatus::ZeroRhs;
    out.rel_res = 0.0;
    return out;
  }
  const bool have_precond = precond_diag.size() == b.size();
  auto precond = [&](const Vector& r) {
    return have_precond ? Vector(r.cwiseQuotient(precond_diag)) : r;
  };

  Vector x = x0 ? *x0 : Vector(Vector::Zero(b.size()));
  Vector r = x0 ? Vector(b - op_apply(x)) : b;
  Vector z = precond(r);
  Vector p = z;
  double rz = r.dot(z);
  double rnorm = r.norm();

  out.status = PcgStatus::MaxIter;
  for (int k = 0; k < max_iter; ++k) {
    if (rnorm / bnorm <= tol) {
      out.status = PcgStatus::Converged;
      break;
    }
    const Vector ap = op_apply(p);
    const double pap = p.dot(ap);
    if (pap <= 0.0) {
      out.status = PcgStatus::NegativeCurvature;
      break;
    }
    const double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    rnorm = r.norm();
    out.res_history.push_back(rnorm);
    ++out.iters;
    z = precond(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  if (rnorm / bnorm <= tol) out.status = PcgStatus::Converged;
  out.x = std::move(x);
  out.rel_res = rnorm / bnorm;
  return out;
}

LinesearchResult armijo_linesearch(const std::function<double(const Vector&)>& f,
                                   const Vector& x, const Vector& p, double fx,
                                   const Vector& g, double c,
                                   int max_halvings) {
  const double slope = g.dot(p);
  if (slope >= 0.0) {
    throw std::invalid_argument("armijo_linesearch: not a descent direction");
  }
  double gamma = 1.0;
  for (int k = 0; k <= max_halvings; ++k) {
    if (f(x + gamma * p) <= fx + c * gamma * slope) {
      return {gamma, true, k};
    }
    gamma *= 0.5;
  }
  return {0.0, false, max_halvings};
}

double problem_objective(const Problem& prob, const Vector& x) {
  double f = 0.0;
  for (const auto& sub : prob.subs) f += misfit(sub, x);
  return f + regularizer(prob.prior, x).value;
}

Vector problem_gradient(const Problem& prob, const Vector& x) {
  Vector g = regularizer(prob.prior, x).gradient;
  for (const auto& sub : prob.subs) g += misfit_gradient(sub, x);
  return g;
}

namespace {

double rel_error(const Vector& x, const Vector* truth) {
  if (!truth || truth->norm() == 0.0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return (x - *truth).norm() / truth->norm();
}

IterRecord make_record(int iter, double t, const Problem& prob, const Vector& x,
                       double gradnorm, const Vector* truth) {
  IterRecord rec;
  rec.iter = iter;
  rec.time_s = t;
  rec.misfit = 0.0;
  for (const auto& sub : prob.subs) rec.misfit += misfit(sub, x);
  rec.reg = regularizer(prob.prior, x).value;
  rec.relerr = rel_error(x, truth);
  rec.gradnorm = gradnorm;
  return rec;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

SolveResult gauss_newton(const Problem& prob, const Vector& x0,
                         const SolverConfig& cfg, const Vector* truth) {
  const auto t0 = Clock::now();
  SolveResult out;
  Vector x = x0;
  double f = problem_objective(prob, x);
  Vector g = problem_gradient(prob, x);
  out.trace.rows.push_back(
      make_record(0, seconds_since(t0), prob, x, g.norm(), truth));

  const Vector reg_diag = regularizer_hessian_diag(prob.prior);
  for (int k = 1; k <= cfg.max_outer; ++k) {
    if (g.norm() <= cfg.grad_tol * (1.0 + std::abs(f))) {
      out.trace.status = "converged";
      break;
    }
    // Linearized Hessian action and its Jacobi surrogate at the current x.
    auto h_apply = [&](const Vector& v) {
      Vector hv = regularizer_hessian_apply(prob.prior, v);
      for (const auto& sub : prob.subs) {
        const Vector jv = sub.op->jacobian_apply(x, v);
        hv += sub.op->jacobian_transpose_apply(
            x, jv.cwiseQuotient(sub.noise.diag));
      }
      return hv;
    };
    Vector diag = reg_diag;
    for (const auto& sub : prob.subs) {
      diag += sub.op->normal_diag(sub.noise.inv(), x);
    }
    const PcgResult step =
        pcg(h_apply, -g, diag, cfg.max_pcg, cfg.pcg_tol);
    Vector dx = step.x;
    if (dx.dot(g) >= 0.0) dx = -g;  // PCG returned a non-descent direction

    auto fobj = [&](const Vector& xx) { return problem_objective(prob, xx); };
    const LinesearchResult ls =
        armijo_linesearch(fobj, x, dx, f, g, cfg.armijo_c, cfg.linesearch_max);
    if (!ls.ok) {
      out.trace.status = "linesearch_failure";
      break;
    }
    x += ls.gamma * dx;
    f = problem_objective(prob, x);
    g = problem_gradient(prob, x);
    IterRecord rec =
        make_record(k, seconds_since(t0), prob, x, g.norm(), truth);
    rec.step = ls.gamma;
    out.trace.rows.push_back(rec);
    if (k == cfg.max_outer) out.trace.status = "max_outer";
  }
  out.x = std::move(x);
  return out;
}

SolveResult nlcg(const Problem& prob, const Vector& x0, const SolverConfig& cfg,
                 const Vector* truth) {
  const auto t0 = Clock::now();
  SolveResult out;
  Vector x = x0;
  double f = problem_objective(prob, x);
  Vector g = problem_gradient(prob, x);
  out.trace.rows.push_back(
      make_record(0, seconds_since(t0), prob, x, g.norm(), truth));
  if (g.norm() <= cfg.grad_tol * (1.0 + std::abs(f))) {
    out.trace.status = "converged";
    out.x = std::move(x);
    return out;
  }

  Vector p = -g;
  auto fobj = [&](const Vector& xx) { return problem_objective(prob, xx); };
  for (int k = 1; k <= cfg.max_outer; ++k) {
    if (p.dot(g) >= 0.0) p = -g;  // safeguard restart
    const LinesearchResult ls =
        armijo_linesearch(fobj, x, p, f, g, cfg.armijo_c, cfg.linesearch_max);
    if (!ls.ok) {
      out.trace.status = "linesearch_failure";
      break;
    }
    const Vector x_next = x + ls.gamma * p;
    const Vector g_next = problem_gradient(prob, x_next);
    const Vector d = g_next - g;
    const double pd = p.dot(d);

    double beta = 0.0;
    if (!cfg.nlcg_force_beta_zero &&
        std::abs(pd) >= 1e-14 * p.norm() * d.norm()) {
      beta = (d.dot(g_next) - 2.0 * (d.squaredNorm() / pd) * p.dot(g_next)) / pd;
    }
    p = -g_next + beta * p;
    x = x_next;
    f = problem_objective(prob, x);
    g = g_next;

    IterRecord rec =
        make_record(k, seconds_since(t0), prob, x, g.norm(), truth);
    rec.step = ls.gamma;
    out.trace.rows.push_back(rec);
    if (g.norm() <= cfg.grad_tol * (1.0 + std::abs(f))) {
      out.trace.status = "converged";
      break;
    }
    if (k == cfg.max_outer) out.trace.status = "max_outer";
  }
  out.x = std::move(x);
  return out;
}

}  // namespace uwadmm
