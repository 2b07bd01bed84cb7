#include "uwadmm/admm.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <ostream>
#include <stdexcept>

#include "admm_detail.hpp"
#include "uwadmm/image_io.hpp"
#include "uwadmm/operators.hpp"
#include "uwadmm/uq_weights.hpp"

namespace uwadmm {

void AdmmTrace::write_csv(std::ostream& os,
                          const std::vector<std::string>& comments) const {
  for (const auto& c : comments) os << "# " << c << "\n";
  os << "iter,time_s,misfit,relerr,r_norm,s_norm,rho";
  if (async) os << ",updates,reporter_set,max_staleness";
  os << "\n";
  for (const auto& r : rows) {
    os << r.iter << "," << format_double(r.time_s) << ","
       << format_double(r.misfit) << "," << format_double(r.relerr) << ","
       << format_double(r.r_norm) << "," << format_double(r.s_norm) << ","
       << format_double(r.rho);
    if (async) {
      os << "," << r.updates << "," << r.reporter_set << ","
         << r.max_staleness;
    }
    os << "\n";
  }
}

namespace {

// Right-hand-side contribution of the regularizer gradient's constant part
// (alpha * x_ref for smallness; zero for diffusion).
Vector reg_rhs(const PriorSpec& prior) {
  if (prior.kind == PriorKind::Smallness && prior.x_ref.size()) {
    return prior.alpha * prior.x_ref;
  }
  return Vector::Zero(prior.n());
}

}  // namespace

XStepResult x_step(const Subproblem& sub, const Vector& z, const Vector& u,
                   double rho, const AdmmConfig& cfg, const Vector& x_warm) {
  const Vector& w = sub.weight.diag;
  const Vector w2 = w.cwiseProduct(w);
  XStepResult out;

  if (sub.op->linear()) {
    // (A^T G^-1 A + Hess R + rho W^2) x = A^T G^-1 y + alpha x_ref
    //                                     + rho W^2 z - W u
    const Vector noise_inv = sub.noise.inv();
    auto apply = [&](const Vector& v) {
      Vector av = sub.op->apply_transpose(
          sub.op->apply(v).cwiseProduct(noise_inv));
      av += regularizer_hessian_apply(sub.prior, v);
      av += rho * w2.cwiseProduct(v);
      return av;
    };
    Vector rhs = sub.op->apply_transpose(sub.y.cwiseProduct(noise_inv));
    rhs += reg_rhs(sub.prior);
    rhs += rho * w2.cwiseProduct(z);
    rhs -= w.cwiseProduct(u);

    Vector diag = sub.op->normal_diag(noise_inv, x_warm);
    diag += regularizer_hessian_diag(sub.prior);
    diag += rho * w2;

    const PcgResult sol = pcg(apply, rhs, diag, cfg.inner.max_pcg,
                              cfg.inner.pcg_tol, &x_warm);
    out.x = sol.x;
    out.iters = sol.iters;
    out.ok = sol.status != PcgStatus::NegativeCurvature;
    return out;
  }

  // Nonlinear subproblem: a few warm-started Gauss-Newton iterations on the
  // augmented objective.
  auto objective = [&](const Vector& xx) {
    double f = misfit(sub, xx) + regularizer(sub.prior, xx).value;
    f += u.dot(w.cwiseProduct(xx));
    f += 0.5 * rho * w.cwiseProduct(xx - z).squaredNorm();
    return f;
  };
  auto gradient = [&](const Vector& xx) {
    Vector g = misfit_gradient(sub, xx) + regularizer(sub.prior, xx).gradient;
    g += w.cwiseProduct(u);
    g += rho * w2.cwiseProduct(xx - z);
    return g;
  };

  Vector x = x_warm;
  const Vector noise_inv = sub.noise.inv();
  out.ok = true;
  for (int k = 0; k < cfg.inner_gn_iters; ++k) {
    const double f = objective(x);
    const Vector g = gradient(x);
    if (g.norm() <= cfg.inner.grad_tol * (1.0 + std::abs(f))) break;
    auto h_apply = [&](const Vector& v) {
      const Vector jv = sub.op->jacobian_apply(x, v);
      Vector hv = sub.op->jacobian_transpose_apply(
          x, jv.cwiseProduct(noise_inv));
      hv += regularizer_hessian_apply(sub.prior, v);
      hv += rho * w2.cwiseProduct(v);
      return hv;
    };
    Vector diag = sub.op->normal_diag(noise_inv, x);
    diag += regularizer_hessian_diag(sub.prior);
    diag += rho * w2;
    const PcgResult step =
        pcg(h_apply, -g, diag, cfg.inner.max_pcg, cfg.inner.pcg_tol);
    Vector dx = step.x;
    if (dx.dot(g) >= 0.0) dx = -g;
    const LinesearchResult ls =
        armijo_linesearch(objective, x, dx, f, g, cfg.inner.armijo_c,
                          cfg.inner.linesearch_max);
    if (!ls.ok) {
      out.ok = false;  // keep the best iterate found so far
      break;
    }
    x += ls.gamma * dx;
    ++out.iters;
  }
  out.x = std::move(x);
  return out;
}

Vector z_step(const std::vector<Vector>& x, const std::vector<Vector>& u,
              const std::vector<DiagonalWeight>& w, double rho) {
  if (x.empty() || x.size() != u.size() || x.size() != w.size()) {
    throw std::invalid_argument("z_step: inconsistent block counts");
  }
  if (rho <= 0.0) throw std::invalid_argument("z_step: rho must be > 0");
  const double inv_rho = 1.0 / rho;
  const auto n = x[0].size();
  Vector num = Vector::Zero(n);
  Vector den = Vector::Zero(n);
  for (size_t j = 0; j < x.size(); ++j) {
    const Vector& wd = w[j].diag;
    num += wd.cwiseProduct(wd).cwiseProduct(x[j]) +
           inv_rho * wd.cwiseProduct(u[j]);
    den += wd.cwiseProduct(wd);
  }
  if ((den.array() <= 0.0).any()) {
    throw std::runtime_error("z_step: zero weight normalizer");
  }
  return num.cwiseQuotient(den);
}

Vector u_step(const Vector& u, const Vector& x, const Vector& z,
              const DiagonalWeight& w, double rho) {
  return u + rho * w.diag.cwiseProduct(x - z);
}

ResidualNorms residuals(const ConsensusState& state, const Vector& z_prev,
                        const std::vector<DiagonalWeight>& w) {
  double r2 = 0.0, s2 = 0.0;
  const Vector dz = state.z - z_prev;
  for (size_t j = 0; j < state.x.size(); ++j) {
    r2 += w[j].diag.cwiseProduct(state.x[j] - state.z).squaredNorm();
    s2 += w[j].diag.cwiseProduct(dz).squaredNorm();
  }
  return {std::sqrt(r2), state.rho * std::sqrt(s2)};
}

double adapt_rho(double rho, double r_norm, double s_norm,
                 const AdmmConfig& cfg) {
  if (r_norm > cfg.mu * s_norm) return rho * cfg.tau_incr;
  if (s_norm > cfg.mu * r_norm) return std::max(rho / cfg.tau_decr, cfg.rho_min);
  return rho;
}

namespace admm_detail {

double total_misfit(const Problem& prob, const Vector& z) {
  double f = 0.0;
  for (const auto& sub : prob.subs) f += misfit(sub, z);
  return f;
}

double trace_relerr(const Vector& z, const Vector* truth) {
  if (!truth || truth->norm() == 0.0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return (z - *truth).norm() / truth->norm();
}

// Absolute + relative stopping tolerances on the stacked weighted vectors.
// Negative configured tolerances disable tolerance-based stopping.
std::pair<double, double> stopping_eps(const AdmmConfig& cfg,
                                       const ConsensusState& state,
                                       const std::vector<DiagonalWeight>& w) {
  if (cfg.eps_pri < 0.0 || cfg.eps_dual < 0.0) return {-1.0, -1.0};
  if (cfg.eps_pri > 0.0 && cfg.eps_dual > 0.0) {
    return {cfg.eps_pri, cfg.eps_dual};
  }
  const auto big_n = static_cast<double>(state.x.size()) *
                     static_cast<double>(state.z.size());
  double wx2 = 0.0, wz2 = 0.0;
  for (size_t j = 0; j < state.x.size(); ++j) {
    wx2 += w[j].diag.cwiseProduct(state.x[j]).squaredNorm();
    wz2 += w[j].diag.cwiseProduct(state.z).squaredNorm();
  }
  const double eps = std::sqrt(big_n) * 1e-4 +
                     1e-3 * std::sqrt(std::max(wx2, wz2));
  const double ep = cfg.eps_pri > 0.0 ? cfg.eps_pri : eps;
  const double ed = cfg.eps_dual > 0.0 ? cfg.eps_dual : eps;
  return {ep, ed};
}

}  // namespace admm_detail

AdmmResult run_sync(const Problem& prob, const AdmmConfig& cfg,
                    const Vector* truth) {
  using namespace admm_detail;
  const int n_subs = prob.n_subs();
  const int n = prob.n();
  if (n_subs == 0) throw std::invalid_argument("run_sync: empty problem");
  std::vector<DiagonalWeight> w;
  w.reserve(n_subs);
  for (const auto& sub : prob.subs) {
    sub.validate();
    w.push_back(sub.weight);
  }
  if (cfg.rho0 < cfg.rho_min) {
    throw std::invalid_argument("run_sync: rho0 below rho_min");
  }

  AdmmResult out;
  ConsensusState& st = out.state;
  st.z = prob.prior.ref_or_zero();
  st.x.assign(n_subs, st.z);
  st.u.assign(n_subs, Vector::Zero(n));
  st.rho = cfg.rho0;
  st.staleness.assign(n_subs, 0);

  const auto t0 = std::chrono::steady_clock::now();
  auto stamp = [&](int iter) {
    if (cfg.timing == TimingMode::Logical) return static_cast<double>(iter);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  out.trace.status = "max_outer";
  std::vector<Subproblem> refreshed;
  for (int iter = 1; iter <= cfg.max_outer; ++iter) {
    st.iter = iter;
    if (cfg.weight_refresh_rank > 0) {
      if (refreshed.empty()) refreshed = prob.subs;
      const WeightReport rep = compute_weights(
          prob.subs, st.z, cfg.weight_refresh_rank, cfg.weight_refresh_seed);
      for (int j = 0; j < n_subs; ++j) {
        w[j] = rep.weights[j];
        refreshed[j].weight = rep.weights[j];
      }
    }
    const std::vector<Subproblem>& subs =
        cfg.weight_refresh_rank > 0 ? refreshed : prob.subs;
    bool ok = true;
    if (cfg.parallel_x) {
      std::vector<std::future<XStepResult>> tasks;
      tasks.reserve(n_subs);
      for (int j = 0; j < n_subs; ++j) {
        tasks.push_back(std::async(std::launch::async, [&, j] {
          return x_step(subs[j], st.z, st.u[j], st.rho, cfg, st.x[j]);
        }));
      }
      for (int j = 0; j < n_subs; ++j) {
        XStepResult r = tasks[j].get();
        ok = ok && r.ok;
        st.x[j] = std::move(r.x);
      }
    } else {
      for (int j = 0; j < n_subs; ++j) {
        XStepResult r = x_step(subs[j], st.z, st.u[j], st.rho, cfg,
                               st.x[j]);
        ok = ok && r.ok;
        st.x[j] = std::move(r.x);
      }
    }
    if (!ok) {
      out.trace.status = "x_step_failure";
      break;
    }

    const Vector z_prev = st.z;
    st.z = z_step(st.x, st.u, w, st.rho);
    for (int j = 0; j < n_subs; ++j) {
      st.u[j] = u_step(st.u[j], st.x[j], st.z, w[j], st.rho);
    }
    const ResidualNorms res = residuals(st, z_prev, w);

    AdmmRecord rec;
    rec.iter = iter;
    rec.time_s = stamp(iter);
    rec.misfit = total_misfit(prob, st.z);
    rec.relerr = trace_relerr(st.z, truth);
    rec.r_norm = res.r_norm;
    rec.s_norm = res.s_norm;
    rec.rho = st.rho;
    out.trace.rows.push_back(rec);

    const auto [ep, ed] = stopping_eps(cfg, st, w);
    if (ep > 0.0 && res.r_norm <= ep && res.s_norm <= ed) {
      out.trace.status = "converged";
      break;
    }
    st.rho = adapt_rho(st.rho, res.r_norm, res.s_norm, cfg);
  }
  out.z = st.z;
  return out;
}

}  // namespace uwadmm
