#include "uwadmm/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "uwadmm/operators.hpp"

namespace uwadmm {

void NoiseCov::validate() const {
  if ((diag.array() <= 0.0).any()) {
    throw std::invalid_argument("NoiseCov: diagonal must be strictly positive");
  }
}

void PriorSpec::validate() const {
  if (alpha <= 0.0) throw std::invalid_argument("PriorSpec: alpha must be > 0");
  if ((inv_cov_diag.array() <= 0.0).any()) {
    throw std::invalid_argument("PriorSpec: inv_cov_diag must be positive");
  }
  if (x_ref.size() && x_ref.size() != inv_cov_diag.size()) {
    throw std::invalid_argument("PriorSpec: x_ref length mismatch");
  }
}

void Subproblem::validate() const {
  if (!op) throw std::invalid_argument("Subproblem: missing operator");
  if (op->rows() != y.size() || y.size() != noise.diag.size()) {
    throw std::invalid_argument("Subproblem: output dims inconsistent");
  }
  if (op->cols() != prior.n() || weight.n() != prior.n()) {
    throw std::invalid_argument("Subproblem: model dims inconsistent");
  }
  noise.validate();
  prior.validate();
}

PriorSpec PriorSpec::smallness(int n, double alpha, Vector x_ref) {
  PriorSpec p;
  p.kind = PriorKind::Smallness;
  p.alpha = alpha;
  p.x_ref = std::move(x_ref);
  p.inv_cov_diag = Vector::Constant(n, alpha);
  p.validate();
  return p;
}

namespace {

// Node degrees of the forward-difference stencil graph.
Vector stencil_degrees(int w, int h, int n) {
  Vector deg = Vector::Zero(n);
  if (w > 0) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        int d = 0;
        if (c > 0) ++d;
        if (c + 1 < w) ++d;
        if (r > 0) ++d;
        if (r + 1 < h) ++d;
        deg[r * w + c] = d;
      }
    }
  } else {
    for (int i = 0; i < n; ++i) {
      int d = 0;
      if (i > 0) ++d;
      if (i + 1 < n) ++d;
      deg[i] = d;
    }
  }
  return deg;
}

}  // namespace

PriorSpec PriorSpec::diffusion(int width, int height, double alpha,
                               Vector x_ref) {
  PriorSpec p;
  p.kind = PriorKind::Diffusion;
  p.alpha = alpha;
  p.x_ref = std::move(x_ref);
  p.grid_w = width;
  p.grid_h = height;
  const int n = width * height;
  p.inv_cov_diag =
      (alpha * stencil_degrees(width, height, n)).array() + 1e-8;
  p.validate();
  return p;
}

PriorSpec PriorSpec::diffusion_chain(int n, double alpha, Vector x_ref) {
  PriorSpec p;
  p.kind = PriorKind::Diffusion;
  p.alpha = alpha;
  p.x_ref = std::move(x_ref);
  p.inv_cov_diag = (alpha * stencil_degrees(0, 0, n)).array() + 1e-8;
  p.validate();
  return p;
}

double misfit(const Subproblem& sub, const Vector& x) {
  if (x.size() != sub.op->cols()) {
    throw std::invalid_argument("misfit: model dimension mismatch");
  }
  if (sub.y.size() != sub.op->rows() || sub.noise.diag.size() != sub.y.size()) {
    throw std::invalid_argument("misfit: data dimension mismatch");
  }
  const Vector r = sub.op->apply(x) - sub.y;
  return 0.5 * (r.array().square() / sub.noise.diag.array()).sum();
}

Vector misfit_gradient(const Subproblem& sub, const Vector& x) {
  const Vector r = sub.op->apply(x) - sub.y;
  return sub.op->jacobian_transpose_apply(x,
                                          r.cwiseQuotient(sub.noise.diag));
}

Vector gradient_stencil_apply(const PriorSpec& prior, const Vector& x) {
  const int n = static_cast<int>(x.size());
  if (prior.grid_w > 0) {
    const int w = prior.grid_w, h = prior.grid_h;
    Vector out(h * (w - 1) + (h - 1) * w);
    int k = 0;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c + 1 < w; ++c) {
        out[k++] = x[r * w + c + 1] - x[r * w + c];
      }
    }
    for (int r = 0; r + 1 < h; ++r) {
      for (int c = 0; c < w; ++c) {
        out[k++] = x[(r + 1) * w + c] - x[r * w + c];
      }
    }
    return out;
  }
  Vector out(n - 1);
  for (int i = 0; i + 1 < n; ++i) out[i] = x[i + 1] - x[i];
  return out;
}

namespace {

// Graph Laplacian L^T L x of the stencil.
Vector stencil_laplacian_apply(const PriorSpec& prior, const Vector& x) {
  const int n = static_cast<int>(x.size());
  Vector out = Vector::Zero(n);
  auto add_edge = [&](int i, int j) {
    const double d = x[j] - x[i];
    out[i] -= d;
    out[j] += d;
  };
  if (prior.grid_w > 0) {
    const int w = prior.grid_w, h = prior.grid_h;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c + 1 < w; ++c) add_edge(r * w + c, r * w + c + 1);
    }
    for (int r = 0; r + 1 < h; ++r) {
      for (int c = 0; c < w; ++c) add_edge(r * w + c, (r + 1) * w + c);
    }
  } else {
    for (int i = 0; i + 1 < n; ++i) add_edge(i, i + 1);
  }
  return out;
}

}  // namespace

RegEval regularizer(const PriorSpec& prior, const Vector& x) {
  RegEval out;
  if (prior.kind == PriorKind::Smallness) {
    const Vector d = prior.x_ref.size() ? Vector(x - prior.x_ref) : x;
    out.value = 0.5 * prior.alpha * d.squaredNorm();
    out.gradient = prior.alpha * d;
  } else {
    const Vector e = gradient_stencil_apply(prior, x);
    out.value = 0.5 * prior.alpha * e.squaredNorm();
    out.gradient = prior.alpha * stencil_laplacian_apply(prior, x);
  }
  return out;
}

Vector regularizer_hessian_apply(const PriorSpec& prior, const Vector& v) {
  if (prior.kind == PriorKind::Smallness) return prior.alpha * v;
  return prior.alpha * stencil_laplacian_apply(prior, v);
}

Vector regularizer_hessian_diag(const PriorSpec& prior) {
  if (prior.kind == PriorKind::Smallness) {
    return Vector::Constant(prior.n(), prior.alpha);
  }
  return prior.alpha * stencil_degrees(prior.grid_w, prior.grid_h, prior.n());
}

Eigen::MatrixXd dense_posterior_covariance(const Eigen::MatrixXd& a,
                                           const NoiseCov& noise,
                                           const PriorSpec& prior, int cap) {
  const int n = static_cast<int>(a.cols());
  if (n > cap) {
    throw std::invalid_argument(
        "dense_posterior_covariance: n exceeds the oracle cap");
  }
  if (a.rows() != noise.diag.size() || prior.n() != n) {
    throw std::invalid_argument("dense_posterior_covariance: dim mismatch");
  }
  Eigen::MatrixXd h =
      a.transpose() * noise.inv().asDiagonal() * a;
  h += Eigen::MatrixXd(prior.inv_cov_diag.asDiagonal());
  return h.ldlt().solve(Eigen::MatrixXd::Identity(n, n));
}

}  // namespace uwadmm
