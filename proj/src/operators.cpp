#include "uwadmm/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace uwadmm {

Vector ForwardOperator::apply_transpose(const Vector&) const {
  throw std::logic_error("apply_transpose: operator is not linear");
}

Vector ForwardOperator::jacobian_apply(const Vector&, const Vector& v) const {
  return apply(v);
}

Vector ForwardOperator::jacobian_transpose_apply(const Vector&,
                                                 const Vector& v) const {
  return apply_transpose(v);
}

Vector ForwardOperator::normal_diag(const Vector&, const Vector&) const {
  // Surrogate for kinds without a cheap exact diagonal.
  return Vector::Ones(cols());
}

std::shared_ptr<ForwardOperator> ForwardOperator::row_slice(int, int) const {
  throw std::logic_error("row_slice: unsupported operator kind");
}

std::shared_ptr<ForwardOperator> ForwardOperator::row_select(
    const std::vector<int>&) const {
  throw std::logic_error("row_select: unsupported operator kind");
}

Eigen::MatrixXd ForwardOperator::to_dense() const {
  if (!linear()) throw std::logic_error("to_dense: operator is not linear");
  Eigen::MatrixXd a(rows(), cols());
  Vector e = Vector::Zero(cols());
  for (int j = 0; j < cols(); ++j) {
    e[j] = 1.0;
    a.col(j) = apply(e);
    e[j] = 0.0;
  }
  return a;
}

Eigen::SparseMatrix<double> ForwardOperator::to_sparse() const {
  return to_dense().sparseView();
}

// ---------------------------------------------------------------------------
// DenseOperator

Vector DenseOperator::normal_diag(const Vector& noise_inv, const Vector&) const {
  Vector d(cols());
  for (int j = 0; j < cols(); ++j) {
    d[j] = (noise_inv.array() * a_.col(j).array().square()).sum();
  }
  return d;
}

std::shared_ptr<ForwardOperator> DenseOperator::row_slice(int start,
                                                          int count) const {
  return std::make_shared<DenseOperator>(a_.middleRows(start, count));
}

std::shared_ptr<ForwardOperator> DenseOperator::row_select(
    const std::vector<int>& r) const {
  Eigen::MatrixXd b(r.size(), cols());
  for (size_t k = 0; k < r.size(); ++k) b.row(k) = a_.row(r[k]);
  return std::make_shared<DenseOperator>(std::move(b));
}

// ---------------------------------------------------------------------------
// SparseOperator

Vector SparseOperator::normal_diag(const Vector& noise_inv, const Vector&) const {
  Vector d = Vector::Zero(cols());
  for (int k = 0; k < a_.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a_, k); it; ++it) {
      d[it.col()] += noise_inv[it.row()] * it.value() * it.value();
    }
  }
  return d;
}

std::shared_ptr<ForwardOperator> SparseOperator::row_slice(int start,
                                                           int count) const {
  Eigen::SparseMatrix<double> b = a_.middleRows(start, count);
  return std::make_shared<SparseOperator>(std::move(b));
}

std::shared_ptr<ForwardOperator> SparseOperator::row_select(
    const std::vector<int>& r) const {
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::SparseMatrix<double, Eigen::RowMajor> rm(a_);
  for (size_t k = 0; k < r.size(); ++k) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
             rm, r[k]);
         it; ++it) {
      trips.emplace_back(static_cast<int>(k), static_cast<int>(it.col()),
                         it.value());
    }
  }
  Eigen::SparseMatrix<double> b(static_cast<int>(r.size()), cols());
  b.setFromTriplets(trips.begin(), trips.end());
  return std::make_shared<SparseOperator>(std::move(b));
}

// ---------------------------------------------------------------------------
// RowSelectionOperator

Vector RowSelectionOperator::apply(const Vector& x) const {
  Vector out(idx_.size());
  for (size_t k = 0; k < idx_.size(); ++k) out[k] = x[idx_[k]];
  return out;
}

Vector RowSelectionOperator::apply_transpose(const Vector& v) const {
  Vector out = Vector::Zero(n_);
  for (size_t k = 0; k < idx_.size(); ++k) out[idx_[k]] += v[k];
  return out;
}

Vector RowSelectionOperator::normal_diag(const Vector& noise_inv,
                                         const Vector&) const {
  Vector d = Vector::Zero(n_);
  for (size_t k = 0; k < idx_.size(); ++k) d[idx_[k]] += noise_inv[k];
  return d;
}

std::shared_ptr<ForwardOperator> RowSelectionOperator::row_slice(
    int start, int count) const {
  std::vector<int> sub(idx_.begin() + start, idx_.begin() + start + count);
  return std::make_shared<RowSelectionOperator>(n_, std::move(sub));
}

std::shared_ptr<ForwardOperator> RowSelectionOperator::row_select(
    const std::vector<int>& r) const {
  std::vector<int> sub(r.size());
  for (size_t k = 0; k < r.size(); ++k) sub[k] = idx_[r[k]];
  return std::make_shared<RowSelectionOperator>(n_, std::move(sub));
}

Eigen::MatrixXd RowSelectionOperator::to_dense() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows(), n_);
  for (size_t k = 0; k < idx_.size(); ++k) a(k, idx_[k]) = 1.0;
  return a;
}

Eigen::SparseMatrix<double> RowSelectionOperator::to_sparse() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(idx_.size());
  for (size_t k = 0; k < idx_.size(); ++k) {
    trips.emplace_back(static_cast<int>(k), idx_[k], 1.0);
  }
  Eigen::SparseMatrix<double> a(rows(), n_);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

// ---------------------------------------------------------------------------
// ToyNonlinearOperator

ToyNonlinearOperator::ToyNonlinearOperator(
    std::shared_ptr<const ForwardOperator> a, double q)
    : a_(std::move(a)), q_(q) {
  if (!a_) throw std::invalid_argument("toy operator: missing inner operator");
  if (!a_->linear()) {
    throw std::invalid_argument("toy operator: inner operator must be linear");
  }
}

Vector ToyNonlinearOperator::apply(const Vector& x) const {
  const Vector ax = a_->apply(x);
  return ax + q_ * ax.cwiseProduct(ax);
}

Vector ToyNonlinearOperator::jacobian_apply(const Vector& x,
                                            const Vector& v) const {
  const Vector ax = a_->apply(x);
  const Vector av = a_->apply(v);
  return av + 2.0 * q_ * ax.cwiseProduct(av);
}

Vector ToyNonlinearOperator::jacobian_transpose_apply(const Vector& x,
                                                      const Vector& v) const {
  const Vector ax = a_->apply(x);
  const Vector scaled =
      v + 2.0 * q_ * ax.cwiseProduct(v);
  return a_->apply_transpose(scaled);
}

Vector ToyNonlinearOperator::normal_diag(const Vector& noise_inv,
                                         const Vector& x_lin) const {
  // J = diag(1 + 2 q A x) A, so fold the diagonal factor into the noise.
  const Vector ax = a_->apply(x_lin);
  const Vector d = (1.0 + 2.0 * q_ * ax.array()).square().matrix();
  return a_->normal_diag(noise_inv.cwiseProduct(d), x_lin);
}

std::shared_ptr<ForwardOperator> toy_nonlinear_operator(
    std::shared_ptr<const ForwardOperator> a, double q) {
  return std::make_shared<ToyNonlinearOperator>(std::move(a), q);
}

// ---------------------------------------------------------------------------
// Partitioning

std::vector<std::vector<int>> quadrant_indices(int width, int height) {
  if (width % 2 != 0 || height % 2 != 0) {
    throw std::invalid_argument("quadrant_indices: dimensions must be even");
  }
  const int hw = width / 2, hh = height / 2;
  std::vector<std::vector<int>> quads(4);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const int q = (r < hh ? 0 : 2) + (c < hw ? 0 : 1);
      quads[q].push_back(r * width + c);
    }
  }
  return quads;
}

std::vector<std::pair<std::shared_ptr<ForwardOperator>, std::vector<int>>>
identity_partition(int width, int height, int n_parts) {
  if (n_parts != 4) {
    throw std::invalid_argument("identity_partition: N must be 4");
  }
  auto quads = quadrant_indices(width, height);
  std::vector<std::pair<std::shared_ptr<ForwardOperator>, std::vector<int>>>
      out;
  out.reserve(4);
  for (auto& q : quads) {
    out.emplace_back(
        std::make_shared<RowSelectionOperator>(width * height, q), q);
  }
  return out;
}

std::vector<RowBlock> row_partition(const ForwardOperator& a, const Vector& y,
                                    int n_blocks) {
  const int m = a.rows();
  if (n_blocks <= 0 || n_blocks > m) {
    throw std::invalid_argument("row_partition: need 1 <= N <= m");
  }
  if (y.size() != m) throw std::invalid_argument("row_partition: y length");
  const int base = m / n_blocks;
  const int rem = m % n_blocks;
  std::vector<RowBlock> out;
  out.reserve(n_blocks);
  int start = 0;
  for (int j = 0; j < n_blocks; ++j) {
    const int count = base + (j < rem ? 1 : 0);
    out.push_back(RowBlock{a.row_slice(start, count),
                           y.segment(start, count), start});
    start += count;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian blur operator

std::shared_ptr<ForwardOperator> gaussian_blur_operator(int grid_n, int band,
                                                        double sigma) {
  if (band < 1 || band >= grid_n) {
    throw std::invalid_argument("gaussian_blur_operator: need 1 <= band < n");
  }
  if (sigma <= 0.0) {
    throw std::invalid_argument("gaussian_blur_operator: sigma must be > 0");
  }
  Vector t = Vector::Zero(grid_n);
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
  for (int k = 0; k < band; ++k) {
    t[k] = norm * std::exp(-0.5 * k * k / (sigma * sigma));
  }

  // A = T (x) T on row-major images.
  std::vector<Eigen::Triplet<double>> trips;
  const int n = grid_n * grid_n;
  trips.reserve(static_cast<size_t>(n) * (2 * band - 1) * (2 * band - 1));
  for (int r1 = 0; r1 < grid_n; ++r1) {
    for (int c1 = 0; c1 < grid_n; ++c1) {
      const int row = r1 * grid_n + c1;
      for (int r2 = std::max(0, r1 - band + 1);
           r2 <= std::min(grid_n - 1, r1 + band - 1); ++r2) {
        const double tr = t[std::abs(r1 - r2)];
        for (int c2 = std::max(0, c1 - band + 1);
             c2 <= std::min(grid_n - 1, c1 + band - 1); ++c2) {
          trips.emplace_back(row, r2 * grid_n + c2, tr * t[std::abs(c1 - c2)]);
        }
      }
    }
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  return std::make_shared<SparseOperator>(std::move(a));
}

// ---------------------------------------------------------------------------
// Parallel-beam ray operator (Siddon-style grid traversal)

std::shared_ptr<ForwardOperator> tomo_ray_operator(int grid_n, int n_angles,
                                                   int n_detectors) {
  if (grid_n < 4) throw std::invalid_argument("tomo_ray_operator: grid_n >= 4");
  if (n_angles < 1 || n_detectors < 1) {
    throw std::invalid_argument("tomo_ray_operator: invalid geometry");
  }
  const double extent = static_cast<double>(grid_n);
  const double cx = extent / 2.0, cy = extent / 2.0;
  std::vector<Eigen::Triplet<double>> trips;
  const int m = n_angles * n_detectors;

  for (int a = 0; a < n_angles; ++a) {
    const double theta = M_PI * a / n_angles;
    const double ux = std::cos(theta), uy = std::sin(theta);
    const double nx = -uy, ny = ux;
    for (int d = 0; d < n_detectors; ++d) {
      const int ray = a * n_detectors + d;
      const double s = ((d + 0.5) / n_detectors - 0.5) * extent;
      const double px = cx + s * nx, py = cy + s * ny;

      // Clip the line p + t u against [0, extent]^2.
      double t0 = -std::numeric_limits<double>::infinity();
      double t1 = std::numeric_limits<double>::infinity();
      bool miss = false;
      auto clip_axis = [&](double p, double u) {
        if (std::abs(u) < 1e-14) {
          if (p <= 0.0 || p >= extent) miss = true;
          return;
        }
        double ta = (0.0 - p) / u, tb = (extent - p) / u;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
      };
      clip_axis(px, ux);
      clip_axis(py, uy);
      if (miss || t0 >= t1) continue;

      // March through the cells between t0 and t1.
      double t = t0;
      double x = px + t0 * ux, y = py + t0 * uy;
      int ix = std::clamp(static_cast<int>(std::floor(x)), 0, grid_n - 1);
      int iy = std::clamp(static_cast<int>(std::floor(y)), 0, grid_n - 1);
      const int sx = ux > 0 ? 1 : -1, sy = uy > 0 ? 1 : -1;
      const double inf = std::numeric_limits<double>::infinity();
      const double tdx = std::abs(ux) < 1e-14 ? inf : 1.0 / std::abs(ux);
      const double tdy = std::abs(uy) < 1e-14 ? inf : 1.0 / std::abs(uy);
      double tmx = inf, tmy = inf;
      if (tdx != inf) {
        const double next = ux > 0 ? ix + 1.0 : static_cast<double>(ix);
        tmx = t0 + (next - x) / ux;
      }
      if (tdy != inf) {
        const double next = uy > 0 ? iy + 1.0 : static_cast<double>(iy);
        tmy = t0 + (next - y) / uy;
      }
      while (t < t1 - 1e-12) {
        const double t_next = std::min({tmx, tmy, t1});
        const double len = t_next - t;
        if (len > 1e-12) {
          const int r = grid_n - 1 - iy;  // image row 0 is the top
          trips.emplace_back(ray, r * grid_n + ix, len);
        }
        if (t_next >= t1) break;
        if (tmx <= tmy) {
          ix += sx;
          tmx += tdx;
        } else {
          iy += sy;
          tmy += tdy;
        }
        if (ix < 0 || ix >= grid_n || iy < 0 || iy >= grid_n) break;
        t = t_next;
      }
    }
  }
  Eigen::SparseMatrix<double> a(m, grid_n * grid_n);
  a.setFromTriplets(trips.begin(), trips.end());
  return std::make_shared<SparseOperator>(std::move(a));
}

// ---------------------------------------------------------------------------
// Test images

namespace {

// C-infinity bump with compact support: exp(1 - 1/(1-r^2)) for r < 1.
double mollifier(double r2) {
  if (r2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r2));
}

}  // namespace

GridImage shepp_phantom(int grid_n) {
  if (grid_n < 16) throw std::invalid_argument("shepp_phantom: grid_n >= 16");
  struct Ellipse {
    double add, a, b, x0, y0, phi_deg;
  };
  // Modified Shepp-Logan intensities, coordinates shrunk by 0.8 to keep the
  // support inside the grid_n/16 boundary ring.
  static const Ellipse kEllipses[] = {
      {1.0, .69, .92, 0.0, 0.0, 0.0},
      {-0.8, .6624, .8740, 0.0, -.0184, 0.0},
      {-0.2, .1100, .3100, .22, 0.0, -18.0},
      {-0.2, .1600, .4100, -.22, 0.0, 18.0},
      {0.1, .2100, .2500, 0.0, .35, 0.0},
      {0.1, .0460, .0460, 0.0, .1, 0.0},
      {0.1, .0460, .0460, 0.0, -.1, 0.0},
      {0.1, .0460, .0230, -.08, -.605, 0.0},
      {0.1, .0230, .0230, 0.0, -.606, 0.0},
      {0.1, .0230, .0460, .06, -.605, 0.0},
  };
  const double scale = 0.8;
  GridImage img;
  img.width = img.height = grid_n;
  img.pixels = Vector::Zero(grid_n * grid_n);
  for (int r = 0; r < grid_n; ++r) {
    for (int c = 0; c < grid_n; ++c) {
      const double x = (2.0 * (c + 0.5) / grid_n - 1.0) / scale;
      const double y = (1.0 - 2.0 * (r + 0.5) / grid_n) / scale;
      double v = 0.0;
      for (const auto& e : kEllipses) {
        const double phi = e.phi_deg * M_PI / 180.0;
        const double dx = x - e.x0, dy = y - e.y0;
        const double xr = dx * std::cos(phi) + dy * std::sin(phi);
        const double yr = -dx * std::sin(phi) + dy * std::cos(phi);
        if (xr * xr / (e.a * e.a) + yr * yr / (e.b * e.b) <= 1.0) v += e.add;
      }
      img.pixels[r * grid_n + c] = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

GridImage blur_truth(int grid_n) {
  if (grid_n < 16) throw std::invalid_argument("blur_truth: grid_n >= 16");
  GridImage img;
  img.width = img.height = grid_n;
  img.pixels = Vector::Zero(grid_n * grid_n);
  for (int r = 0; r < grid_n; ++r) {
    for (int c = 0; c < grid_n; ++c) {
      const double x = 2.0 * (c + 0.5) / grid_n - 1.0;
      const double y = 1.0 - 2.0 * (r + 0.5) / grid_n;
      double v = 0.0;
      {
        const double dx = (x + 0.30) / 0.42, dy = (y - 0.25) / 0.42;
        v += 0.9 * mollifier(dx * dx + dy * dy);
      }
      {
        const double dx = (x - 0.35) / 0.30, dy = (y + 0.20) / 0.30;
        v += 0.7 * mollifier(dx * dx + dy * dy);
      }
      if (x >= -0.60 && x <= -0.15 && y >= -0.55 && y <= -0.20) v += 0.5;
      img.pixels[r * grid_n + c] = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

}  // namespace uwadmm
