#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <set>

#include "uwadmm/operators.hpp"

using namespace uwadmm;

namespace {

Vector random_vector(int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

void check_adjoint(const ForwardOperator& op, uint64_t seed) {
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = random_vector(op.cols(), seed + 2 * trial);
    const Vector v = random_vector(op.rows(), seed + 2 * trial + 1);
    const double lhs = op.apply(x).dot(v);
    const double rhs = x.dot(op.apply_transpose(v));
    CHECK(std::abs(lhs - rhs) <=
          1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)}));
  }
}

// Chord length of the line p(t) = start + t * dir through [0, extent]^2.
double chord_length(double px, double py, double ux, double uy, double extent) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  auto clip = [&](double p, double u) {
    if (std::abs(u) < 1e-14) return p > 0.0 && p < extent;
    double ta = (0.0 - p) / u, tb = (extent - p) / u;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    return true;
  };
  if (!clip(px, ux) || !clip(py, uy)) return 0.0;
  return std::max(0.0, t1 - t0);
}

}  // namespace

TEST_CASE("identity_partition: smallest case and partition property") {
  auto parts = identity_partition(2, 2);
  REQUIRE(parts.size() == 4);
  std::set<int> seen;
  for (const auto& [op, idx] : parts) {
    CHECK(op->rows() == 1);
    CHECK(op->cols() == 4);
    REQUIRE(idx.size() == 1);
    seen.insert(idx[0]);
  }
  CHECK(seen == std::set<int>{0, 1, 2, 3});

  auto parts32 = identity_partition(32, 32);
  std::set<int> all;
  size_t total = 0;
  for (const auto& [op, idx] : parts32) {
    total += idx.size();
    all.insert(idx.begin(), idx.end());
  }
  CHECK(total == 1024);
  CHECK(all.size() == 1024);  // pairwise disjoint and exhaustive
}

TEST_CASE("identity_partition: stacked selectors reproduce the identity") {
  auto parts = identity_partition(32, 32);
  Eigen::MatrixXd assembled = Eigen::MatrixXd::Zero(1024, 1024);
  for (const auto& [op, idx] : parts) {
    const Eigen::MatrixXd block = op->to_dense();
    for (size_t k = 0; k < idx.size(); ++k) {
      assembled.row(idx[k]) = block.row(k);
    }
  }
  CHECK((assembled - Eigen::MatrixXd::Identity(1024, 1024)).norm() == 0.0);
}

TEST_CASE("identity_partition rejects odd dimensions and N != 4") {
  CHECK_THROWS_AS(identity_partition(3, 4), std::invalid_argument);
  CHECK_THROWS_AS(identity_partition(4, 4, 2), std::invalid_argument);
}

TEST_CASE("gaussian_blur_operator: near-identity limit for tiny sigma") {
  auto op = gaussian_blur_operator(8, 2, 0.05);
  const Vector x = random_vector(64, 3);
  const Vector ax = op->apply(x);
  const double c = ax[0] / x[0];
  CHECK(c > 0.0);
  for (int i = 0; i < 64; ++i) {
    CHECK(ax[i] == doctest::Approx(c * x[i]).epsilon(1e-9));
  }
}

TEST_CASE("gaussian_blur_operator: constant image stays constant inside") {
  const int n = 16, band = 4;
  auto op = gaussian_blur_operator(n, band, 1.2);
  const Vector out = op->apply(Vector::Ones(n * n));
  const double interior = out[(n / 2) * n + n / 2];
  for (int r = band - 1; r < n - band + 1; ++r) {
    for (int c = band - 1; c < n - band + 1; ++c) {
      CHECK(out[r * n + c] == doctest::Approx(interior).epsilon(1e-12));
    }
  }
  // Boundary attenuation only: corners see less kernel mass.
  CHECK(out[0] < interior);
}

TEST_CASE("gaussian_blur_operator vs a direct 2-D convolution oracle") {
  const int n = 16, band = 3;
  const double sigma = 0.7;
  auto op = gaussian_blur_operator(n, band, sigma);
  const Vector x = random_vector(n * n, 17);
  const Vector ax = op->apply(x);

  Vector t = Vector::Zero(band);
  for (int k = 0; k < band; ++k) {
    t[k] = std::exp(-0.5 * k * k / (sigma * sigma)) /
           (sigma * std::sqrt(2.0 * M_PI));
  }
  for (int r = band - 1; r < n - band + 1; ++r) {
    for (int c = band - 1; c < n - band + 1; ++c) {
      double sum = 0.0;
      for (int dr = -band + 1; dr < band; ++dr) {
        for (int dc = -band + 1; dc < band; ++dc) {
          sum += t[std::abs(dr)] * t[std::abs(dc)] * x[(r + dr) * n + c + dc];
        }
      }
      CHECK(std::abs(ax[r * n + c] - sum) <=
            1e-12 * std::max(1.0, std::abs(sum)));
    }
  }
}

TEST_CASE("gaussian_blur_operator rejects bad parameters") {
  CHECK_THROWS_AS(gaussian_blur_operator(8, 8, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_blur_operator(8, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_blur_operator(8, 3, -1.0), std::invalid_argument);
}

TEST_CASE("tomo_ray_operator: axis-aligned rays cross unit cells") {
  const int n = 8;
  auto op = tomo_ray_operator(n, 1, n);  // one angle (theta = 0)
  const Eigen::MatrixXd a = op->to_dense();
  REQUIRE(a.rows() == n);
  for (int d = 0; d < n; ++d) {
    int nonzero = 0;
    for (int j = 0; j < n * n; ++j) {
      if (a(d, j) != 0.0) {
        ++nonzero;
        CHECK(a(d, j) == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
    CHECK(nonzero == n);
    // The ray at offset d runs through one image row.
    const int img_row = n - 1 - d;
    for (int c = 0; c < n; ++c) {
      CHECK(a(d, img_row * n + c) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("tomo_ray_operator row sums match the analytic chord length") {
  const int n = 16, n_angles = 12, n_det = 20;
  auto op = tomo_ray_operator(n, n_angles, n_det);
  const Vector sums = op->apply(Vector::Ones(n * n));
  const double extent = n;
  for (int a = 0; a < n_angles; ++a) {
    const double theta = M_PI * a / n_angles;
    const double ux = std::cos(theta), uy = std::sin(theta);
    for (int d = 0; d < n_det; ++d) {
      const double s = ((d + 0.5) / n_det - 0.5) * extent;
      const double px = extent / 2 - s * uy, py = extent / 2 + s * ux;
      const double chord = chord_length(px, py, ux, uy, extent);
      const int ray = a * n_det + d;
      CHECK(std::abs(sums[ray] - chord) <= 1e-10 * std::max(1.0, chord));
    }
  }
}

TEST_CASE("tomo_ray_operator entries lie in [0, cell diagonal]") {
  auto op = tomo_ray_operator(12, 7, 9);
  const Eigen::MatrixXd a = op->to_dense();
  CHECK(a.minCoeff() >= 0.0);
  CHECK(a.maxCoeff() <= std::sqrt(2.0) + 1e-12);
}

TEST_CASE("linear operators satisfy the adjoint identity") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd dense(6, 5);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 5; ++j) dense(i, j) = g(rng);
  check_adjoint(DenseOperator(dense), 100);
  check_adjoint(*gaussian_blur_operator(6, 2, 0.9), 200);
  check_adjoint(*tomo_ray_operator(6, 4, 7), 300);
  check_adjoint(RowSelectionOperator(9, {1, 4, 7}), 400);
}

TEST_CASE("row_partition block sizes and restacking") {
  const Eigen::MatrixXd a8 = Eigen::MatrixXd::Random(8, 3);
  const Vector y8 = random_vector(8, 5);
  auto blocks8 = row_partition(DenseOperator(a8), y8, 4);
  REQUIRE(blocks8.size() == 4);
  for (const auto& b : blocks8) CHECK(b.op->rows() == 2);

  const Eigen::MatrixXd a10 = Eigen::MatrixXd::Random(10, 3);
  const Vector y10 = random_vector(10, 6);
  auto blocks10 = row_partition(DenseOperator(a10), y10, 4);
  const std::vector<int> want_sizes = {3, 3, 2, 2};
  Eigen::MatrixXd stacked(10, 3);
  Vector ystacked(10);
  int row = 0;
  for (size_t j = 0; j < blocks10.size(); ++j) {
    CHECK(blocks10[j].op->rows() == want_sizes[j]);
    stacked.middleRows(row, blocks10[j].op->rows()) =
        blocks10[j].op->to_dense();
    ystacked.segment(row, blocks10[j].y.size()) = blocks10[j].y;
    row += blocks10[j].op->rows();
  }
  CHECK((stacked - a10).norm() == 0.0);
  CHECK((ystacked - y10).norm() == 0.0);
}

TEST_CASE("row_partition rejects N > m") {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(3, 2);
  CHECK_THROWS_AS(row_partition(DenseOperator(a), Vector::Zero(3), 4),
                  std::invalid_argument);
}

TEST_CASE("toy_nonlinear_operator: q = 0 reduces to A, hand value, FD check") {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.5, -0.3, 2.0;
  auto op0 = toy_nonlinear_operator(std::make_shared<DenseOperator>(a), 0.0);
  const Vector x = random_vector(2, 8);
  CHECK((op0->apply(x) - a * x).norm() <= 1e-15);

  auto id = std::make_shared<RowSelectionOperator>(2, std::vector<int>{0, 1});
  auto op1 = toy_nonlinear_operator(id, 1.0);
  Vector x12(2);
  x12 << 1.0, 2.0;
  Vector want(2);
  want << 2.0, 6.0;
  CHECK((op1->apply(x12) - want).norm() <= 1e-15);

  auto op = toy_nonlinear_operator(std::make_shared<DenseOperator>(a), 0.6);
  const Vector x0 = random_vector(2, 9), v = random_vector(2, 10);
  const Vector jv = op->jacobian_apply(x0, v);
  double best = std::numeric_limits<double>::infinity();
  for (double h : {1e-4, 1e-5, 1e-6, 1e-7}) {
    const Vector fd = (op->apply(x0 + h * v) - op->apply(x0 - h * v)) / (2 * h);
    best = std::min(best, (fd - jv).norm() / jv.norm());
  }
  CHECK(best <= 1e-5);
}

TEST_CASE("test images: range, determinism, and support margins") {
  for (int grid : {16, 32}) {
    for (const GridImage& img : {shepp_phantom(grid), blur_truth(grid)}) {
      CHECK(img.pixels.minCoeff() >= 0.0);
      CHECK(img.pixels.maxCoeff() <= 1.0);
      CHECK(img.pixels.maxCoeff() > 0.0);
      const int ring = grid / 16;
      for (int r = 0; r < grid; ++r) {
        for (int c = 0; c < grid; ++c) {
          const bool in_ring =
              r < ring || r >= grid - ring || c < ring || c >= grid - ring;
          if (in_ring) CHECK(img.pixels[r * grid + c] == 0.0);
        }
      }
    }
  }
  const GridImage a = shepp_phantom(24), b = shepp_phantom(24);
  CHECK((a.pixels - b.pixels).norm() == 0.0);
  const GridImage c = blur_truth(24), d = blur_truth(24);
  CHECK((c.pixels - d.pixels).norm() == 0.0);
}

TEST_CASE("nonlinear operators refuse linear-only entry points") {
  auto id = std::make_shared<RowSelectionOperator>(2, std::vector<int>{0, 1});
  auto toy = toy_nonlinear_operator(id, 0.5);
  CHECK_THROWS_AS(toy->apply_transpose(Vector::Zero(2)), std::logic_error);
  CHECK_THROWS_AS(toy->to_dense(), std::logic_error);
}
