#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "uwadmm/types.hpp"

namespace uwadmm {

enum class OperatorKind { Dense, Sparse, IdentityBlock, ToyNonlinear };

/// Forward operator F: R^n -> R^m. Linear kinds provide apply_transpose and
/// matrix-backed row slicing; the toy nonlinear kind provides Jacobian
/// actions instead.
class ForwardOperator {
 public:
  virtual ~ForwardOperator() = default;

  virtual int rows() const = 0;
  virtual int cols() const = 0;
  virtual OperatorKind kind() const = 0;
  virtual bool linear() const { return true; }

  virtual Vector apply(const Vector& x) const = 0;
  virtual Vector apply_transpose(const Vector& v) const;

  /// J(x) v; for linear operators J = A independent of x.
  virtual Vector jacobian_apply(const Vector& x, const Vector& v) const;
  virtual Vector jacobian_transpose_apply(const Vector& x,
                                          const Vector& v) const;

  /// diag(J(x_lin)^T diag(noise_inv) J(x_lin)), exact where the matrix is
  /// materialized; used to assemble Jacobi preconditioners.
  virtual Vector normal_diag(const Vector& noise_inv, const Vector& x_lin) const;

  /// Contiguous row block [start, start+count) as a new operator.
  virtual std::shared_ptr<ForwardOperator> row_slice(int start,
                                                     int count) const;
  /// Arbitrary row subset as a new operator.
  virtual std::shared_ptr<ForwardOperator> row_select(
      const std::vector<int>& rows) const;

  /// Dense materialization, for small oracles only.
  virtual Eigen::MatrixXd to_dense() const;
  /// Sparse materialization (linear kinds).
  virtual Eigen::SparseMatrix<double> to_sparse() const;
};

class DenseOperator final : public ForwardOperator {
 public:
  explicit DenseOperator(Eigen::MatrixXd a) : a_(std::move(a)) {}

  int rows() const override { return static_cast<int>(a_.rows()); }
  int cols() const override { return static_cast<int>(a_.cols()); }
  OperatorKind kind() const override { return OperatorKind::Dense; }

  Vector apply(const Vector& x) const override { return a_ * x; }
  Vector apply_transpose(const Vector& v) const override {
    return a_.transpose() * v;
  }
  Vector normal_diag(const Vector& noise_inv, const Vector&) const override;
  std::shared_ptr<ForwardOperator> row_slice(int start, int count) const override;
  std::shared_ptr<ForwardOperator> row_select(
      const std::vector<int>& rows) const override;
  Eigen::MatrixXd to_dense() const override { return a_; }

  const Eigen::MatrixXd& matrix() const { return a_; }

 private:
  Eigen::MatrixXd a_;
};

class SparseOperator final : public ForwardOperator {
 public:
  explicit SparseOperator(Eigen::SparseMatrix<double> a) : a_(std::move(a)) {
    a_.makeCompressed();
  }

  int rows() const override { return static_cast<int>(a_.rows()); }
  int cols() const override { return static_cast<int>(a_.cols()); }
  OperatorKind kind() const override { return OperatorKind::Sparse; }

  Vector apply(const Vector& x) const override { return a_ * x; }
  Vector apply_transpose(const Vector& v) const override {
    return a_.transpose() * v;
  }
  Vector normal_diag(const Vector& noise_inv, const Vector&) const override;
  std::shared_ptr<ForwardOperator> row_slice(int start, int count) const override;
  std::shared_ptr<ForwardOperator> row_select(
      const std::vector<int>& rows) const override;
  Eigen::MatrixXd to_dense() const override { return Eigen::MatrixXd(a_); }
  Eigen::SparseMatrix<double> to_sparse() const override { return a_; }

  const Eigen::SparseMatrix<double>& matrix() const { return a_; }

 private:
  Eigen::SparseMatrix<double> a_;
};

/// Row-selection operator I_j: picks a fixed index set of components.
class RowSelectionOperator final : public ForwardOperator {
 public:
  RowSelectionOperator(int n, std::vector<int> indices)
      : n_(n), idx_(std::move(indices)) {}

  int rows() const override { return static_cast<int>(idx_.size()); }
  int cols() const override { return n_; }
  OperatorKind kind() const override { return OperatorKind::IdentityBlock; }

  Vector apply(const Vector& x) const override;
  Vector apply_transpose(const Vector& v) const override;
  Vector normal_diag(const Vector& noise_inv, const Vector&) const override;
  std::shared_ptr<ForwardOperator> row_slice(int start, int count) const override;
  std::shared_ptr<ForwardOperator> row_select(
      const std::vector<int>& rows) const override;
  Eigen::MatrixXd to_dense() const override;
  Eigen::SparseMatrix<double> to_sparse() const override;

  const std::vector<int>& indices() const { return idx_; }

 private:
  int n_;
  std::vector<int> idx_;
};

/// F(x) = A x + q (A x) o (A x), with analytic Jacobian
/// J(x) = (I + 2 q diag(A x)) A. Stand-in for nonlinear forward models.
class ToyNonlinearOperator final : public ForwardOperator {
 public:
  ToyNonlinearOperator(std::shared_ptr<const ForwardOperator> a, double q);

  int rows() const override { return a_->rows(); }
  int cols() const override { return a_->cols(); }
  OperatorKind kind() const override { return OperatorKind::ToyNonlinear; }
  bool linear() const override { return false; }

  Vector apply(const Vector& x) const override;
  Vector jacobian_apply(const Vector& x, const Vector& v) const override;
  Vector jacobian_transpose_apply(const Vector& x,
                                  const Vector& v) const override;
  Vector normal_diag(const Vector& noise_inv, const Vector& x_lin) const override;

  double q() const { return q_; }
  const ForwardOperator& inner() const { return *a_; }

 private:
  std::shared_ptr<const ForwardOperator> a_;
  double q_;
};

/// Grid image, row-major pixels.
struct GridImage {
  int width = 0;
  int height = 0;
  Vector pixels;

  int n() const { return width * height; }
};

/// Quadrant pixel-index sets of a width x height grid, in order
/// top-left, top-right, bottom-left, bottom-right.
std::vector<std::vector<int>> quadrant_indices(int width, int height);

/// Four row-selection operators picking the quadrant pixels of the grid.
std::vector<std::pair<std::shared_ptr<ForwardOperator>, std::vector<int>>>
identity_partition(int width, int height, int n_parts = 4);

/// Separable Gaussian blur A = T (x) T, T banded symmetric Toeplitz with
/// first-column entries exp(-k^2/(2 sigma^2))/(sigma sqrt(2 pi)) for
/// k < band.
std::shared_ptr<ForwardOperator> gaussian_blur_operator(int grid_n, int band,
                                                        double sigma);

/// Parallel-beam ray transform on a grid_n x grid_n grid of unit cells:
/// angles uniform in [0, pi), detectors spanning the grid, entries are
/// ray-cell intersection lengths (Siddon traversal).
std::shared_ptr<ForwardOperator> tomo_ray_operator(int grid_n, int n_angles,
                                                   int n_detectors);

struct RowBlock {
  std::shared_ptr<ForwardOperator> op;
  Vector y;
  int start = 0;  // first original row (contiguous partitions)
};

/// Contiguous row blocks of sizes floor(m/N) or ceil(m/N); remainder rows
/// go one per block starting from the first.
std::vector<RowBlock> row_partition(const ForwardOperator& a, const Vector& y,
                                    int n_blocks);

std::shared_ptr<ForwardOperator> toy_nonlinear_operator(
    std::shared_ptr<const ForwardOperator> a, double q);

/// Deterministic piecewise-constant ellipse phantom, values in [0,1],
/// support inside the boundary ring of width grid_n/16.
GridImage shepp_phantom(int grid_n);

/// Deterministic piecewise-smooth deblurring test image, values in [0,1].
GridImage blur_truth(int grid_n);

}  // namespace uwadmm
