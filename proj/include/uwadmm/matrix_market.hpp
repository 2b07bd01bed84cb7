#pragma once

#include <Eigen/SparseCore>

#include <stdexcept>
#include <string>

#include "uwadmm/types.hpp"

namespace uwadmm {

/// Parse failure with the offending file and 1-based line number.
class MatrixMarketError : public std::runtime_error {
 public:
  MatrixMarketError(const std::string& path, long line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// Load a MatrixMarket file (coordinate or array; real or integer field;
/// general, symmetric, or skew-symmetric storage). Complex and pattern
/// fields are rejected. Symmetric storage is expanded.
Eigen::SparseMatrix<double> load_matrix_market(const std::string& path);

void save_matrix_market(const std::string& path,
                        const Eigen::SparseMatrix<double>& a);

/// Dense vectors as MatrixMarket array files (m x 1).
Vector load_matrix_market_vector(const std::string& path);
void save_matrix_market_vector(const std::string& path, const Vector& v);

}  // namespace uwadmm
