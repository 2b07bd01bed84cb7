#include "uwadmm/matrix_market.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace uwadmm {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(c));
  return s;
}

struct Header {
  bool coordinate = true;
  std::string field;
  std::string symmetry;
};

Header parse_header(const std::string& path, const std::string& line) {
  std::istringstream is(line);
  std::string banner, object, format, field, symmetry;
  is >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") {
    throw MatrixMarketError(path, 1, "missing %%MatrixMarket banner");
  }
  if (lower(object) != "matrix") {
    throw MatrixMarketError(path, 1, "unsupported object '" + object + "'");
  }
  Header h;
  format = lower(format);
  if (format == "coordinate") {
    h.coordinate = true;
  } else if (format == "array") {
    h.coordinate = false;
  } else {
    throw MatrixMarketError(path, 1, "unsupported format '" + format + "'");
  }
  h.field = lower(field);
  if (h.field == "complex") {
    throw MatrixMarketError(path, 1, "complex field is not supported");
  }
  if (h.field == "pattern") {
    throw MatrixMarketError(path, 1, "pattern field is not supported");
  }
  if (h.field != "real" && h.field != "integer" && h.field != "double") {
    throw MatrixMarketError(path, 1, "unsupported field '" + field + "'");
  }
  h.symmetry = lower(symmetry);
  if (h.symmetry != "general" && h.symmetry != "symmetric" &&
      h.symmetry != "skew-symmetric") {
    throw MatrixMarketError(path, 1,
                            "unsupported symmetry '" + symmetry + "'");
  }
  return h;
}

}  // namespace

Eigen::SparseMatrix<double> load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MatrixMarketError(path, 0, "cannot open file");

  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) {
    throw MatrixMarketError(path, 1, "empty file");
  }
  ++line_no;
  const Header h = parse_header(path, line);

  auto next_data_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      size_t i = line.find_first_not_of(" \t\r");
      if (i == std::string::npos) continue;
      if (line[i] == '%') continue;
      return true;
    }
    return false;
  };

  if (!next_data_line()) {
    throw MatrixMarketError(path, line_no, "missing size line");
  }

  long m = 0, n = 0, nnz = 0;
  {
    std::istringstream is(line);
    if (h.coordinate) {
      if (!(is >> m >> n >> nnz) || m <= 0 || n <= 0 || nnz < 0) {
        throw MatrixMarketError(path, line_no, "bad coordinate size line");
      }
    } else {
      if (!(is >> m >> n) || m <= 0 || n <= 0) {
        throw MatrixMarketError(path, line_no, "bad array size line");
      }
    }
  }

  std::vector<Eigen::Triplet<double>> trips;
  if (h.coordinate) {
    trips.reserve(static_cast<size_t>(nnz) * (h.symmetry == "general" ? 1 : 2));
    for (long k = 0; k < nnz; ++k) {
      if (!next_data_line()) {
        throw MatrixMarketError(path, line_no,
                                "unexpected end of file: expected " +
                                    std::to_string(nnz) + " entries");
      }
      std::istringstream is(line);
      long i = 0, j = 0;
      double v = 0.0;
      if (!(is >> i >> j >> v)) {
        throw MatrixMarketError(path, line_no, "malformed entry");
      }
      if (i < 1 || i > m || j < 1 || j > n) {
        throw MatrixMarketError(path, line_no, "entry index out of range");
      }
      trips.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
      if (i != j) {
        if (h.symmetry == "symmetric") {
          trips.emplace_back(static_cast<int>(j - 1), static_cast<int>(i - 1),
                             v);
        } else if (h.symmetry == "skew-symmetric") {
          trips.emplace_back(static_cast<int>(j - 1), static_cast<int>(i - 1),
                             -v);
        }
      }
    }
  } else {
    // Array format stores the full (or lower-triangular) matrix col-major.
    const bool general = h.symmetry == "general";
    for (long j = 0; j < n; ++j) {
      const long i_start = general ? 0 : j;
      for (long i = i_start; i < m; ++i) {
        if (!next_data_line()) {
          throw MatrixMarketError(path, line_no, "unexpected end of file");
        }
        std::istringstream is(line);
        double v = 0.0;
        if (!(is >> v)) {
          throw MatrixMarketError(path, line_no, "malformed value");
        }
        if (v != 0.0) {
          trips.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
          if (i != j && h.symmetry == "symmetric") {
            trips.emplace_back(static_cast<int>(j), static_cast<int>(i), v);
          } else if (i != j && h.symmetry == "skew-symmetric") {
            trips.emplace_back(static_cast<int>(j), static_cast<int>(i), -v);
          }
        }
      }
    }
  }

  Eigen::SparseMatrix<double> a(static_cast<int>(m), static_cast<int>(n));
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  return a;
}

void save_matrix_market(const std::string& path,
                        const Eigen::SparseMatrix<double>& a) {
  std::ofstream out(path);
  if (!out) throw MatrixMarketError(path, 0, "cannot open file for writing");
  Eigen::SparseMatrix<double> c = a;
  c.makeCompressed();
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << c.rows() << " " << c.cols() << " " << c.nonZeros() << "\n";
  char buf[64];
  for (int k = 0; k < c.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(c, k); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%.17g", it.value());
      out << (it.row() + 1) << " " << (it.col() + 1) << " " << buf << "\n";
    }
  }
}

Vector load_matrix_market_vector(const std::string& path) {
  const Eigen::SparseMatrix<double> a = load_matrix_market(path);
  if (a.cols() != 1) {
    throw MatrixMarketError(path, 0, "expected a single-column matrix");
  }
  return Vector(a);
}

void save_matrix_market_vector(const std::string& path, const Vector& v) {
  std::ofstream out(path);
  if (!out) throw MatrixMarketError(path, 0, "cannot open file for writing");
  out << "%%MatrixMarket matrix array real general\n";
  out << v.size() << " 1\n";
  char buf[64];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    out << buf << "\n";
  }
}

}  // namespace uwadmm
