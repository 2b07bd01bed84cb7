#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "uwadmm/matrix_market.hpp"
#include "uwadmm/operators.hpp"

using namespace uwadmm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("uwadmm_mm_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("coordinate identity file loads as the identity operator") {
  TempDir tmp;
  write_text(tmp.file("id.mtx"),
             "%%MatrixMarket matrix coordinate real general\n"
             "2 2 2\n"
             "1 1 1.0\n"
             "2 2 1.0\n");
  const auto a = load_matrix_market(tmp.file("id.mtx"));
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 2);
  CHECK((Eigen::MatrixXd(a) - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("symmetric storage expands to the full matrix") {
  TempDir tmp;
  write_text(tmp.file("sym.mtx"),
             "%%MatrixMarket matrix coordinate real symmetric\n"
             "% lower triangle only\n"
             "3 3 4\n"
             "1 1 2.0\n"
             "2 1 -1.0\n"
             "3 2 0.5\n"
             "3 3 4.0\n");
  const auto a = load_matrix_market(tmp.file("sym.mtx"));
  Eigen::MatrixXd want(3, 3);
  want << 2, -1, 0, -1, 0, 0.5, 0, 0.5, 4;
  CHECK((Eigen::MatrixXd(a) - want).norm() == 0.0);
}

TEST_CASE("skew-symmetric storage mirrors with negation") {
  TempDir tmp;
  write_text(tmp.file("skew.mtx"),
             "%%MatrixMarket matrix coordinate real skew-symmetric\n"
             "2 2 1\n"
             "2 1 3.0\n");
  const auto a = load_matrix_market(tmp.file("skew.mtx"));
  CHECK(a.coeff(1, 0) == 3.0);
  CHECK(a.coeff(0, 1) == -3.0);
}

TEST_CASE("array format loads dense columns") {
  TempDir tmp;
  write_text(tmp.file("arr.mtx"),
             "%%MatrixMarket matrix array real general\n"
             "2 2\n"
             "1.0\n2.0\n3.0\n4.0\n");
  const auto a = load_matrix_market(tmp.file("arr.mtx"));
  Eigen::MatrixXd want(2, 2);
  want << 1, 3, 2, 4;  // column-major storage
  CHECK((Eigen::MatrixXd(a) - want).norm() == 0.0);
}

TEST_CASE("parse errors name the offending line") {
  TempDir tmp;
  write_text(tmp.file("bad_header.mtx"), "%%NotMatrixMarket stuff\n1 1 0\n");
  CHECK_THROWS_WITH_AS(load_matrix_market(tmp.file("bad_header.mtx")),
                       doctest::Contains(":1:"), MatrixMarketError);

  write_text(tmp.file("bad_entry.mtx"),
             "%%MatrixMarket matrix coordinate real general\n"
             "2 2 2\n"
             "1 1 1.0\n"
             "oops\n");
  try {
    load_matrix_market(tmp.file("bad_entry.mtx"));
    FAIL("expected a parse error");
  } catch (const MatrixMarketError& e) {
    CHECK(e.line() == 4);
  }

  write_text(tmp.file("short.mtx"),
             "%%MatrixMarket matrix coordinate real general\n"
             "2 2 3\n"
             "1 1 1.0\n");
  CHECK_THROWS_AS(load_matrix_market(tmp.file("short.mtx")), MatrixMarketError);

  write_text(tmp.file("range.mtx"),
             "%%MatrixMarket matrix coordinate real general\n"
             "2 2 1\n"
             "3 1 1.0\n");
  CHECK_THROWS_AS(load_matrix_market(tmp.file("range.mtx")), MatrixMarketError);
}

TEST_CASE("complex and pattern fields are rejected explicitly") {
  TempDir tmp;
  write_text(tmp.file("cx.mtx"),
             "%%MatrixMarket matrix coordinate complex general\n"
             "1 1 1\n1 1 1.0 0.0\n");
  CHECK_THROWS_WITH_AS(load_matrix_market(tmp.file("cx.mtx")),
                       doctest::Contains("complex"), MatrixMarketError);
  write_text(tmp.file("pat.mtx"),
             "%%MatrixMarket matrix coordinate pattern general\n"
             "1 1 1\n1 1\n");
  CHECK_THROWS_WITH_AS(load_matrix_market(tmp.file("pat.mtx")),
                       doctest::Contains("pattern"), MatrixMarketError);
}

TEST_CASE("round trip preserves structure and values exactly") {
  TempDir tmp;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 19);
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < 60; ++k) {
    trips.emplace_back(pick(rng), pick(rng), g(rng));
  }
  Eigen::SparseMatrix<double> a(20, 20);
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();

  save_matrix_market(tmp.file("rt.mtx"), a);
  const auto b = load_matrix_market(tmp.file("rt.mtx"));
  REQUIRE(b.nonZeros() == a.nonZeros());
  CHECK((Eigen::MatrixXd(a) - Eigen::MatrixXd(b)).norm() == 0.0);

  // And a second write produces identical bytes.
  save_matrix_market(tmp.file("rt2.mtx"), b);
  std::ifstream f1(tmp.file("rt.mtx")), f2(tmp.file("rt2.mtx"));
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
}

TEST_CASE("vector array files round trip") {
  TempDir tmp;
  Vector v(4);
  v << 0.25, -1.75, 3.5, 1e-17;
  save_matrix_market_vector(tmp.file("v.mtx"), v);
  const Vector w = load_matrix_market_vector(tmp.file("v.mtx"));
  CHECK((v - w).norm() == 0.0);
}
