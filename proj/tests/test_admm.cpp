#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "uwadmm/admm.hpp"
#include "uwadmm/harness.hpp"
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

Subproblem make_sub(std::shared_ptr<const ForwardOperator> op, Vector y,
                    PriorSpec prior) {
  Subproblem sub;
  sub.op = std::move(op);
  sub.noise.diag = Vector::Ones(y.size());
  sub.y = std::move(y);
  sub.weight = DiagonalWeight::identity(prior.n());
  sub.prior = std::move(prior);
  return sub;
}

// Random consensus problem with overdetermined blocks; the local priors
// carry alpha/N so the consensus objective equals the joint MAP objective.
Problem random_consensus_problem(int n, int m, int n_subs, double alpha,
                                 uint64_t seed) {
  Problem prob;
  prob.prior = PriorSpec::smallness(n, alpha);
  const PriorSpec local = PriorSpec::smallness(n, alpha / n_subs);
  Eigen::MatrixXd a(m, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng) / std::sqrt(n);
  const Vector x_true = random_vector(n, seed + 1);
  const Vector y = a * x_true;
  auto blocks = row_partition(DenseOperator(a), y, n_subs);
  for (auto& blk : blocks) {
    prob.subs.push_back(make_sub(blk.op, blk.y, local));
  }
  return prob;
}

}  // namespace

TEST_CASE("x_step: pure data fit when the penalty vanishes") {
  // F = identity, R ~ 0, W = I, rho = 0, u = 0 -> x = y.
  const int n = 5;
  auto id = std::make_shared<RowSelectionOperator>(
      n, std::vector<int>{0, 1, 2, 3, 4});
  Subproblem sub;
  sub.op = id;
  sub.y = random_vector(n, 2);
  sub.noise.diag = Vector::Ones(n);
  sub.prior.kind = PriorKind::Smallness;
  sub.prior.alpha = 0.0;  // degenerate limit; bypasses the factory check
  sub.prior.inv_cov_diag = Vector::Constant(n, 1e-30);
  sub.weight = DiagonalWeight::identity(n);
  AdmmConfig cfg;
  cfg.inner.pcg_tol = 1e-14;
  cfg.inner.max_pcg = 100;
  const XStepResult res =
      x_step(sub, Vector::Zero(n), Vector::Zero(n), 0.0, cfg, Vector::Zero(n));
  CHECK(res.ok);
  CHECK((res.x - sub.y).norm() <= 1e-12 * sub.y.norm());
}

TEST_CASE("x_step: scalar hand example") {
  // A = 1, y = 0, alpha = 0, W = 1, rho = 1, z = 2, u = 0:
  // minimize 0.5 x^2 + 0.5 (x - 2)^2 -> x = 1.
  auto id = std::make_shared<RowSelectionOperator>(1, std::vector<int>{0});
  Subproblem sub;
  sub.op = id;
  sub.y = Vector::Zero(1);
  sub.noise.diag = Vector::Ones(1);
  sub.prior.kind = PriorKind::Smallness;
  sub.prior.alpha = 0.0;
  sub.prior.inv_cov_diag = Vector::Constant(1, 1e-30);
  sub.weight = DiagonalWeight::identity(1);
  AdmmConfig cfg;
  cfg.inner.pcg_tol = 1e-14;
  const XStepResult res = x_step(sub, Vector::Constant(1, 2.0), Vector::Zero(1),
                                 1.0, cfg, Vector::Zero(1));
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("x_step matches a dense solve of the normal equations") {
  const int n = 7, m = 9;
  Eigen::MatrixXd a(m, n);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  const double alpha = 0.03, rho = 2.5;
  Subproblem sub = make_sub(std::make_shared<DenseOperator>(a),
                            random_vector(m, 5), PriorSpec::smallness(n, alpha));
  sub.weight.diag = random_vector(n, 6).array().abs() + 0.5;
  const Vector z = random_vector(n, 7);
  const Vector u = random_vector(n, 8);

  AdmmConfig cfg;
  cfg.inner.pcg_tol = 1e-13;
  cfg.inner.max_pcg = 2000;
  const XStepResult res = x_step(sub, z, u, rho, cfg, Vector::Zero(n));

  const Vector w2 = sub.weight.diag.cwiseProduct(sub.weight.diag);
  Eigen::MatrixXd h = a.transpose() * a;
  h += alpha * Eigen::MatrixXd::Identity(n, n);
  h += rho * Eigen::MatrixXd(w2.asDiagonal());
  const Vector rhs = a.transpose() * sub.y + rho * w2.cwiseProduct(z) -
                     sub.weight.diag.cwiseProduct(u);
  const Vector want = h.ldlt().solve(rhs);
  CHECK((res.x - want).norm() / want.norm() <= 1e-8);
}

TEST_CASE("z_step: unweighted average, weighted hand case, dual pull") {
  const int n = 3;
  std::vector<Vector> x = {random_vector(n, 10), random_vector(n, 11)};
  std::vector<Vector> u = {random_vector(n, 12), random_vector(n, 13)};
  std::vector<DiagonalWeight> w = {DiagonalWeight::identity(n),
                                   DiagonalWeight::identity(n)};
  const double rho = 1.7;
  const Vector z = z_step(x, u, w, rho);
  // Mirror of the unweighted formula: mean of x_j + (1/rho) u_j.
  const double inv_rho = 1.0 / rho;
  Vector acc = Vector::Zero(n);
  for (size_t j = 0; j < x.size(); ++j) acc += x[j] + inv_rho * u[j];
  const Vector want = acc / 2.0;
  CHECK((z - want).norm() == 0.0);  // exact, same accumulation order

  // N = 2, n = 1, W = (2, 1), x = (1, 4), u = 0 -> z = (4*1 + 1*4)/5.
  std::vector<Vector> x1 = {Vector::Constant(1, 1.0), Vector::Constant(1, 4.0)};
  std::vector<Vector> u1 = {Vector::Zero(1), Vector::Zero(1)};
  std::vector<DiagonalWeight> w1 = {DiagonalWeight{Vector::Constant(1, 2.0)},
                                    DiagonalWeight{Vector::Constant(1, 1.0)}};
  CHECK(z_step(x1, u1, w1, 1.0)[0] == doctest::Approx(1.6).epsilon(1e-15));

  // N = 1, W = I, x = 0, u = 4, rho = 2 -> z = 2.
  std::vector<Vector> x2 = {Vector::Zero(1)};
  std::vector<Vector> u2 = {Vector::Constant(1, 4.0)};
  std::vector<DiagonalWeight> w2 = {DiagonalWeight::identity(1)};
  CHECK(z_step(x2, u2, w2, 2.0)[0] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("z_step rejects invalid inputs") {
  std::vector<Vector> x = {Vector::Zero(2)};
  std::vector<Vector> u = {Vector::Zero(2)};
  std::vector<DiagonalWeight> w = {DiagonalWeight::identity(2)};
  CHECK_THROWS_AS(z_step(x, u, w, 0.0), std::invalid_argument);
  std::vector<DiagonalWeight> wz = {DiagonalWeight{Vector::Zero(2)}};
  CHECK_THROWS_AS(z_step(x, u, wz, 1.0), std::runtime_error);
}

TEST_CASE("u_step: fixed point, hand value, and dual-sum identity") {
  const int n = 2;
  const Vector z = random_vector(n, 20);
  const DiagonalWeight w = DiagonalWeight::identity(n);
  const Vector u = random_vector(n, 21);
  CHECK((u_step(u, z, z, w, 3.0) - u).norm() == 0.0);

  DiagonalWeight w3{Vector::Constant(1, 3.0)};
  const Vector got = u_step(Vector::Zero(1), Vector::Constant(1, 1.0),
                            Vector::Zero(1), w3, 2.0);
  CHECK(got[0] == doctest::Approx(6.0));

  // With u0 = 0, W = I, and an exact z-step, sum_j u_j stays zero.
  std::vector<Vector> x = {random_vector(n, 22), random_vector(n, 23),
                           random_vector(n, 24)};
  std::vector<Vector> u0 = {Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
  std::vector<DiagonalWeight> ws(3, DiagonalWeight::identity(n));
  const double rho = 1.3;
  Vector zs = z_step(x, u0, ws, rho);
  Vector sum = Vector::Zero(n);
  for (int j = 0; j < 3; ++j) sum += u_step(u0[j], x[j], zs, ws[j], rho);
  CHECK(sum.norm() <= 1e-10);
}

TEST_CASE("residuals: zero case, hand norms, and weight scaling") {
  const int n = 2;
  ConsensusState st;
  st.z = random_vector(n, 30);
  st.x = {st.z};
  st.u = {Vector::Zero(n)};
  st.rho = 1.0;
  std::vector<DiagonalWeight> w = {DiagonalWeight::identity(n)};
  const ResidualNorms zero = residuals(st, st.z, w);
  CHECK(zero.r_norm == 0.0);
  CHECK(zero.s_norm == 0.0);

  ConsensusState st2;
  st2.z = Vector::Zero(2);
  Vector x(2);
  x << 3.0, 4.0;
  st2.x = {x};
  st2.u = {Vector::Zero(2)};
  st2.rho = 1.0;
  const ResidualNorms rn = residuals(st2, st2.z, w);
  CHECK(rn.r_norm == doctest::Approx(5.0));
  CHECK(rn.s_norm == doctest::Approx(0.0));

  // Doubling every weight doubles both norms.
  ConsensusState st3;
  st3.z = random_vector(n, 31);
  st3.x = {random_vector(n, 32), random_vector(n, 33)};
  st3.u = {Vector::Zero(n), Vector::Zero(n)};
  st3.rho = 2.0;
  const Vector z_prev = random_vector(n, 34);
  std::vector<DiagonalWeight> w1(2, DiagonalWeight::identity(n));
  std::vector<DiagonalWeight> w2(2, DiagonalWeight{Vector::Constant(n, 2.0)});
  const ResidualNorms a = residuals(st3, z_prev, w1);
  const ResidualNorms b = residuals(st3, z_prev, w2);
  CHECK(std::abs(b.r_norm - 2.0 * a.r_norm) <= 1e-12 * b.r_norm);
  CHECK(std::abs(b.s_norm - 2.0 * a.s_norm) <= 1e-12 * b.s_norm);
}

TEST_CASE("adapt_rho: all three branches and the floor") {
  AdmmConfig cfg;  // mu = 10, tau = 2, rho_min = 1e-12
  CHECK(adapt_rho(1.0, 11.0, 1.0, cfg) == doctest::Approx(2.0));
  CHECK(adapt_rho(1.0, 1.0, 11.0, cfg) == doctest::Approx(0.5));
  CHECK(adapt_rho(1.0, 3.0, 3.0, cfg) == 1.0);
  // Exact boundary r = mu s holds (strict inequality).
  CHECK(adapt_rho(1.0, 10.0, 1.0, cfg) == 1.0);
  // The decrease branch clamps at rho_min.
  CHECK(adapt_rho(1.5e-12, 0.0, 1.0, cfg) == doctest::Approx(1e-12));
}

TEST_CASE("run_sync: single identity subproblem converges to the data") {
  // With one subproblem the primal residual is identically zero, so the
  // z iterate tracks the x-step; a small rho leaves the data term dominant.
  const int n = 6;
  auto id = std::make_shared<RowSelectionOperator>(
      n, std::vector<int>{0, 1, 2, 3, 4, 5});
  Problem prob;
  prob.prior = PriorSpec::smallness(n, 1e-10);
  prob.subs.push_back(make_sub(id, random_vector(n, 40), prob.prior));
  AdmmConfig cfg;
  cfg.rho0 = 1e-9;
  cfg.rho_min = 1e-14;
  cfg.max_outer = 5;
  cfg.inner.pcg_tol = 1e-14;
  const AdmmResult res = run_sync(prob, cfg);
  CHECK(res.trace.rows.size() <= 5);
  CHECK((res.z - prob.subs[0].y).norm() <= 1e-8 * prob.subs[0].y.norm());
}

TEST_CASE("run_sync reaches the dense MAP oracle on a convex quadratic") {
  Problem prob = random_consensus_problem(48, 240, 4, 1e-2, 1234);
  AdmmConfig cfg;
  cfg.rho0 = 5.0;
  cfg.max_outer = 200;
  cfg.eps_pri = 1e-300;
  cfg.eps_dual = 1e-300;
  cfg.inner.pcg_tol = 1e-12;
  cfg.inner.max_pcg = 2000;
  const AdmmResult res = run_sync(prob, cfg);
  const Vector want = harness::dense_map_oracle(prob);
  CHECK((res.z - want).norm() / want.norm() <= 1e-6);
}

TEST_CASE("run_sync is deterministic and monotone at checkpoints") {
  Problem prob = random_consensus_problem(30, 150, 4, 1e-2, 77);
  AdmmConfig cfg;
  cfg.rho0 = 5.0;
  cfg.max_outer = 200;
  cfg.eps_pri = 1e-300;
  cfg.eps_dual = 1e-300;
  cfg.inner.pcg_tol = 1e-12;
  cfg.inner.max_pcg = 1000;
  const AdmmResult a = run_sync(prob, cfg);
  const AdmmResult b = run_sync(prob, cfg);
  CHECK((a.z - b.z).norm() == 0.0);
  REQUIRE(a.trace.rows.size() == b.trace.rows.size());
  for (size_t k = 0; k < a.trace.rows.size(); ++k) {
    CHECK(a.trace.rows[k].misfit == b.trace.rows[k].misfit);
    CHECK(a.trace.rows[k].r_norm == b.trace.rows[k].r_norm);
    CHECK(a.trace.rows[k].s_norm == b.trace.rows[k].s_norm);
    CHECK(a.trace.rows[k].rho == b.trace.rows[k].rho);
  }
  // Residual trend: far better at iteration 200 than at iteration 20.
  const auto& rows = a.trace.rows;
  REQUIRE(rows.size() == 200);
  const double early = std::max(rows[19].r_norm, rows[19].s_norm);
  const double late = std::max(rows[199].r_norm, rows[199].s_norm);
  CHECK(late <= early);
}

TEST_CASE("run_sync honors explicit stopping tolerances") {
  Problem prob = random_consensus_problem(20, 100, 4, 1e-2, 55);
  AdmmConfig cfg;
  cfg.rho0 = 5.0;
  cfg.max_outer = 50;
  cfg.eps_pri = 1e10;
  cfg.eps_dual = 1e10;
  const AdmmResult res = run_sync(prob, cfg);
  CHECK(res.trace.rows.size() == 1);  // first iterate already satisfies both
  CHECK(res.trace.status == "converged");

  AdmmConfig cfg2 = cfg;
  cfg2.eps_pri = 1e-4;
  cfg2.eps_dual = 1e-4;
  cfg2.inner.pcg_tol = 1e-12;
  cfg2.inner.max_pcg = 1000;
  cfg2.max_outer = 500;
  const AdmmResult res2 = run_sync(prob, cfg2);
  REQUIRE(res2.trace.status == "converged");
  const auto& rows = res2.trace.rows;
  REQUIRE(rows.size() >= 2);
  CHECK(rows.back().r_norm <= 1e-4);
  CHECK(rows.back().s_norm <= 1e-4);
  // The previous iterate did not satisfy both tests (first-stop property).
  const auto& prev = rows[rows.size() - 2];
  CHECK((prev.r_norm > 1e-4 || prev.s_norm > 1e-4));
}

TEST_CASE("run_sync with all-ones weights equals the unweighted algorithm") {
  Problem prob = random_consensus_problem(16, 80, 4, 1e-2, 91);
  AdmmConfig cfg;
  cfg.rho0 = 2.0;
  cfg.max_outer = 30;
  cfg.eps_pri = 1e-300;
  cfg.eps_dual = 1e-300;
  cfg.inner.pcg_tol = 1e-12;
  cfg.inner.max_pcg = 500;
  // Identity weights are the construction default; re-attaching them must
  // not change the trajectory at all.
  const AdmmResult a = run_sync(prob, cfg);
  for (auto& sub : prob.subs) sub.weight = DiagonalWeight::identity(prob.n());
  const AdmmResult b = run_sync(prob, cfg);
  CHECK((a.z - b.z).norm() == 0.0);

  // With zero initial duals and exact z-steps the duals stay balanced.
  Vector dual_sum = Vector::Zero(prob.n());
  for (const auto& u : b.state.u) dual_sum += u;
  CHECK(dual_sum.norm() <= 1e-10);
}

TEST_CASE("AdmmTrace CSV headers") {
  AdmmTrace t;
  t.rows.push_back({1, 0.0, 1.0, 0.5, 0.1, 0.2, 5.0, 0, "", 0});
  std::ostringstream os;
  t.write_csv(os);
  CHECK(os.str().find("iter,time_s,misfit,relerr,r_norm,s_norm,rho\n") == 0);

  AdmmTrace ta;
  ta.async = true;
  ta.rows.push_back({1, 0.0, 1.0, 0.5, 0.1, 0.2, 5.0, 1, "0;2", 1});
  std::ostringstream osa;
  ta.write_csv(osa);
  CHECK(osa.str().find(
            "iter,time_s,misfit,relerr,r_norm,s_norm,rho,updates,"
            "reporter_set,max_staleness\n") == 0);
  CHECK(osa.str().find("0;2") != std::string::npos);
}

TEST_CASE("run_sync per-iteration weight refresh hook") {
  Problem prob = random_consensus_problem(12, 60, 4, 1e-2, 314);
  AdmmConfig cfg;
  cfg.rho0 = 5.0;
  cfg.max_outer = 6;
  cfg.eps_pri = 1e-300;
  cfg.eps_dual = 1e-300;
  cfg.inner.pcg_tol = 1e-10;
  cfg.weight_refresh_rank = 4;
  cfg.weight_refresh_seed = 7;
  const AdmmResult a = run_sync(prob, cfg);
  const AdmmResult b = run_sync(prob, cfg);
  CHECK((a.z - b.z).norm() == 0.0);  // refresh stays deterministic
  cfg.weight_refresh_rank = 0;
  const AdmmResult off = run_sync(prob, cfg);
  CHECK((a.z - off.z).norm() > 0.0);  // and actually changes the weights
}
