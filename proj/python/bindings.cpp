#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "uwadmm/admm.hpp"
#include "uwadmm/async.hpp"
#include "uwadmm/core.hpp"
#include "uwadmm/harness.hpp"
#include "uwadmm/operators.hpp"
#include "uwadmm/solvers.hpp"
#include "uwadmm/uq_weights.hpp"

namespace py = pybind11;
using namespace uwadmm;

namespace {

Eigen::MatrixXd trace_matrix(const AdmmTrace& trace) {
  Eigen::MatrixXd m(trace.rows.size(), 7);
  for (size_t i = 0; i < trace.rows.size(); ++i) {
    const auto& r = trace.rows[i];
    m.row(i) << r.iter, r.time_s, r.misfit, r.relerr, r.r_norm, r.s_norm, r.rho;
  }
  return m;
}

AdmmConfig make_admm_config(double rho0, int max_outer, double pcg_tol,
                            int max_pcg, double eps_pri, double eps_dual) {
  AdmmConfig cfg;
  cfg.rho0 = rho0;
  cfg.max_outer = max_outer;
  cfg.inner.pcg_tol = pcg_tol;
  cfg.inner.max_pcg = max_pcg;
  cfg.eps_pri = eps_pri;
  cfg.eps_dual = eps_dual;
  return cfg;
}

Problem make_consensus_problem(const Eigen::MatrixXd& a, const Vector& y,
                               int n_blocks, double alpha,
                               const Vector& noise_diag) {
  if (a.rows() != y.size()) throw std::invalid_argument("A/y row mismatch");
  const int n = static_cast<int>(a.cols());
  Problem prob;
  prob.prior = PriorSpec::smallness(n, alpha);
  const PriorSpec local = PriorSpec::smallness(n, alpha / n_blocks);
  DenseOperator full(a);
  const auto blocks = row_partition(full, y, n_blocks);
  int start = 0;
  for (const auto& blk : blocks) {
    Subproblem sub;
    sub.op = blk.op;
    sub.y = blk.y;
    const int m = static_cast<int>(blk.y.size());
    sub.noise.diag = noise_diag.size()
                         ? Vector(noise_diag.segment(start, m))
                         : Vector(Vector::Ones(m));
    sub.prior = local;
    sub.weight = DiagonalWeight::identity(n);
    prob.subs.push_back(std::move(sub));
    start += m;
  }
  return prob;
}

}  // namespace

PYBIND11_MODULE(_uwadmm, m) {
  m.doc() = "Uncertainty-weighted consensus ADMM for distributed regularized "
            "least squares";

  py::class_<Problem>(m, "Problem")
      .def_property_readonly("n", &Problem::n)
      .def_property_readonly("n_subs", &Problem::n_subs)
      .def_property_readonly("weights", [](const Problem& p) {
        std::vector<Vector> w;
        for (const auto& sub : p.subs) w.push_back(sub.weight.diag);
        return w;
      });

  m.def("consensus_problem", &make_consensus_problem, py::arg("A"),
        py::arg("y"), py::arg("n_blocks") = 4, py::arg("alpha") = 1e-2,
        py::arg("noise_diag") = Vector(),
        "Split A, y into contiguous row blocks with a smallness prior "
        "(alpha counted once across the consensus objective).");

  m.def(
      "build_problem",
      [](const std::string& config_text) {
        const auto cfg = harness::RunConfig::from_string(config_text);
        harness::GeneratedProblem gp = harness::build_problem(cfg);
        return py::make_tuple(gp.problem, gp.x_true);
      },
      py::arg("config"),
      "Build a generator problem from flat key=value config text; returns "
      "(problem, x_true).");

  m.def(
      "compute_weights",
      [](Problem& prob, int rank, uint64_t seed) {
        const WeightReport rep = harness::attach_weights(prob, rank, seed);
        std::vector<Vector> w;
        for (const auto& d : rep.weights) w.push_back(d.diag);
        return w;
      },
      py::arg("problem"), py::arg("rank") = 10, py::arg("seed") = 0,
      "Attach rank-r uncertainty weights (returns the weight diagonals).");

  m.def(
      "set_identity_weights",
      [](Problem& prob) { harness::attach_identity_weights(prob); },
      py::arg("problem"));

  m.def(
      "solve_sync",
      [](const Problem& prob, double rho0, int max_outer, double pcg_tol,
         int max_pcg, double eps_pri, double eps_dual, py::object truth) {
        const AdmmConfig cfg = make_admm_config(rho0, max_outer, pcg_tol,
                                                max_pcg, eps_pri, eps_dual);
        Vector t;
        const Vector* tp = nullptr;
        if (!truth.is_none()) {
          t = truth.cast<Vector>();
          tp = &t;
        }
        const AdmmResult res = run_sync(prob, cfg, tp);
        return py::make_tuple(res.z, trace_matrix(res.trace),
                              res.trace.status);
      },
      py::arg("problem"), py::arg("rho0") = 5.0, py::arg("max_outer") = 10,
      py::arg("pcg_tol") = 1e-8, py::arg("max_pcg") = 200,
      py::arg("eps_pri") = 0.0, py::arg("eps_dual") = 0.0,
      py::arg("truth") = py::none(),
      "Synchronous weighted consensus ADMM; returns (z, trace, status). "
      "Trace columns: iter, time_s, misfit, relerr, r_norm, s_norm, rho.");

  m.def(
      "solve_async",
      [](const Problem& prob, int n_a, int k_a, uint64_t seed,
         const std::vector<double>& latencies, double rho0, int max_outer,
         double pcg_tol, int max_pcg, py::object truth) {
        AsyncConfig cfg;
        cfg.admm = make_admm_config(rho0, max_outer, pcg_tol, max_pcg, 0.0,
                                    0.0);
        cfg.n_a = n_a;
        cfg.k_a = k_a;
        cfg.seed = seed;
        for (double v : latencies) cfg.latency.push_back(LatencyModel::fixed(v));
        Vector t;
        const Vector* tp = nullptr;
        if (!truth.is_none()) {
          t = truth.cast<Vector>();
          tp = &t;
        }
        const AdmmResult res = run_async(prob, cfg, tp);
        return py::make_tuple(res.z, trace_matrix(res.trace),
                              res.trace.status);
      },
      py::arg("problem"), py::arg("n_a"), py::arg("k_a") = 1,
      py::arg("seed") = 0, py::arg("latencies") = std::vector<double>{},
      py::arg("rho0") = 5.0, py::arg("max_outer") = 10,
      py::arg("pcg_tol") = 1e-8, py::arg("max_pcg") = 200,
      py::arg("truth") = py::none(),
      "Simulated asynchronous consensus ADMM with fixed per-worker "
      "latencies; returns (z, trace, status).");

  m.def(
      "gauss_newton",
      [](const Problem& prob, const Vector& x0, int max_outer, double pcg_tol,
         int max_pcg) {
        SolverConfig cfg;
        cfg.max_outer = max_outer;
        cfg.pcg_tol = pcg_tol;
        cfg.max_pcg = max_pcg;
        const SolveResult res = gauss_newton(prob, x0, cfg);
        return py::make_tuple(res.x, res.trace.status);
      },
      py::arg("problem"), py::arg("x0"), py::arg("max_outer") = 30,
      py::arg("pcg_tol") = 1e-8, py::arg("max_pcg") = 200);

  m.def(
      "nlcg",
      [](const Problem& prob, const Vector& x0, int max_outer) {
        SolverConfig cfg;
        cfg.max_outer = max_outer;
        const SolveResult res = nlcg(prob, x0, cfg);
        return py::make_tuple(res.x, res.trace.status);
      },
      py::arg("problem"), py::arg("x0"), py::arg("max_outer") = 100);

  m.def(
      "pcg",
      [](const Eigen::MatrixXd& a, const Vector& b, double tol, int max_iter) {
        auto apply = [&](const Vector& v) { return Vector(a * v); };
        const PcgResult res =
            pcg(apply, b, a.diagonal(), max_iter, tol, nullptr);
        return py::make_tuple(res.x, res.iters, res.rel_res);
      },
      py::arg("A"), py::arg("b"), py::arg("tol") = 1e-10,
      py::arg("max_iter") = 1000,
      "Jacobi-preconditioned CG on a dense SPD matrix.");

  m.def(
      "dense_posterior_covariance",
      [](const Eigen::MatrixXd& a, const Vector& noise_diag, double alpha) {
        NoiseCov noise{noise_diag};
        const PriorSpec prior =
            PriorSpec::smallness(static_cast<int>(a.cols()), alpha);
        return dense_posterior_covariance(a, noise, prior);
      },
      py::arg("A"), py::arg("noise_diag"), py::arg("alpha") = 1e-2);

  m.def(
      "dense_map_oracle",
      [](const Problem& prob) { return harness::dense_map_oracle(prob); },
      py::arg("problem"),
      "Dense MAP of the consensus objective (n <= 500).");

  m.def("relative_residual", &harness::relative_residual, py::arg("problem"),
        py::arg("z"));

  m.def(
      "shepp_phantom",
      [](int n) {
        const GridImage img = shepp_phantom(n);
        return Eigen::MatrixXd(
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                           Eigen::Dynamic, Eigen::RowMajor>>(
                img.pixels.data(), img.height, img.width));
      },
      py::arg("grid_n"));

  m.def(
      "blur_truth",
      [](int n) {
        const GridImage img = blur_truth(n);
        return Eigen::MatrixXd(
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                           Eigen::Dynamic, Eigen::RowMajor>>(
                img.pixels.data(), img.height, img.width));
      },
      py::arg("grid_n"));

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "0.1.0";
#endif
}
