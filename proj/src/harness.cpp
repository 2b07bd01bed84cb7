#include "uwadmm/harness.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "uwadmm/core.hpp"
#include "uwadmm/image_io.hpp"
#include "uwadmm/matrix_market.hpp"
#include "uwadmm/solvers.hpp"

namespace fs = std::filesystem;

namespace uwadmm::harness {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string sub_tag(int j) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", j);
  return buf;
}

std::mt19937_64 stream_rng(uint64_t seed, uint64_t stream) {
  std::seed_seq seq{stream, seed};
  return std::mt19937_64(seq);
}

Vector seeded_normal(int n, uint64_t seed, uint64_t stream) {
  auto rng = stream_rng(seed, stream);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

RunConfig RunConfig::from_string(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

bool RunConfig::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string RunConfig::get(const std::string& key,
                           const std::string& def) const {
  const auto it = kv_.find(key);
  return it == kv_.end() ? def : it->second;
}

std::string RunConfig::require(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

int RunConfig::get_int(const std::string& key, int def) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer");
  }
}

double RunConfig::get_double(const std::string& key, double def) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number");
  }
}

uint64_t RunConfig::seed() const {
  return static_cast<uint64_t>(get_int("seed", 0));
}

std::string RunConfig::out_dir() const { return require("out"); }

std::vector<std::string> RunConfig::metadata_lines() const {
  std::vector<std::string> out;
  out.reserve(kv_.size());
  for (const auto& [k, v] : kv_) out.push_back(k + "=" + v);
  return out;
}

void RunConfig::write_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  for (const auto& [k, v] : kv_) out << k << "=" << v << "\n";
}

// ---------------------------------------------------------------------------
// Problem construction

namespace {

struct FullSystem {
  std::shared_ptr<ForwardOperator> a;
  Vector y;
  Vector x_true;
  double noise_sigma = 0.0;  // 0 means unit noise covariance
};

// y = A x_true + sigma eps with sigma = noise_rel * rms(A x_true).
FullSystem synthesize(std::shared_ptr<ForwardOperator> a, Vector x_true,
                      double noise_rel, uint64_t seed) {
  FullSystem sys;
  sys.a = std::move(a);
  sys.x_true = std::move(x_true);
  sys.y = sys.a->apply(sys.x_true);
  if (noise_rel > 0.0) {
    const double rms =
        sys.y.norm() / std::sqrt(static_cast<double>(sys.y.size()));
    sys.noise_sigma = noise_rel * rms;
    sys.y += sys.noise_sigma * seeded_normal(static_cast<int>(sys.y.size()),
                                             seed, 2);
  }
  return sys;
}

PriorSpec make_prior(const RunConfig& cfg, double alpha, int n, int width,
                     int height) {
  const std::string kind = cfg.get("prior", "smallness");
  if (kind == "smallness") return PriorSpec::smallness(n, alpha);
  if (kind == "diffusion") {
    if (width > 0) return PriorSpec::diffusion(width, height, alpha);
    return PriorSpec::diffusion_chain(n, alpha);
  }
  throw ConfigError("unknown prior kind: " + kind);
}

GeneratedProblem assemble(const RunConfig& cfg, const FullSystem& sys,
                          const std::vector<std::vector<int>>& row_sets,
                          int width, int height, const std::string& kind) {
  GeneratedProblem gp;
  gp.kind = kind;
  gp.width = width;
  gp.height = height;
  gp.x_true = sys.x_true;
  gp.resolved = cfg;
  gp.resolved.set("problem", kind);
  gp.resolved.set("prior", cfg.get("prior", "smallness"));
  gp.resolved.set("alpha", format_double(cfg.get_double("alpha", 1e-2)));
  gp.resolved.set("n_subs", std::to_string(row_sets.size()));
  gp.resolved.set("seed", std::to_string(cfg.seed()));
  const int n = sys.a->cols();
  const auto n_subs = static_cast<int>(row_sets.size());
  const double alpha = cfg.get_double("alpha", 1e-2);
  // Plain least-squares misfits: the noise knob perturbs the data only.
  const double noise_var = 1.0;

  gp.problem.prior = make_prior(cfg, alpha, n, width, height);
  const PriorSpec local = make_prior(cfg, alpha / n_subs, n, width, height);
  for (const auto& rows : row_sets) {
    Subproblem sub;
    sub.op = sys.a->row_select(rows);
    Vector y(rows.size());
    for (size_t k = 0; k < rows.size(); ++k) y[k] = sys.y[rows[k]];
    sub.y = std::move(y);
    sub.noise.diag = Vector::Constant(static_cast<int>(rows.size()), noise_var);
    sub.prior = local;
    sub.weight = DiagonalWeight::identity(n);
    gp.problem.subs.push_back(std::move(sub));
  }
  return gp;
}

// Stride-N assignment: block j gets rays j, j+N, j+2N, ... so every block
// samples all projection angles (the random-ray character of the reference
// tomography construction).
std::vector<std::vector<int>> interleaved_row_sets(int m, int n_blocks) {
  std::vector<std::vector<int>> sets(n_blocks);
  for (int i = 0; i < m; ++i) sets[i % n_blocks].push_back(i);
  return sets;
}

std::vector<std::vector<int>> contiguous_row_sets(int m, int n_blocks) {
  const auto blocks = [&] {
    std::vector<std::pair<int, int>> out;
    const int base = m / n_blocks, rem = m % n_blocks;
    int start = 0;
    for (int j = 0; j < n_blocks; ++j) {
      const int count = base + (j < rem ? 1 : 0);
      out.emplace_back(start, count);
      start += count;
    }
    return out;
  }();
  std::vector<std::vector<int>> sets;
  for (const auto& [start, count] : blocks) {
    std::vector<int> rows(count);
    for (int i = 0; i < count; ++i) rows[i] = start + i;
    sets.push_back(std::move(rows));
  }
  return sets;
}

}  // namespace

GeneratedProblem build_problem(const RunConfig& cfg) {
  const std::string kind = cfg.require("problem");
  const uint64_t seed = cfg.seed();
  const int n_subs = cfg.get_int("n_subs", 4);

  if (kind == "identity_quadrants") {
    const int width = cfg.get_int("width", 32);
    const int height = cfg.get_int("height", width);
    if (width != height) {
      throw ConfigError("identity_quadrants: width and height must match");
    }
    const GridImage truth = blur_truth(width);
    const int n = width * height;
    Eigen::SparseMatrix<double> eye(n, n);
    eye.setIdentity();
    auto a = std::make_shared<SparseOperator>(std::move(eye));
    const double noise_rel = cfg.get_double("noise_rel", 0.01);
    const FullSystem sys = synthesize(a, truth.pixels, noise_rel, seed);
    GeneratedProblem gp = assemble(cfg, sys, quadrant_indices(width, height),
                                   width, height, kind);
    gp.resolved.set("split", "quadrant");
    gp.resolved.set("noise_rel", format_double(noise_rel));
    return gp;
  }

  if (kind == "deblur") {
    const int grid = cfg.get_int("grid", 64);
    const int band = cfg.get_int("band", 21);
    const double sigma = cfg.get_double("sigma", 8.0);
    const GridImage truth = blur_truth(grid);
    auto a = gaussian_blur_operator(grid, band, sigma);
    const double noise_rel = cfg.get_double("noise_rel", 0.01);
    const FullSystem sys = synthesize(a, truth.pixels, noise_rel, seed);
    const std::string split = cfg.get("split", "quadrant");
    const auto sets = split == "quadrant"
                          ? quadrant_indices(grid, grid)
                          : contiguous_row_sets(a->rows(), n_subs);
    GeneratedProblem gp = assemble(cfg, sys, sets, grid, grid, kind);
    gp.resolved.set("split", split);
    gp.resolved.set("band", std::to_string(band));
    gp.resolved.set("sigma", format_double(sigma));
    gp.resolved.set("noise_rel", format_double(noise_rel));
    return gp;
  }

  if (kind == "tomo") {
    const int grid = cfg.get_int("grid", 64);
    const int n_angles = cfg.get_int("n_angles", 160);
    const int n_detectors = cfg.get_int("n_detectors", 7);
    const GridImage truth = shepp_phantom(grid);
    auto a = tomo_ray_operator(grid, n_angles, n_detectors);
    const double noise_rel = cfg.get_double("noise_rel", 0.01);
    const FullSystem sys = synthesize(a, truth.pixels, noise_rel, seed);
    // Rows are rays, so the imaging quadrant split does not apply. Stride
    // assignment keeps every block sampling all angles, matching the
    // random-ray character of the reference construction.
    const std::string split = cfg.get("split", "interleave");
    const auto sets = split == "interleave"
                          ? interleaved_row_sets(a->rows(), n_subs)
                          : contiguous_row_sets(a->rows(), n_subs);
    GeneratedProblem gp = assemble(cfg, sys, sets, grid, grid, kind);
    gp.resolved.set("split", split);
    gp.resolved.set("n_angles", std::to_string(n_angles));
    gp.resolved.set("n_detectors", std::to_string(n_detectors));
    gp.resolved.set("noise_rel", format_double(noise_rel));
    return gp;
  }

  if (kind == "mtx") {
    const std::string path = cfg.require("mtx_path");
    if (!fs::exists(path)) throw ConfigError("matrix file not found: " + path);
    auto a = std::make_shared<SparseOperator>(load_matrix_market(path));
    const int n = a->cols();
    Vector x_true = seeded_normal(n, seed, 1);
    const double noise_rel = cfg.get_double("noise_rel", 0.0);

    // A sibling <stem>_b.mtx supplies the right-hand side when present.
    const fs::path p(path);
    const fs::path rhs_path = p.parent_path() / (p.stem().string() + "_b.mtx");
    FullSystem sys;
    if (fs::exists(rhs_path)) {
      sys.a = a;
      sys.y = load_matrix_market_vector(rhs_path.string());
      if (sys.y.size() != a->rows()) {
        throw ConfigError("rhs size mismatch in " + rhs_path.string());
      }
      sys.x_true = Vector();  // unknown truth
    } else {
      sys = synthesize(a, std::move(x_true), noise_rel, seed);
    }
    GeneratedProblem gp = assemble(
        cfg, sys, contiguous_row_sets(a->rows(), n_subs), 0, 0, kind);
    gp.resolved.set("split", "row_blocks");
    gp.resolved.set("noise_rel", format_double(noise_rel));
    return gp;
  }

  throw ConfigError("unknown problem generator: " + kind);
}

WeightReport attach_weights(Problem& prob, int rank, uint64_t seed) {
  const Vector x_lin = prob.prior.ref_or_zero();
  WeightReport report = compute_weights(prob.subs, x_lin, rank, seed);
  for (size_t j = 0; j < prob.subs.size(); ++j) {
    prob.subs[j].weight = report.weights[j];
  }
  return report;
}

void attach_identity_weights(Problem& prob) {
  for (auto& sub : prob.subs) {
    sub.weight = DiagonalWeight::identity(prob.n());
  }
}

Vector dense_map_oracle(const Problem& prob, int cap) {
  const int n = prob.n();
  if (n > cap) {
    throw ConfigError("dense_map_oracle: n exceeds the oracle cap");
  }
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  Vector rhs = Vector::Zero(n);
  for (const auto& sub : prob.subs) {
    const Eigen::MatrixXd a = sub.op->to_dense();
    const Vector noise_inv = sub.noise.inv();
    h += a.transpose() * noise_inv.asDiagonal() * a;
    rhs += a.transpose() * noise_inv.cwiseProduct(sub.y);
    // Regularizer Hessian and its constant gradient part.
    Vector e = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      e[i] = 1.0;
      h.col(i) += regularizer_hessian_apply(sub.prior, e);
      e[i] = 0.0;
    }
    if (sub.prior.kind == PriorKind::Smallness && sub.prior.x_ref.size()) {
      rhs += sub.prior.alpha * sub.prior.x_ref;
    }
  }
  return h.ldlt().solve(rhs);
}

double relative_residual(const Problem& prob, const Vector& z) {
  double num = 0.0, den = 0.0;
  for (const auto& sub : prob.subs) {
    num += (sub.op->apply(z) - sub.y).squaredNorm();
    den += sub.y.squaredNorm();
  }
  return std::sqrt(num) / std::sqrt(den);
}

double relative_error(const Vector& z, const Vector& truth) {
  return (z - truth).norm() / truth.norm();
}

AdmmConfig admm_config(const RunConfig& cfg) {
  AdmmConfig a;
  a.rho0 = cfg.get_double("rho0", 5.0);
  a.rho_min = cfg.get_double("rho_min", 1e-12);
  a.mu = cfg.get_double("mu", 10.0);
  a.tau_incr = cfg.get_double("tau_incr", 2.0);
  a.tau_decr = cfg.get_double("tau_decr", 2.0);
  // "off" disables tolerance stopping (run exactly max_outer iterations).
  a.eps_pri = cfg.get("eps_pri", "") == "off" ? -1.0
                                              : cfg.get_double("eps_pri", 0.0);
  a.eps_dual = cfg.get("eps_dual", "") == "off"
                   ? -1.0
                   : cfg.get_double("eps_dual", 0.0);
  a.max_outer = cfg.get_int("max_outer", 10);
  a.inner_gn_iters = cfg.get_int("inner_gn", 3);
  a.inner.max_pcg = cfg.get_int("max_pcg", 200);
  a.inner.pcg_tol = cfg.get_double("pcg_tol", 1e-8);
  a.parallel_x = cfg.get_int("parallel_x", 1) != 0;
  a.weight_refresh_rank = cfg.get_int("weight_refresh_rank", 0);
  a.weight_refresh_seed = cfg.seed();
  const std::string timing = cfg.get("timing", "logical");
  if (timing == "logical") {
    a.timing = TimingMode::Logical;
  } else if (timing == "wall") {
    a.timing = TimingMode::Wall;
  } else {
    throw ConfigError("timing must be 'logical' or 'wall'");
  }
  return a;
}

namespace {

LatencyModel parse_latency(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    std::istringstream is(text.substr(colon + 1));
    std::string tok;
    while (std::getline(is, tok, ',')) args.push_back(std::stod(tok));
  }
  if (kind == "fixed" && args.size() == 1) return LatencyModel::fixed(args[0]);
  if (kind == "uniform" && args.size() == 2) {
    return LatencyModel::uniform(args[0], args[1]);
  }
  if (kind == "twopoint" && args.size() == 3) {
    return LatencyModel::two_point(args[0], args[1], args[2]);
  }
  throw ConfigError("bad latency spec: " + text);
}

}  // namespace

AsyncConfig async_config(const RunConfig& cfg, int n_subs) {
  AsyncConfig a;
  a.admm = admm_config(cfg);
  a.n_a = cfg.get_int("n_a", n_subs);
  a.k_a = cfg.get_int("k_a", 1);
  a.seed = cfg.seed();
  const std::string sched = cfg.get("scheduler", "simulated");
  if (sched == "simulated") {
    a.scheduler = SchedulerMode::Simulated;
  } else if (sched == "parallel") {
    a.scheduler = SchedulerMode::Parallel;
  } else {
    throw ConfigError("scheduler must be 'simulated' or 'parallel'");
  }
  const LatencyModel base = parse_latency(cfg.get("latency", "fixed:1"));
  a.latency.assign(n_subs, base);
  for (int j = 0; j < n_subs; ++j) {
    const std::string key = "latency_" + std::to_string(j);
    if (cfg.has(key)) a.latency[j] = parse_latency(cfg.require(key));
  }
  const std::string z_over = cfg.get("z_over", "all");
  if (z_over == "reporters") {
    a.z_over_reporters_only = true;
  } else if (z_over != "all") {
    throw ConfigError("z_over must be 'all' or 'reporters'");
  }
  return a;
}

// ---------------------------------------------------------------------------
// Problem directory IO

namespace {

void write_problem_dir(const std::string& dir, const RunConfig&,
                       const GeneratedProblem& gp) {
  fs::create_directories(dir);
  RunConfig meta = gp.resolved;
  meta.set("kind", gp.kind);
  meta.set("n", std::to_string(gp.problem.n()));
  meta.set("n_subs", std::to_string(gp.problem.n_subs()));
  meta.set("width", std::to_string(gp.width));
  meta.set("height", std::to_string(gp.height));
  meta.set("has_truth", gp.x_true.size() ? "1" : "0");
  meta.write_file(dir + "/problem.meta");

  if (gp.x_true.size()) {
    write_vector_csv(dir + "/truth.csv", gp.x_true, meta.metadata_lines());
    if (gp.width > 0) {
      GridImage img{gp.width, gp.height, gp.x_true};
      write_pgm16(dir + "/truth.pgm", img);
    }
  }
  for (int j = 0; j < gp.problem.n_subs(); ++j) {
    const auto& sub = gp.problem.subs[j];
    const std::string tag = dir + "/sub_" + sub_tag(j);
    save_matrix_market(tag + "_A.mtx", sub.op->to_sparse());
    write_vector_csv(tag + "_y.csv", sub.y);
    write_vector_csv(tag + "_noise.csv", sub.noise.diag);
  }
}

}  // namespace

GeneratedProblem load_problem(const std::string& dir) {
  const std::string meta_path = dir + "/problem.meta";
  if (!fs::exists(meta_path)) {
    throw ConfigError("not a problem directory (missing problem.meta): " + dir);
  }
  const RunConfig meta = RunConfig::from_file(meta_path);
  GeneratedProblem gp;
  gp.kind = meta.get("kind", "unknown");
  gp.width = meta.get_int("width", 0);
  gp.height = meta.get_int("height", 0);
  const int n = meta.get_int("n", 0);
  const int n_subs = meta.get_int("n_subs", 0);
  if (n <= 0 || n_subs <= 0) throw ConfigError("corrupt problem.meta");

  const double alpha = meta.get_double("alpha", 1e-2);
  gp.problem.prior = make_prior(meta, alpha, n, gp.width, gp.height);
  const PriorSpec local =
      make_prior(meta, alpha / n_subs, n, gp.width, gp.height);

  if (meta.get("has_truth", "0") == "1") {
    gp.x_true = read_vector_csv(dir + "/truth.csv");
  }
  for (int j = 0; j < n_subs; ++j) {
    const std::string tag = dir + "/sub_" + sub_tag(j);
    Subproblem sub;
    sub.op = std::make_shared<SparseOperator>(load_matrix_market(tag + "_A.mtx"));
    sub.y = read_vector_csv(tag + "_y.csv");
    sub.noise.diag = read_vector_csv(tag + "_noise.csv");
    sub.prior = local;
    sub.weight = DiagonalWeight::identity(n);
    sub.validate();
    gp.problem.subs.push_back(std::move(sub));
  }
  return gp;
}

void load_weights(Problem& prob, const std::string& dir) {
  for (size_t j = 0; j < prob.subs.size(); ++j) {
    const std::string path =
        dir + "/weights_" + sub_tag(static_cast<int>(j)) + ".csv";
    if (!fs::exists(path)) {
      throw ConfigError("missing weight file: " + path);
    }
    prob.subs[j].weight.diag = read_vector_csv(path);
    if (prob.subs[j].weight.n() != prob.n()) {
      throw ConfigError("weight length mismatch in " + path);
    }
  }
}

// ---------------------------------------------------------------------------
// Commands

int cmd_gen(const RunConfig& cfg, std::ostream& log) {
  try {
    const GeneratedProblem gp = build_problem(cfg);
    write_problem_dir(cfg.out_dir(), cfg, gp);
    log << "gen: wrote " << gp.problem.n_subs() << " subproblems (n="
        << gp.problem.n() << ") to " << cfg.out_dir() << "\n";
    return 0;
  } catch (const std::exception& e) {
    log << "gen: error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_weights(const RunConfig& cfg, std::ostream& log) {
  try {
    const std::string dir = cfg.out_dir();
    GeneratedProblem gp = load_problem(dir);
    const std::string mode = cfg.get("weights", "rank");
    std::vector<std::string> header = cfg.metadata_lines();
    if (mode == "identity") {
      attach_identity_weights(gp.problem);
      header.push_back("weights_mode=identity");
    } else if (mode == "rank") {
      const int rank = cfg.get_int("rank", 10);
      const WeightReport report =
          attach_weights(gp.problem, rank, cfg.seed());
      header.push_back("weights_mode=rank");
      header.push_back("rank=" + std::to_string(rank));
      header.push_back("seed=" + std::to_string(cfg.seed()));
      header.push_back("w_floor=" + format_double(kWeightFloor));
      header.push_back("w_cap=" + format_double(kWeightCap));
      log << "weights: rank " << rank << " took " << report.wall_s << " s\n";
    } else {
      throw ConfigError("weights must be 'rank' or 'identity'");
    }
    for (int j = 0; j < gp.problem.n_subs(); ++j) {
      write_vector_csv(dir + "/weights_" + sub_tag(j) + ".csv",
                       gp.problem.subs[j].weight.diag, header);
    }
    return 0;
  } catch (const std::exception& e) {
    log << "weights: error: " << e.what() << "\n";
    return 2;
  }
}

namespace {

void write_estimate(const std::string& dir, const GeneratedProblem& gp,
                    const Vector& z) {
  write_vector_csv(dir + "/z.csv", z);
  if (gp.width > 0) {
    write_pgm16(dir + "/z.pgm", GridImage{gp.width, gp.height, z});
  }
}

}  // namespace

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
  try {
    const std::string dir = cfg.out_dir();
    GeneratedProblem gp = load_problem(dir);
    const std::string mode = cfg.get("weights", "rank");
    const std::string solver = cfg.get("solver", "admm_sync");
    const bool is_admm = solver == "admm_sync" || solver == "admm_async";
    if (is_admm) {
      if (mode == "identity") {
        attach_identity_weights(gp.problem);
      } else {
        load_weights(gp.problem, dir);
      }
    }
    const Vector* truth = gp.x_true.size() ? &gp.x_true : nullptr;

    std::string status;
    Vector z;
    int iters = 0;
    std::ofstream trace_file(dir + "/trace.csv");
    if (!trace_file) throw ConfigError("cannot write trace.csv in " + dir);

    if (solver == "admm_sync") {
      const AdmmResult res = run_sync(gp.problem, admm_config(cfg), truth);
      res.trace.write_csv(trace_file, cfg.metadata_lines());
      z = res.z;
      status = res.trace.status;
      iters = static_cast<int>(res.trace.rows.size());
    } else if (solver == "admm_async") {
      const AdmmResult res =
          run_async(gp.problem, async_config(cfg, gp.problem.n_subs()), truth);
      res.trace.write_csv(trace_file, cfg.metadata_lines());
      z = res.z;
      status = res.trace.status;
      iters = static_cast<int>(res.trace.rows.size());
    } else if (solver == "gauss_newton" || solver == "nlcg") {
      SolverConfig scfg;
      scfg.max_outer = cfg.get_int("max_outer", solver == "nlcg" ? 100 : 30);
      scfg.max_pcg = cfg.get_int("max_pcg", 200);
      scfg.pcg_tol = cfg.get_double("pcg_tol", 1e-8);
      const Vector x0 = gp.problem.prior.ref_or_zero();
      SolveResult res = solver == "gauss_newton"
                            ? gauss_newton(gp.problem, x0, scfg, truth)
                            : nlcg(gp.problem, x0, scfg, truth);
      if (admm_config(cfg).timing == TimingMode::Logical) {
        for (auto& row : res.trace.rows) row.time_s = row.iter;
      }
      res.trace.write_csv(trace_file, cfg.metadata_lines());
      z = res.x;
      status = res.trace.status;
      iters = static_cast<int>(res.trace.rows.size());
    } else {
      throw ConfigError("unknown solver: " + solver);
    }
    trace_file.close();
    write_estimate(dir, gp, z);

    const double relres = relative_residual(gp.problem, z);
    const double relerr =
        truth ? relative_error(z, gp.x_true)
              : std::numeric_limits<double>::quiet_NaN();
    {
      std::ofstream summary(dir + "/summary.txt");
      for (const auto& line : cfg.metadata_lines()) summary << "# " << line
                                                            << "\n";
      summary << "solver=" << solver << "\n";
      summary << "status=" << status << "\n";
      summary << "iters=" << iters << "\n";
      summary << "final_relres=" << format_double(relres) << "\n";
      summary << "final_relerr=" << format_double(relerr) << "\n";
    }
    log << "solve: " << solver << " status=" << status
        << " relres=" << relres << " relerr=" << relerr << "\n";
    const bool failed = status.rfind("x_step_failure", 0) == 0 ||
                        status.rfind("worker_failure", 0) == 0;
    return failed ? 1 : 0;
  } catch (const ConfigError& e) {
    log << "solve: error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    log << "solve: solver error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_oracle(const RunConfig& cfg, std::ostream& log) {
  try {
    const std::string dir = cfg.out_dir();
    GeneratedProblem gp = load_problem(dir);
    const int cap = cfg.get_int("oracle_cap", 500);
    const Vector x_map = dense_map_oracle(gp.problem, cap);
    write_vector_csv(dir + "/oracle_map.csv", x_map, cfg.metadata_lines());
    for (int j = 0; j < gp.problem.n_subs(); ++j) {
      const auto& sub = gp.problem.subs[j];
      const Eigen::MatrixXd cov = dense_posterior_covariance(
          sub.op->to_dense(), sub.noise, sub.prior, cap);
      write_vector_csv(dir + "/oracle_postdiag_" + sub_tag(j) + ".csv",
                       cov.diagonal(), cfg.metadata_lines());
    }
    log << "oracle: wrote dense MAP and posterior diagonals to " << dir
        << "\n";
    return 0;
  } catch (const std::exception& e) {
    log << "oracle: error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_batch(const RunConfig& cfg, std::ostream& log) {
  try {
    const std::string manifest_path = cfg.require("manifest");
    std::ifstream manifest(manifest_path);
    if (!manifest) throw ConfigError("cannot open manifest: " + manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();
    fs::create_directories(cfg.out_dir());

    std::ofstream results(cfg.out_dir() + "/results.csv");
    if (!results) throw ConfigError("cannot write results.csv");
    for (const auto& line : cfg.metadata_lines()) results << "# " << line
                                                          << "\n";
    results << "name,cond,res_unweighted,relerr_unweighted,res_weighted,"
               "relerr_weighted,status\n";

    const int rank = cfg.get_int("rank", 10);
    std::string line;
    while (std::getline(manifest, line)) {
      const std::string entry = trim(line);
      if (entry.empty() || entry[0] == '#') continue;
      fs::path mpath(entry);
      if (mpath.is_relative()) mpath = base / mpath;
      const std::string name = mpath.stem().string();
      try {
        RunConfig pcfg = cfg;
        pcfg.set("problem", "mtx");
        pcfg.set("mtx_path", mpath.string());
        GeneratedProblem gp = build_problem(pcfg);

        std::string cond = "n/a";
        {
          const int mr = gp.problem.subs[0].op->cols();
          int m_total = 0;
          for (const auto& s : gp.problem.subs) m_total += s.op->rows();
          if (std::min(m_total, mr) <= 500) {
            Eigen::MatrixXd a(m_total, mr);
            int row = 0;
            for (const auto& s : gp.problem.subs) {
              a.middleRows(row, s.op->rows()) = s.op->to_dense();
              row += s.op->rows();
            }
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
            const double smax = svd.singularValues()(0);
            const double smin =
                svd.singularValues()(svd.singularValues().size() - 1);
            cond = format_double(smin > 0.0
                                     ? smax / smin
                                     : std::numeric_limits<double>::infinity());
          }
        }

        const AdmmConfig acfg = admm_config(cfg);
        attach_identity_weights(gp.problem);
        const AdmmResult unweighted =
            run_sync(gp.problem, acfg,
                     gp.x_true.size() ? &gp.x_true : nullptr);
        attach_weights(gp.problem, rank, cfg.seed());
        const AdmmResult weighted =
            run_sync(gp.problem, acfg,
                     gp.x_true.size() ? &gp.x_true : nullptr);

        results << name << "," << cond << ","
                << format_double(relative_residual(gp.problem, unweighted.z))
                << ","
                << format_double(gp.x_true.size()
                                     ? relative_error(unweighted.z, gp.x_true)
                                     : std::numeric_limits<double>::quiet_NaN())
                << ","
                << format_double(relative_residual(gp.problem, weighted.z))
                << ","
                << format_double(gp.x_true.size()
                                     ? relative_error(weighted.z, gp.x_true)
                                     : std::numeric_limits<double>::quiet_NaN())
                << ",ok\n";
      } catch (const std::exception& e) {
        results << name << ",n/a,nan,nan,nan,nan,failed: " << e.what() << "\n";
        log << "batch: " << name << " failed: " << e.what() << "\n";
      }
    }
    log << "batch: wrote " << cfg.out_dir() << "/results.csv\n";
    return 0;
  } catch (const std::exception& e) {
    log << "batch: error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace uwadmm::harness
