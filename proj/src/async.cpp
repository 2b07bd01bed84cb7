#include "uwadmm/async.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "admm_detail.hpp"
#include "uwadmm/operators.hpp"

namespace uwadmm {

double LatencyModel::sample(std::mt19937_64& rng) const {
  switch (kind) {
    case Kind::Fixed:
      return a;
    case Kind::Uniform: {
      std::uniform_real_distribution<double> dist(a, b);
      return dist(rng);
    }
    case Kind::TwoPoint: {
      std::bernoulli_distribution dist(p);
      return dist(rng) ? a : b;
    }
  }
  return a;
}

void LatencyModel::validate() const {
  if (a <= 0.0 || b <= 0.0) {
    throw std::invalid_argument("LatencyModel: latencies must be positive");
  }
  if (kind == Kind::Uniform && a > b) {
    throw std::invalid_argument("LatencyModel: uniform needs a <= b");
  }
  if (kind == Kind::TwoPoint && (p < 0.0 || p > 1.0)) {
    throw std::invalid_argument("LatencyModel: two-point needs p in [0,1]");
  }
}

namespace {

std::mt19937_64 worker_rng(uint64_t seed, int worker) {
  std::seed_seq seq{static_cast<uint64_t>(worker) + 1, seed};
  return std::mt19937_64(seq);
}

const LatencyModel& model_for(const std::vector<LatencyModel>& lat,
                              int worker) {
  if (lat.empty()) {
    static const LatencyModel unit = LatencyModel::fixed(1.0);
    return unit;
  }
  return lat.size() == 1 ? lat[0] : lat.at(worker);
}

struct PendingEvent {
  double time;
  int worker;
  long seq;
  bool operator>(const PendingEvent& o) const {
    if (time != o.time) return time > o.time;
    if (worker != o.worker) return worker > o.worker;
    return seq > o.seq;
  }
};

using EventQueue = std::priority_queue<PendingEvent, std::vector<PendingEvent>,
                                       std::greater<PendingEvent>>;

}  // namespace

std::vector<ReportEvent> simulated_schedule(
    uint64_t seed, const std::vector<LatencyModel>& latency, int n_workers,
    int n_events) {
  if (n_workers < 1) throw std::invalid_argument("simulated_schedule: workers");
  for (const auto& m : latency) m.validate();
  std::vector<std::mt19937_64> rngs;
  rngs.reserve(n_workers);
  for (int j = 0; j < n_workers; ++j) rngs.push_back(worker_rng(seed, j));

  EventQueue queue;
  long seq = 0;
  for (int j = 0; j < n_workers; ++j) {
    queue.push({model_for(latency, j).sample(rngs[j]), j, seq++});
  }
  std::vector<ReportEvent> out;
  out.reserve(n_events);
  while (static_cast<int>(out.size()) < n_events) {
    const PendingEvent ev = queue.top();
    queue.pop();
    out.push_back({ev.worker, ev.time, static_cast<long>(out.size())});
    queue.push({ev.time + model_for(latency, ev.worker).sample(rngs[ev.worker]),
                ev.worker, seq++});
  }
  return out;
}

namespace {

using namespace admm_detail;

struct Coordinator {
  const Problem& prob;
  const AsyncConfig& cfg;
  const Vector* truth;
  std::vector<DiagonalWeight> w;
  ConsensusState st;
  std::vector<int> barrier;  // reporters since the last global update
  AdmmResult out;
  int updates = 0;

  explicit Coordinator(const Problem& p, const AsyncConfig& c, const Vector* t)
      : prob(p), cfg(c), truth(t) {
    const int n_subs = prob.n_subs();
    for (const auto& sub : prob.subs) {
      sub.validate();
      w.push_back(sub.weight);
    }
    if (cfg.n_a < 1 || cfg.n_a > n_subs) {
      throw std::invalid_argument("run_async: need 1 <= n_a <= N");
    }
    if (cfg.k_a < 1) throw std::invalid_argument("run_async: k_a >= 1");
    st.z = prob.prior.ref_or_zero();
    st.x.assign(n_subs, st.z);
    st.u.assign(n_subs, Vector::Zero(prob.n()));
    st.rho = cfg.admm.rho0;
    st.staleness.assign(n_subs, 0);
    out.trace.async = true;
    out.trace.status = "max_outer";
  }

  bool can_update() const {
    if (static_cast<int>(barrier.size()) < cfg.n_a) return false;
    for (size_t j = 0; j < st.staleness.size(); ++j) {
      if (st.staleness[j] >= cfg.k_a &&
          std::find(barrier.begin(), barrier.end(), static_cast<int>(j)) ==
              barrier.end()) {
        return false;  // bounded delay: wait for the stale worker
      }
    }
    return true;
  }

  // Performs the global update over all cached locals; reporters get fresh
  // duals, everyone else ages by one epoch. Returns true when stopping.
  bool global_update(double clock) {
    std::sort(barrier.begin(), barrier.end());
    const Vector z_prev = st.z;
    if (cfg.z_over_reporters_only) {
      std::vector<Vector> xs, us;
      std::vector<DiagonalWeight> ws;
      for (int j : barrier) {
        xs.push_back(st.x[j]);
        us.push_back(st.u[j]);
        ws.push_back(w[j]);
      }
      st.z = z_step(xs, us, ws, st.rho);
    } else {
      st.z = z_step(st.x, st.u, w, st.rho);
    }
    for (int j : barrier) {
      st.u[j] = u_step(st.u[j], st.x[j], st.z, w[j], st.rho);
    }
    for (size_t j = 0; j < st.staleness.size(); ++j) {
      if (std::find(barrier.begin(), barrier.end(), static_cast<int>(j)) !=
          barrier.end()) {
        st.staleness[j] = 0;
      } else {
        ++st.staleness[j];
      }
    }
    ++updates;
    st.iter = updates;
    const ResidualNorms res = residuals(st, z_prev, w);

    AdmmRecord rec;
    rec.iter = updates;
    rec.time_s = clock;
    rec.misfit = total_misfit(prob, st.z);
    rec.relerr = trace_relerr(st.z, truth);
    rec.r_norm = res.r_norm;
    rec.s_norm = res.s_norm;
    rec.rho = st.rho;
    rec.updates = updates;
    std::ostringstream ids;
    for (size_t i = 0; i < barrier.size(); ++i) {
      if (i) ids << ";";
      ids << barrier[i];
    }
    rec.reporter_set = ids.str();
    rec.max_staleness =
        *std::max_element(st.staleness.begin(), st.staleness.end());
    out.trace.rows.push_back(rec);

    const auto [ep, ed] = stopping_eps(cfg.admm, st, w);
    if (ep > 0.0 && res.r_norm <= ep && res.s_norm <= ed) {
      out.trace.status = "converged";
      return true;
    }
    if (updates >= cfg.admm.max_outer) return true;
    st.rho = adapt_rho(st.rho, res.r_norm, res.s_norm, cfg.admm);
    return false;
  }
};

AdmmResult run_async_simulated(const Problem& prob, const AsyncConfig& cfg,
                               const Vector* truth) {
  Coordinator coord(prob, cfg, truth);
  const int n_subs = prob.n_subs();
  for (const auto& m : cfg.latency) m.validate();

  std::vector<std::mt19937_64> rngs;
  rngs.reserve(n_subs);
  for (int j = 0; j < n_subs; ++j) rngs.push_back(worker_rng(cfg.seed, j));

  // In-flight results, computed from the dispatch-time snapshot.
  std::vector<Vector> inflight(n_subs);
  EventQueue queue;
  long seq = 0;
  auto dispatch = [&](int j, double now) {
    inflight[j] = x_step(prob.subs[j], coord.st.z, coord.st.u[j],
                         coord.st.rho, cfg.admm, coord.st.x[j])
                      .x;
    queue.push({now + model_for(cfg.latency, j).sample(rngs[j]), j, seq++});
  };
  for (int j = 0; j < n_subs; ++j) dispatch(j, 0.0);

  while (!queue.empty()) {
    const PendingEvent ev = queue.top();
    queue.pop();
    coord.st.x[ev.worker] = inflight[ev.worker];
    coord.barrier.push_back(ev.worker);
    if (!coord.can_update()) continue;
    const std::vector<int> reporters = coord.barrier;
    const bool done = coord.global_update(
        cfg.admm.timing == TimingMode::Logical
            ? static_cast<double>(coord.updates + 1)
            : ev.time);
    coord.barrier.clear();
    if (done) break;
    for (int j : reporters) dispatch(j, ev.time);
  }
  coord.out.z = coord.st.z;
  coord.out.state = std::move(coord.st);
  return coord.out;
}

struct WorkerReport {
  int worker;
  Vector x;
  bool failed;
  std::string error;
};

AdmmResult run_async_parallel(const Problem& prob, const AsyncConfig& cfg,
                              const Vector* truth) {
  Coordinator coord(prob, cfg, truth);
  const int n_subs = prob.n_subs();

  std::mutex mtx;
  std::condition_variable cv_report, cv_assign;
  std::queue<WorkerReport> reports;
  struct Assignment {
    Vector z;
    Vector u;
    double rho = 0.0;
    bool pending = false;
    bool stop = false;
  };
  std::vector<Assignment> slots(n_subs);

  auto worker_body = [&](int j) {
    Vector x_local = coord.st.z;
    while (true) {
      Assignment job;
      {
        std::unique_lock<std::mutex> lk(mtx);
        cv_assign.wait(lk, [&] { return slots[j].pending || slots[j].stop; });
        if (slots[j].stop) return;
        job = slots[j];
        slots[j].pending = false;
      }
      WorkerReport rep{j, Vector(), false, ""};
      try {
        rep.x = x_step(prob.subs[j], job.z, job.u, job.rho, cfg.admm, x_local)
                    .x;
        x_local = rep.x;
      } catch (const std::exception& e) {
        rep.failed = true;
        rep.error = e.what();
      }
      {
        std::lock_guard<std::mutex> lk(mtx);
        reports.push(std::move(rep));
      }
      cv_report.notify_one();
    }
  };

  auto assign = [&](int j) {
    {
      std::lock_guard<std::mutex> lk(mtx);
      slots[j].z = coord.st.z;
      slots[j].u = coord.st.u[j];
      slots[j].rho = coord.st.rho;
      slots[j].pending = true;
    }
    cv_assign.notify_all();
  };

  std::vector<std::thread> threads;
  threads.reserve(n_subs);
  for (int j = 0; j < n_subs; ++j) threads.emplace_back(worker_body, j);
  for (int j = 0; j < n_subs; ++j) assign(j);

  const auto t0 = std::chrono::steady_clock::now();
  bool done = false;
  while (!done) {
    WorkerReport rep;
    {
      std::unique_lock<std::mutex> lk(mtx);
      cv_report.wait(lk, [&] { return !reports.empty(); });
      rep = std::move(reports.front());
      reports.pop();
    }
    if (rep.failed) {
      coord.out.trace.status = "worker_failure: " + rep.error;
      break;
    }
    coord.st.x[rep.worker] = std::move(rep.x);
    coord.barrier.push_back(rep.worker);
    if (!coord.can_update()) continue;
    const std::vector<int> reporters = coord.barrier;
    const double clock =
        cfg.admm.timing == TimingMode::Logical
            ? static_cast<double>(coord.updates + 1)
            : std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count();
    done = coord.global_update(clock);
    coord.barrier.clear();
    if (!done) {
      for (int j : reporters) assign(j);
    }
  }

  {
    std::lock_guard<std::mutex> lk(mtx);
    for (auto& s : slots) s.stop = true;
  }
  cv_assign.notify_all();
  for (auto& t : threads) t.join();

  coord.out.z = coord.st.z;
  coord.out.state = std::move(coord.st);
  return coord.out;
}

}  // namespace

AdmmResult run_async(const Problem& prob, const AsyncConfig& cfg,
                     const Vector* truth) {
  if (cfg.scheduler == SchedulerMode::Simulated) {
    return run_async_simulated(prob, cfg, truth);
  }
  return run_async_parallel(prob, cfg, truth);
}

}  // namespace uwadmm
