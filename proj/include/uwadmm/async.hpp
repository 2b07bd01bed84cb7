#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "uwadmm/admm.hpp"
#include "uwadmm/types.hpp"

namespace uwadmm {

/// Per-worker compute-latency distribution for the simulated scheduler.
struct LatencyModel {
  enum class Kind { Fixed, Uniform, TwoPoint };
  Kind kind = Kind::Fixed;
  double a = 1.0;
  double b = 1.0;
  double p = 0.5;  // probability of drawing a in the two-point model

  static LatencyModel fixed(double v) {
    return {Kind::Fixed, v, v, 0.5};
  }
  static LatencyModel uniform(double lo, double hi) {
    return {Kind::Uniform, lo, hi, 0.5};
  }
  static LatencyModel two_point(double lo, double hi, double p_lo) {
    return {Kind::TwoPoint, lo, hi, p_lo};
  }

  double sample(std::mt19937_64& rng) const;
  void validate() const;
};

enum class SchedulerMode { Simulated, Parallel };

struct AsyncConfig {
  int n_a = 1;  // partial barrier: z-update after n_a distinct reports
  int k_a = 1;  // bounded delay: every worker refreshed within k_a updates
  SchedulerMode scheduler = SchedulerMode::Simulated;
  uint64_t seed = 0;
  std::vector<LatencyModel> latency;  // per worker; size 1 broadcasts
  AdmmConfig admm;
  /// Default: the z-step averages all N cached locals, stale ones included.
  /// The alternative averages only the current reporters.
  bool z_over_reporters_only = false;
};

struct ReportEvent {
  int worker = 0;
  double time = 0.0;
  long seq = 0;
};

/// Deterministic event stream of free-running workers (each re-dispatches
/// immediately on report): the first n_events completions in time order,
/// ties broken by worker id.
std::vector<ReportEvent> simulated_schedule(
    uint64_t seed, const std::vector<LatencyModel>& latency, int n_workers,
    int n_events);

/// Asynchronous weighted consensus ADMM: the coordinator caches the latest
/// (x_j, u_j), performs the z-step over all cached locals once n_a distinct
/// workers have reported, updates duals for the reporters only, and blocks
/// further updates until any worker at staleness k_a reports. The trace
/// gains one row per global update.
AdmmResult run_async(const Problem& prob, const AsyncConfig& cfg,
                     const Vector* truth = nullptr);

}  // namespace uwadmm
