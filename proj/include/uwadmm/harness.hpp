#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "uwadmm/admm.hpp"
#include "uwadmm/async.hpp"
#include "uwadmm/operators.hpp"
#include "uwadmm/types.hpp"
#include "uwadmm/uq_weights.hpp"

namespace uwadmm::harness {

/// Thrown for configuration and IO problems; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key=value run configuration ('#' starts a comment line).
class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& def) const;
  std::string require(const std::string& key) const;
  int get_int(const std::string& key, int def) const;
  double get_double(const std::string& key, double def) const;
  uint64_t seed() const;
  std::string out_dir() const;  // "out" key, required

  const std::map<std::string, std::string>& entries() const { return kv_; }
  /// Sorted "key=value" lines for embedding in output headers.
  std::vector<std::string> metadata_lines() const;
  void write_file(const std::string& path) const;

 private:
  std::map<std::string, std::string> kv_;
};

/// A generated problem instance plus its provenance.
struct GeneratedProblem {
  Problem problem;  // identity weights attached
  Vector x_true;
  int width = 0;   // imaging dims; 0 for matrix problems
  int height = 0;
  std::string kind;
  RunConfig resolved;  // config with all generator defaults made explicit
};

/// Build the problem described by the config in memory
/// (identity_quadrants | deblur | tomo | mtx).
GeneratedProblem build_problem(const RunConfig& cfg);

/// Attach weights per the config: "identity" or rank-r uncertainty weights
/// linearized at the prior reference model.
WeightReport attach_weights(Problem& prob, int rank, uint64_t seed);
void attach_identity_weights(Problem& prob);

/// Dense MAP of the consensus objective sum_j (Phi_j + R_j); n <= cap.
Vector dense_map_oracle(const Problem& prob, int cap = 500);

/// ||A z - y|| / ||y|| over the stacked subproblems (unweighted norms).
double relative_residual(const Problem& prob, const Vector& z);
/// ||z - truth|| / ||truth||.
double relative_error(const Vector& z, const Vector& truth);

/// AdmmConfig / AsyncConfig resolved from config keys.
AdmmConfig admm_config(const RunConfig& cfg);
AsyncConfig async_config(const RunConfig& cfg, int n_subs);

/// Load a problem directory written by cmd_gen.
GeneratedProblem load_problem(const std::string& dir);
/// Load weights written by cmd_weights into the problem (in place).
void load_weights(Problem& prob, const std::string& dir);

// Commands. Return exit codes: 0 success, 1 solver failure, 2 config/IO.
int cmd_gen(const RunConfig& cfg, std::ostream& log);
int cmd_weights(const RunConfig& cfg, std::ostream& log);
int cmd_solve(const RunConfig& cfg, std::ostream& log);
int cmd_oracle(const RunConfig& cfg, std::ostream& log);
int cmd_batch(const RunConfig& cfg, std::ostream& log);

}  // namespace uwadmm::harness
