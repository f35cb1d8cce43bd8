#pragma once

#include <optional>
#include <string>

#include "scope/baselines.hpp"
#include "scope/engine.hpp"

#include "json.hpp"

namespace scope {

// Where the instances come from: a builtin generator or an svmlight file.
struct DataSpec {
  enum class Kind { File, ToyTable1, SyntheticLR };

  Kind kind = Kind::File;
  std::string path;        // File
  std::size_t n = 0;       // SyntheticLR
  std::uint32_t d = 0;     // SyntheticLR
  std::uint64_t seed = 0;  // SyntheticLR

  // "toy_table1" | "synthetic_lr(n,d,seed)" | anything else is a path.
  static DataSpec parse(const std::string& text);
  std::string to_string() const;

  friend bool operator==(const DataSpec&, const DataSpec&) = default;
};

struct ExperimentConfig {
  std::string algorithm = "scope";  // scope | svrg | dissvrg
  DataSpec data;
  std::string loss = "logistic_l2";  // logistic_l2 | smoothed_hinge_l2
  int p = 1;
  std::string partition_strategy = "shuffled";  // shuffled | contiguous | label_sorted
  std::optional<std::uint64_t> partition_seed;  // defaults to hp.seed
  HyperParams hp;
  int batch_size = 0;               // dissvrg only
  std::string transport = "inproc";  // inproc | tcp
  std::string bind_addr;             // tcp; empty = SCOPE_BIND_ADDR or 127.0.0.1:0
  std::string out_csv;
  std::string wstar_path;  // optional known minimizer, whitespace-separated reals
  std::string w0_path;     // optional starting point, same format; default zeros
  bool normalize_data = true;
  std::uint32_t dim = 0;  // 0 = infer from data
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config_file(const std::string& path);

// Throws ConfigError with the offending field named.
void validate(const ExperimentConfig& cfg);

// Dataset + loss + endpoints a run needs, after applying builtins,
// normalization, and the optional w*/w0 files. toy_table1 pins p = 2 and the
// two-term quadratic loss.
struct ResolvedProblem {
  Dataset dataset;
  LossKind loss;
  double lambda = 0.0;
  std::optional<ModelVector> wstar;
  ModelVector w0;
  int p = 1;
};
ResolvedProblem resolve_problem(const ExperimentConfig& cfg);

struct ExperimentResult {
  ModelVector w;
  RunMetrics metrics;
  std::string csv;
  std::string summary;  // "verdict=... rounds=T msgs=N"
  int exit_code = 0;    // 0 completed, 2 diverged
};

// Runs the configured algorithm to completion. inproc and tcp transports both
// live inside this process (workers are threads; tcp runs over loopback
// sockets). Writes out_csv when set.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Multi-process operation: one process binds and masters, p processes serve
// one worker each. Every process derives identical partitions from the shared
// config, so only the configured bind address must match.
ExperimentResult run_experiment_master_tcp(const ExperimentConfig& cfg);
void run_experiment_worker_tcp(const ExperimentConfig& cfg, int worker_id);

// Fixed schema: t,objective,dist_sq,msgs,bytes,wall_ms with reals printed to
// 17 significant digits so equal runs produce equal bytes.
std::string metrics_to_csv(const RunMetrics& metrics);
std::string format_real(double v);

struct CompareResult {
  ExperimentResult a;
  ExperimentResult b;
  std::string csv;      // side-by-side objective vs messages vs time
  std::string summary;  // "msgs_a=... msgs_b=... ratio=..."
};

// Requires both configs to target the same problem (same data, loss, lambda,
// normalization, dimension override).
CompareResult compare_runs(const ExperimentConfig& a, const ExperimentConfig& b);

// 0 completed, 2 diverged, 3 config error, 4 I/O error, 5 protocol error.
enum ExitCode : int {
  kExitOk = 0,
  kExitDiverged = 2,
  kExitConfig = 3,
  kExitIo = 4,
  kExitProtocol = 5,
};

}  // namespace scope
