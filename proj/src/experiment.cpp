#include "scope/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>
#include <utility>

#include "scope/errors.hpp"

namespace scope {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

DataSpec DataSpec::parse(const std::string& text) {
  DataSpec spec;
  if (text == "toy_table1") {
    spec.kind = Kind::ToyTable1;
    return spec;
  }
  if (text.rfind("synthetic_lr(", 0) == 0) {
    unsigned long long n = 0, seed = 0;
    unsigned d = 0;
    char tail = 0;
    const int got = std::sscanf(text.c_str(), "synthetic_lr(%llu,%u,%llu%c", &n, &d, &seed, &tail);
    if (got != 4 || tail != ')') {
      throw ConfigError("bad dataset spec '" + text + "', want synthetic_lr(n,d,seed)");
    }
    spec.kind = Kind::SyntheticLR;
    spec.n = static_cast<std::size_t>(n);
    spec.d = d;
    spec.seed = seed;
    return spec;
  }
  if (text.empty()) throw ConfigError("empty dataset spec");
  spec.kind = Kind::File;
  spec.path = text;
  return spec;
}

std::string DataSpec::to_string() const {
  switch (kind) {
    case Kind::ToyTable1:
      return "toy_table1";
    case Kind::SyntheticLR:
      return "synthetic_lr(" + std::to_string(n) + "," + std::to_string(d) + "," +
             std::to_string(seed) + ")";
    case Kind::File:
      return path;
  }
  return {};
}

namespace {

void apply_transport_spec(ExperimentConfig& cfg, const std::string& text) {
  if (text == "inproc" || text == "tcp") {
    cfg.transport = text;
    return;
  }
  if (text.rfind("tcp(", 0) == 0 && text.back() == ')') {
    cfg.transport = "tcp";
    cfg.bind_addr = text.substr(4, text.size() - 5);
    return;
  }
  throw ConfigError("transport must be inproc, tcp, or tcp(host:port), got '" + text + "'");
}

Combine parse_combine(const std::string& text) {
  if (text == "last") return Combine::LastIterate;
  if (text == "average") return Combine::AverageIterate;
  throw ConfigError("combine must be last or average, got '" + text + "'");
}

std::string combine_name(Combine c) {
  return c == Combine::LastIterate ? "last" : "average";
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  ExperimentConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "algorithm") {
        cfg.algorithm = value.get<std::string>();
      } else if (key == "data") {
        cfg.data = DataSpec::parse(value.get<std::string>());
      } else if (key == "loss") {
        cfg.loss = value.get<std::string>();
      } else if (key == "p") {
        cfg.p = value.get<int>();
      } else if (key == "partition") {
        cfg.partition_strategy = value.get<std::string>();
      } else if (key == "partition_seed") {
        cfg.partition_seed = value.get<std::uint64_t>();
      } else if (key == "eta") {
        cfg.hp.eta = value.get<double>();
      } else if (key == "c") {
        cfg.hp.c = value.get<double>();
      } else if (key == "bigm") {
        cfg.hp.inner_steps = value.get<int>();
      } else if (key == "bigt") {
        cfg.hp.outer_rounds = value.get<int>();
      } else if (key == "lambda") {
        cfg.hp.lambda = value.get<double>();
      } else if (key == "batch") {
        cfg.batch_size = value.get<int>();
      } else if (key == "combine") {
        cfg.hp.combine = parse_combine(value.get<std::string>());
      } else if (key == "seed") {
        cfg.hp.seed = value.get<std::uint64_t>();
      } else if (key == "transport") {
        apply_transport_spec(cfg, value.get<std::string>());
      } else if (key == "bind") {
        cfg.bind_addr = value.get<std::string>();
      } else if (key == "out") {
        cfg.out_csv = value.get<std::string>();
      } else if (key == "wstar") {
        cfg.wstar_path = value.get<std::string>();
      } else if (key == "w0") {
        cfg.w0_path = value.get<std::string>();
      } else if (key == "normalize") {
        cfg.normalize_data = value.get<bool>();
      } else if (key == "dim") {
        cfg.dim = value.get<std::uint32_t>();
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["algorithm"] = cfg.algorithm;
  j["data"] = cfg.data.to_string();
  j["loss"] = cfg.loss;
  j["p"] = cfg.p;
  j["partition"] = cfg.partition_strategy;
  if (cfg.partition_seed) j["partition_seed"] = *cfg.partition_seed;
  j["eta"] = cfg.hp.eta;
  j["c"] = cfg.hp.c;
  j["bigm"] = cfg.hp.inner_steps;
  j["bigt"] = cfg.hp.outer_rounds;
  j["lambda"] = cfg.hp.lambda;
  if (cfg.batch_size > 0) j["batch"] = cfg.batch_size;
  j["combine"] = combine_name(cfg.hp.combine);
  j["seed"] = cfg.hp.seed;
  j["transport"] = cfg.transport;
  if (!cfg.bind_addr.empty()) j["bind"] = cfg.bind_addr;
  if (!cfg.out_csv.empty()) j["out"] = cfg.out_csv;
  if (!cfg.wstar_path.empty()) j["wstar"] = cfg.wstar_path;
  if (!cfg.w0_path.empty()) j["w0"] = cfg.w0_path;
  j["normalize"] = cfg.normalize_data;
  if (cfg.dim != 0) j["dim"] = cfg.dim;
  return j;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  return config_from_json(j);
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.algorithm != "scope" && cfg.algorithm != "svrg" && cfg.algorithm != "dissvrg") {
    throw ConfigError("algorithm must be scope, svrg, or dissvrg, got '" + cfg.algorithm + "'");
  }
  const bool toy = cfg.data.kind == DataSpec::Kind::ToyTable1;
  if (cfg.loss != "logistic_l2" && cfg.loss != "smoothed_hinge_l2" &&
      !(toy && cfg.loss == "quadratic1d")) {
    throw ConfigError("loss must be logistic_l2 or smoothed_hinge_l2, got '" + cfg.loss + "'");
  }
  if (cfg.p < 1) throw ConfigError("p must be >= 1");
  if (cfg.partition_strategy != "shuffled" && cfg.partition_strategy != "contiguous" &&
      cfg.partition_strategy != "label_sorted") {
    throw ConfigError("partition must be shuffled, contiguous, or label_sorted, got '" +
                      cfg.partition_strategy + "'");
  }
  if (!(cfg.hp.eta > 0.0)) throw ConfigError("eta must be > 0");
  if (cfg.hp.c < 0.0) throw ConfigError("c must be >= 0");
  if (cfg.hp.inner_steps < 1) throw ConfigError("bigm must be >= 1");
  if (cfg.hp.outer_rounds < 0) throw ConfigError("bigt must be >= 0");
  if (cfg.hp.lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (cfg.algorithm == "dissvrg" && cfg.batch_size < 1) {
    throw ConfigError("dissvrg requires batch >= 1");
  }
  if (cfg.transport != "inproc" && cfg.transport != "tcp") {
    throw ConfigError("transport must be inproc or tcp, got '" + cfg.transport + "'");
  }
  if (cfg.data.kind == DataSpec::Kind::File && cfg.data.path.empty()) {
    throw ConfigError("data path is empty");
  }
  if (cfg.dim != 0 && cfg.data.kind != DataSpec::Kind::File) {
    throw ConfigError("dim override applies only to file datasets");
  }
}

namespace {

ModelVector read_vector_file(const std::string& path, std::size_t expect_dim,
                             const char* what) {
  std::ifstream in(path);
  if (!in) throw IoError(std::string("cannot open ") + what + " file: " + path);
  ModelVector v;
  double x = 0.0;
  while (in >> x) v.push_back(x);
  if (!in.eof()) throw IoError(std::string("malformed ") + what + " file: " + path);
  if (v.size() != expect_dim) {
    throw ConfigError(std::string(what) + " file has " + std::to_string(v.size()) +
                      " entries, dataset dimension is " + std::to_string(expect_dim));
  }
  return v;
}

}  // namespace

ResolvedProblem resolve_problem(const ExperimentConfig& cfg) {
  ResolvedProblem out;
  out.lambda = cfg.hp.lambda;
  out.p = cfg.p;

  switch (cfg.data.kind) {
    case DataSpec::Kind::ToyTable1: {
      ToyProblem toy = make_toy_table1();
      out.dataset = std::move(toy.dataset);
      out.loss = std::move(toy.loss);
      out.wstar = ModelVector{toy.wstar};
      out.p = 2;  // one shard per term
      break;
    }
    case DataSpec::Kind::SyntheticLR:
      out.dataset = make_synthetic_lr(cfg.data.n, cfg.data.d, cfg.data.seed);
      break;
    case DataSpec::Kind::File:
      out.dataset = parse_svmlight_file(cfg.data.path, cfg.dim);
      if (cfg.normalize_data) out.dataset = normalize(std::move(out.dataset));
      break;
  }

  if (cfg.data.kind != DataSpec::Kind::ToyTable1) {
    out.loss = cfg.loss == "smoothed_hinge_l2" ? LossKind::smoothed_hinge_l2()
                                               : LossKind::logistic_l2();
  }
  if (!cfg.wstar_path.empty()) {
    out.wstar = read_vector_file(cfg.wstar_path, out.dataset.dim, "wstar");
  }
  out.w0 = cfg.w0_path.empty() ? ModelVector(out.dataset.dim, 0.0)
                               : read_vector_file(cfg.w0_path, out.dataset.dim, "w0");
  return out;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string metrics_to_csv(const RunMetrics& metrics) {
  std::string out = "t,objective,dist_sq,msgs,bytes,wall_ms\n";
  for (const RoundRecord& r : metrics.rounds) {
    out += std::to_string(r.round);
    out += ',';
    out += format_real(r.objective);
    out += ',';
    out += format_real(r.dist_sq);
    out += ',';
    out += std::to_string(r.messages);
    out += ',';
    out += std::to_string(r.bytes);
    out += ',';
    out += format_real(r.wall_ms);
    out += '\n';
  }
  return out;
}

namespace {

std::string summary_line(const RunMetrics& metrics) {
  return std::string("verdict=") + to_string(metrics.verdict) +
         " rounds=" + std::to_string(metrics.completed_rounds) +
         " msgs=" + std::to_string(metrics.comm.total_messages());
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file: " + path);
  out << content;
  if (!out) throw IoError("failed writing output file: " + path);
}

ExperimentResult finish_result(const ExperimentConfig& cfg, std::pair<ModelVector, RunMetrics> run) {
  ExperimentResult res;
  res.w = std::move(run.first);
  res.metrics = std::move(run.second);
  res.csv = metrics_to_csv(res.metrics);
  res.summary = summary_line(res.metrics);
  res.exit_code = res.metrics.verdict == Verdict::Diverged ? kExitDiverged : kExitOk;
  if (!cfg.out_csv.empty()) write_file(cfg.out_csv, res.csv);
  return res;
}

PartitionStrategy strategy_of(const ExperimentConfig& cfg) {
  const std::uint64_t seed = cfg.partition_seed.value_or(cfg.hp.seed);
  if (cfg.partition_strategy == "contiguous") return PartitionStrategy::contiguous();
  if (cfg.partition_strategy == "label_sorted") return PartitionStrategy::label_sorted();
  return PartitionStrategy::shuffled(seed);
}

std::string default_bind_addr(const ExperimentConfig& cfg) {
  if (!cfg.bind_addr.empty()) return cfg.bind_addr;
  if (const char* env = std::getenv("SCOPE_BIND_ADDR"); env && *env) return env;
  return "127.0.0.1:0";
}

std::pair<ModelVector, RunMetrics> drive_master(const ExperimentConfig& cfg,
                                                const ResolvedProblem& problem,
                                                MasterLinks& links, const MetricsContext& ctx) {
  if (cfg.algorithm == "dissvrg") {
    return dissvrg_master_run(links, cfg.hp, MiniBatchParams{cfg.batch_size},
                              problem.dataset.n(), problem.w0, &ctx);
  }
  return master_run(links, cfg.hp, problem.dataset.n(), problem.w0, &ctx);
}

void serve_worker(const ExperimentConfig& cfg, const ResolvedProblem& problem,
                  const Partition& part, WorkerLink& link) {
  if (cfg.algorithm == "dissvrg") {
    dissvrg_worker_run(link, part, problem.loss, cfg.hp, MiniBatchParams{cfg.batch_size});
  } else {
    worker_run(link, part, problem.loss, cfg.hp);
  }
}

std::pair<ModelVector, RunMetrics> run_in_process(const ExperimentConfig& cfg,
                                                  const ResolvedProblem& problem) {
  const std::vector<Partition> parts = partition(problem.dataset, problem.p, strategy_of(cfg));
  const MetricsContext ctx{&problem.dataset, problem.loss, problem.lambda, problem.wstar};
  const int p = problem.p;

  std::vector<std::exception_ptr> worker_errors(static_cast<std::size_t>(p));
  std::exception_ptr master_error;
  std::pair<ModelVector, RunMetrics> result;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(p));
  // Workers must be joined while the transport (queues / sockets) is alive.
  const auto join_all = [&threads] {
    for (std::thread& t : threads) t.join();
  };

  if (cfg.transport == "tcp") {
    TcpMasterLinks links(default_bind_addr(cfg), p);
    std::string host;
    int ignored_port = 0;
    split_host_port(default_bind_addr(cfg), host, ignored_port);
    if (host == "0.0.0.0") host = "127.0.0.1";
    const int port = links.port();
    for (int k = 1; k <= p; ++k) {
      threads.emplace_back([&, k] {
        try {
          TcpWorkerLink link(host, port, k);
          serve_worker(cfg, problem, parts[static_cast<std::size_t>(k - 1)], link);
        } catch (...) {
          worker_errors[static_cast<std::size_t>(k - 1)] = std::current_exception();
        }
      });
    }
    try {
      links.accept_workers();
      result = drive_master(cfg, problem, links, ctx);
    } catch (...) {
      master_error = std::current_exception();
    }
    join_all();
  } else {
    InProcHub hub(p);
    for (int k = 1; k <= p; ++k) {
      threads.emplace_back([&, k] {
        try {
          serve_worker(cfg, problem, parts[static_cast<std::size_t>(k - 1)], hub.worker_link(k));
        } catch (...) {
          worker_errors[static_cast<std::size_t>(k - 1)] = std::current_exception();
          hub.close_worker(k);  // a blocked master recv must not hang
        }
      });
    }
    try {
      result = drive_master(cfg, problem, hub.master_links(), ctx);
    } catch (...) {
      master_error = std::current_exception();
    }
    join_all();
  }

  for (const std::exception_ptr& e : worker_errors) {
    if (e) std::rethrow_exception(e);  // root cause beats the master's symptom
  }
  if (master_error) std::rethrow_exception(master_error);
  return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const ResolvedProblem problem = resolve_problem(cfg);
  const MetricsContext ctx{&problem.dataset, problem.loss, problem.lambda, problem.wstar};

  if (cfg.algorithm == "svrg") {
    return finish_result(cfg,
                         svrg_sequential(problem.dataset, problem.loss, cfg.hp, problem.w0, &ctx));
  }
  return finish_result(cfg, run_in_process(cfg, problem));
}

ExperimentResult run_experiment_master_tcp(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.algorithm == "svrg") throw ConfigError("svrg has no distributed master");
  const ResolvedProblem problem = resolve_problem(cfg);
  const MetricsContext ctx{&problem.dataset, problem.loss, problem.lambda, problem.wstar};

  TcpMasterLinks links(default_bind_addr(cfg), problem.p);
  std::fprintf(stderr, "master listening on port %d, waiting for %d workers\n", links.port(),
               problem.p);
  links.accept_workers();
  return finish_result(cfg, drive_master(cfg, problem, links, ctx));
}

void run_experiment_worker_tcp(const ExperimentConfig& cfg, int worker_id) {
  validate(cfg);
  if (cfg.algorithm == "svrg") throw ConfigError("svrg has no workers");
  const ResolvedProblem problem = resolve_problem(cfg);
  if (worker_id < 1 || worker_id > problem.p) {
    throw ConfigError("worker id must be in [1, p]");
  }
  if (cfg.bind_addr.empty() && !std::getenv("SCOPE_BIND_ADDR")) {
    throw ConfigError("worker role needs an explicit --bind host:port");
  }
  std::string host;
  int port = 0;
  split_host_port(default_bind_addr(cfg), host, port);
  if (port == 0) throw ConfigError("worker role needs a concrete port, not 0");
  if (host == "0.0.0.0") host = "127.0.0.1";

  const std::vector<Partition> parts = partition(problem.dataset, problem.p, strategy_of(cfg));
  TcpWorkerLink link(host, port, worker_id);
  serve_worker(cfg, problem, parts[static_cast<std::size_t>(worker_id - 1)], link);
}

CompareResult compare_runs(const ExperimentConfig& a, const ExperimentConfig& b) {
  if (!(a.data == b.data) || a.loss != b.loss || a.hp.lambda != b.hp.lambda ||
      a.normalize_data != b.normalize_data || a.dim != b.dim) {
    throw ConfigError("compare needs both configs on the same problem "
                      "(data, loss, lambda, normalize, dim)");
  }
  CompareResult out;
  ExperimentConfig ca = a;
  ExperimentConfig cb = b;
  ca.out_csv.clear();
  cb.out_csv.clear();
  out.a = run_experiment(ca);
  out.b = run_experiment(cb);

  std::string csv = "t,objective_a,msgs_a,wall_ms_a,objective_b,msgs_b,wall_ms_b\n";
  const auto& ra = out.a.metrics.rounds;
  const auto& rb = out.b.metrics.rounds;
  const std::size_t rows = std::max(ra.size(), rb.size());
  for (std::size_t i = 0; i < rows; ++i) {
    csv += std::to_string(i);
    if (i < ra.size()) {
      csv += ',' + format_real(ra[i].objective) + ',' + std::to_string(ra[i].messages) + ',' +
             format_real(ra[i].wall_ms);
    } else {
      csv += ",,,";
    }
    if (i < rb.size()) {
      csv += ',' + format_real(rb[i].objective) + ',' + std::to_string(rb[i].messages) + ',' +
             format_real(rb[i].wall_ms);
    } else {
      csv += ",,,";
    }
    csv += '\n';
  }
  out.csv = std::move(csv);

  const auto ma = out.a.metrics.comm.total_messages();
  const auto mb = out.b.metrics.comm.total_messages();
  const double ratio = ma == 0 ? std::numeric_limits<double>::infinity()
                               : static_cast<double>(mb) / static_cast<double>(ma);
  out.summary = "msgs_a=" + std::to_string(ma) + " msgs_b=" + std::to_string(mb) +
                " ratio=" + format_real(ratio);
  return out;
}

}  // namespace scope
