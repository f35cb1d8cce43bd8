#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "scope/errors.hpp"
#include "scope/experiment.hpp"

namespace {

using scope::ExperimentConfig;

// Flag values land here; only flags the user actually passed are copied into
// the config, so file values survive unless overridden.
struct RunFlags {
  std::string config_path;
  std::string algorithm, data, loss, partition, combine, transport, bind, out, wstar, w0;
  int p = 0, bigm = 0, bigt = 0, batch = 0, worker_id = 0;
  double eta = 0.0, c = 0.0, lambda = 0.0;
  std::uint64_t seed = 0, partition_seed = 0;
  std::uint32_t dim = 0;
  bool normalize = true;
  std::string role = "standalone";
};

void add_run_flags(CLI::App& cmd, RunFlags& f) {
  cmd.add_option("--config", f.config_path, "JSON config file; flags override its fields");
  cmd.add_option("--algorithm", f.algorithm, "scope | svrg | dissvrg");
  cmd.add_option("--data", f.data, "dataset: path, toy_table1, or synthetic_lr(n,d,seed)");
  cmd.add_option("--loss", f.loss, "logistic_l2 | smoothed_hinge_l2");
  cmd.add_option("--p", f.p, "worker count");
  cmd.add_option("--partition", f.partition, "shuffled | contiguous | label_sorted");
  cmd.add_option("--partition-seed", f.partition_seed, "shuffle seed (default: --seed)");
  cmd.add_option("--eta", f.eta, "inner step size");
  cmd.add_option("--c", f.c, "proximal coefficient");
  cmd.add_option("--bigm", f.bigm, "inner steps per round (M)");
  cmd.add_option("--bigt", f.bigt, "outer rounds (T)");
  cmd.add_option("--lambda", f.lambda, "L2 regularization weight");
  cmd.add_option("--batch", f.batch, "per-worker mini-batch size (dissvrg)");
  cmd.add_option("--combine", f.combine, "last | average");
  cmd.add_option("--seed", f.seed, "base RNG seed");
  cmd.add_option("--transport", f.transport, "inproc | tcp");
  cmd.add_option("--bind", f.bind, "tcp bind address host:port (or SCOPE_BIND_ADDR)");
  cmd.add_option("--out", f.out, "metrics CSV path");
  cmd.add_option("--wstar", f.wstar, "known minimizer file (whitespace-separated reals)");
  cmd.add_option("--w0", f.w0, "starting point file (default: zeros)");
  cmd.add_option("--dim", f.dim, "dimension override for file datasets");
  cmd.add_flag("--normalize,!--no-normalize", f.normalize, "unit-normalize file dataset rows");
  cmd.add_option("--role", f.role, "standalone | master | worker (tcp multi-process)")
      ->check(CLI::IsMember({"standalone", "master", "worker"}));
  cmd.add_option("--worker-id", f.worker_id, "this worker's id (role=worker)");
}

ExperimentConfig build_config(const CLI::App& cmd, const RunFlags& f) {
  ExperimentConfig cfg;
  if (!f.config_path.empty()) cfg = scope::load_config_file(f.config_path);
  if (cmd.count("--algorithm")) cfg.algorithm = f.algorithm;
  if (cmd.count("--data")) cfg.data = scope::DataSpec::parse(f.data);
  if (cmd.count("--loss")) cfg.loss = f.loss;
  if (cmd.count("--p")) cfg.p = f.p;
  if (cmd.count("--partition")) cfg.partition_strategy = f.partition;
  if (cmd.count("--partition-seed")) cfg.partition_seed = f.partition_seed;
  if (cmd.count("--eta")) cfg.hp.eta = f.eta;
  if (cmd.count("--c")) cfg.hp.c = f.c;
  if (cmd.count("--bigm")) cfg.hp.inner_steps = f.bigm;
  if (cmd.count("--bigt")) cfg.hp.outer_rounds = f.bigt;
  if (cmd.count("--lambda")) cfg.hp.lambda = f.lambda;
  if (cmd.count("--batch")) cfg.batch_size = f.batch;
  if (cmd.count("--combine")) {
    cfg.hp.combine =
        f.combine == "average" ? scope::Combine::AverageIterate : scope::Combine::LastIterate;
    if (f.combine != "last" && f.combine != "average") {
      throw scope::ConfigError("combine must be last or average, got '" + f.combine + "'");
    }
  }
  if (cmd.count("--seed")) cfg.hp.seed = f.seed;
  if (cmd.count("--transport")) {
    if (f.transport != "inproc" && f.transport != "tcp") {
      throw scope::ConfigError("transport must be inproc or tcp, got '" + f.transport + "'");
    }
    cfg.transport = f.transport;
  }
  if (cmd.count("--bind")) cfg.bind_addr = f.bind;
  if (cmd.count("--out")) cfg.out_csv = f.out;
  if (cmd.count("--wstar")) cfg.wstar_path = f.wstar;
  if (cmd.count("--w0")) cfg.w0_path = f.w0;
  if (cmd.count("--dim")) cfg.dim = f.dim;
  if (cmd.count("--normalize") || cmd.count("--no-normalize")) cfg.normalize_data = f.normalize;
  return cfg;
}

int dispatch_run(const CLI::App& cmd, const RunFlags& f) {
  ExperimentConfig cfg = build_config(cmd, f);
  if (f.role == "worker") {
    if (cfg.transport != "tcp") throw scope::ConfigError("--role worker requires --transport tcp");
    scope::run_experiment_worker_tcp(cfg, f.worker_id);
    return scope::kExitOk;
  }
  scope::ExperimentResult res;
  if (f.role == "master") {
    if (cfg.transport != "tcp") throw scope::ConfigError("--role master requires --transport tcp");
    res = scope::run_experiment_master_tcp(cfg);
  } else {
    res = scope::run_experiment(cfg);
  }
  std::cout << res.summary << '\n';
  return res.exit_code;
}

int dispatch_compare(const std::string& path_a, const std::string& path_b,
                     const std::string& out) {
  const scope::CompareResult res =
      scope::compare_runs(scope::load_config_file(path_a), scope::load_config_file(path_b));
  if (!out.empty()) {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw scope::IoError("cannot open output file: " + out);
    f << res.csv;
  } else {
    std::cout << res.csv;
  }
  std::cout << res.a.summary << '\n' << res.b.summary << '\n' << res.summary << '\n';
  return res.a.exit_code != scope::kExitOk ? res.a.exit_code : res.b.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed composite-optimization experiment runner"};
  app.require_subcommand(1);

  RunFlags run_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment");
  add_run_flags(*run_cmd, run_flags);

  std::string cmp_a, cmp_b, cmp_out;
  CLI::App* cmp_cmd = app.add_subcommand("compare", "run two configs on one problem side by side");
  cmp_cmd->add_option("--config-a", cmp_a, "first config file")->required();
  cmp_cmd->add_option("--config-b", cmp_b, "second config file")->required();
  cmp_cmd->add_option("--out", cmp_out, "side-by-side CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : scope::kExitConfig;
  }

  try {
    if (run_cmd->parsed()) return dispatch_run(*run_cmd, run_flags);
    return dispatch_compare(cmp_a, cmp_b, cmp_out);
  } catch (const scope::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return scope::kExitConfig;
  } catch (const scope::ParseError& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return scope::kExitIo;
  } catch (const scope::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return scope::kExitIo;
  } catch (const scope::ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << '\n';
    return scope::kExitProtocol;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return scope::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
