#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "scope/baselines.hpp"
#include "scope/data.hpp"
#include "scope/diagnostics.hpp"
#include "scope/engine.hpp"
#include "scope/errors.hpp"
#include "scope/experiment.hpp"
#include "scope/model.hpp"
#include "scope/protocol.hpp"

namespace py = pybind11;
using namespace scope;

namespace {

Message message_from_dict(const py::dict& d) {
  const auto type = d["type"].cast<std::string>();
  auto vec = [&](const char* key) {
    return d.contains(key) ? d[key].cast<ModelVector>() : ModelVector{};
  };
  auto u32 = [&](const char* key) {
    return d.contains(key) ? d[key].cast<std::uint32_t>() : 0u;
  };
  if (type == "hello") return Message::hello(u32("worker_id"));
  if (type == "params") return Message::params(u32("round"), vec("vec"));
  if (type == "local_grad_sum")
    return Message::local_grad_sum(u32("round"), u32("worker_id"), vec("vec"));
  if (type == "full_grad") return Message::full_grad(u32("round"), vec("vec"));
  if (type == "local_update")
    return Message::local_update(u32("round"), u32("worker_id"), vec("vec"));
  if (type == "mini_batch_stats")
    return Message::mini_batch_stats(u32("round"), u32("inner_step"), u32("worker_id"),
                                     u32("batch_size"), vec("vec"), vec("vec2"));
  if (type == "inner_params") return Message::inner_params(u32("round"), u32("inner_step"), vec("vec"));
  if (type == "shutdown") return Message::shutdown();
  throw py::value_error("unknown message type '" + type + "'");
}

py::dict message_to_dict(const Message& m) {
  py::dict d;
  switch (m.type) {
    case MsgType::Hello: d["type"] = "hello"; break;
    case MsgType::Params: d["type"] = "params"; break;
    case MsgType::LocalGradSum: d["type"] = "local_grad_sum"; break;
    case MsgType::FullGrad: d["type"] = "full_grad"; break;
    case MsgType::LocalUpdate: d["type"] = "local_update"; break;
    case MsgType::MiniBatchStats: d["type"] = "mini_batch_stats"; break;
    case MsgType::InnerParams: d["type"] = "inner_params"; break;
    case MsgType::Shutdown: d["type"] = "shutdown"; break;
  }
  d["round"] = m.round;
  d["inner_step"] = m.inner_step;
  d["worker_id"] = m.worker_id;
  d["batch_size"] = m.batch_size;
  d["vec"] = m.vec;
  d["vec2"] = m.vec2;
  return d;
}

py::dict result_to_dict(const ExperimentResult& res) {
  py::dict d;
  d["verdict"] = std::string(to_string(res.metrics.verdict));
  d["rounds_completed"] = res.metrics.completed_rounds;
  d["messages"] = res.metrics.comm.total_messages();
  d["payload_bytes"] = res.metrics.comm.payload_bytes;
  d["summary"] = res.summary;
  d["exit_code"] = res.exit_code;
  d["csv"] = res.csv;
  d["w"] = res.w;
  py::list rounds;
  for (const RoundRecord& r : res.metrics.rounds) {
    py::dict row;
    row["t"] = r.round;
    row["objective"] = r.objective;
    row["dist_sq"] = r.dist_sq;
    row["msgs"] = r.messages;
    row["bytes"] = r.bytes;
    row["wall_ms"] = r.wall_ms;
    rounds.append(row);
  }
  d["rounds"] = rounds;
  return d;
}

LossKind loss_by_name(const std::string& name) {
  if (name == "logistic_l2") return LossKind::logistic_l2();
  if (name == "smoothed_hinge_l2") return LossKind::smoothed_hinge_l2();
  throw py::value_error("loss must be logistic_l2 or smoothed_hinge_l2");
}

PartitionStrategy strategy_by_name(const std::string& name, std::uint64_t seed) {
  if (name == "shuffled") return PartitionStrategy::shuffled(seed);
  if (name == "contiguous") return PartitionStrategy::contiguous();
  if (name == "label_sorted") return PartitionStrategy::label_sorted();
  throw py::value_error("partition must be shuffled, contiguous, or label_sorted");
}

}  // namespace

PYBIND11_MODULE(scope_opt, m) {
  m.doc() = "distributed variance-reduced composite optimization";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<ParseError>(m, "DatasetParseError");
  py::register_exception<ProtocolError>(m, "ProtocolError");

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("n", &Dataset::n)
      .def_readonly("dim", &Dataset::dim)
      .def("labels",
           [](const Dataset& ds) {
             std::vector<int> out;
             out.reserve(ds.n());
             for (const auto& inst : ds.instances) out.push_back(inst.label);
             return out;
           })
      .def("__len__", &Dataset::n)
      .def("__repr__", [](const Dataset& ds) {
        std::ostringstream s;
        s << "Dataset(n=" << ds.n() << ", dim=" << ds.dim << ")";
        return s.str();
      });

  py::class_<Partition>(m, "Partition")
      .def_readonly("worker_id", &Partition::worker_id)
      .def_property_readonly("size", &Partition::q);

  py::class_<LossKind>(m, "LossKind");

  py::class_<TheoryConstants>(m, "TheoryConstants")
      .def_readonly("alpha", &TheoryConstants::alpha)
      .def_readonly("beta", &TheoryConstants::beta)
      .def_readonly("rate_last", &TheoryConstants::rate_last)
      .def_readonly("rate_avg", &TheoryConstants::rate_avg)
      .def_readonly("m_min_last", &TheoryConstants::m_min_last)
      .def_readonly("m_min_avg", &TheoryConstants::m_min_avg)
      .def_readonly("valid", &TheoryConstants::valid);

  py::class_<QuadraticProblem>(m, "QuadraticProblem")
      .def_readonly("local_curvatures", &QuadraticProblem::local_curvatures)
      .def_readonly("global_curvature", &QuadraticProblem::global_curvature)
      .def_readonly("wstar", &QuadraticProblem::wstar);

  // data
  m.def("parse_svmlight", [](const std::string& text, std::uint32_t dim) {
    return parse_svmlight(text, dim);
  }, py::arg("text"), py::arg("dim") = 0);
  m.def("parse_svmlight_file", &parse_svmlight_file, py::arg("path"), py::arg("dim") = 0);
  m.def("write_svmlight", py::overload_cast<const Dataset&>(&write_svmlight));
  m.def("normalize", [](const Dataset& ds) { return normalize(ds); });
  m.def("make_synthetic_lr", &make_synthetic_lr, py::arg("n"), py::arg("d"), py::arg("seed"));
  m.def("make_toy_table1", [] {
    ToyProblem toy = make_toy_table1();
    return py::make_tuple(toy.dataset, toy.loss, toy.wstar);
  });
  m.def("partition",
        [](const Dataset& ds, int p, const std::string& strategy, std::uint64_t seed) {
          return partition(ds, p, strategy_by_name(strategy, seed));
        },
        py::arg("dataset"), py::arg("p"), py::arg("strategy") = "shuffled", py::arg("seed") = 0);

  // model
  m.def("loss_by_name", &loss_by_name);
  m.def("objective",
        [](const std::string& loss, const ModelVector& w, const Dataset& ds, double lambda) {
          return objective(loss_by_name(loss), w, ds, lambda);
        });
  m.def("smoothness_bound", [](const std::string& loss, const Dataset& ds, double lambda) {
    const SmoothnessConstants sc = smoothness_bound(loss_by_name(loss), ds, lambda);
    return py::make_tuple(sc.L, sc.mu);
  });

  // diagnostics
  m.def("theory_constants", &theory_constants, py::arg("L"), py::arg("mu"), py::arg("eta"),
        py::arg("c"), py::arg("M"));
  m.def("check_step_size", &check_step_size, py::arg("eta"), py::arg("L"), py::arg("mu"),
        py::arg("c"));
  m.def("toy_quadratic_problem", [](double lambda) {
    ToyProblem toy = make_toy_table1();
    const auto parts = partition(toy.dataset, 2, PartitionStrategy::contiguous());
    return quadratic_problem(toy.loss, parts, lambda);
  }, py::arg("lambda") = 0.0);
  m.def("fixed_point_factor", &fixed_point_factor, py::arg("problem"), py::arg("c"));
  m.def("solve_optimum",
        [](const Dataset& ds, const std::string& loss, double lambda, double grad_tol) {
          return solve_optimum(ds, loss_by_name(loss), lambda, grad_tol);
        },
        py::arg("dataset"), py::arg("loss"), py::arg("lambda"), py::arg("grad_tol") = 1e-12);

  // protocol
  m.def("encode_message", [](const py::dict& d) {
    const std::vector<std::uint8_t> frame = encode(message_from_dict(d));
    return py::bytes(reinterpret_cast<const char*>(frame.data()), frame.size());
  });
  m.def("decode_message", [](const py::bytes& b) {
    const std::string_view view = b;
    return message_to_dict(decode(reinterpret_cast<const std::uint8_t*>(view.data()), view.size()));
  });

  // experiments
  m.def("run_experiment", [](const std::string& config_json) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::exception& e) {
      throw py::value_error(std::string("bad config json: ") + e.what());
    }
    return result_to_dict(run_experiment(config_from_json(j)));
  }, py::arg("config_json"),
     "Run one experiment from a JSON config string; returns a dict of metrics.");
}
