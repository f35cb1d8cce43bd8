#include "scope/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <stdexcept>
#include <string>

#include "scope/errors.hpp"

namespace scope {
namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  const auto now = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(now - start).count();
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

RoundRecord make_record(int t, const ModelVector& w, const MetricsContext* metrics,
                        const CommStats& stats, double wall_ms) {
  RoundRecord r;
  r.round = t;
  r.objective = kNaN;
  r.dist_sq = kNaN;
  if (metrics && metrics->dataset) {
    r.objective = objective(metrics->kind, w, *metrics->dataset, metrics->lambda);
  }
  if (metrics && metrics->wstar) r.dist_sq = dist_sq(w, *metrics->wstar);
  r.messages = stats.total_messages();
  r.bytes = stats.payload_bytes;
  r.wall_ms = wall_ms;
  return r;
}

void require(bool ok, ProtocolErrc code, const std::string& detail) {
  if (!ok) throw ProtocolError(code, detail);
}

}  // namespace

std::pair<ModelVector, RunMetrics> svrg_sequential(const Dataset& ds, const LossKind& kind,
                                                   const HyperParams& hp, const ModelVector& w0,
                                                   const MetricsContext* metrics) {
  if (ds.n() == 0) throw std::invalid_argument("empty dataset");
  if (hp.outer_rounds < 0) throw std::invalid_argument("outer rounds must be >= 0");

  // The whole dataset is one shard; the index stream is worker 1's so the
  // distributed p = 1 reduction replays exactly.
  Partition whole;
  whole.worker_id = 1;
  whole.instances = ds.instances;
  std::mt19937_64 rng = worker_rng(hp.seed, whole.worker_id);

  HyperParams inner = hp;
  inner.c = 0.0;  // no proximal pull in the sequential algorithm

  const auto start = std::chrono::steady_clock::now();
  const CommStats no_comm;  // nothing travels
  ModelVector w = w0;
  RunMetrics out;
  out.rounds.push_back(make_record(0, w, metrics, no_comm, elapsed_ms(start)));

  bool diverged = false;
  for (int t = 0; t < hp.outer_rounds; ++t) {
    ModelVector z = local_gradient_sum(whole, w, kind, hp.lambda);
    div_in_place(z, static_cast<double>(ds.n()));
    try {
      w = worker_inner_loop(whole, w, z, kind, inner, rng, t);
    } catch (const DivergenceError& e) {
      w = e.iterate;
      diverged = true;
    }
    if (iterate_diverged(w)) diverged = true;
    out.rounds.push_back(make_record(t + 1, w, metrics, no_comm, elapsed_ms(start)));
    out.completed_rounds = t + 1;
    if (diverged) break;
  }
  out.verdict = classify_verdict(diverged, out, metrics);
  return {std::move(w), std::move(out)};
}

std::vector<std::uint32_t> sample_minibatch(std::mt19937_64& rng, std::size_t q, int batch_size) {
  if (batch_size < 1 || static_cast<std::size_t>(batch_size) > q) {
    throw std::invalid_argument("batch size must be in [1, shard size]");
  }
  std::vector<std::uint32_t> pool(q);
  for (std::size_t i = 0; i < q; ++i) pool[i] = static_cast<std::uint32_t>(i);
  const auto b = static_cast<std::size_t>(batch_size);
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t j = i + uniform_index(rng, q - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(b);
  std::sort(pool.begin(), pool.end());
  return pool;
}

void minibatch_grad_sum(const LossKind& kind, const Partition& part,
                        const std::vector<std::uint32_t>& batch, const ModelVector& at,
                        double lambda, ModelVector& out) {
  out.assign(at.size(), 0.0);
  ModelVector g;
  for (std::uint32_t i : batch) {
    loss_grad(kind, at, part.instances.at(i), lambda, g);
    add_in_place(out, g);
  }
}

std::pair<ModelVector, RunMetrics> dissvrg_master_run(MasterLinks& links, const HyperParams& hp,
                                                      const MiniBatchParams& mb,
                                                      std::size_t n_total, const ModelVector& w0,
                                                      const MetricsContext* metrics) {
  const int p = links.worker_count();
  if (hp.outer_rounds < 0) throw std::invalid_argument("outer rounds must be >= 0");
  if (n_total == 0) throw std::invalid_argument("n_total must be >= 1");
  if (mb.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");

  const auto start = std::chrono::steady_clock::now();
  CommStats& stats = links.stats();
  ModelVector w = w0;
  RunMetrics out;
  out.rounds.push_back(make_record(0, w, metrics, stats, elapsed_ms(start)));

  const bool averaging = hp.combine == Combine::AverageIterate;
  bool diverged = false;
  try {
    for (int t = 0; t < hp.outer_rounds; ++t) {
      const auto round = static_cast<std::uint32_t>(t);
      for (int k = 1; k <= p; ++k) links.send(k, Message::params(round, w));

      ModelVector z;
      for (int k = 1; k <= p; ++k) {
        Message m = links.recv(k);
        require(m.type == MsgType::LocalGradSum, ProtocolErrc::UnexpectedMessage,
                std::string("wanted LocalGradSum, got ") + to_string(m.type));
        require(m.round == round && m.worker_id == static_cast<std::uint32_t>(k),
                ProtocolErrc::OutOfOrder, "gradient sum for wrong round or worker");
        require(m.vec.size() == w.size(), ProtocolErrc::DimensionMismatch, "gradient sum length");
        if (k == 1) {
          z = std::move(m.vec);
        } else {
          add_in_place(z, m.vec);
        }
      }
      ++stats.sync_rounds;
      div_in_place(z, static_cast<double>(n_total));

      ModelVector u = w;
      ModelVector u_sum;
      if (averaging) u_sum.assign(w.size(), 0.0);

      for (int m = 0; m < hp.inner_steps && !diverged; ++m) {
        const auto step = static_cast<std::uint32_t>(m);
        for (int k = 1; k <= p; ++k) links.send(k, Message::inner_params(round, step, u));

        ModelVector grad_u_sum, grad_w_sum;
        std::uint64_t batch_total = 0;
        for (int k = 1; k <= p; ++k) {
          Message mm = links.recv(k);
          require(mm.type == MsgType::MiniBatchStats, ProtocolErrc::UnexpectedMessage,
                  std::string("wanted MiniBatchStats, got ") + to_string(mm.type));
          require(mm.round == round && mm.inner_step == step &&
                      mm.worker_id == static_cast<std::uint32_t>(k),
                  ProtocolErrc::OutOfOrder, "batch stats for wrong round, step, or worker");
          require(mm.vec.size() == w.size() && mm.vec2.size() == w.size(),
                  ProtocolErrc::DimensionMismatch, "batch stats length");
          batch_total += mm.batch_size;
          if (k == 1) {
            grad_u_sum = std::move(mm.vec);
            grad_w_sum = std::move(mm.vec2);
          } else {
            add_in_place(grad_u_sum, mm.vec);
            add_in_place(grad_w_sum, mm.vec2);
          }
        }
        ++stats.sync_rounds;
        require(batch_total > 0, ProtocolErrc::UnexpectedMessage, "empty combined batch");
        div_in_place(grad_u_sum, static_cast<double>(batch_total));
        div_in_place(grad_w_sum, static_cast<double>(batch_total));

        for (std::size_t j = 0; j < u.size(); ++j) {
          u[j] -= hp.eta * (grad_u_sum[j] - grad_w_sum[j] + z[j]);
        }
        if (iterate_diverged(u)) diverged = true;
        if (averaging && !diverged) add_in_place(u_sum, u);
      }

      if (!diverged && hp.inner_steps > 0) {
        if (averaging) {
          div_in_place(u_sum, static_cast<double>(hp.inner_steps));
          w = std::move(u_sum);
        } else {
          w = std::move(u);
        }
      } else if (diverged) {
        w = std::move(u);  // report the state at the abort
      }
      if (iterate_diverged(w)) diverged = true;

      out.rounds.push_back(make_record(t + 1, w, metrics, stats, elapsed_ms(start)));
      out.completed_rounds = t + 1;
      if (diverged) break;
    }
  } catch (...) {
    for (int k = 1; k <= p; ++k) {
      try {
        links.send(k, Message::shutdown());
      } catch (...) {
      }
    }
    throw;
  }

  for (int k = 1; k <= p; ++k) links.send(k, Message::shutdown());
  out.verdict = classify_verdict(diverged, out, metrics);
  out.comm = stats;
  return {std::move(w), std::move(out)};
}

void dissvrg_worker_run(WorkerLink& link, const Partition& part, const LossKind& kind,
                        const HyperParams& hp, const MiniBatchParams& mb) {
  std::mt19937_64 rng = worker_rng(hp.seed, part.worker_id);
  const auto id = static_cast<std::uint32_t>(part.worker_id);
  const std::size_t q = part.q();
  if (mb.batch_size < 1 || static_cast<std::size_t>(mb.batch_size) > q) {
    throw std::invalid_argument("batch size must be in [1, shard size]");
  }
  std::int64_t last_round = -1;

  ModelVector grad_u_sum, grad_w_sum;
  for (;;) {
    Message m = link.recv();
    if (m.type == MsgType::Shutdown) return;
    require(m.type == MsgType::Params, ProtocolErrc::UnexpectedMessage,
            std::string("wanted Params, got ") + to_string(m.type));
    require(static_cast<std::int64_t>(m.round) > last_round, ProtocolErrc::OutOfOrder,
            "round " + std::to_string(m.round) + " after " + std::to_string(last_round));
    last_round = m.round;
    const std::uint32_t round = m.round;
    const ModelVector w_t = std::move(m.vec);

    link.send(Message::local_grad_sum(round, id,
                                      local_gradient_sum(part, w_t, kind, hp.lambda)));

    for (int step = 0; step < hp.inner_steps; ++step) {
      Message im = link.recv();
      if (im.type == MsgType::Shutdown) return;  // master aborted mid-round
      require(im.type == MsgType::InnerParams, ProtocolErrc::UnexpectedMessage,
              std::string("wanted InnerParams, got ") + to_string(im.type));
      require(im.round == round && im.inner_step == static_cast<std::uint32_t>(step),
              ProtocolErrc::OutOfOrder, "inner params for wrong round or step");
      require(im.vec.size() == w_t.size(), ProtocolErrc::DimensionMismatch,
              "inner params length");

      const std::vector<std::uint32_t> batch = sample_minibatch(rng, q, mb.batch_size);
      minibatch_grad_sum(kind, part, batch, im.vec, hp.lambda, grad_u_sum);
      minibatch_grad_sum(kind, part, batch, w_t, hp.lambda, grad_w_sum);
      link.send(Message::mini_batch_stats(round, static_cast<std::uint32_t>(step), id,
                                          static_cast<std::uint32_t>(batch.size()), grad_u_sum,
                                          grad_w_sum));
    }
  }
}

}  // namespace scope
