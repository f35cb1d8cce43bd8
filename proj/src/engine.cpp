#include "scope/engine.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "scope/errors.hpp"

namespace scope {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Converged: return "converged";
    case Verdict::Diverged: return "diverged";
    case Verdict::MaxIter: return "maxiter";
  }
  return "?";
}

bool iterate_diverged(const ModelVector& v) {
  // norm_sq of a huge-but-finite vector may overflow to inf; the comparison
  // still trips, which is the point.
  if (!all_finite(v)) return true;
  return norm_sq(v) > kDivergenceNormCap * kDivergenceNormCap;
}

ModelVector local_gradient_sum(const Partition& part, const ModelVector& w, const LossKind& kind,
                               double lambda) {
  ModelVector acc(w.size(), 0.0);
  ModelVector g;
  for (const LabeledInstance& inst : part.instances) {
    loss_grad(kind, w, inst, lambda, g);
    add_in_place(acc, g);
  }
  return acc;
}

ModelVector worker_inner_loop(const Partition& part, const ModelVector& w_t, const ModelVector& z,
                              const LossKind& kind, const HyperParams& hp, std::mt19937_64& rng,
                              int round, const InnerStepObserver* observer) {
  if (w_t.size() != z.size()) throw DimensionError("w and z lengths disagree");
  ModelVector u = w_t;
  if (hp.inner_steps <= 0) return u;
  if (part.instances.empty()) throw std::invalid_argument("inner loop over an empty shard");

  // zhat = z - c*w_t is constant across the round. The c = 0 case copies z
  // verbatim so that a plain variance-reduced step sees the identical bytes.
  ModelVector zhat;
  if (hp.c == 0.0) {
    zhat = z;
  } else {
    zhat.resize(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) zhat[j] = z[j] - hp.c * w_t[j];
  }
  const double decay = 1.0 - hp.c * hp.eta;

  const bool averaging = hp.combine == Combine::AverageIterate;
  ModelVector u_sum;
  if (averaging) u_sum.assign(w_t.size(), 0.0);

  ModelVector grad_u, grad_w;
  const std::uint64_t q = part.instances.size();
  for (int m = 0; m < hp.inner_steps; ++m) {
    const std::uint64_t i = uniform_index(rng, q);
    const LabeledInstance& inst = part.instances[static_cast<std::size_t>(i)];
    loss_grad(kind, u, inst, hp.lambda, grad_u);
    loss_grad(kind, w_t, inst, hp.lambda, grad_w);
    vr_step(u, grad_u, grad_w, zhat, decay, hp.eta);
    if (iterate_diverged(u)) throw DivergenceError(round, m, u);
    if (averaging) add_in_place(u_sum, u);
    if (observer && *observer) (*observer)(m, u);
  }
  if (!averaging) return u;
  div_in_place(u_sum, static_cast<double>(hp.inner_steps));
  return u_sum;
}

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

// Shared by master_run and the distributed baseline: squared-distance ratio
// against the starting point, when w* is known.
Verdict classify_verdict(bool diverged, const RunMetrics& metrics, const MetricsContext* ctx) {
  if (diverged) return Verdict::Diverged;
  if (!ctx || !ctx->wstar || metrics.completed_rounds < 1) return Verdict::MaxIter;
  const double d0 = metrics.rounds.front().dist_sq;
  const double dT = metrics.rounds.back().dist_sq;
  if (d0 == 0.0) return dT == 0.0 ? Verdict::Converged : Verdict::Diverged;
  if (dT < 1e-6 * d0) return Verdict::Converged;  // ||w_T - w*|| < 1e-3 ||w_0 - w*||
  if (dT >= d0) return Verdict::Diverged;
  return Verdict::MaxIter;
}

std::pair<ModelVector, RunMetrics> master_run(MasterLinks& links, const HyperParams& hp,
                                              std::size_t n_total, const ModelVector& w0,
                                              const MetricsContext* metrics) {
  const int p = links.worker_count();
  if (hp.outer_rounds < 0) throw std::invalid_argument("outer rounds must be >= 0");
  if (n_total == 0) throw std::invalid_argument("n_total must be >= 1");

  const auto start = std::chrono::steady_clock::now();
  CommStats& stats = links.stats();
  ModelVector w = w0;
  RunMetrics out;
  out.rounds.push_back(make_record(0, w, metrics, stats, elapsed_ms(start)));

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

      for (int k = 1; k <= p; ++k) links.send(k, Message::full_grad(round, z));

      ModelVector w_next;
      for (int k = 1; k <= p; ++k) {
        Message m = links.recv(k);
        require(m.type == MsgType::LocalUpdate, ProtocolErrc::UnexpectedMessage,
                std::string("wanted LocalUpdate, got ") + to_string(m.type));
        require(m.round == round && m.worker_id == static_cast<std::uint32_t>(k),
                ProtocolErrc::OutOfOrder, "update for wrong round or worker");
        require(m.vec.size() == w.size(), ProtocolErrc::DimensionMismatch, "update length");
        if (iterate_diverged(m.vec)) diverged = true;
        if (k == 1) {
          w_next = std::move(m.vec);
        } else {
          add_in_place(w_next, m.vec);
        }
      }
      ++stats.sync_rounds;
      div_in_place(w_next, static_cast<double>(p));
      w = std::move(w_next);
      if (iterate_diverged(w)) diverged = true;

      out.rounds.push_back(make_record(t + 1, w, metrics, stats, elapsed_ms(start)));
      out.completed_rounds = t + 1;
      if (diverged) break;
    }
  } catch (...) {
    // Unblock workers before propagating; a worker stuck in recv would never
    // see the error otherwise.
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

void worker_run(WorkerLink& link, const Partition& part, const LossKind& kind,
                const HyperParams& hp) {
  std::mt19937_64 rng = worker_rng(hp.seed, part.worker_id);
  const auto id = static_cast<std::uint32_t>(part.worker_id);
  std::int64_t last_round = -1;

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

    Message fg = link.recv();
    if (fg.type == MsgType::Shutdown) return;
    require(fg.type == MsgType::FullGrad, ProtocolErrc::UnexpectedMessage,
            std::string("wanted FullGrad, got ") + to_string(fg.type));
    require(fg.round == round, ProtocolErrc::OutOfOrder, "full gradient for wrong round");
    require(fg.vec.size() == w_t.size(), ProtocolErrc::DimensionMismatch, "full gradient length");

    ModelVector update;
    try {
      update = worker_inner_loop(part, w_t, fg.vec, kind, hp, rng, static_cast<int>(round));
    } catch (const DivergenceError& e) {
      update = e.iterate;  // report it; the master owns the abort decision
    }
    link.send(Message::local_update(round, id, std::move(update)));
  }
}

}  // namespace scope
