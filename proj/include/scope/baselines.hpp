#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "scope/engine.hpp"

namespace scope {

struct MiniBatchParams {
  int batch_size = 1;  // per worker, per inner step
};

// Plain single-machine SVRG: full gradient every round, M variance-reduced
// inner steps, last or averaged iterate. Shares the inner kernel and the
// index stream of worker 1, so with equal seeds it reproduces a p = 1, c = 0
// distributed run bit-for-bit. hp.c is ignored (there is no proximal pull
// here); M = 0 leaves w unchanged for the round.
std::pair<ModelVector, RunMetrics> svrg_sequential(const Dataset& ds, const LossKind& kind,
                                                   const HyperParams& hp, const ModelVector& w0,
                                                   const MetricsContext* metrics = nullptr);

// Distributed SVRG that centralizes every inner step: the master broadcasts
// u_m, each worker returns mini-batch gradient sums at u_m and w_t, and the
// master takes the step. Communication is 2p(1 + M) payload messages per
// round, against SCOPE's flat 4p.
std::pair<ModelVector, RunMetrics> dissvrg_master_run(MasterLinks& links, const HyperParams& hp,
                                                      const MiniBatchParams& mb,
                                                      std::size_t n_total, const ModelVector& w0,
                                                      const MetricsContext* metrics = nullptr);

void dissvrg_worker_run(WorkerLink& link, const Partition& part, const LossKind& kind,
                        const HyperParams& hp, const MiniBatchParams& mb);

// batch_size distinct indices from [0, q), ascending. Sampling is a partial
// Fisher-Yates pass, so batch_size = q returns 0..q-1 and the batch sums
// reproduce full local sums exactly.
std::vector<std::uint32_t> sample_minibatch(std::mt19937_64& rng, std::size_t q, int batch_size);

// sum over the batch of grad f_i(at); indices must be in-range.
void minibatch_grad_sum(const LossKind& kind, const Partition& part,
                        const std::vector<std::uint32_t>& batch, const ModelVector& at,
                        double lambda, ModelVector& out);

}  // namespace scope
