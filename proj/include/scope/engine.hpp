#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "scope/data.hpp"
#include "scope/model.hpp"
#include "scope/transport.hpp"
#include "scope/vec.hpp"

namespace scope {

// How a worker condenses its inner trajectory into the update it reports.
enum class Combine { LastIterate, AverageIterate };

struct HyperParams {
  double eta = 0.1;           // inner step size
  double c = 0.0;             // proximal pull toward w_t
  int inner_steps = 1;        // M
  int outer_rounds = 1;       // T
  double lambda = 0.0;        // L2 weight, part of every f_i
  Combine combine = Combine::LastIterate;
  std::uint64_t seed = 0;     // base seed; worker k draws from seed ^ k
};

struct RoundRecord {
  int round = 0;
  double objective = 0.0;
  double dist_sq = 0.0;       // ||w_t - w*||^2 when w* is known, else nan
  std::uint64_t messages = 0; // cumulative master-side payload messages
  std::uint64_t bytes = 0;    // cumulative encoded payload bytes
  double wall_ms = 0.0;       // elapsed since the run started
};

enum class Verdict { Converged, Diverged, MaxIter };
const char* to_string(Verdict v);

struct RunMetrics {
  std::vector<RoundRecord> rounds;  // rows t = 0 .. completed_rounds
  Verdict verdict = Verdict::MaxIter;
  int completed_rounds = 0;
  CommStats comm;
};

// Master-side evaluation context. Used only for per-round diagnostics and the
// final verdict; the optimization itself never reads it, and nothing here
// counts as communication.
struct MetricsContext {
  const Dataset* dataset = nullptr;  // for objective values; may be null
  LossKind kind;
  double lambda = 0.0;
  std::optional<ModelVector> wstar;  // for dist_sq and the verdict
};

// An iterate is out of bounds once any coordinate is non-finite or its norm
// passes this cap.
inline constexpr double kDivergenceNormCap = 1e12;
bool iterate_diverged(const ModelVector& v);

// sum_{i in shard} grad f_i(w); instance order, no averaging.
ModelVector local_gradient_sum(const Partition& part, const ModelVector& w, const LossKind& kind,
                               double lambda);

using InnerStepObserver = std::function<void(int step, const ModelVector& u)>;

// M variance-reduced steps from w_t using the averaged full gradient z:
//   u <- (1 - c*eta) u - eta (grad f_i(u) - grad f_i(w_t) + z - c*w_t)
// with i drawn uniformly from the shard. Returns the last or averaged
// iterate per hp.combine; M = 0 returns w_t. Throws DivergenceError (with
// the iterate attached) when the trajectory leaves the trust region.
ModelVector worker_inner_loop(const Partition& part, const ModelVector& w_t, const ModelVector& z,
                              const LossKind& kind, const HyperParams& hp, std::mt19937_64& rng,
                              int round = 0, const InnerStepObserver* observer = nullptr);

// Drives T rounds against p connected workers: broadcast w_t, average the
// gradient sums into z, broadcast z, average the local updates into w_{t+1}.
// Reductions run in worker-id order, so results are independent of arrival
// timing. Shutdown is always broadcast, including after divergence.
std::pair<ModelVector, RunMetrics> master_run(MasterLinks& links, const HyperParams& hp,
                                              std::size_t n_total, const ModelVector& w0,
                                              const MetricsContext* metrics = nullptr);

// Serves one worker until Shutdown. Validates the conversation: rounds must
// strictly increase and each FullGrad must match the round of its Params.
// A diverged inner loop is reported to the master as a normal LocalUpdate
// carrying the offending iterate; the master decides what to do.
void worker_run(WorkerLink& link, const Partition& part, const LossKind& kind,
                const HyperParams& hp);

// Verdict shared by every driver. A run converged when the squared distance
// to w* fell below 1e-6 of its starting value (i.e. the distance fell below
// 1e-3 of it), diverged when the detector tripped or the final distance is no
// better than the start, and hit the round budget otherwise. Without a known
// w* the best we can say is maxiter (unless the detector fired).
Verdict classify_verdict(bool diverged, const RunMetrics& metrics, const MetricsContext* ctx);

}  // namespace scope
