#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "scope/model.hpp"

namespace scope {

struct Dataset {
  std::vector<LabeledInstance> instances;
  std::uint32_t dim = 0;

  std::size_t n() const { return instances.size(); }
};

// One worker's shard. Ids start at 1 and match the wire protocol.
struct Partition {
  int worker_id = 0;
  std::vector<LabeledInstance> instances;

  std::size_t q() const { return instances.size(); }
};

struct PartitionStrategy {
  enum class Kind { ShuffledUniform, Contiguous, LabelSorted };

  Kind kind = Kind::ShuffledUniform;
  std::uint64_t seed = 0;

  static PartitionStrategy shuffled(std::uint64_t seed) {
    return {Kind::ShuffledUniform, seed};
  }
  static PartitionStrategy contiguous() { return {Kind::Contiguous, 0}; }
  static PartitionStrategy label_sorted() { return {Kind::LabelSorted, 0}; }
};

// svmlight text: one "label idx:val idx:val ..." instance per line, 1-based
// strictly increasing indices, '#' starts a comment. Labels are coerced to
// {+1, -1} (anything <= 0 maps to -1). dim_override = 0 infers the dimension
// from the largest index seen.
Dataset parse_svmlight(std::istream& in, std::uint32_t dim_override = 0);
Dataset parse_svmlight(const std::string& text, std::uint32_t dim_override = 0);
Dataset parse_svmlight_file(const std::string& path, std::uint32_t dim_override = 0);

void write_svmlight(const Dataset& ds, std::ostream& out);
std::string write_svmlight(const Dataset& ds);

// Scales every instance to unit L2 norm; zero rows are left alone.
Dataset normalize(Dataset ds);

// Splits into p shards whose sizes differ by at most one; the remainder goes
// to the lowest-numbered workers. Deterministic in (dataset, p, strategy).
std::vector<Partition> partition(const Dataset& ds, int p, const PartitionStrategy& strategy);

// Dense d-dimensional logistic data: x ~ N(0, I), labels drawn from a planted
// linear model, rows normalized. Self-contained generator (Box-Muller over a
// pinned PRNG) so the bytes never depend on the standard library.
Dataset make_synthetic_lr(std::size_t n, std::uint32_t d, std::uint64_t seed);

// The 1-d two-term quadratic used throughout the diagnostics: terms
// (a, b) = (1, 1) and (100, 10), one instance per term, minimizer 1001/101.
struct ToyProblem {
  Dataset dataset;
  LossKind loss;
  double wstar = 0.0;
};
ToyProblem make_toy_table1();

inline double objective(const LossKind& kind, const ModelVector& w, const Dataset& ds,
                        double lambda) {
  return objective(kind, w, ds.instances, lambda);
}
inline ModelVector full_gradient(const LossKind& kind, const ModelVector& w, const Dataset& ds,
                                 double lambda) {
  return full_gradient(kind, w, ds.instances, lambda);
}
inline SmoothnessConstants smoothness_bound(const LossKind& kind, const Dataset& ds,
                                            double lambda) {
  return smoothness_bound(kind, ds.instances, lambda);
}

}  // namespace scope
