#pragma once

#include <cstdint>
#include <vector>

#include "scope/vec.hpp"

namespace scope {

struct Feature {
  std::uint32_t index = 0;  // 0-based
  double value = 0.0;
};

// Sparse training instance with a {+1, -1} label. Feature indices are
// strictly increasing within an instance.
struct LabeledInstance {
  std::vector<Feature> features;
  int label = 1;
};

// One (a, b) term of the separable 1-d objective sum_i a_i (w - b_i)^2.
// A Quadratic1D instance stores the index of its term as the value of its
// single feature, so sharding instances shards the terms.
struct QuadTerm {
  double a = 0.0;
  double b = 0.0;
};

enum class LossType { LogisticL2, SmoothedHingeL2, Quadratic1D };

struct LossKind {
  LossType type = LossType::LogisticL2;
  double hinge_width = 0.5;          // smoothing width h of the smoothed hinge
  std::vector<QuadTerm> quad_terms;  // Quadratic1D only

  static LossKind logistic_l2() { return LossKind{}; }
  static LossKind smoothed_hinge_l2(double width = 0.5) {
    return LossKind{LossType::SmoothedHingeL2, width, {}};
  }
  static LossKind quadratic_1d(std::vector<QuadTerm> terms) {
    return LossKind{LossType::Quadratic1D, 0.5, std::move(terms)};
  }
};

struct SmoothnessConstants {
  double L = 0.0;   // smoothness of each f_i
  double mu = 0.0;  // strong convexity of the sum
};

// f_i(w) for one instance, L2 term included.
double loss_value(const LossKind& kind, const ModelVector& w, const LabeledInstance& inst,
                  double lambda);

// Dense gradient of f_i at w. The out-parameter form reuses the buffer; inner
// loops call it twice per step.
void loss_grad(const LossKind& kind, const ModelVector& w, const LabeledInstance& inst,
               double lambda, ModelVector& out);
ModelVector loss_grad(const LossKind& kind, const ModelVector& w, const LabeledInstance& inst,
                      double lambda);

// P(w) = (1/n) sum_i f_i(w), summed in instance order.
double objective(const LossKind& kind, const ModelVector& w,
                 const std::vector<LabeledInstance>& instances, double lambda);

// (1/n) sum_i grad f_i(w); the deterministic full-batch gradient.
ModelVector full_gradient(const LossKind& kind, const ModelVector& w,
                          const std::vector<LabeledInstance>& instances, double lambda);

// Conservative (L, mu) for the given data. Margin losses require lambda > 0
// because the data term alone is not strongly convex.
SmoothnessConstants smoothness_bound(const LossKind& kind,
                                     const std::vector<LabeledInstance>& instances, double lambda);

// Resolves a Quadratic1D instance's feature value to its (a, b) term;
// validates the handle.
const QuadTerm& quad_term(const LossKind& kind, const LabeledInstance& inst);

}  // namespace scope
