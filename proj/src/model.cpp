#include "scope/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "scope/errors.hpp"

namespace scope {
namespace {

double sparse_dot(const ModelVector& w, const LabeledInstance& inst) {
  double s = 0.0;
  for (const Feature& f : inst.features) {
    if (f.index >= w.size()) {
      throw DimensionError("feature index " + std::to_string(f.index) +
                           " out of range for dimension " + std::to_string(w.size()));
    }
    s += w[f.index] * f.value;
  }
  return s;
}

// log(1 + e^x) without ever exponentiating a positive argument.
double log1p_exp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// d/dm of log(1 + e^{-m}), i.e. -sigmoid(-m), on the stable branch.
double logistic_dmargin(double m) {
  if (m >= 0.0) {
    const double e = std::exp(-m);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(m));
}

double hinge_value(double m, double h) {
  if (m >= 1.0) return 0.0;
  if (m >= 1.0 - h) {
    const double g = 1.0 - m;
    return g * g / (2.0 * h);
  }
  return (1.0 - m) - h / 2.0;
}

double hinge_dmargin(double m, double h) {
  if (m >= 1.0) return 0.0;
  if (m >= 1.0 - h) return -(1.0 - m) / h;
  return -1.0;
}

double check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string(what) + " is not finite");
  return v;
}

}  // namespace

const QuadTerm& quad_term(const LossKind& kind, const LabeledInstance& inst) {
  if (inst.features.size() != 1 || inst.features[0].index != 0) {
    throw DimensionError("quadratic instance must hold exactly one feature at index 0");
  }
  const double raw = inst.features[0].value;
  const auto idx = static_cast<std::size_t>(raw);
  if (raw < 0.0 || static_cast<double>(idx) != raw || idx >= kind.quad_terms.size()) {
    throw DimensionError("quadratic term handle " + std::to_string(raw) + " out of range");
  }
  return kind.quad_terms[idx];
}

double loss_value(const LossKind& kind, const ModelVector& w, const LabeledInstance& inst,
                  double lambda) {
  const double reg = 0.5 * lambda * norm_sq(w);
  switch (kind.type) {
    case LossType::LogisticL2: {
      const double m = inst.label * sparse_dot(w, inst);
      return check_finite(log1p_exp(-m) + reg, "loss");
    }
    case LossType::SmoothedHingeL2: {
      const double m = inst.label * sparse_dot(w, inst);
      return check_finite(hinge_value(m, kind.hinge_width) + reg, "loss");
    }
    case LossType::Quadratic1D: {
      if (w.size() != 1) throw DimensionError("Quadratic1D expects a 1-d model");
      const QuadTerm& t = quad_term(kind, inst);
      const double d = w[0] - t.b;
      return check_finite(t.a * d * d + reg, "loss");
    }
  }
  throw std::logic_error("unknown loss type");
}

void loss_grad(const LossKind& kind, const ModelVector& w, const LabeledInstance& inst,
               double lambda, ModelVector& out) {
  out.resize(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) out[j] = lambda * w[j];
  switch (kind.type) {
    case LossType::LogisticL2:
    case LossType::SmoothedHingeL2: {
      const double m = inst.label * sparse_dot(w, inst);
      const double dm = kind.type == LossType::LogisticL2 ? logistic_dmargin(m)
                                                          : hinge_dmargin(m, kind.hinge_width);
      const double coeff = check_finite(dm * inst.label, "gradient coefficient");
      for (const Feature& f : inst.features) out[f.index] += coeff * f.value;
      return;
    }
    case LossType::Quadratic1D: {
      if (w.size() != 1) throw DimensionError("Quadratic1D expects a 1-d model");
      const QuadTerm& t = quad_term(kind, inst);
      out[0] += check_finite(2.0 * t.a * (w[0] - t.b), "gradient");
      return;
    }
  }
  throw std::logic_error("unknown loss type");
}

ModelVector loss_grad(const LossKind& kind, const ModelVector& w, const LabeledInstance& inst,
                      double lambda) {
  ModelVector out;
  loss_grad(kind, w, inst, lambda, out);
  return out;
}

double objective(const LossKind& kind, const ModelVector& w,
                 const std::vector<LabeledInstance>& instances, double lambda) {
  if (instances.empty()) throw std::invalid_argument("objective over an empty dataset");
  double total = 0.0;
  for (const LabeledInstance& inst : instances) total += loss_value(kind, w, inst, lambda);
  return total / static_cast<double>(instances.size());
}

ModelVector full_gradient(const LossKind& kind, const ModelVector& w,
                          const std::vector<LabeledInstance>& instances, double lambda) {
  if (instances.empty()) throw std::invalid_argument("gradient over an empty dataset");
  ModelVector acc(w.size(), 0.0);
  ModelVector g;
  for (const LabeledInstance& inst : instances) {
    loss_grad(kind, w, inst, lambda, g);
    add_in_place(acc, g);
  }
  div_in_place(acc, static_cast<double>(instances.size()));
  return acc;
}

SmoothnessConstants smoothness_bound(const LossKind& kind,
                                     const std::vector<LabeledInstance>& instances,
                                     double lambda) {
  if (kind.type == LossType::Quadratic1D) {
    if (kind.quad_terms.empty()) throw std::invalid_argument("quadratic loss with no terms");
    double amin = kind.quad_terms[0].a;
    double amax = amin;
    for (const QuadTerm& t : kind.quad_terms) {
      if (t.a <= 0.0) throw std::invalid_argument("quadratic curvature must be positive");
      amin = std::min(amin, t.a);
      amax = std::max(amax, t.a);
    }
    return {2.0 * amax + lambda, 2.0 * amin + lambda};
  }
  if (instances.empty()) throw std::invalid_argument("smoothness bound over an empty dataset");
  if (lambda <= 0.0) {
    throw std::invalid_argument("margin losses need lambda > 0 for strong convexity");
  }
  double max_sq = 0.0;
  for (const LabeledInstance& inst : instances) {
    double s = 0.0;
    for (const Feature& f : inst.features) s += f.value * f.value;
    max_sq = std::max(max_sq, s);
  }
  const double data_smoothness =
      kind.type == LossType::LogisticL2 ? max_sq / 4.0 : max_sq / kind.hinge_width;
  return {data_smoothness + lambda, lambda};
}

}  // namespace scope
