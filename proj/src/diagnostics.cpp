#include "scope/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "scope/engine.hpp"
#include "scope/errors.hpp"

namespace scope {

TheoryConstants theory_constants(double L, double mu, double eta, double c, int M) {
  TheoryConstants tc;
  tc.alpha = 1.0 - eta * (2.0 * mu + c);
  tc.beta = c * eta + 3.0 * L * L * eta * eta;

  const bool alpha_ok = tc.alpha > 0.0 && tc.alpha < 1.0;
  const bool beta_ok = tc.beta > 0.0 && tc.beta < 1.0;
  const bool sum_ok = tc.alpha + tc.beta < 1.0;
  tc.valid = alpha_ok && beta_ok && sum_ok && c > L - mu;

  if (alpha_ok) {
    const double tail = tc.beta / (1.0 - tc.alpha);
    tc.rate_last = std::pow(tc.alpha, M) + tail;
    tc.rate_avg = 1.0 / (M * (1.0 - tc.alpha)) + tail;
    if (sum_ok) {
      // Smallest M with alpha^M < 1 - beta/(1-alpha), i.e. rate_last < 1.
      tc.m_min_last = static_cast<int>(
          std::ceil(std::log((1.0 - tc.alpha - tc.beta) / (1.0 - tc.alpha)) / std::log(tc.alpha)));
      tc.m_min_avg = static_cast<int>(std::ceil(1.0 / (1.0 - tc.alpha - tc.beta)));
    }
  } else {
    tc.rate_last = std::numeric_limits<double>::infinity();
    tc.rate_avg = std::numeric_limits<double>::infinity();
  }
  return tc;
}

bool check_step_size(double eta, double L, double mu, double c) {
  if (eta <= 0.0) return false;
  const double bound_variance = 2.0 * mu / (3.0 * L * L);
  const double bound_decay = 1.0 / (2.0 * mu + c);
  return eta < bound_variance && eta < bound_decay && c > L - mu;
}

ModelVector expected_local_grad(const Partition& part, const ModelVector& u,
                                const ModelVector& w_t, const ModelVector& z, double c,
                                const LossKind& kind, double lambda) {
  if (part.instances.empty()) throw std::invalid_argument("empty shard");
  if (u.size() != w_t.size() || u.size() != z.size()) {
    throw DimensionError("u, w_t, z lengths disagree");
  }
  const auto q = static_cast<double>(part.q());
  ModelVector grad_u = local_gradient_sum(part, u, kind, lambda);
  div_in_place(grad_u, q);
  ModelVector grad_w = local_gradient_sum(part, w_t, kind, lambda);
  div_in_place(grad_w, q);

  ModelVector out(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    out[j] = grad_u[j] - grad_w[j] + z[j] + c * (u[j] - w_t[j]);
  }
  return out;
}

bool variance_bound_holds(const Partition& part, const ModelVector& u, const ModelVector& w_t,
                          const ModelVector& z, double c, double L, const LossKind& kind,
                          double lambda, const ModelVector& wstar) {
  if (part.instances.empty()) throw std::invalid_argument("empty shard");
  const std::size_t d = u.size();
  if (w_t.size() != d || z.size() != d || wstar.size() != d) {
    throw DimensionError("state vectors length disagree");
  }

  ModelVector gi_u, gi_w;
  double second_moment = 0.0;
  for (const LabeledInstance& inst : part.instances) {
    loss_grad(kind, u, inst, lambda, gi_u);
    loss_grad(kind, w_t, inst, lambda, gi_w);
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = gi_u[j] - gi_w[j] + z[j] + c * (u[j] - w_t[j]);
      s += v * v;
    }
    second_moment += s;
  }
  second_moment /= static_cast<double>(part.q());

  const double bound =
      3.0 * (L * L + c * c) * dist_sq(u, w_t) + 3.0 * L * L * dist_sq(w_t, wstar);
  return second_moment <= bound;
}

QuadraticProblem quadratic_problem(const LossKind& quad, const std::vector<Partition>& parts,
                                   double lambda) {
  if (quad.type != LossType::Quadratic1D) {
    throw std::invalid_argument("curvature summary needs a Quadratic1D loss");
  }
  if (parts.empty()) throw std::invalid_argument("no partitions");

  QuadraticProblem out;
  double curvature_total = 0.0;  // sum over all instances of 2 a_i
  double weighted_center = 0.0;  // sum of 2 a_i b_i
  std::size_t n = 0;

  for (const Partition& part : parts) {
    if (part.instances.empty()) throw std::invalid_argument("empty shard");
    double local = 0.0;
    for (const LabeledInstance& inst : part.instances) {
      const QuadTerm& t = quad_term(quad, inst);
      if (t.a <= 0.0) throw std::invalid_argument("non-positive curvature");
      local += 2.0 * t.a;
      curvature_total += 2.0 * t.a;
      weighted_center += 2.0 * t.a * t.b;
      ++n;
    }
    // A_k = Hessian of F_k = (1/q_k) sum 2 a_i, plus the L2 term.
    out.local_curvatures.push_back(local / static_cast<double>(part.q()) + lambda);
  }

  double mean = 0.0;
  for (double a_k : out.local_curvatures) mean += a_k;
  out.global_curvature = mean / static_cast<double>(out.local_curvatures.size());
  // grad P(w) = (1/n) sum 2 a_i (w - b_i) + lambda w = 0.
  out.wstar = weighted_center / (curvature_total + static_cast<double>(n) * lambda);
  return out;
}

double fixed_point_factor(const QuadraticProblem& problem, double c) {
  if (problem.local_curvatures.empty()) throw std::invalid_argument("no curvatures");
  double acc = 0.0;
  for (double a_k : problem.local_curvatures) {
    if (a_k <= 0.0) throw std::invalid_argument("non-positive curvature");
    if (a_k + c <= 0.0) throw std::invalid_argument("non-positive shifted curvature");
    acc += problem.global_curvature / (a_k + c);
  }
  return 1.0 - acc / static_cast<double>(problem.local_curvatures.size());
}

ModelVector solve_optimum(const Dataset& ds, const LossKind& kind, double lambda, double grad_tol,
                          int max_iters) {
  const SmoothnessConstants sc = smoothness_bound(kind, ds, lambda);
  const double kappa = sc.L / sc.mu;
  const double momentum = (std::sqrt(kappa) - 1.0) / (std::sqrt(kappa) + 1.0);

  ModelVector w(ds.dim, 0.0);
  ModelVector v = w;
  const double tol_sq = grad_tol * grad_tol;
  for (int it = 0; it < max_iters; ++it) {
    const ModelVector grad_w = full_gradient(kind, w, ds, lambda);
    if (norm_sq(grad_w) <= tol_sq) return w;
    const ModelVector grad_v = full_gradient(kind, v, ds, lambda);
    ModelVector w_next(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) w_next[j] = v[j] - grad_v[j] / sc.L;
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = w_next[j] + momentum * (w_next[j] - w[j]);
    }
    w = std::move(w_next);
  }
  throw NumericError("reference solve did not reach the gradient tolerance");
}

}  // namespace scope
