#pragma once

#include <vector>

#include "scope/data.hpp"
#include "scope/model.hpp"
#include "scope/vec.hpp"

namespace scope {

// Rate constants for one (L, mu, eta, c, M) setting:
//   alpha = 1 - eta(2 mu + c),  beta = c eta + 3 L^2 eta^2.
// One pass of M last-iterate inner steps contracts the expected squared
// distance by rate_last = alpha^M + beta/(1-alpha); the averaged-iterate
// analogue is rate_avg = 1/(M(1-alpha)) + beta/(1-alpha). valid means the
// whole regime holds: alpha, beta in (0,1), alpha + beta < 1, c > L - mu.
// When alpha is outside (0,1) the rates are +inf and the thresholds -1; the
// flag is the thing to branch on, never NaN.
struct TheoryConstants {
  double alpha = 0.0;
  double beta = 0.0;
  double rate_last = 0.0;
  double rate_avg = 0.0;
  int m_min_last = -1;  // smallest M with rate_last < 1
  int m_min_avg = -1;   // smallest M with rate_avg < 1
  bool valid = false;
};

TheoryConstants theory_constants(double L, double mu, double eta, double c, int M);

// Strict sufficient conditions: eta < min{2mu/(3L^2), 1/(2mu+c)} and
// c > L - mu. Equivalent to TheoryConstants::valid for the same inputs.
bool check_step_size(double eta, double L, double mu, double c);

// Closed form of the conditional expectation of a worker's update direction:
//   grad F_k(u) - grad F_k(w_t) + z + c (u - w_t)
// where F_k is the shard mean. The exhaustive per-instance average must match
// this exactly; tests assert it.
ModelVector expected_local_grad(const Partition& part, const ModelVector& u,
                                const ModelVector& w_t, const ModelVector& z, double c,
                                const LossKind& kind, double lambda);

// Checks the second-moment bound
//   E_i ||grad f_i(u) - grad f_i(w_t) + z + c(u - w_t)||^2
//     <= 3(L^2 + c^2)||u - w_t||^2 + 3L^2 ||w_t - w*||^2
// by exhaustive evaluation over the shard. z must be the exact global mean
// gradient at w_t; the bound is not claimed for stale z.
bool variance_bound_holds(const Partition& part, const ModelVector& u, const ModelVector& w_t,
                          const ModelVector& z, double c, double L, const LossKind& kind,
                          double lambda, const ModelVector& wstar);

// 1-d curvature summary of a sharded quadratic: A_k is the local Hessian of
// the shard mean, A their average, wstar the global minimizer.
struct QuadraticProblem {
  std::vector<double> local_curvatures;  // A_k, one per worker
  double global_curvature = 0.0;         // A = mean of A_k
  double wstar = 0.0;
};

QuadraticProblem quadratic_problem(const LossKind& quad, const std::vector<Partition>& parts,
                                   double lambda = 0.0);

// Contraction factor of the idealized round in which every worker jumps to
// the exact minimizer of F_k(u) + (c/2)||u - w_t||^2:
//   1 - (1/p) sum_k A/(A_k + c).
// |factor| > 1 predicts divergence of that idealization. It speaks only about
// exact local solves; finite-M behavior can and does differ.
double fixed_point_factor(const QuadraticProblem& problem, double c);

// Deterministic full-gradient reference minimizer (Nesterov acceleration),
// run until ||grad P|| <= grad_tol. Throws if the budget runs out first.
ModelVector solve_optimum(const Dataset& ds, const LossKind& kind, double lambda,
                          double grad_tol = 1e-12, int max_iters = 2000000);

}  // namespace scope
