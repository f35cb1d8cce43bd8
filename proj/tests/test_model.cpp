#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "scope/errors.hpp"
#include "scope/model.hpp"

using namespace scope;

namespace {

LabeledInstance make_inst(std::vector<Feature> f, int label) {
  return LabeledInstance{std::move(f), label};
}

// One Quadratic1D instance is a handle (the feature value) into the loss
// kind's term table.
LabeledInstance quad_inst(std::uint32_t term_index) {
  return make_inst({{0, static_cast<double>(term_index)}}, 1);
}

LossKind toy_quad() { return LossKind::quadratic_1d({{1.0, 1.0}, {100.0, 10.0}}); }

ModelVector random_vec(std::mt19937_64& rng, std::size_t d, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  ModelVector v(d);
  for (double& x : v) x = u(rng);
  return v;
}

LabeledInstance random_inst(std::mt19937_64& rng, std::size_t d) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Feature> f;
  for (std::uint32_t j = 0; j < d; ++j) {
    if ((rng() & 3u) == 0u) continue;  // leave some coordinates sparse
    f.push_back({j, u(rng)});
  }
  if (f.empty()) f.push_back({0, 1.0});
  return make_inst(std::move(f), (rng() & 1u) ? 1 : -1);
}

// Central finite difference of loss_value, step scaled per coordinate.
ModelVector fd_grad(const LossKind& kind, const ModelVector& w, const LabeledInstance& inst,
                    double lambda) {
  ModelVector g(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::fabs(w[j]));
    ModelVector wp = w, wm = w;
    wp[j] += h;
    wm[j] -= h;
    g[j] = (loss_value(kind, wp, inst, lambda) - loss_value(kind, wm, inst, lambda)) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("logistic loss at w = 0 is log 2") {
  const ModelVector w(3, 0.0);
  const auto inst = make_inst({{0, 0.4}, {2, -1.7}}, 1);
  CHECK(loss_value(LossKind::logistic_l2(), w, inst, 0.0) ==
        doctest::Approx(0.6931471805599453).epsilon(1e-15));
  const auto neg = make_inst({{1, 2.5}}, -1);
  CHECK(loss_value(LossKind::logistic_l2(), w, neg, 0.0) ==
        doctest::Approx(0.6931471805599453).epsilon(1e-15));
}

TEST_CASE("quadratic term (1,1) vanishes at its minimum") {
  const LossKind kind = LossKind::quadratic_1d({{1.0, 1.0}});
  CHECK(loss_value(kind, {1.0}, quad_inst(0), 0.0) == 0.0);
}

TEST_CASE("logistic with regularizer matches the closed form") {
  // w = (1, 0), x = (-2, 3), y = +1: margin -2, value log(1+e^2) + 0.25.
  const ModelVector w{1.0, 0.0};
  const auto inst = make_inst({{0, -2.0}, {1, 3.0}}, 1);
  CHECK(loss_value(LossKind::logistic_l2(), w, inst, 0.5) ==
        doctest::Approx(2.3769280110429725).epsilon(1e-15));
}

TEST_CASE("logistic loss never overflows on huge margins") {
  const auto inst = make_inst({{0, 1.0}}, 1);
  const double far_neg = loss_value(LossKind::logistic_l2(), {-800.0}, inst, 0.0);
  CHECK(far_neg == doctest::Approx(800.0).epsilon(1e-12));  // log(1+e^800) ~ 800
  const double far_pos = loss_value(LossKind::logistic_l2(), {800.0}, inst, 0.0);
  CHECK(far_pos >= 0.0);
  CHECK(far_pos < 1e-300);
}

TEST_CASE("logistic gradient at w = 0 is -y x / 2 on the support") {
  const ModelVector w(4, 0.0);
  const auto inst = make_inst({{1, 0.8}, {3, -0.3}}, -1);
  const ModelVector g = loss_grad(LossKind::logistic_l2(), w, inst, 0.0);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == doctest::Approx(0.5 * 0.8).epsilon(1e-15));
  CHECK(g[2] == 0.0);
  CHECK(g[3] == doctest::Approx(0.5 * -0.3).epsilon(1e-15));
}

TEST_CASE("quadratic gradient (100,10) at 0 is -2000") {
  const LossKind kind = LossKind::quadratic_1d({{100.0, 10.0}});
  const ModelVector g = loss_grad(kind, {0.0}, quad_inst(0), 0.0);
  CHECK(g[0] == -2000.0);
}

TEST_CASE("gradients match central finite differences for every loss") {
  std::mt19937_64 rng(2024);
  struct Case {
    LossKind kind;
    std::size_t d;
    double lambda;
  };
  const Case cases[] = {
      {LossKind::logistic_l2(), 6, 0.3},
      {LossKind::smoothed_hinge_l2(), 6, 0.2},
      {LossKind::smoothed_hinge_l2(0.25), 4, 0.0},
      {toy_quad(), 1, 0.1},
  };
  for (const Case& tc : cases) {
    for (int rep = 0; rep < 25; ++rep) {
      const ModelVector w = random_vec(rng, tc.d, 2.0);
      const LabeledInstance inst = tc.kind.type == LossType::Quadratic1D
                                       ? quad_inst(static_cast<std::uint32_t>(rng() % 2))
                                       : random_inst(rng, tc.d);
      const ModelVector g = loss_grad(tc.kind, w, inst, tc.lambda);
      const ModelVector fd = fd_grad(tc.kind, w, inst, tc.lambda);
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double scale = std::max(1.0, std::fabs(fd[j]));
        CHECK(std::fabs(g[j] - fd[j]) / scale < 1e-6);
      }
    }
  }
}

TEST_CASE("objective of the toy quadratic at 0 is 5000.5") {
  const std::vector<LabeledInstance> data{quad_inst(0), quad_inst(1)};
  CHECK(objective(toy_quad(), {0.0}, data, 0.0) == 5000.5);
}

TEST_CASE("toy objective is minimized at 1001/101 with zero gradient") {
  const std::vector<LabeledInstance> data{quad_inst(0), quad_inst(1)};
  const double wstar = 1001.0 / 101.0;  // (2*1*1 + 2*100*10) / (2*1 + 2*100)
  const ModelVector g = full_gradient(toy_quad(), {wstar}, data, 0.0);
  CHECK(std::fabs(g[0]) < 1e-10);
  const double at_min = objective(toy_quad(), {wstar}, data, 0.0);
  CHECK(at_min == doctest::Approx(409050.0 / 10201.0).epsilon(1e-15));
  for (double delta : {-0.5, -1e-3, 1e-3, 0.5}) {
    CHECK(objective(toy_quad(), {wstar + delta}, data, 0.0) > at_min);
  }
}

TEST_CASE("single-instance objective equals the loss value") {
  std::mt19937_64 rng(7);
  const ModelVector w = random_vec(rng, 5, 1.0);
  const LabeledInstance inst = random_inst(rng, 5);
  const std::vector<LabeledInstance> data{inst};
  CHECK(objective(LossKind::logistic_l2(), w, data, 0.2) ==
        loss_value(LossKind::logistic_l2(), w, inst, 0.2));
}

TEST_CASE("objective rejects an empty dataset") {
  CHECK_THROWS_AS(objective(LossKind::logistic_l2(), {0.0}, {}, 0.0), std::invalid_argument);
}

TEST_CASE("repeated objective evaluations are bit-identical") {
  std::mt19937_64 rng(99);
  std::vector<LabeledInstance> data;
  for (int i = 0; i < 64; ++i) data.push_back(random_inst(rng, 8));
  const ModelVector w = random_vec(rng, 8, 3.0);
  const double a = objective(LossKind::logistic_l2(), w, data, 0.05);
  const double b = objective(LossKind::logistic_l2(), w, data, 0.05);
  CHECK(a == b);
}

TEST_CASE("smoothness bounds for the toy quadratic") {
  const std::vector<LabeledInstance> data{quad_inst(0), quad_inst(1)};
  const SmoothnessConstants sc = smoothness_bound(toy_quad(), data, 0.0);
  CHECK(sc.L == 200.0);
  CHECK(sc.mu == 2.0);
}

TEST_CASE("smoothness bounds for unit-norm logistic data") {
  const std::vector<LabeledInstance> data{
      make_inst({{0, 1.0}}, 1),
      make_inst({{0, 0.6}, {1, 0.8}}, -1),
  };
  const SmoothnessConstants sc = smoothness_bound(LossKind::logistic_l2(), data, 1e-4);
  CHECK(sc.L == doctest::Approx(0.25 + 1e-4).epsilon(1e-15));
  CHECK(sc.mu == 1e-4);
}

TEST_CASE("margin losses without regularization have no curvature bound") {
  const std::vector<LabeledInstance> data{make_inst({{0, 1.0}}, 1)};
  CHECK_THROWS_AS(smoothness_bound(LossKind::logistic_l2(), data, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(smoothness_bound(LossKind::smoothed_hinge_l2(), data, 0.0),
                  std::invalid_argument);
}

TEST_CASE("sampled gradients satisfy the Lipschitz bound") {
  std::mt19937_64 rng(314);
  std::vector<LabeledInstance> data;
  for (int i = 0; i < 20; ++i) data.push_back(random_inst(rng, 6));
  for (const LossKind& kind : {LossKind::logistic_l2(), LossKind::smoothed_hinge_l2()}) {
    const double lambda = 0.05;
    const SmoothnessConstants sc = smoothness_bound(kind, data, lambda);
    for (int rep = 0; rep < 1000; ++rep) {
      const ModelVector a = random_vec(rng, 6, 4.0);
      const ModelVector b = random_vec(rng, 6, 4.0);
      const LabeledInstance& inst = data[rng() % data.size()];
      const ModelVector ga = loss_grad(kind, a, inst, lambda);
      const ModelVector gb = loss_grad(kind, b, inst, lambda);
      CHECK(std::sqrt(dist_sq(ga, gb)) <= sc.L * std::sqrt(dist_sq(a, b)) * (1.0 + 1e-12) + 1e-12);
    }
  }
}

TEST_CASE("sampled losses satisfy the strong-convexity lower bound") {
  std::mt19937_64 rng(2718);
  std::vector<LabeledInstance> data;
  for (int i = 0; i < 16; ++i) data.push_back(random_inst(rng, 5));
  const double lambda = 0.3;
  const LossKind kind = LossKind::logistic_l2();
  const SmoothnessConstants sc = smoothness_bound(kind, data, lambda);
  for (int rep = 0; rep < 200; ++rep) {
    const ModelVector a = random_vec(rng, 5, 3.0);
    const ModelVector b = random_vec(rng, 5, 3.0);
    const double fa = objective(kind, a, data, lambda);
    const double fb = objective(kind, b, data, lambda);
    const ModelVector gb = full_gradient(kind, b, data, lambda);
    double inner = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) inner += gb[j] * (a[j] - b[j]);
    const double rhs = fb + inner + 0.5 * sc.mu * dist_sq(a, b);
    CHECK(fa >= rhs - 1e-10 * std::max(1.0, std::fabs(fa)));
  }
}

TEST_CASE("dimension mismatches are reported") {
  const auto inst = make_inst({{5, 1.0}}, 1);
  CHECK_THROWS_AS(loss_value(LossKind::logistic_l2(), ModelVector(3, 0.0), inst, 0.0),
                  DimensionError);
  CHECK_THROWS_AS(loss_grad(LossKind::logistic_l2(), ModelVector(3, 0.0), inst, 0.0),
                  DimensionError);
}

TEST_CASE("non-finite results are reported as numeric errors") {
  ModelVector w{std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(loss_value(LossKind::quadratic_1d({{1.0, 1.0}}), w, quad_inst(0), 0.0),
                  NumericError);
}

TEST_CASE("quadratic term handles are validated") {
  const LossKind kind = toy_quad();
  CHECK(quad_term(kind, quad_inst(1)).a == 100.0);
  CHECK_THROWS_AS(loss_value(kind, {0.0}, quad_inst(7), 0.0), DimensionError);
}
