#include <gtest/gtest.h>

#include "graspmap/activations.hpp"
#include "graspmap/adam.hpp"
#include "graspmap/loss.hpp"
#include "graspmap/rng.hpp"
#include "test_util.hpp"

using namespace graspmap;
using testutil::random_tensor;
using testutil::rel_error;

TEST(Relu, ClampsNegativesToZero) {
  const auto x = Tensor<double>::from_values({3}, {-1.0, 0.0, 2.0});
  const auto y = relu_forward(x);
  EXPECT_DOUBLE_EQ(y[0], 0.0);
  EXPECT_DOUBLE_EQ(y[1], 0.0);
  EXPECT_DOUBLE_EQ(y[2], 2.0);
}

TEST(Relu, AllNegativeInputGivesZeroOutputAndGrad) {
  const auto x = Tensor<double>::from_values({4}, {-3, -1, -0.5, -2});
  const auto y = relu_forward(x);
  const auto g = relu_backward(Tensor<double>::filled({4}, 1.0), x);
  for (std::int64_t i = 0; i < 4; ++i) {
    EXPECT_EQ(y[i], 0.0);
    EXPECT_EQ(g[i], 0.0);
  }
}

TEST(Relu, GradientMatchesFiniteDifferencesAwayFromKink) {
  Rng rng = make_rng(17);
  Tensor<double> x({40});
  for (std::int64_t i = 0; i < x.size(); ++i) {
    double v = uniform_double(rng, 0.1, 1.5);
    if (uniform_double(rng, 0, 1) < 0.5) v = -v;
    x[i] = v;  // |x| > 0.1 keeps finite differences off the kink
  }
  const auto probe = random_tensor<double>({40}, rng);
  const auto g = relu_backward(probe, x);
  auto probe_fn = [&] { return dot(relu_forward(x), probe); };
  double max_rel = 0;
  for (std::int64_t i = 0; i < x.size(); ++i) {
    max_rel = std::max(max_rel, rel_error(g[i], testutil::central_diff(probe_fn, x[i])));
  }
  EXPECT_LT(max_rel, 1e-6);
}

namespace {

struct LossFixture {
  Tensor<double> pq, pc, ps, pw, tq, tc, ts, tw;
  explicit LossFixture(std::vector<int> shape) {
    for (Tensor<double>* t : {&pq, &pc, &ps, &pw, &tq, &tc, &ts, &tw}) {
      *t = Tensor<double>(shape);
    }
  }
};

}  // namespace

TEST(WeightedMse, PerfectPredictionGivesZeroLossAndGrads) {
  LossFixture f({2, 1, 3, 3});
  Rng rng = make_rng(5);
  f.pq = random_tensor<double>({2, 1, 3, 3}, rng);
  f.tq = f.pq;
  const auto r = weighted_mse_loss(f.pq, f.pc, f.ps, f.pw, f.tq, f.tc, f.ts, f.tw);
  EXPECT_DOUBLE_EQ(r.loss, 0.0);
  for (std::int64_t i = 0; i < r.grad_q.size(); ++i) {
    EXPECT_EQ(r.grad_q[i], 0.0);
    EXPECT_EQ(r.grad_cos[i], 0.0);
    EXPECT_EQ(r.grad_sin[i], 0.0);
    EXPECT_EQ(r.grad_w[i], 0.0);
  }
}

TEST(WeightedMse, UnitQualityResidualWithDefaultWeights) {
  // n = 1, single pixel, q residual 1, everything else 0:
  // loss = (1/2) * lambda_q = 2.5 with the default weights (5, 3, 4).
  LossFixture f({1, 1, 1, 1});
  f.pq[0] = 1.0;
  const auto r = weighted_mse_loss(f.pq, f.pc, f.ps, f.pw, f.tq, f.tc, f.ts, f.tw);
  EXPECT_DOUBLE_EQ(r.loss, 2.5);
  EXPECT_DOUBLE_EQ(r.grad_q[0], 5.0);  // lambda_q * residual / n
}

TEST(WeightedMse, GradientMatchesFiniteDifferences) {
  Rng rng = make_rng(55);
  LossFixture f({2, 1, 3, 4});
  for (Tensor<double>* t : {&f.pq, &f.pc, &f.ps, &f.pw, &f.tq, &f.tc, &f.ts, &f.tw}) {
    *t = random_tensor<double>({2, 1, 3, 4}, rng);
  }
  const auto r = weighted_mse_loss(f.pq, f.pc, f.ps, f.pw, f.tq, f.tc, f.ts, f.tw);
  auto loss_fn = [&] {
    return static_cast<double>(
        weighted_mse_loss(f.pq, f.pc, f.ps, f.pw, f.tq, f.tc, f.ts, f.tw).loss);
  };
  double max_rel = 0;
  for (std::int64_t i = 0; i < f.pq.size(); ++i) {
    max_rel = std::max(max_rel, rel_error(r.grad_q[i], testutil::central_diff(loss_fn, f.pq[i])));
    max_rel = std::max(max_rel,
                       rel_error(r.grad_cos[i], testutil::central_diff(loss_fn, f.pc[i])));
    max_rel = std::max(max_rel,
                       rel_error(r.grad_sin[i], testutil::central_diff(loss_fn, f.ps[i])));
    max_rel = std::max(max_rel, rel_error(r.grad_w[i], testutil::central_diff(loss_fn, f.pw[i])));
  }
  EXPECT_LT(max_rel, 1e-6);
}

TEST(WeightedMse, NonNegativeAndZeroOnlyOnZeroResidual) {
  Rng rng = make_rng(60);
  for (int trial = 0; trial < 50; ++trial) {
    LossFixture f({1, 1, 2, 2});
    bool any_residual = false;
    for (Tensor<double>* t : {&f.pq, &f.pc, &f.ps, &f.pw}) {
      for (std::int64_t i = 0; i < t->size(); ++i) {
        if (uniform_double(rng, 0, 1) < 0.3) {
          (*t)[i] = uniform_double(rng, -1, 1);
          if ((*t)[i] != 0.0) any_residual = true;
        }
      }
    }
    const auto r = weighted_mse_loss(f.pq, f.pc, f.ps, f.pw, f.tq, f.tc, f.ts, f.tw);
    EXPECT_GE(r.loss, 0.0);
    EXPECT_EQ(r.loss > 0.0, any_residual);
  }
}

TEST(WeightedMse, ShapeMismatchThrows) {
  LossFixture f({1, 1, 2, 2});
  Tensor<double> bad({1, 1, 2, 3});
  EXPECT_THROW(weighted_mse_loss(f.pq, f.pc, f.ps, bad, f.tq, f.tc, f.ts, f.tw), ShapeError);
}

TEST(Adam, ZeroGradientLeavesFreshParameterUnchanged) {
  Parameter<double> p("p", Tensor<double>::from_values({2}, {1.0, -2.0}));
  adam_step<double>(p, 0.001);
  EXPECT_DOUBLE_EQ(p.value[0], 1.0);
  EXPECT_DOUBLE_EQ(p.value[1], -2.0);
  EXPECT_EQ(p.step_count, 1);
  EXPECT_DOUBLE_EQ(p.adam_m[0], 0.0);
  EXPECT_DOUBLE_EQ(p.adam_v[0], 0.0);
}

TEST(Adam, MomentsDecayTowardZeroAfterGradientStops) {
  Parameter<double> p("p", Tensor<double>({1}));
  p.grad[0] = 1.0;
  adam_step<double>(p, 0.001);
  const double m1 = p.adam_m[0], v1 = p.adam_v[0];
  p.zero_grad();
  adam_step<double>(p, 0.001);
  EXPECT_LT(std::abs(p.adam_m[0]), std::abs(m1));
  EXPECT_LT(p.adam_v[0], v1);
}

TEST(Adam, FirstStepMatchesClosedForm) {
  // First step with gradient 1: bias correction gives m_hat = v_hat = 1, so
  // the update is -lr / (1 + eps).
  Parameter<double> p("p", Tensor<double>({1}));
  p.grad[0] = 1.0;
  const double lr = 0.001, eps = 1e-8;
  adam_step<double>(p, lr, 0.9, 0.999, eps);
  const double expected = -lr * 1.0 / (std::sqrt(1.0) + eps);
  EXPECT_NEAR(p.value[0], expected, 1e-12);
  EXPECT_NEAR(p.value[0], -0.001, 1e-6);
}

TEST(Adam, IdenticalInputsGiveIdenticalUpdates) {
  Parameter<double> a("a", Tensor<double>::from_values({3}, {0.5, 1.0, -0.25}));
  Parameter<double> b("b", Tensor<double>::from_values({3}, {0.5, 1.0, -0.25}));
  for (int step = 0; step < 5; ++step) {
    for (std::int64_t i = 0; i < 3; ++i) {
      a.grad[i] = 0.1 * (step + 1) * (i + 1);
      b.grad[i] = 0.1 * (step + 1) * (i + 1);
    }
    adam_step<double>(a, 0.01);
    adam_step<double>(b, 0.01);
  }
  for (std::int64_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.value[i], b.value[i]);
    EXPECT_EQ(a.adam_m[i], b.adam_m[i]);
    EXPECT_EQ(a.adam_v[i], b.adam_v[i]);
  }
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  Parameter<double> p("conv3.weight", Tensor<double>({1}));
  p.grad[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    adam_step<double>(p, 0.001);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("conv3.weight"), std::string::npos);
  }
}
