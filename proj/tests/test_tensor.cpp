#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "wisynth/gradcheck.hpp"
#include "wisynth/nn.hpp"
#include "wisynth/rng.hpp"
#include "wisynth/tensor.hpp"

using namespace wisynth;

namespace {

Tensor randt(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
             bool requires_grad = false) {
  Tensor t(std::move(shape), 0.0, requires_grad);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

TEST(Tensor, ShapeInvariants) {
  EXPECT_THROW(Tensor::from_data({2, 2}, {1, 2, 3}), ShapeError);
  const Tensor t = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_THROW(t.item(), NotScalar);
  EXPECT_THROW(reshape(t, {4}), ShapeError);
}

TEST(Backward, SumOfSquaresGradient) {
  Rng rng(1);
  Tensor x = randt({5}, rng, -2, 2, true);
  const Tensor loss = sum(mul(x, x));
  loss.backward();
  for (std::size_t i = 0; i < 5; ++i)
    EXPECT_NEAR(x.grad()[i], 2.0 * x.data()[i], 1e-12);
}

TEST(Backward, ReuseAccumulates) {
  Tensor x = Tensor::scalar(3.0, true);
  const Tensor loss = add(x, x);
  loss.backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 2.0);
}

TEST(Backward, RequiresScalar) {
  Tensor x({3}, 1.0, true);
  EXPECT_THROW(x.backward(), NotScalar);
}

TEST(Activations, PointValues) {
  const Tensor x = Tensor::from_data({3}, {-1.0, 0.0, 2.0});
  EXPECT_DOUBLE_EQ(leaky_relu(x, 0.2).data()[0], -0.2);
  EXPECT_DOUBLE_EQ(relu(x).data()[0], 0.0);
  EXPECT_DOUBLE_EQ(sigmoid(x).data()[1], 0.5);
  EXPECT_DOUBLE_EQ(tanh_t(x).data()[1], 0.0);
}

TEST(Activations, TanhRange) {
  Rng rng(2);
  const Tensor x = randt({100}, rng, -10, 10);
  const Tensor y = tanh_t(x);
  for (double v : y.data()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(LogOp, RejectsNonPositive) {
  EXPECT_THROW(log_t(Tensor::from_data({1}, {0.0})), DomainError);
  EXPECT_THROW(log_t(Tensor::from_data({1}, {-1.0})), DomainError);
}

TEST(Conv3d, IdentityKernel) {
  Rng rng(3);
  const Tensor x = randt({1, 3, 3, 3}, rng);
  Conv3dParams p;
  p.kernel = Tensor::from_data({1, 1, 1, 1, 1}, {1.0});
  p.bias = Tensor({1}, 0.0);
  const Tensor y = conv3d(x, p);
  EXPECT_EQ(y.shape(), x.shape());
  EXPECT_EQ(y.data(), x.data());
}

// [DERIVED] all-ones 2x2x2 kernel on constant input c: every output 8c + b.
TEST(Conv3d, ConstantClosedForm) {
  const double c = 1.75, b = 0.25;
  const Tensor x = Tensor({1, 4, 4, 4}, c);
  Conv3dParams p;
  p.kernel = Tensor({1, 1, 2, 2, 2}, 1.0);
  p.bias = Tensor::from_data({1}, {b});
  p.stride = {2, 2, 2};
  const Tensor y = conv3d(x, p);
  EXPECT_EQ(y.shape(), (Shape{1, 2, 2, 2}));
  for (double v : y.data()) EXPECT_NEAR(v, 8.0 * c + b, 1e-12);
}

// [DERIVED] naive direct-sum oracle.
TEST(Conv3d, MatchesNestedLoopOracle) {
  Rng rng(4);
  const std::size_t ci = 2, co = 3, it = 5, ih = 4, iw = 6;
  const std::size_t kt = 2, kh = 3, kw = 2, st = 1, sh = 1, sw = 2;
  const Tensor x = randt({ci, it, ih, iw}, rng);
  Conv3dParams p;
  p.kernel = randt({co, ci, kt, kh, kw}, rng);
  p.bias = randt({co}, rng);
  p.stride = {st, sh, sw};
  const Tensor y = conv3d(x, p);
  const std::size_t ot = (it - kt) / st + 1, oh = (ih - kh) / sh + 1,
                    ow = (iw - kw) / sw + 1;
  ASSERT_EQ(y.shape(), (Shape{co, ot, oh, ow}));
  for (std::size_t j = 0; j < co; ++j)
    for (std::size_t z = 0; z < ot; ++z)
      for (std::size_t yy = 0; yy < oh; ++yy)
        for (std::size_t xx = 0; xx < ow; ++xx) {
          double want = p.bias.data()[j];
          for (std::size_t m = 0; m < ci; ++m)
            for (std::size_t t = 0; t < kt; ++t)
              for (std::size_t h = 0; h < kh; ++h)
                for (std::size_t w = 0; w < kw; ++w)
                  want += p.kernel
                              .data()[(((j * ci + m) * kt + t) * kh + h) * kw +
                                      w] *
                          x.data()[((m * it + z * st + t) * ih + yy * sh + h) *
                                       iw +
                                   xx * sw + w];
          EXPECT_NEAR(
              y.data()[((j * ot + z) * oh + yy) * ow + xx], want, 1e-12);
        }
}

TEST(Conv3dTransposed, IdentityKernel) {
  Rng rng(5);
  const Tensor x = randt({1, 3, 3, 3}, rng);
  Conv3dParams p;
  p.kernel = Tensor::from_data({1, 1, 1, 1, 1}, {1.0});
  p.bias = Tensor({1}, 0.0);
  const Tensor y = conv3d_transposed(x, p);
  EXPECT_EQ(y.data(), x.data());
}

TEST(Conv3dTransposed, Stride2ShapeFormula) {
  const Tensor x = Tensor({4, 2, 6, 8}, 0.0);
  Conv3dParams p;
  p.kernel = Tensor({4, 2, 2, 2, 2}, 0.0);
  p.bias = Tensor({2}, 0.0);
  p.stride = {2, 2, 2};
  // (in - 1) * stride + k per axis
  EXPECT_EQ(conv3d_transposed(x, p).shape(), (Shape{2, 4, 12, 16}));
}

// [DERIVED] inner-product adjoint oracle: <conv(x), y> = <x, tconv(y)>.
TEST(Conv3dTransposed, AdjointOfConv3d) {
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    Conv3dParams p;
    p.kernel = randt({3, 2, 2, 2, 2}, rng);
    p.stride = {2, 1, 2};
    const Tensor x = randt({2, 4, 3, 6}, rng);
    const Tensor fwd = conv3d(x, p);
    Tensor y = randt(fwd.shape(), rng);
    const Tensor back = conv3d_transposed(y, p);
    EXPECT_NEAR(dot(fwd.data(), y.data()), dot(x.data(), back.data()), 1e-8);
  }
}

TEST(BatchNorm, TrainModeNormalizes) {
  Rng rng(7);
  const Tensor x = randt({2, 3, 2, 4, 4}, rng, -3, 7);
  BatchNorm bn(3);
  const Tensor y = batch_norm(x, bn, true);
  const std::size_t n = 2, c = 3, spatial = 2 * 4 * 4;
  for (std::size_t ch = 0; ch < c; ++ch) {
    double mean = 0.0, var = 0.0;
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t i = 0; i < spatial; ++i)
        mean += y.data()[(b * c + ch) * spatial + i];
    mean /= n * spatial;
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t i = 0; i < spatial; ++i) {
        const double d = y.data()[(b * c + ch) * spatial + i] - mean;
        var += d * d;
      }
    var /= n * spatial;
    EXPECT_LT(std::abs(mean), 1e-6);
    EXPECT_NEAR(var, 1.0, 1e-4);
  }
}

TEST(BatchNorm, ConstantChannelGivesBeta) {
  BatchNorm bn(1);
  bn.beta.data()[0] = 0.75;
  const Tensor x = Tensor({1, 2, 2, 2}, 5.0);
  const Tensor y = batch_norm(x, bn, true);
  for (double v : y.data()) EXPECT_NEAR(v, 0.75, 1e-9);
}

// [DERIVED] eval mode reproduces (x - m)/sqrt(v + eps)*gamma + beta.
TEST(BatchNorm, EvalModeUsesRunningStats) {
  Rng rng(8);
  BatchNorm bn(2);
  bn.gamma = Tensor::from_data({2}, {1.5, 0.5});
  bn.beta = Tensor::from_data({2}, {-0.25, 2.0});
  bn.running_mean = {0.3, -0.7};
  bn.running_var = {2.0, 0.5};
  const Tensor x = randt({2, 1, 2, 2}, rng);
  const Tensor y = batch_norm(x, bn, false);
  const std::size_t spatial = 1 * 2 * 2;
  for (std::size_t ch = 0; ch < 2; ++ch)
    for (std::size_t i = 0; i < spatial; ++i) {
      const double want = (x.data()[ch * spatial + i] - bn.running_mean[ch]) /
                              std::sqrt(bn.running_var[ch] + bn.eps) *
                              bn.gamma.data()[ch] +
                          bn.beta.data()[ch];
      EXPECT_NEAR(y.data()[ch * spatial + i], want, 1e-12);
    }
}

TEST(BatchNorm, RunningStatsUpdateOnlyInTrainMode) {
  Rng rng(9);
  BatchNorm bn(1);
  const Tensor x = randt({1, 2, 2, 2}, rng, 1, 3);
  batch_norm(x, bn, false);
  EXPECT_EQ(bn.running_mean[0], 0.0);
  EXPECT_EQ(bn.running_var[0], 1.0);
  batch_norm(x, bn, true);
  EXPECT_NE(bn.running_mean[0], 0.0);
}

// [TRIVIAL] zero weights: i = f = o = 0.5, c~ = 0.
TEST(LstmStep, ZeroWeightClosedForm) {
  LstmParams p(3, 2);
  const Tensor a = Tensor::from_data({3}, {1.0, -2.0, 0.5});
  const Tensor h0 = Tensor({2}, 0.0);
  Tensor c0 = Tensor::from_data({2}, {0.8, -0.4});
  auto [h, c] = lstm_step(a, h0, c0, p);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(c.data()[i], 0.5 * c0.data()[i], 1e-12);
    EXPECT_NEAR(h.data()[i], 0.5 * std::tanh(0.5 * c0.data()[i]), 1e-12);
  }
}

TEST(LstmStep, AllZeroGivesZero) {
  LstmParams p(3, 2);
  auto [h, c] =
      lstm_step(Tensor({3}, 0.0), Tensor({2}, 0.0), Tensor({2}, 0.0), p);
  for (double v : h.data()) EXPECT_DOUBLE_EQ(v, 0.0);
  for (double v : c.data()) EXPECT_DOUBLE_EQ(v, 0.0);
}

// [DERIVED] independent scalar-loop evaluation of the cell equations,
// including the output gate peeping at the *previous* cell state.
TEST(LstmStep, MatchesScalarOracle) {
  Rng rng(10);
  const std::size_t k = 3, d = 4;
  LstmParams p(k, d);
  for (Tensor* t : {&p.w_i, &p.w_f, &p.w_o, &p.w_c, &p.u_i, &p.u_f, &p.u_o,
                    &p.u_c, &p.p_i, &p.p_f, &p.p_o, &p.b_i, &p.b_f, &p.b_o,
                    &p.b_c})
    for (double& v : t->data()) v = rng.uniform(-0.8, 0.8);
  Tensor a = randt({k}, rng), h0 = randt({d}, rng), c0 = randt({d}, rng);
  auto [h, c] = lstm_step(a, h0, c0, p);

  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  for (std::size_t i = 0; i < d; ++i) {
    auto affine_row = [&](const Tensor& w, const Tensor& u, const Tensor& b) {
      double z = b.data()[i];
      for (std::size_t j = 0; j < k; ++j) z += w.data()[i * k + j] * a.data()[j];
      for (std::size_t j = 0; j < d; ++j)
        z += u.data()[i * d + j] * h0.data()[j];
      return z;
    };
    const double gi =
        sig(affine_row(p.w_i, p.u_i, p.b_i) + p.p_i.data()[i] * c0.data()[i]);
    const double gf =
        sig(affine_row(p.w_f, p.u_f, p.b_f) + p.p_f.data()[i] * c0.data()[i]);
    const double go =
        sig(affine_row(p.w_o, p.u_o, p.b_o) + p.p_o.data()[i] * c0.data()[i]);
    const double ct = std::tanh(affine_row(p.w_c, p.u_c, p.b_c));
    const double ci = gf * c0.data()[i] + gi * ct;
    EXPECT_NEAR(c.data()[i], ci, 1e-12);
    EXPECT_NEAR(h.data()[i], go * std::tanh(ci), 1e-12);
  }
}

TEST(LstmStep, HiddenStateBounded) {
  Rng rng(11);
  LstmParams p(2, 3);
  for (Tensor* t : {&p.w_i, &p.w_f, &p.w_o, &p.w_c, &p.u_i, &p.u_f, &p.u_o,
                    &p.u_c, &p.p_i, &p.p_f, &p.p_o, &p.b_i, &p.b_f, &p.b_o,
                    &p.b_c})
    for (double& v : t->data()) v = rng.uniform(-5, 5);
  auto [h, c] = lstm_step(randt({2}, rng, -10, 10), randt({3}, rng),
                          randt({3}, rng, -3, 3), p);
  for (double v : h.data()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
}

// [DERIVED] central finite differences across all primitives and losses.
TEST(GradCheck, SuitePasses) {
  for (const GradCheckResult& r : run_gradcheck_suite(2024, 3))
    EXPECT_TRUE(r.pass) << r.name << " max_rel_err=" << r.max_rel_err;
}

// Negative control: a biased analytic gradient must be caught.
TEST(GradCheck, DetectsCorruption) {
  bool any_fail = false;
  for (const GradCheckResult& r : run_gradcheck_suite(2024, 1, 0.5))
    any_fail = any_fail || !r.pass;
  EXPECT_TRUE(any_fail);
}
