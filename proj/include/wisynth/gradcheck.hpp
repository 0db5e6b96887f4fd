#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "wisynth/config.hpp"
#include "wisynth/nn.hpp"
#include "wisynth/rng.hpp"
#include "wisynth/tensor.hpp"
#include "wisynth/training.hpp"

namespace wisynth {

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = true;
};

namespace detail {

constexpr double kFdStep = 1e-4;
constexpr double kFdTol = 1e-3;

// Central finite differences against reverse-mode gradients. `f` must
// rebuild its graph from the given leaves on every call.
inline GradCheckResult check_gradients(
    const std::string& name,
    const std::function<Tensor(const std::vector<Tensor>&)>& f,
    std::vector<Tensor> inputs, double corruption = 0.0) {
  GradCheckResult result{name, 0.0, true};
  for (Tensor& in : inputs) {
    in.set_requires_grad(true);
    in.zero_grad();
  }
  const Tensor out = f(inputs);
  out.backward();

  for (Tensor& in : inputs) {
    for (std::size_t i = 0; i < in.size(); ++i) {
      const double saved = in.data()[i];
      in.data()[i] = saved + kFdStep;
      const double up = f(inputs).item();
      in.data()[i] = saved - kFdStep;
      const double down = f(inputs).item();
      in.data()[i] = saved;
      const double fd = (up - down) / (2.0 * kFdStep);
      const double analytic = in.grad()[i] + corruption;
      const double err = std::abs(analytic - fd);
      const double rel = err / std::max({1e-6, std::abs(analytic),
                                         std::abs(fd)});
      result.max_rel_err = std::max(result.max_rel_err, rel);
      if (err > 1e-6 && rel > kFdTol) result.pass = false;
    }
  }
  return result;
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace detail

// One pass over every differentiable primitive and every loss, with fresh
// random instances per seed. `corruption` biases the analytic gradients of
// every check and exists as a negative-control hook.
inline std::vector<GradCheckResult> run_gradcheck_suite(
    std::uint64_t seed, std::size_t n_seeds = 20, double corruption = 0.0) {
  std::vector<GradCheckResult> results;

  for (std::size_t s = 0; s < n_seeds; ++s) {
    Rng rng(splitmix64(seed + 0x677261646bULL * (s + 1)));
    const std::string tag = "[seed " + std::to_string(s) + "] ";
    auto add_check =
        [&](const std::string& name,
            const std::function<Tensor(const std::vector<Tensor>&)>& f,
            std::vector<Tensor> inputs) {
          results.push_back(detail::check_gradients(
              tag + name, f, std::move(inputs), corruption));
        };
    auto rt = [&rng](Shape shape, double lo = -1.0, double hi = 1.0) {
      return detail::random_tensor(std::move(shape), rng, lo, hi);
    };

    add_check("add", [](const std::vector<Tensor>& in) {
      return mean(add(in[0], in[1]));
    }, {rt({2, 3}), rt({2, 3})});
    add_check("sub", [](const std::vector<Tensor>& in) {
      return mean(mul(sub(in[0], in[1]), in[0]));
    }, {rt({2, 3}), rt({2, 3})});
    add_check("mul", [](const std::vector<Tensor>& in) {
      return mean(mul(in[0], in[1]));
    }, {rt({5}), rt({5})});
    add_check("affine", [](const std::vector<Tensor>& in) {
      return mean(mul(affine(in[0], 0.7, -1.3), in[0]));
    }, {rt({4})});
    add_check("log", [](const std::vector<Tensor>& in) {
      return mean(log_t(in[0]));
    }, {rt({6}, 0.5, 2.0)});
    add_check("sigmoid", [](const std::vector<Tensor>& in) {
      return mean(mul(sigmoid(in[0]), in[0]));
    }, {rt({6}, -3.0, 3.0)});
    add_check("tanh", [](const std::vector<Tensor>& in) {
      return mean(mul(tanh_t(in[0]), in[0]));
    }, {rt({6}, -3.0, 3.0)});
    add_check("relu", [](const std::vector<Tensor>& in) {
      return mean(mul(relu(in[0]), in[0]));
    }, {rt({8})});
    add_check("leaky_relu", [](const std::vector<Tensor>& in) {
      return mean(mul(leaky_relu(in[0], 0.2), in[0]));
    }, {rt({8})});
    add_check("sum", [](const std::vector<Tensor>& in) {
      return sum(mul(in[0], in[0]));
    }, {rt({7})});
    add_check("mean", [](const std::vector<Tensor>& in) {
      return mean(mul(in[0], in[0]));
    }, {rt({7})});
    add_check("reshape", [](const std::vector<Tensor>& in) {
      return mean(mul(reshape(in[0], {6}), reshape(in[1], {6})));
    }, {rt({2, 3}), rt({3, 2})});
    add_check("stack", [](const std::vector<Tensor>& in) {
      const Tensor st = stack({in[0], in[1]});
      return mean(mul(st, st));
    }, {rt({3}), rt({3})});
    add_check("matvec", [](const std::vector<Tensor>& in) {
      const Tensor y = matvec(in[0], in[1]);
      return mean(mul(y, y));
    }, {rt({3, 4}), rt({4})});
    add_check("mse", [](const std::vector<Tensor>& in) {
      return mse(in[0], in[1]);
    }, {rt({2, 5}), rt({2, 5})});

    {
      Conv3dParams p;
      p.kernel = rt({2, 1, 2, 2, 2});
      p.bias = rt({2});
      p.stride = {2, 1, 1};
      add_check("conv3d", [p](const std::vector<Tensor>& in) {
        Conv3dParams q = p;
        q.kernel = in[1];
        q.bias = in[2];
        const Tensor y = conv3d(in[0], q);
        return mean(mul(y, y));
      }, {rt({1, 4, 3, 3}), p.kernel, p.bias});
    }
    {
      Conv3dParams p;
      p.kernel = rt({2, 3, 2, 2, 2});
      p.bias = rt({3});
      p.stride = {2, 2, 2};
      add_check("conv3d_transposed", [p](const std::vector<Tensor>& in) {
        Conv3dParams q = p;
        q.kernel = in[1];
        q.bias = in[2];
        const Tensor y = conv3d_transposed(in[0], q);
        return mean(mul(y, y));
      }, {rt({2, 2, 2, 2}), p.kernel, p.bias});
    }
    {
      add_check("batch_norm", [](const std::vector<Tensor>& in) {
        BatchNorm bn(2);
        bn.gamma = in[1];
        bn.beta = in[2];
        const Tensor y = batch_norm(in[0], bn, true);
        return mean(mul(y, mul(y, y)));
      }, {rt({2, 2, 2, 3, 3}), rt({2}, 0.5, 1.5), rt({2})});
    }
    {
      LstmParams p(3, 2);
      std::vector<Tensor> inputs = {rt({3}), rt({2}), rt({2})};
      std::vector<Tensor*> weights = {&p.w_i, &p.w_f, &p.w_o, &p.w_c,
                                      &p.u_i, &p.u_f, &p.u_o, &p.u_c,
                                      &p.p_i, &p.p_f, &p.p_o,
                                      &p.b_i, &p.b_f, &p.b_o, &p.b_c};
      for (Tensor* w : weights) {
        for (double& v : w->data()) v = rng.uniform(-0.5, 0.5);
        inputs.push_back(*w);
      }
      add_check("lstm_step", [p](const std::vector<Tensor>& in) {
        auto [h, c] = lstm_step(in[0], in[1], in[2], p);
        return mean(mul(h, add(h, c)));
      }, std::move(inputs));
    }

    // Losses over well-formed probability / frame inputs.
    add_check("loss.teacher", [](const std::vector<Tensor>& in) {
      const Tensor c_real = sigmoid(in[2]);
      const Tensor c_fake = sigmoid(in[3]);
      const TeacherLosses tl = teacher_losses(in[0], in[1], c_real, c_fake);
      return add(tl.l_adv_c, tl.l_teacher);
    }, {rt({2, 4}), rt({2, 4}), rt({2}, -2.0, 2.0), rt({2}, -2.0, 2.0)});
    add_check("loss.student", [](const std::vector<Tensor>& in) {
      const StudentLosses sl = student_losses(in[0], in[1], in[2], in[3]);
      return sl.l_student;
    }, {rt({6}), rt({6}), rt({8}), rt({8})});
  }
  return results;
}

}  // namespace wisynth
