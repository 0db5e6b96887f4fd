#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "wisynth/errors.hpp"
#include "wisynth/tensor.hpp"

namespace wisynth {

// Shared parameter block for conv3d and its adjoint. kernel has shape
// (c_up, c_down, kt, kh, kw): conv3d maps c_down -> c_up channels,
// conv3d_transposed maps c_up -> c_down. bias length must match the output
// channel count of whichever op uses it.
struct Conv3dParams {
  Tensor kernel;
  Tensor bias;
  std::array<std::size_t, 3> stride = {1, 1, 1};
};

namespace detail {

struct ConvDims {
  std::size_t n, ci, co, kt, kh, kw;
  std::size_t it, ih, iw;  // conv-side input dims
  std::size_t ot, oh, ow;  // conv-side output dims
  std::size_t st, sh, sw;
  bool batched;
};

inline ConvDims conv_dims(const Shape& in, const Conv3dParams& p,
                          bool transposed) {
  if (p.kernel.shape().size() != 5) throw ShapeError("conv kernel must be 5-d");
  ConvDims d{};
  d.co = p.kernel.shape()[0];
  d.ci = p.kernel.shape()[1];
  d.kt = p.kernel.shape()[2];
  d.kh = p.kernel.shape()[3];
  d.kw = p.kernel.shape()[4];
  d.st = p.stride[0];
  d.sh = p.stride[1];
  d.sw = p.stride[2];
  if (d.st < 1 || d.sh < 1 || d.sw < 1) throw ShapeError("stride must be >= 1");

  Shape s = in;
  d.batched = s.size() == 5;
  if (!d.batched && s.size() != 4)
    throw ShapeError("conv input must be rank 4 or 5");
  d.n = d.batched ? s[0] : 1;
  const std::size_t off = d.batched ? 1 : 0;
  const std::size_t ch = s[off];
  if (!transposed) {
    if (ch != d.ci) throw ShapeError("conv input channel mismatch");
    d.it = s[off + 1];
    d.ih = s[off + 2];
    d.iw = s[off + 3];
    if (d.it < d.kt || d.ih < d.kh || d.iw < d.kw)
      throw ShapeError("conv kernel does not fit input");
    d.ot = (d.it - d.kt) / d.st + 1;
    d.oh = (d.ih - d.kh) / d.sh + 1;
    d.ow = (d.iw - d.kw) / d.sw + 1;
  } else {
    if (ch != d.co) throw ShapeError("transposed conv input channel mismatch");
    d.ot = s[off + 1];
    d.oh = s[off + 2];
    d.ow = s[off + 3];
    d.it = (d.ot - 1) * d.st + d.kt;
    d.ih = (d.oh - 1) * d.sh + d.kh;
    d.iw = (d.ow - 1) * d.sw + d.kw;
  }
  return d;
}

// x indexed (n, c, t, h, w) on the conv input side; y on the output side.
inline std::size_t xi(const ConvDims& d, std::size_t n, std::size_t c,
                      std::size_t t, std::size_t h, std::size_t w) {
  return (((n * d.ci + c) * d.it + t) * d.ih + h) * d.iw + w;
}
inline std::size_t yi(const ConvDims& d, std::size_t n, std::size_t c,
                      std::size_t t, std::size_t h, std::size_t w) {
  return (((n * d.co + c) * d.ot + t) * d.oh + h) * d.ow + w;
}
inline std::size_t ki(const ConvDims& d, std::size_t co, std::size_t ci,
                      std::size_t t, std::size_t h, std::size_t w) {
  return (((co * d.ci + ci) * d.kt + t) * d.kh + h) * d.kw + w;
}

// y[n,co,zo,yo,xo] += sum k[co,ci,t,h,w] * x[n,ci,zo*st+t,...]
inline void conv_gather(const ConvDims& d, const std::vector<double>& x,
                        const std::vector<double>& k, std::vector<double>& y) {
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t co = 0; co < d.co; ++co)
      for (std::size_t ci = 0; ci < d.ci; ++ci)
        for (std::size_t zo = 0; zo < d.ot; ++zo)
          for (std::size_t yo = 0; yo < d.oh; ++yo)
            for (std::size_t xo = 0; xo < d.ow; ++xo) {
              double acc = 0.0;
              for (std::size_t t = 0; t < d.kt; ++t)
                for (std::size_t h = 0; h < d.kh; ++h)
                  for (std::size_t w = 0; w < d.kw; ++w)
                    acc += k[ki(d, co, ci, t, h, w)] *
                           x[xi(d, n, ci, zo * d.st + t, yo * d.sh + h,
                                xo * d.sw + w)];
              y[yi(d, n, co, zo, yo, xo)] += acc;
            }
}

// Adjoint of conv_gather in x: x += scatter of k * y.
inline void conv_scatter(const ConvDims& d, const std::vector<double>& y,
                         const std::vector<double>& k, std::vector<double>& x) {
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t co = 0; co < d.co; ++co)
      for (std::size_t ci = 0; ci < d.ci; ++ci)
        for (std::size_t zo = 0; zo < d.ot; ++zo)
          for (std::size_t yo = 0; yo < d.oh; ++yo)
            for (std::size_t xo = 0; xo < d.ow; ++xo) {
              const double g = y[yi(d, n, co, zo, yo, xo)];
              if (g == 0.0) continue;
              for (std::size_t t = 0; t < d.kt; ++t)
                for (std::size_t h = 0; h < d.kh; ++h)
                  for (std::size_t w = 0; w < d.kw; ++w)
                    x[xi(d, n, ci, zo * d.st + t, yo * d.sh + h,
                         xo * d.sw + w)] += k[ki(d, co, ci, t, h, w)] * g;
            }
}

// k_grad[co,ci,t,h,w] += sum_n,out x[...] * y[...]
inline void conv_kernel_grad(const ConvDims& d, const std::vector<double>& x,
                             const std::vector<double>& y,
                             std::vector<double>& kg) {
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t co = 0; co < d.co; ++co)
      for (std::size_t ci = 0; ci < d.ci; ++ci)
        for (std::size_t zo = 0; zo < d.ot; ++zo)
          for (std::size_t yo = 0; yo < d.oh; ++yo)
            for (std::size_t xo = 0; xo < d.ow; ++xo) {
              const double g = y[yi(d, n, co, zo, yo, xo)];
              if (g == 0.0) continue;
              for (std::size_t t = 0; t < d.kt; ++t)
                for (std::size_t h = 0; h < d.kh; ++h)
                  for (std::size_t w = 0; w < d.kw; ++w)
                    kg[ki(d, co, ci, t, h, w)] +=
                        g * x[xi(d, n, ci, zo * d.st + t, yo * d.sh + h,
                                 xo * d.sw + w)];
            }
}

inline Shape conv_out_shape(const ConvDims& d, bool transposed) {
  Shape s;
  if (d.batched) s.push_back(d.n);
  if (!transposed) {
    s.insert(s.end(), {d.co, d.ot, d.oh, d.ow});
  } else {
    s.insert(s.end(), {d.ci, d.it, d.ih, d.iw});
  }
  return s;
}

}  // namespace detail

// Strided valid-mode 3D convolution; activation is applied by the caller.
inline Tensor conv3d(const Tensor& x, const Conv3dParams& p) {
  const detail::ConvDims d = detail::conv_dims(x.shape(), p, false);
  if (p.bias.defined() && p.bias.size() != d.co)
    throw ShapeError("conv bias size must equal output channels");
  std::vector<Tensor> parents = {x, p.kernel};
  const bool has_bias = p.bias.defined();
  if (has_bias) parents.push_back(p.bias);
  Tensor out = detail::make_op(
      detail::conv_out_shape(d, false), std::move(parents),
      [d, has_bias](detail::Node& node) {
        auto& px = *node.parents[0];
        auto& pk = *node.parents[1];
        if (px.requires_grad) {
          px.ensure_grad();
          detail::conv_scatter(d, node.grad, pk.data, px.grad);
        }
        if (pk.requires_grad) {
          pk.ensure_grad();
          detail::conv_kernel_grad(d, px.data, node.grad, pk.grad);
        }
        if (has_bias && node.parents[2]->requires_grad) {
          auto& pb = *node.parents[2];
          pb.ensure_grad();
          const std::size_t spatial = d.ot * d.oh * d.ow;
          for (std::size_t n = 0; n < d.n; ++n)
            for (std::size_t co = 0; co < d.co; ++co)
              for (std::size_t i = 0; i < spatial; ++i)
                pb.grad[co] += node.grad[(n * d.co + co) * spatial + i];
        }
      });
  detail::conv_gather(d, x.data(), p.kernel.data(), out.data());
  if (has_bias) {
    const std::size_t spatial = d.ot * d.oh * d.ow;
    for (std::size_t n = 0; n < d.n; ++n)
      for (std::size_t co = 0; co < d.co; ++co)
        for (std::size_t i = 0; i < spatial; ++i)
          out.data()[(n * d.co + co) * spatial + i] += p.bias.data()[co];
  }
  return out;
}

// Adjoint of conv3d with the same kernel/stride: upsampling scatter.
inline Tensor conv3d_transposed(const Tensor& y, const Conv3dParams& p) {
  const detail::ConvDims d = detail::conv_dims(y.shape(), p, true);
  if (p.bias.defined() && p.bias.size() != d.ci)
    throw ShapeError("transposed conv bias size must equal output channels");
  std::vector<Tensor> parents = {y, p.kernel};
  const bool has_bias = p.bias.defined();
  if (has_bias) parents.push_back(p.bias);
  Tensor out = detail::make_op(
      detail::conv_out_shape(d, true), std::move(parents),
      [d, has_bias](detail::Node& node) {
        auto& py = *node.parents[0];
        auto& pk = *node.parents[1];
        if (py.requires_grad) {
          py.ensure_grad();
          detail::conv_gather(d, node.grad, pk.data, py.grad);
        }
        if (pk.requires_grad) {
          pk.ensure_grad();
          detail::conv_kernel_grad(d, node.grad, py.data, pk.grad);
        }
        if (has_bias && node.parents[2]->requires_grad) {
          auto& pb = *node.parents[2];
          pb.ensure_grad();
          const std::size_t spatial = d.it * d.ih * d.iw;
          for (std::size_t n = 0; n < d.n; ++n)
            for (std::size_t ci = 0; ci < d.ci; ++ci)
              for (std::size_t i = 0; i < spatial; ++i)
                pb.grad[ci] += node.grad[(n * d.ci + ci) * spatial + i];
        }
      });
  detail::conv_scatter(d, y.data(), p.kernel.data(), out.data());
  if (has_bias) {
    const std::size_t spatial = d.it * d.ih * d.iw;
    for (std::size_t n = 0; n < d.n; ++n)
      for (std::size_t ci = 0; ci < d.ci; ++ci)
        for (std::size_t i = 0; i < spatial; ++i)
          out.data()[(n * d.ci + ci) * spatial + i] += p.bias.data()[ci];
  }
  return out;
}

// Channel-wise batch normalization state. gamma/beta are learnable;
// running statistics are plain buffers updated only in train mode.
struct BatchNorm {
  Tensor gamma;
  Tensor beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNorm(std::size_t channels = 0) { reset(channels); }

  void reset(std::size_t channels) {
    gamma = Tensor({channels == 0 ? 1 : channels}, 1.0, true);
    beta = Tensor({channels == 0 ? 1 : channels}, 0.0, true);
    running_mean.assign(channels == 0 ? 1 : channels, 0.0);
    running_var.assign(channels == 0 ? 1 : channels, 1.0);
  }
  std::size_t channels() const { return gamma.size(); }
};

// Normalizes per channel over (batch, T, H, W). Input rank 4 is treated as
// a single-sample batch. Train mode uses batch statistics and updates the
// running buffers; eval mode uses the running buffers.
inline Tensor batch_norm(const Tensor& x, BatchNorm& bn, bool train) {
  const Shape& s = x.shape();
  const bool batched = s.size() == 5;
  if (!batched && s.size() != 4)
    throw ShapeError("batch_norm input must be rank 4 or 5");
  const std::size_t n = batched ? s[0] : 1;
  const std::size_t c = s[batched ? 1 : 0];
  if (c != bn.channels()) throw ShapeError("batch_norm channel mismatch");
  const std::size_t spatial = s[batched ? 2 : 1] * s[batched ? 3 : 2] *
                              s[batched ? 4 : 3];
  const std::size_t m = n * spatial;
  const double eps = bn.eps;

  auto mv = std::make_shared<std::vector<double>>(2 * c, 0.0);
  auto& mean_var = *mv;
  if (train) {
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < spatial; ++i)
          mean_var[ch] += x.data()[(b * c + ch) * spatial + i];
    for (std::size_t ch = 0; ch < c; ++ch) mean_var[ch] /= m;
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < spatial; ++i) {
          const double dv = x.data()[(b * c + ch) * spatial + i] - mean_var[ch];
          mean_var[c + ch] += dv * dv;
        }
    for (std::size_t ch = 0; ch < c; ++ch) mean_var[c + ch] /= m;
    for (std::size_t ch = 0; ch < c; ++ch) {
      bn.running_mean[ch] = (1.0 - bn.momentum) * bn.running_mean[ch] +
                            bn.momentum * mean_var[ch];
      bn.running_var[ch] = (1.0 - bn.momentum) * bn.running_var[ch] +
                           bn.momentum * mean_var[c + ch];
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean_var[ch] = bn.running_mean[ch];
      mean_var[c + ch] = bn.running_var[ch];
    }
  }

  Tensor out = detail::make_op(
      s, {x, bn.gamma, bn.beta},
      [n, c, spatial, m, eps, train, mv](detail::Node& node) {
        auto& px = *node.parents[0];
        auto& pg = *node.parents[1];
        auto& pb = *node.parents[2];
        const auto& stats = *mv;
        for (std::size_t ch = 0; ch < c; ++ch) {
          const double mu = stats[ch];
          const double inv_std = 1.0 / std::sqrt(stats[c + ch] + eps);
          const double gamma = pg.data[ch];

          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (std::size_t b = 0; b < n; ++b)
            for (std::size_t i = 0; i < spatial; ++i) {
              const std::size_t idx = (b * c + ch) * spatial + i;
              const double dy = node.grad[idx];
              sum_dy += dy;
              sum_dy_xhat += dy * (px.data[idx] - mu) * inv_std;
            }
          if (pg.requires_grad) {
            pg.ensure_grad();
            pg.grad[ch] += sum_dy_xhat;
          }
          if (pb.requires_grad) {
            pb.ensure_grad();
            pb.grad[ch] += sum_dy;
          }
          if (px.requires_grad) {
            px.ensure_grad();
            for (std::size_t b = 0; b < n; ++b)
              for (std::size_t i = 0; i < spatial; ++i) {
                const std::size_t idx = (b * c + ch) * spatial + i;
                const double xhat = (px.data[idx] - mu) * inv_std;
                if (train) {
                  px.grad[idx] += gamma * inv_std *
                                  (node.grad[idx] - sum_dy / m -
                                   xhat * sum_dy_xhat / m);
                } else {
                  px.grad[idx] += gamma * inv_std * node.grad[idx];
                }
              }
          }
        }
      });
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double mu = mean_var[ch];
      const double inv_std = 1.0 / std::sqrt(mean_var[c + ch] + eps);
      for (std::size_t i = 0; i < spatial; ++i) {
        const std::size_t idx = (b * c + ch) * spatial + i;
        out.data()[idx] = (x.data()[idx] - mu) * inv_std * bn.gamma.data()[ch] +
                          bn.beta.data()[ch];
      }
    }
  return out;
}

// Peephole LSTM weights for input width K and hidden size D. Peephole
// connections are diagonal, stored as D-vectors.
struct LstmParams {
  Tensor w_i, w_f, w_o, w_c;  // (D, K) input weights
  Tensor u_i, u_f, u_o, u_c;  // (D, D) recurrent weights
  Tensor p_i, p_f, p_o;       // (D) peephole weights
  Tensor b_i, b_f, b_o, b_c;  // (D) biases
  std::size_t input_width = 0;
  std::size_t hidden_size = 0;

  LstmParams() = default;
  LstmParams(std::size_t k, std::size_t d)
      : input_width(k), hidden_size(d) {
    for (Tensor* t : {&w_i, &w_f, &w_o, &w_c}) *t = Tensor({d, k}, 0.0, true);
    for (Tensor* t : {&u_i, &u_f, &u_o, &u_c}) *t = Tensor({d, d}, 0.0, true);
    for (Tensor* t : {&p_i, &p_f, &p_o, &b_i, &b_f, &b_o, &b_c})
      *t = Tensor({d}, 0.0, true);
  }
};

// One recurrence step. The output gate peeps at the *previous* cell state,
// matching the formulation this network uses.
inline std::pair<Tensor, Tensor> lstm_step(const Tensor& a,
                                           const Tensor& h_prev,
                                           const Tensor& c_prev,
                                           const LstmParams& p) {
  if (a.shape() != Shape{p.input_width} ||
      h_prev.shape() != Shape{p.hidden_size} ||
      c_prev.shape() != Shape{p.hidden_size})
    throw ShapeError("lstm_step input shape mismatch");

  auto gate = [&](const Tensor& w, const Tensor& u, const Tensor& peep,
                  const Tensor& b) {
    Tensor z = add(add(matvec(w, a), matvec(u, h_prev)), b);
    if (peep.defined()) z = add(z, mul(peep, c_prev));
    return sigmoid(z);
  };
  const Tensor i = gate(p.w_i, p.u_i, p.p_i, p.b_i);
  const Tensor f = gate(p.w_f, p.u_f, p.p_f, p.b_f);
  const Tensor o = gate(p.w_o, p.u_o, p.p_o, p.b_o);
  const Tensor c_tilde =
      tanh_t(add(add(matvec(p.w_c, a), matvec(p.u_c, h_prev)), p.b_c));
  const Tensor c = add(mul(f, c_prev), mul(i, c_tilde));
  const Tensor h = mul(o, tanh_t(c));
  return {h, c};
}

}  // namespace wisynth
