#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "wisynth/errors.hpp"
#include "wisynth/image_io.hpp"
#include "wisynth/nn.hpp"
#include "wisynth/sanitizer.hpp"
#include "wisynth/tensor.hpp"

namespace wisynth {

// Architecture hyperparameters. Three stride-2 layers shrink each spatial
// axis by 8, so t/h/w must be divisible by 8. Kernels are 2x2x2 so the
// windows tile the input exactly with no padding.
struct ModelConfig {
  std::size_t t = 16;
  std::size_t height = 48;
  std::size_t width = 64;
  std::size_t clip_channels = 1;  // 1 silhouette, 3 skeleton
  std::size_t c1 = 16;
  std::size_t c2 = 32;
  std::size_t c3 = 64;
  std::size_t h_size = 300;  // |h_P|
  std::size_t n_pkt = 256;   // P
  std::size_t n_sub = 30;    // K
  double leaky_slope = 0.2;
  double amp_scale = 1.0;  // extra gain on the standardized amplitudes

  void validate() const {
    if (t % 8 || height % 8 || width % 8)
      throw ShapeError("clip dims must be divisible by 8");
    if (clip_channels != 1 && clip_channels != 3)
      throw ShapeError("clip must have 1 or 3 channels");
    if (!t || !c1 || !c2 || !c3 || !h_size || !n_pkt || !n_sub)
      throw ShapeError("model dims must all be >= 1");
  }

  std::size_t latent_t() const { return t / 8; }
  std::size_t latent_h() const { return height / 8; }
  std::size_t latent_w() const { return width / 8; }
  Shape latent_shape() const {
    return {c3, latent_t(), latent_h(), latent_w()};
  }
  std::size_t latent_size() const { return shape_size(latent_shape()); }
};

// conv/tconv + optional batch norm + activation.
struct ConvBlock {
  Conv3dParams conv;
  BatchNorm bn;
  bool has_bn = true;

  ConvBlock() = default;
  ConvBlock(std::size_t c_up, std::size_t c_down, Shape kernel_dims,
            std::array<std::size_t, 3> stride, std::size_t bias_channels,
            bool with_bn)
      : has_bn(with_bn) {
    conv.kernel = Tensor({c_up, c_down, kernel_dims[0], kernel_dims[1],
                          kernel_dims[2]},
                         0.0, true);
    conv.bias = Tensor({bias_channels}, 0.0, true);
    conv.stride = stride;
    if (with_bn) bn.reset(bias_channels);
  }

  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor>>& out) {
    out.emplace_back(prefix + ".kernel", conv.kernel);
    out.emplace_back(prefix + ".bias", conv.bias);
    if (has_bn) {
      out.emplace_back(prefix + ".bn.gamma", bn.gamma);
      out.emplace_back(prefix + ".bn.beta", bn.beta);
    }
  }
};

namespace detail {

inline Tensor conv_bn(const Tensor& x, ConvBlock& block, bool train) {
  Tensor y = conv3d(x, block.conv);
  if (block.has_bn) y = batch_norm(y, block.bn, train);
  return y;
}

inline Tensor tconv_bn(const Tensor& x, ConvBlock& block, bool train) {
  Tensor y = conv3d_transposed(x, block.conv);
  if (block.has_bn) y = batch_norm(y, block.bn, train);
  return y;
}

}  // namespace detail

// Teacher 3D-GAN: video encoder E_v, decoder D_v, discriminator C.
class TeacherModel {
 public:
  explicit TeacherModel(const ModelConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    const Shape k2{2, 2, 2};
    const std::array<std::size_t, 3> s2{2, 2, 2};
    enc_ = {ConvBlock(cfg.c1, cfg.clip_channels, k2, s2, cfg.c1, true),
            ConvBlock(cfg.c2, cfg.c1, k2, s2, cfg.c2, true),
            ConvBlock(cfg.c3, cfg.c2, k2, s2, cfg.c3, true)};
    // Transposed-conv kernels are (input_ch, output_ch, ...). The final
    // 1x1x1 stage maps back to clip channels ahead of tanh, no BN.
    dec_ = {ConvBlock(cfg.c3, cfg.c2, k2, s2, cfg.c2, true),
            ConvBlock(cfg.c2, cfg.c1, k2, s2, cfg.c1, true),
            ConvBlock(cfg.c1, cfg.c1, k2, s2, cfg.c1, true),
            ConvBlock(cfg.c1, cfg.clip_channels, {1, 1, 1}, {1, 1, 1},
                      cfg.clip_channels, false)};
    disc_ = {ConvBlock(cfg.c1, cfg.clip_channels, k2, s2, cfg.c1, true),
             ConvBlock(cfg.c2, cfg.c1, k2, s2, cfg.c2, true),
             ConvBlock(cfg.c3, cfg.c2, k2, s2, cfg.c3, true),
             ConvBlock(1, cfg.c3,
                       {cfg.latent_t(), cfg.latent_h(), cfg.latent_w()},
                       {1, 1, 1}, 1, false)};
  }

  const ModelConfig& config() const { return cfg_; }

  // Z = E_v(F); input (C,T,H,W) or batched (N,C,T,H,W).
  Tensor encode_video(const Tensor& clip, bool train = false) {
    check_clip_shape(clip);
    Tensor x = clip;
    for (auto& block : enc_)
      x = leaky_relu(detail::conv_bn(x, block, train), cfg_.leaky_slope);
    return x;
  }

  // Y = D_v(Z); output in [-1, 1].
  Tensor decode_video(const Tensor& latent, bool train = false) {
    check_latent_shape(latent);
    Tensor x = latent;
    for (std::size_t i = 0; i + 1 < dec_.size(); ++i)
      x = relu(detail::tconv_bn(x, dec_[i], train));
    return tanh_t(conv3d_transposed(x, dec_.back().conv));
  }

  // C(clip): per-clip probability in (0, 1); shape (1) or (N,1,1,1,1).
  Tensor discriminate(const Tensor& clip, bool train = false) {
    check_clip_shape(clip);
    Tensor x = clip;
    for (std::size_t i = 0; i + 1 < disc_.size(); ++i)
      x = leaky_relu(detail::conv_bn(x, disc_[i], train), cfg_.leaky_slope);
    return sigmoid(conv3d(x, disc_.back().conv));
  }

  std::vector<std::pair<std::string, Tensor>> encoder_params() {
    return collect("teacher.enc", enc_);
  }
  std::vector<std::pair<std::string, Tensor>> decoder_params() {
    return collect("teacher.dec", dec_);
  }
  std::vector<std::pair<std::string, Tensor>> discriminator_params() {
    return collect("teacher.disc", disc_);
  }
  std::vector<std::pair<std::string, Tensor>> all_params() {
    auto out = encoder_params();
    for (auto& p : decoder_params()) out.push_back(p);
    for (auto& p : discriminator_params()) out.push_back(p);
    return out;
  }

  // Running statistics are stored next to trainable blocks in checkpoints.
  std::vector<std::pair<std::string, std::vector<double>*>> running_stats() {
    std::vector<std::pair<std::string, std::vector<double>*>> out;
    auto visit = [&out](const std::string& prefix,
                        std::vector<ConvBlock>& blocks) {
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (!blocks[i].has_bn) continue;
        const std::string base = prefix + std::to_string(i);
        out.emplace_back(base + ".bn.running_mean",
                         &blocks[i].bn.running_mean);
        out.emplace_back(base + ".bn.running_var", &blocks[i].bn.running_var);
      }
    };
    visit("teacher.enc", enc_);
    visit("teacher.dec", dec_);
    visit("teacher.disc", disc_);
    return out;
  }

 private:
  static std::vector<std::pair<std::string, Tensor>> collect(
      const std::string& prefix, std::vector<ConvBlock>& blocks) {
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].collect(prefix + std::to_string(i), out);
    return out;
  }

  void check_clip_shape(const Tensor& x) const {
    const Shape& s = x.shape();
    const std::size_t off = s.size() == 5 ? 1 : 0;
    if ((s.size() != 4 && s.size() != 5) || s[off] != cfg_.clip_channels ||
        s[off + 1] != cfg_.t || s[off + 2] != cfg_.height ||
        s[off + 3] != cfg_.width)
      throw ShapeError("clip shape does not match model config");
  }
  void check_latent_shape(const Tensor& x) const {
    const Shape& s = x.shape();
    const std::size_t off = s.size() == 5 ? 1 : 0;
    const Shape want = cfg_.latent_shape();
    if ((s.size() != 4 && s.size() != 5) ||
        !std::equal(want.begin(), want.end(), s.begin() + off))
      throw ShapeError("latent shape does not match model config");
  }

  ModelConfig cfg_;
  std::vector<ConvBlock> enc_;
  std::vector<ConvBlock> dec_;
  std::vector<ConvBlock> disc_;
};

// Student: LSTM encoder over amplitude rows plus a transposed-conv lift
// into the teacher's latent shape. The decoder is shared with the teacher.
class StudentModel {
 public:
  explicit StudentModel(const ModelConfig& cfg)
      : cfg_(cfg), lstm_(cfg.n_sub, cfg.h_size) {
    cfg.validate();
    // Lift kernel solved from the latent shape: input (h_size,1,1,1), so a
    // kernel spanning the full latent block hits Z's shape for any h_size.
    lift_.kernel = Tensor({cfg.h_size, cfg.c3, cfg.latent_t(), cfg.latent_h(),
                           cfg.latent_w()},
                          0.0, true);
    lift_.bias = Tensor({cfg.c3}, 0.0, true);
    lift_.stride = {1, 1, 1};
  }

  const ModelConfig& config() const { return cfg_; }
  LstmParams& lstm() { return lstm_; }
  Conv3dParams& lift() { return lift_; }

  // h_P = E_s(A): P recurrence steps over the K-wide amplitude rows. The
  // matrix is standardized per sample first; raw amplitudes share a large
  // common offset that would otherwise swamp the informative variation.
  Tensor encode_signal(const AmplitudeMatrix& a) const {
    if (a.n_pkt() != cfg_.n_pkt || a.n_sub() != cfg_.n_sub)
      throw ShapeError("amplitude matrix shape does not match model config");
    double mean = 0.0;
    for (double v : a.values()) mean += v;
    mean /= static_cast<double>(a.values().size());
    double var = 0.0;
    for (double v : a.values()) var += (v - mean) * (v - mean);
    const double inv_std =
        1.0 / (std::sqrt(var / static_cast<double>(a.values().size())) + 1e-12);
    Tensor h({cfg_.h_size}, 0.0, false);
    Tensor c({cfg_.h_size}, 0.0, false);
    for (std::size_t p = 0; p < a.n_pkt(); ++p) {
      std::vector<double> row(cfg_.n_sub);
      for (std::size_t k = 0; k < cfg_.n_sub; ++k)
        row[k] = (a.at(p, k) - mean) * inv_std * cfg_.amp_scale;
      const Tensor a_p = Tensor::from_data({cfg_.n_sub}, std::move(row));
      auto [h_next, c_next] = lstm_step(a_p, h, c, lstm_);
      h = h_next;
      c = c_next;
    }
    return h;
  }

  // V = lift(h_P), shaped exactly like Z.
  Tensor lift_to_visual(const Tensor& h_p) const {
    if (h_p.shape() != Shape{cfg_.h_size})
      throw ShapeError("hidden vector size does not match model config");
    return conv3d_transposed(reshape(h_p, {cfg_.h_size, 1, 1, 1}), lift_);
  }

  std::vector<std::pair<std::string, Tensor>> all_params() {
    std::vector<std::pair<std::string, Tensor>> out = {
        {"student.lstm.w_i", lstm_.w_i}, {"student.lstm.w_f", lstm_.w_f},
        {"student.lstm.w_o", lstm_.w_o}, {"student.lstm.w_c", lstm_.w_c},
        {"student.lstm.u_i", lstm_.u_i}, {"student.lstm.u_f", lstm_.u_f},
        {"student.lstm.u_o", lstm_.u_o}, {"student.lstm.u_c", lstm_.u_c},
        {"student.lstm.p_i", lstm_.p_i}, {"student.lstm.p_f", lstm_.p_f},
        {"student.lstm.p_o", lstm_.p_o}, {"student.lstm.b_i", lstm_.b_i},
        {"student.lstm.b_f", lstm_.b_f}, {"student.lstm.b_o", lstm_.b_o},
        {"student.lstm.b_c", lstm_.b_c}, {"student.lift.kernel", lift_.kernel},
        {"student.lift.bias", lift_.bias}};
    return out;
  }

 private:
  ModelConfig cfg_;
  LstmParams lstm_;
  Conv3dParams lift_;
};

// Clip frames are stored T-major with interleaved channels; the network
// wants channel-major (C, T, H, W).
inline Tensor clip_to_tensor(const VideoClip& clip) {
  const std::size_t t = clip.frames_count;
  const std::size_t c = clip.channels;
  const std::size_t hw = clip.height * clip.width;
  std::vector<double> data(t * c * hw);
  for (std::size_t ti = 0; ti < t; ++ti)
    for (std::size_t ci = 0; ci < c; ++ci)
      for (std::size_t i = 0; i < hw; ++i)
        data[(ci * t + ti) * hw + i] = clip.data[(ti * c + ci) * hw + i];
  return Tensor::from_data({c, t, clip.height, clip.width}, std::move(data));
}

inline VideoClip tensor_to_clip(const Tensor& x, VideoClip::Kind kind) {
  const Shape& s = x.shape();
  if (s.size() != 4) throw ShapeError("expected (C,T,H,W) tensor");
  VideoClip clip;
  clip.kind = kind;
  clip.channels = s[0];
  clip.frames_count = s[1];
  clip.height = s[2];
  clip.width = s[3];
  const std::size_t hw = clip.height * clip.width;
  clip.data.resize(x.size());
  for (std::size_t ci = 0; ci < clip.channels; ++ci)
    for (std::size_t ti = 0; ti < clip.frames_count; ++ti)
      for (std::size_t i = 0; i < hw; ++i)
        clip.data[(ti * clip.channels + ci) * hw + i] =
            x.data()[(ci * clip.frames_count + ti) * hw + i];
  return clip;
}

}  // namespace wisynth
