#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wisynth/checkpoint.hpp"
#include "wisynth/config.hpp"
#include "wisynth/csi.hpp"
#include "wisynth/csi_io.hpp"
#include "wisynth/errors.hpp"
#include "wisynth/network.hpp"
#include "wisynth/rng.hpp"
#include "wisynth/sanitizer.hpp"
#include "wisynth/synthetic.hpp"
#include "wisynth/tensor.hpp"

namespace wisynth {

struct TeacherLosses {
  Tensor l_adv_c;   // discriminator objective (descent form)
  Tensor l_adv_g;   // non-saturating generator term
  Tensor mse_y;     // frame reconstruction
  Tensor l_teacher; // w_adv * l_adv_g + w_y * mse_y
};

struct StudentLosses {
  Tensor mse_v;
  Tensor mse_s;
  Tensor l_student;
};

namespace detail {

inline void check_probability(const Tensor& c) {
  for (double v : c.data())
    if (!(v > 0.0 && v < 1.0))
      throw DomainError("discriminator output must lie in (0, 1)");
}

}  // namespace detail

// Adversarial cross-entropy plus reconstruction error. The generator uses
// the non-saturating -log C(Y) form.
inline TeacherLosses teacher_losses(const Tensor& f, const Tensor& y,
                                    const Tensor& c_real, const Tensor& c_fake,
                                    const LossWeights& w = {}) {
  detail::check_probability(c_real);
  detail::check_probability(c_fake);
  TeacherLosses out;
  out.l_adv_c =
      neg(add(mean(log_t(c_real)), mean(log_t(affine(c_fake, 1.0, -1.0)))));
  out.l_adv_g = neg(mean(log_t(c_fake)));
  out.mse_y = mse(f, y);
  out.l_teacher = add(scale(out.l_adv_g, w.w_adv), scale(out.mse_y, w.w_y));
  return out;
}

// Latent alignment and output binding; Z and Y are expected detached.
inline StudentLosses student_losses(const Tensor& z, const Tensor& v,
                                    const Tensor& y, const Tensor& s,
                                    const LossWeights& w = {}) {
  StudentLosses out;
  out.mse_v = mse(z, v);
  out.mse_s = mse(y, s);
  out.l_student = add(scale(out.mse_v, w.w_v), scale(out.mse_s, w.w_s));
  return out;
}

inline Tensor total_loss(const Tensor& l_teacher, const Tensor& l_student) {
  return add(l_teacher, l_student);
}

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
};

// Bias-corrected Adam over a named parameter group.
class Adam {
 public:
  explicit Adam(OptimConfig cfg) : cfg_(std::move(cfg)) {}

  void step(std::vector<std::pair<std::string, Tensor>>& params) {
    ++t_;
    for (auto& [name, p] : params) {
      AdamState& st = states_[name];
      if (st.m.size() != p.size()) {
        st.m.assign(p.size(), 0.0);
        st.v.assign(p.size(), 0.0);
      }
      adam_update(p.data(), p.grad(), st);
    }
  }

  std::size_t steps() const { return t_; }
  std::map<std::string, AdamState>& states() { return states_; }
  void restore(std::size_t t) { t_ = t; }
  // Scales the base learning rate; train() drives this from lr_decay.
  void set_lr_scale(double s) { lr_scale_ = s; }

 private:
  void adam_update(std::vector<double>& w, const std::vector<double>& g,
                   AdamState& st) {
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < w.size(); ++i) {
      st.m[i] = cfg_.beta1 * st.m[i] + (1.0 - cfg_.beta1) * g[i];
      st.v[i] = cfg_.beta2 * st.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double m_hat = st.m[i] / bc1;
      const double v_hat = st.v[i] / bc2;
      w[i] -= cfg_.lr * lr_scale_ * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }

  OptimConfig cfg_;
  std::map<std::string, AdamState> states_;
  std::size_t t_ = 0;
  double lr_scale_ = 1.0;
};

// Free-function form of one update, for direct testing.
inline void adam_step(std::vector<double>& w, const std::vector<double>& g,
                      AdamState& st, const OptimConfig& cfg, std::size_t t) {
  if (st.m.size() != w.size()) {
    st.m.assign(w.size(), 0.0);
    st.v.assign(w.size(), 0.0);
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < w.size(); ++i) {
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * g[i];
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    w[i] -= cfg.lr * (st.m[i] / bc1) / (std::sqrt(st.v[i] / bc2) + cfg.eps);
  }
}

// Gaussian init for weights, zeros for biases, identity affine for BN.
inline void init_params(std::vector<std::pair<std::string, Tensor>> params,
                        const OptimConfig& cfg) {
  Rng rng(splitmix64(cfg.seed ^ 0x696e6974ULL));
  for (auto& [name, p] : params) {
    const bool is_gamma = name.ends_with(".bn.gamma");
    const bool is_beta = name.ends_with(".bn.beta");
    const bool is_bias =
        name.ends_with(".bias") || name.find(".b_") != std::string::npos;
    for (double& v : p.data()) {
      if (is_gamma)
        v = 1.0;
      else if (is_beta || is_bias)
        v = 0.0;
      else
        v = rng.normal(0.0, cfg.init_std);
    }
  }
}

// One training sample after preprocessing.
struct TrainSample {
  Tensor clip;        // (C, T, H, W)
  AmplitudeMatrix amps;
};

inline AmplitudeMatrix preprocess_csi(const CsiSequence& csi,
                                      const HampelConfig& cfg) {
  return condense(sanitize(extract_amplitudes(csi), cfg));
}

struct LossRecord {
  double l_adv_c = 0.0;
  double l_adv_g = 0.0;
  double mse_y = 0.0;
  double mse_v = 0.0;
  double mse_s = 0.0;
};

// All models plus per-group optimizers for one training run.
struct Trainer {
  ModelConfig model_cfg;
  LossWeights weights;
  TeacherModel teacher;
  StudentModel student;
  Adam opt_disc;
  Adam opt_teacher;
  Adam opt_student;

  Trainer(const ModelConfig& mc, const OptimConfig& oc,
          const LossWeights& lw = {})
      : model_cfg(mc),
        weights(lw),
        teacher(mc),
        student(mc),
        opt_disc(oc),
        opt_teacher(oc),
        opt_student(oc) {
    weights.validate();
    init_params(teacher.all_params(), oc);
    init_params(student.all_params(), oc);
  }
};

namespace detail {

inline void zero_grads(std::vector<std::pair<std::string, Tensor>> params) {
  for (auto& [name, p] : params) p.zero_grad();
}

// Squeeze probabilities into [eps, 1-eps] so saturated sigmoid outputs
// (exactly 0 or 1 in double precision) cannot blow up the log terms.
inline Tensor squash_probability(const Tensor& c) {
  constexpr double kEps = 1e-7;
  return affine(c, 1.0 - 2.0 * kEps, kEps);
}

}  // namespace detail

// One batch update: discriminator, then teacher, then student with the
// shared decoder frozen.
inline LossRecord train_step(Trainer& tr,
                             const std::vector<const TrainSample*>& batch) {
  if (batch.empty()) throw EmptyDataset();
  LossRecord rec;

  std::vector<Tensor> clips;
  clips.reserve(batch.size());
  for (const TrainSample* s : batch) clips.push_back(s->clip);
  const Tensor f = stack(clips);
  const Tensor f_const = f.detach();

  // 1: discriminator ascent on real-vs-fake, teacher output detached.
  {
    detail::zero_grads(tr.teacher.all_params());
    const Tensor y =
        tr.teacher.decode_video(tr.teacher.encode_video(f_const, true), true);
    const Tensor c_real =
        detail::squash_probability(tr.teacher.discriminate(f_const, true));
    const Tensor c_fake =
        detail::squash_probability(tr.teacher.discriminate(y.detach(), true));
    const TeacherLosses tl =
        teacher_losses(f_const, y, c_real, c_fake, tr.weights);
    tl.l_adv_c.backward();
    rec.l_adv_c = tl.l_adv_c.item();
    auto disc = tr.teacher.discriminator_params();
    tr.opt_disc.step(disc);
  }

  // 2: teacher (E_v, D_v) on the weighted generator objective.
  Tensor z_target, y_target;
  {
    detail::zero_grads(tr.teacher.all_params());
    const Tensor z = tr.teacher.encode_video(f_const, true);
    const Tensor y = tr.teacher.decode_video(z, true);
    const Tensor c_fake =
        detail::squash_probability(tr.teacher.discriminate(y, true));
    detail::check_probability(c_fake);
    const Tensor l_adv_g = neg(mean(log_t(c_fake)));
    const Tensor mse_y = mse(f_const, y);
    const Tensor l_teacher =
        add(scale(l_adv_g, tr.weights.w_adv), scale(mse_y, tr.weights.w_y));
    l_teacher.backward();
    rec.l_adv_g = l_adv_g.item();
    rec.mse_y = mse_y.item();
    auto gen = tr.teacher.encoder_params();
    for (auto& p : tr.teacher.decoder_params()) gen.push_back(p);
    tr.opt_teacher.step(gen);
    z_target = z.detach();
    y_target = y.detach();
  }

  // 3: student (E_s + lift) with Z, Y detached and D_v frozen.
  {
    auto decoder = tr.teacher.decoder_params();
    for (auto& [name, p] : decoder) p.set_requires_grad(false);
    detail::zero_grads(tr.student.all_params());

    std::vector<Tensor> hidden;
    hidden.reserve(batch.size());
    for (const TrainSample* s : batch)
      hidden.push_back(tr.student.encode_signal(s->amps));
    const std::size_t n = batch.size();
    const Tensor h =
        reshape(stack(hidden), {n, tr.model_cfg.h_size, 1, 1, 1});
    const Tensor v = conv3d_transposed(h, tr.student.lift());
    const Tensor s_frames = tr.teacher.decode_video(v, true);
    const StudentLosses sl =
        student_losses(z_target, v, y_target, s_frames, tr.weights);
    sl.l_student.backward();
    rec.mse_v = sl.mse_v.item();
    rec.mse_s = sl.mse_s.item();
    auto stud = tr.student.all_params();
    tr.opt_student.step(stud);

    for (auto& [name, p] : decoder) p.set_requires_grad(true);
  }
  return rec;
}

// Checkpoint assembly: trainable blocks, BN running stats, optimizer
// moments, and textual metadata.
inline BlockMap trainer_checkpoint(Trainer& tr, const RunConfig& run_cfg,
                                   std::size_t epochs_done) {
  BlockMap blocks;
  for (auto& [name, p] : tr.teacher.all_params()) blocks[name] = p.detach();
  for (auto& [name, p] : tr.student.all_params()) blocks[name] = p.detach();
  for (auto& [name, buf] : tr.teacher.running_stats())
    blocks[name] = Tensor::from_data({buf->size()}, *buf);
  auto save_opt = [&blocks](const std::string& prefix, Adam& opt) {
    blocks[prefix + ".t"] =
        Tensor::from_data({1}, {static_cast<double>(opt.steps())});
    for (auto& [name, st] : opt.states()) {
      blocks[prefix + "." + name + ".m"] =
          Tensor::from_data({st.m.size()}, st.m);
      blocks[prefix + "." + name + ".v"] =
          Tensor::from_data({st.v.size()}, st.v);
    }
  };
  save_opt("opt.disc", tr.opt_disc);
  save_opt("opt.teacher", tr.opt_teacher);
  save_opt("opt.student", tr.opt_student);
  blocks["meta.config"] = text_block(serialize_config(run_cfg));
  blocks["meta.epoch"] =
      Tensor::from_data({1}, {static_cast<double>(epochs_done)});
  return blocks;
}

inline void trainer_restore(Trainer& tr, const BlockMap& blocks) {
  auto load_params = [&blocks](std::vector<std::pair<std::string, Tensor>> ps) {
    for (auto& [name, p] : ps) {
      const auto it = blocks.find(name);
      if (it == blocks.end()) throw ParseError("checkpoint misses " + name);
      if (it->second.size() != p.size())
        throw ShapeError("checkpoint block size mismatch: " + name);
      p.data() = it->second.data();
    }
  };
  load_params(tr.teacher.all_params());
  load_params(tr.student.all_params());
  for (auto& [name, buf] : tr.teacher.running_stats()) {
    const auto it = blocks.find(name);
    if (it == blocks.end()) throw ParseError("checkpoint misses " + name);
    *buf = it->second.data();
  }
  auto load_opt = [&blocks](const std::string& prefix, Adam& opt) {
    const auto t_it = blocks.find(prefix + ".t");
    if (t_it == blocks.end()) return;  // fresh optimizer
    opt.restore(static_cast<std::size_t>(t_it->second.data()[0]));
    for (const auto& [name, block] : blocks) {
      const std::string m_prefix = prefix + ".";
      if (name.rfind(m_prefix, 0) != 0) continue;
      std::string inner = name.substr(m_prefix.size());
      if (inner == "t") continue;
      const bool is_m = inner.ends_with(".m");
      inner = inner.substr(0, inner.size() - 2);
      AdamState& st = opt.states()[inner];
      (is_m ? st.m : st.v) = block.data();
    }
  };
  load_opt("opt.disc", tr.opt_disc);
  load_opt("opt.teacher", tr.opt_teacher);
  load_opt("opt.student", tr.opt_student);
}

struct TrainResult {
  std::vector<LossRecord> epoch_losses;
  std::size_t first_epoch = 0;  // continues across resumed runs
};

// Deterministic 75/25-style split, shuffled from the run seed.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(splitmix64(seed ^ 0x73706c6974ULL));
  for (std::size_t i = n; i > 1; --i)
    std::swap(idx[i - 1], idx[rng.below(i)]);
  std::size_t n_train = static_cast<std::size_t>(
      std::lround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n);
  return {std::vector<std::size_t>(idx.begin(), idx.begin() + n_train),
          std::vector<std::size_t>(idx.begin() + n_train, idx.end())};
}

// Epoch loop over a preprocessed dataset; writes a per-epoch loss CSV and
// a final checkpoint under out_dir.
inline TrainResult train(Trainer& tr, const std::vector<TrainSample>& samples,
                         const RunConfig& run_cfg, const std::string& out_dir,
                         std::size_t epochs_already_done = 0) {
  if (samples.empty()) throw EmptyDataset();
  const OptimConfig& oc = run_cfg.optim;
  auto [train_idx, test_idx] =
      split_indices(samples.size(), oc.train_fraction, oc.seed);
  (void)test_idx;

  std::filesystem::create_directories(out_dir);
  const std::string csv_path = out_dir + "/losses.csv";
  std::ofstream csv(csv_path,
                    epochs_already_done ? std::ios::app : std::ios::trunc);
  if (!csv) throw IoError("cannot open loss log: " + csv_path);
  if (epochs_already_done == 0)
    csv << "epoch,l_adv_c,l_adv_g,mse_y,mse_v,mse_s\n";

  TrainResult result;
  result.first_epoch = epochs_already_done;
  Rng shuffle_rng(splitmix64(oc.seed ^ 0x65706f6368ULL));
  // Re-derive the shuffle stream position for resumed runs.
  for (std::size_t e = 0; e < epochs_already_done; ++e)
    for (std::size_t i = train_idx.size(); i > 1; --i) shuffle_rng.below(i);

  for (std::size_t epoch = 0; epoch < oc.epochs; ++epoch) {
    const double lr_scale = std::pow(
        oc.lr_decay, static_cast<double>(epochs_already_done + epoch));
    tr.opt_disc.set_lr_scale(lr_scale);
    tr.opt_teacher.set_lr_scale(lr_scale);
    tr.opt_student.set_lr_scale(lr_scale);

    std::vector<std::size_t> order = train_idx;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    LossRecord acc;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += oc.batch) {
      std::vector<const TrainSample*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + oc.batch);
           ++i)
        batch.push_back(&samples[order[i]]);
      const LossRecord rec = train_step(tr, batch);
      acc.l_adv_c += rec.l_adv_c;
      acc.l_adv_g += rec.l_adv_g;
      acc.mse_y += rec.mse_y;
      acc.mse_v += rec.mse_v;
      acc.mse_s += rec.mse_s;
      ++n_batches;
    }
    const double inv = 1.0 / static_cast<double>(n_batches);
    acc.l_adv_c *= inv;
    acc.l_adv_g *= inv;
    acc.mse_y *= inv;
    acc.mse_v *= inv;
    acc.mse_s *= inv;
    result.epoch_losses.push_back(acc);

    char line[256];
    std::snprintf(line, sizeof(line), "%zu,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  epochs_already_done + epoch, acc.l_adv_c, acc.l_adv_g,
                  acc.mse_y, acc.mse_v, acc.mse_s);
    csv << line;
  }
  csv.flush();

  const BlockMap blocks = trainer_checkpoint(
      tr, run_cfg, epochs_already_done + oc.epochs);
  write_file(out_dir + "/model.w8ts", write_checkpoint(blocks));
  std::ofstream cfg_out(out_dir + "/run_config.txt");
  cfg_out << serialize_config(run_cfg);
  return result;
}

}  // namespace wisynth
