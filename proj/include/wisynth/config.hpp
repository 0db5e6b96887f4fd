#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wisynth/errors.hpp"
#include "wisynth/image_io.hpp"
#include "wisynth/network.hpp"
#include "wisynth/sanitizer.hpp"
#include "wisynth/synthetic.hpp"

namespace wisynth {

struct LossWeights {
  double w_adv = 0.5;
  double w_y = 1.0;
  double w_v = 0.5;
  double w_s = 1.0;

  void validate() const {
    if (w_adv < 0 || w_y < 0 || w_v < 0 || w_s < 0)
      throw DomainError("loss weights must be nonnegative");
    if (!(w_adv < w_y)) throw DomainError("w_adv must be < w_y");
    if (!(w_v < w_s)) throw DomainError("w_v must be < w_s");
  }
};

struct OptimConfig {
  double lr = 0.0002;
  double lr_decay = 1.0;  // per-epoch multiplicative factor; 1 = constant lr
  double eps = 1e-8;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::size_t epochs = 800;
  std::size_t batch = 4;
  double init_std = 0.02;
  double train_fraction = 0.75;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lr > 0)) throw DomainError("lr must be > 0");
    if (!(lr_decay > 0) || lr_decay > 1.0)
      throw DomainError("lr_decay must be in (0, 1]");
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
      throw DomainError("betas must lie in [0, 1)");
    if (train_fraction <= 0.0 || train_fraction > 1.0)
      throw DomainError("train_fraction must be in (0, 1]");
    if (batch < 1) throw DomainError("batch must be >= 1");
  }
};

// Full run settings, persisted as a key=value text file. Unknown keys are
// rejected; every key has a default.
struct RunConfig {
  SceneConfig scene;
  ModelConfig model;
  OptimConfig optim;
  LossWeights loss;
  HampelConfig sanitize{5, 3.0};  // small default window for short P
  VideoClip::Kind kind = VideoClip::Kind::kSilhouette;
  std::vector<double> thresholds = {1, 3, 5, 25, 30, 40, 50};

  void validate() const {
    scene.validate();
    model.validate();
    optim.validate();
    loss.validate();
    sanitize.validate();
  }
};

namespace detail {

inline std::string paths_to_string(const std::vector<Path>& paths) {
  std::string out;
  char buf[64];
  for (const Path& p : paths) {
    if (!out.empty()) out += ';';
    std::snprintf(buf, sizeof(buf), "%.9g:%.9g", p.delay_s, p.gain);
    out += buf;
  }
  return out;
}

inline std::vector<Path> paths_from_string(const std::string& s) {
  std::vector<Path> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw ParseError("static path entry must be delay:gain");
    out.push_back({std::stod(item.substr(0, colon)),
                   std::stod(item.substr(colon + 1))});
  }
  return out;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "scene.n_rx=" << c.scene.n_rx << "\n"
      << "scene.n_tx=" << c.scene.n_tx << "\n"
      << "scene.n_sub=" << c.scene.n_sub << "\n"
      << "scene.carrier_spacing_hz=" << c.scene.carrier_spacing_hz << "\n"
      << "scene.static_paths=" << detail::paths_to_string(c.scene.static_paths)
      << "\n"
      << "scene.body_path_gain=" << c.scene.body_path_gain << "\n"
      << "scene.noise_std=" << c.scene.noise_std << "\n"
      << "scene.motion_scale=" << c.scene.motion_scale << "\n"
      << "scene.seed=" << c.scene.seed << "\n"
      << "data.t=" << c.model.t << "\n"
      << "data.p=" << c.model.n_pkt << "\n"
      << "data.height=" << c.model.height << "\n"
      << "data.width=" << c.model.width << "\n"
      << "data.kind="
      << (c.kind == VideoClip::Kind::kSilhouette ? "silhouette" : "skeleton")
      << "\n"
      << "model.c1=" << c.model.c1 << "\n"
      << "model.c2=" << c.model.c2 << "\n"
      << "model.c3=" << c.model.c3 << "\n"
      << "model.h_size=" << c.model.h_size << "\n"
      << "model.leaky_slope=" << c.model.leaky_slope << "\n"
      << "model.amp_scale=" << c.model.amp_scale << "\n"
      << "optim.lr=" << c.optim.lr << "\n"
      << "optim.lr_decay=" << c.optim.lr_decay << "\n"
      << "optim.eps=" << c.optim.eps << "\n"
      << "optim.beta1=" << c.optim.beta1 << "\n"
      << "optim.beta2=" << c.optim.beta2 << "\n"
      << "optim.epochs=" << c.optim.epochs << "\n"
      << "optim.batch=" << c.optim.batch << "\n"
      << "optim.init_std=" << c.optim.init_std << "\n"
      << "optim.train_fraction=" << c.optim.train_fraction << "\n"
      << "optim.seed=" << c.optim.seed << "\n"
      << "loss.w_adv=" << c.loss.w_adv << "\n"
      << "loss.w_y=" << c.loss.w_y << "\n"
      << "loss.w_v=" << c.loss.w_v << "\n"
      << "loss.w_s=" << c.loss.w_s << "\n"
      << "sanitize.window=" << c.sanitize.window << "\n"
      << "sanitize.nsigma=" << c.sanitize.n_sigmas << "\n";
  out << "metrics.thresholds=";
  for (std::size_t i = 0; i < c.thresholds.size(); ++i)
    out << (i ? "," : "") << c.thresholds[i];
  out << "\n";
  return out.str();
}

inline void apply_config_entry(RunConfig& c, const std::string& key,
                               const std::string& value) {
  auto as_u = [&value]() { return std::stoull(value); };
  auto as_d = [&value]() { return std::stod(value); };
  if (key == "scene.n_rx") c.scene.n_rx = as_u();
  else if (key == "scene.n_tx") c.scene.n_tx = as_u();
  else if (key == "scene.n_sub") { c.scene.n_sub = as_u(); c.model.n_sub = c.scene.n_sub; }
  else if (key == "scene.carrier_spacing_hz") c.scene.carrier_spacing_hz = as_d();
  else if (key == "scene.static_paths") c.scene.static_paths = detail::paths_from_string(value);
  else if (key == "scene.body_path_gain") c.scene.body_path_gain = as_d();
  else if (key == "scene.noise_std") c.scene.noise_std = as_d();
  else if (key == "scene.motion_scale") c.scene.motion_scale = as_d();
  else if (key == "scene.seed") c.scene.seed = as_u();
  else if (key == "data.t") c.model.t = as_u();
  else if (key == "data.p") c.model.n_pkt = as_u();
  else if (key == "data.height") c.model.height = as_u();
  else if (key == "data.width") c.model.width = as_u();
  else if (key == "data.kind") {
    if (value == "silhouette") { c.kind = VideoClip::Kind::kSilhouette; c.model.clip_channels = 1; }
    else if (value == "skeleton") { c.kind = VideoClip::Kind::kSkeleton; c.model.clip_channels = 3; }
    else throw ParseError("data.kind must be silhouette or skeleton");
  }
  else if (key == "model.c1") c.model.c1 = as_u();
  else if (key == "model.c2") c.model.c2 = as_u();
  else if (key == "model.c3") c.model.c3 = as_u();
  else if (key == "model.h_size") c.model.h_size = as_u();
  else if (key == "model.leaky_slope") c.model.leaky_slope = as_d();
  else if (key == "model.amp_scale") c.model.amp_scale = as_d();
  else if (key == "optim.lr") c.optim.lr = as_d();
  else if (key == "optim.lr_decay") c.optim.lr_decay = as_d();
  else if (key == "optim.eps") c.optim.eps = as_d();
  else if (key == "optim.beta1") c.optim.beta1 = as_d();
  else if (key == "optim.beta2") c.optim.beta2 = as_d();
  else if (key == "optim.epochs") c.optim.epochs = as_u();
  else if (key == "optim.batch") c.optim.batch = as_u();
  else if (key == "optim.init_std") c.optim.init_std = as_d();
  else if (key == "optim.train_fraction") c.optim.train_fraction = as_d();
  else if (key == "optim.seed") c.optim.seed = as_u();
  else if (key == "loss.w_adv") c.loss.w_adv = as_d();
  else if (key == "loss.w_y") c.loss.w_y = as_d();
  else if (key == "loss.w_v") c.loss.w_v = as_d();
  else if (key == "loss.w_s") c.loss.w_s = as_d();
  else if (key == "sanitize.window") c.sanitize.window = as_u();
  else if (key == "sanitize.nsigma") c.sanitize.n_sigmas = as_d();
  else if (key == "metrics.thresholds") {
    c.thresholds.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) c.thresholds.push_back(std::stod(item));
  }
  else throw ParseError("unknown config key: " + key);
}

inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line is not key=value: " + t);
    try {
      apply_config_entry(c, detail::trim(t.substr(0, eq)),
                         detail::trim(t.substr(eq + 1)));
    } catch (const std::invalid_argument&) {
      throw ParseError("bad value in config line: " + t);
    }
  }
  // keep the scene subcarrier count authoritative for the model
  c.model.n_sub = c.scene.n_sub;
  c.validate();
  return c;
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace wisynth
