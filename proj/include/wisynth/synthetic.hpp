#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "wisynth/csi.hpp"
#include "wisynth/errors.hpp"
#include "wisynth/image_io.hpp"
#include "wisynth/rng.hpp"

namespace wisynth {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// 14-joint stick figure in normalized scene coordinates [0,1]^2, y down.
struct Pose {
  enum Joint {
    kHead,
    kNeck,
    kLShoulder,
    kRShoulder,
    kLElbow,
    kRElbow,
    kLWrist,
    kRWrist,
    kLHip,
    kRHip,
    kLKnee,
    kRKnee,
    kLAnkle,
    kRAnkle,
    kJointCount
  };
  std::array<Vec2, kJointCount> joints;

  Vec2 centroid() const {
    Vec2 c;
    for (const auto& j : joints) {
      c.x += j.x;
      c.y += j.y;
    }
    c.x /= static_cast<double>(kJointCount);
    c.y /= static_cast<double>(kJointCount);
    return c;
  }

  double spread() const {
    const Vec2 c = centroid();
    double s = 0.0;
    for (const auto& j : joints) s += std::hypot(j.x - c.x, j.y - c.y);
    return s / static_cast<double>(kJointCount);
  }
};

struct Path {
  double delay_s = 0.0;
  double gain = 1.0;
};

struct SceneConfig {
  std::size_t n_rx = 3;
  std::size_t n_tx = 3;
  std::size_t n_sub = 30;
  double carrier_spacing_hz = 1.25e6;
  std::vector<Path> static_paths = {{0.0, 30.0}, {5e-8, 15.0}};
  double body_path_gain = 60.0;
  double noise_std = 0.2;
  // Scales the random-walk step sizes of the pose trajectory; 1 keeps the
  // documented per-step displacement bound, smaller values slow the figure.
  double motion_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (static_paths.empty()) throw DomainError("at least one static path");
    if (noise_std < 0.0) throw DomainError("noise_std must be >= 0");
    if (!(motion_scale > 0.0) || motion_scale > 1.0)
      throw DomainError("motion_scale must be in (0, 1]");
  }
};

namespace detail {

// Fixed figure proportions (normalized units).
constexpr double kTorso = 0.18;
constexpr double kNeckHead = 0.07;
constexpr double kShoulderW = 0.06;
constexpr double kHipW = 0.04;
constexpr double kUpperArm = 0.09;
constexpr double kForearm = 0.09;
constexpr double kThigh = 0.11;
constexpr double kShin = 0.11;

// Figure parameter vector driving forward kinematics. Bounds keep every
// joint inside [0,1]^2; step sizes keep per-step joint motion under 0.05.
struct FigureParams {
  double px, py;                // pelvis center
  double lean;                  // torso lean, radians
  double sh_l, sh_r;            // shoulder swing from straight down
  double el_l, el_r;            // elbow bend relative to upper arm
  double hip_l, hip_r;          // hip swing from straight down
  double knee_l, knee_r;        // knee bend relative to thigh

  static constexpr int kCount = 11;
  double* begin() { return &px; }

  static const std::array<double, kCount>& lo() {
    static const std::array<double, kCount> v = {
        0.35, 0.50, -0.15, -1.0, -1.0, -1.3, -1.3, -0.45, -0.45, 0.0, 0.0};
    return v;
  }
  static const std::array<double, kCount>& hi() {
    static const std::array<double, kCount> v = {
        0.65, 0.62, 0.15, 1.0, 1.0, 0.3, 0.3, 0.45, 0.45, 0.8, 0.8};
    return v;
  }
  static const std::array<double, kCount>& step() {
    static const std::array<double, kCount> v = {
        0.010, 0.010, 0.030, 0.055, 0.055, 0.055, 0.055,
        0.045, 0.045, 0.045, 0.045};
    return v;
  }
};

inline Pose to_pose(const FigureParams& q) {
  Pose pose;
  auto& j = pose.joints;
  const Vec2 pelvis{q.px, q.py};
  const Vec2 up{std::sin(q.lean), -std::cos(q.lean)};
  const Vec2 neck{pelvis.x + kTorso * up.x, pelvis.y + kTorso * up.y};
  j[Pose::kNeck] = neck;
  j[Pose::kHead] = {neck.x + kNeckHead * up.x, neck.y + kNeckHead * up.y};
  j[Pose::kLShoulder] = {neck.x - kShoulderW, neck.y + 0.01};
  j[Pose::kRShoulder] = {neck.x + kShoulderW, neck.y + 0.01};
  auto swing = [](const Vec2& from, double len, double ang) {
    return Vec2{from.x + len * std::sin(ang), from.y + len * std::cos(ang)};
  };
  j[Pose::kLElbow] = swing(j[Pose::kLShoulder], kUpperArm, q.sh_l);
  j[Pose::kRElbow] = swing(j[Pose::kRShoulder], kUpperArm, -q.sh_r);
  j[Pose::kLWrist] = swing(j[Pose::kLElbow], kForearm, q.sh_l + q.el_l);
  j[Pose::kRWrist] = swing(j[Pose::kRElbow], kForearm, -(q.sh_r + q.el_r));
  j[Pose::kLHip] = {pelvis.x - kHipW, pelvis.y};
  j[Pose::kRHip] = {pelvis.x + kHipW, pelvis.y};
  j[Pose::kLKnee] = swing(j[Pose::kLHip], kThigh, q.hip_l);
  j[Pose::kRKnee] = swing(j[Pose::kRHip], kThigh, -q.hip_r);
  j[Pose::kLAnkle] = swing(j[Pose::kLKnee], kShin, q.hip_l + q.knee_l);
  j[Pose::kRAnkle] = swing(j[Pose::kRKnee], kShin, -(q.hip_r + q.knee_r));
  return pose;
}

inline double reflect(double v, double lo, double hi) {
  while (v < lo || v > hi) {
    if (v < lo) v = 2.0 * lo - v;
    if (v > hi) v = 2.0 * hi - v;
  }
  return v;
}

}  // namespace detail

// Deterministic random-walk trajectory; consecutive poses differ by less
// than 0.05 per joint coordinate (scaled down by motion_scale).
inline std::vector<Pose> pose_trajectory(std::uint64_t seed, std::size_t t,
                                         double motion_scale = 1.0) {
  if (t < 1) throw DomainError("trajectory length must be >= 1");
  if (!(motion_scale > 0.0) || motion_scale > 1.0)
    throw DomainError("motion_scale must be in (0, 1]");
  Rng rng(splitmix64(seed ^ 0x706f7365ULL));
  detail::FigureParams q{};
  const auto& lo = detail::FigureParams::lo();
  const auto& hi = detail::FigureParams::hi();
  const auto& step = detail::FigureParams::step();
  double* params = q.begin();
  for (int i = 0; i < detail::FigureParams::kCount; ++i)
    params[i] = rng.uniform(lo[i], hi[i]);

  std::vector<Pose> out;
  out.reserve(t);
  out.push_back(detail::to_pose(q));
  for (std::size_t k = 1; k < t; ++k) {
    for (int i = 0; i < detail::FigureParams::kCount; ++i) {
      const double delta = motion_scale * rng.uniform(-step[i], step[i]);
      params[i] = detail::reflect(params[i] + delta, lo[i], hi[i]);
    }
    out.push_back(detail::to_pose(q));
  }
  return out;
}

namespace detail {

inline double dist_to_segment(double px, double py, const Vec2& a,
                              const Vec2& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double u = 0.0;
  if (len2 > 0.0) u = ((px - a.x) * dx + (py - a.y) * dy) / len2;
  u = std::clamp(u, 0.0, 1.0);
  const double cx = a.x + u * dx;
  const double cy = a.y + u * dy;
  return std::hypot(px - cx, py - cy);
}

struct Bone {
  Pose::Joint a;
  Pose::Joint b;
  double rgb[3];  // [0,1]
};

// 13 bones; warm colors on the left side, cool on the right.
inline const std::array<Bone, 13>& bones() {
  static const std::array<Bone, 13> v = {{
      {Pose::kHead, Pose::kNeck, {1.0, 1.0, 0.2}},
      {Pose::kNeck, Pose::kLShoulder, {1.0, 0.6, 0.1}},
      {Pose::kNeck, Pose::kRShoulder, {0.1, 0.6, 1.0}},
      {Pose::kLShoulder, Pose::kLElbow, {1.0, 0.2, 0.2}},
      {Pose::kLElbow, Pose::kLWrist, {1.0, 0.4, 0.7}},
      {Pose::kRShoulder, Pose::kRElbow, {0.2, 0.2, 1.0}},
      {Pose::kRElbow, Pose::kRWrist, {0.4, 0.9, 1.0}},
      {Pose::kNeck, Pose::kLHip, {0.9, 0.8, 0.4}},
      {Pose::kNeck, Pose::kRHip, {0.4, 0.8, 0.9}},
      {Pose::kLHip, Pose::kLKnee, {0.9, 0.5, 0.0}},
      {Pose::kLKnee, Pose::kLAnkle, {0.8, 0.1, 0.5}},
      {Pose::kRHip, Pose::kRKnee, {0.0, 0.5, 0.9}},
      {Pose::kRKnee, Pose::kRAnkle, {0.1, 0.9, 0.5}},
  }};
  return v;
}

}  // namespace detail

// Filled capsule-union body mask: foreground +1, background -1.
inline VideoClip render_silhouette(const Pose& pose, std::size_t h,
                                   std::size_t w) {
  VideoClip clip;
  clip.kind = VideoClip::Kind::kSilhouette;
  clip.frames_count = 1;
  clip.channels = 1;
  clip.height = h;
  clip.width = w;
  clip.data.assign(h * w, -1.0);

  struct Capsule {
    Pose::Joint a, b;
    double r;  // normalized radius
  };
  static const Capsule capsules[] = {
      {Pose::kNeck, Pose::kLHip, 0.050},    {Pose::kNeck, Pose::kRHip, 0.050},
      {Pose::kHead, Pose::kHead, 0.045},    {Pose::kLShoulder, Pose::kLElbow, 0.022},
      {Pose::kLElbow, Pose::kLWrist, 0.020}, {Pose::kRShoulder, Pose::kRElbow, 0.022},
      {Pose::kRElbow, Pose::kRWrist, 0.020}, {Pose::kLHip, Pose::kLKnee, 0.028},
      {Pose::kLKnee, Pose::kLAnkle, 0.024},  {Pose::kRHip, Pose::kRKnee, 0.028},
      {Pose::kRKnee, Pose::kRAnkle, 0.024},
  };

  // Pixel-space geometry so a +delta translation in x moves the mask by
  // delta*w pixels.
  const double scale = static_cast<double>(h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double px = (x + 0.5);
      const double py = (y + 0.5);
      for (const auto& cap : capsules) {
        const Vec2 a{pose.joints[cap.a].x * w, pose.joints[cap.a].y * h};
        const Vec2 b{pose.joints[cap.b].x * w, pose.joints[cap.b].y * h};
        if (detail::dist_to_segment(px, py, a, b) <= cap.r * scale) {
          clip.data[y * w + x] = 1.0;
          break;
        }
      }
    }
  return clip;
}

// Anti-aliased colored bone segments over a -1 background.
inline VideoClip render_skeleton(const Pose& pose, std::size_t h,
                                 std::size_t w) {
  VideoClip clip;
  clip.kind = VideoClip::Kind::kSkeleton;
  clip.frames_count = 1;
  clip.channels = 3;
  clip.height = h;
  clip.width = w;
  clip.data.assign(3 * h * w, -1.0);

  const double line_r = 0.8;  // pixels
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double px = (x + 0.5);
      const double py = (y + 0.5);
      for (const auto& bone : detail::bones()) {
        const Vec2 a{pose.joints[bone.a].x * w, pose.joints[bone.a].y * h};
        const Vec2 b{pose.joints[bone.b].x * w, pose.joints[bone.b].y * h};
        const double d = detail::dist_to_segment(px, py, a, b);
        const double alpha = std::clamp(line_r + 1.0 - d, 0.0, 1.0);
        if (alpha <= 0.0) continue;
        for (std::size_t c = 0; c < 3; ++c) {
          double& v = clip.at(0, c, y, x);
          const double target = bone.rgb[c] * 2.0 - 1.0;
          v = std::max(v, -1.0 + alpha * (target + 1.0));
        }
      }
    }
  return clip;
}

// Toy multipath channel: fixed static paths plus one body path whose delay
// and gain follow the pose centroid and limb spread. Per-subcarrier CFR is
// the path sum at f_k = k * carrier_spacing, with AWGN on re/im.
inline ComplexCfr body_channel_response(const Pose& pose,
                                        const SceneConfig& cfg,
                                        std::size_t subcarrier) {
  const double f = subcarrier * cfg.carrier_spacing_hz;
  double re = 0.0, im = 0.0;
  for (const Path& path : cfg.static_paths) {
    const double phi = -2.0 * M_PI * f * path.delay_s;
    re += path.gain * std::cos(phi);
    im += path.gain * std::sin(phi);
  }
  const Vec2 c = pose.centroid();
  const double delay = 1e-8 + 4e-8 * 0.5 * (c.x + c.y);
  const double gain = cfg.body_path_gain * (0.25 + pose.spread());
  const double phi = -2.0 * M_PI * f * delay;
  re += gain * std::cos(phi);
  im += gain * std::sin(phi);
  return {re, im};
}

inline Pose lerp_pose(const Pose& a, const Pose& b, double u) {
  Pose out;
  for (int i = 0; i < Pose::kJointCount; ++i) {
    out.joints[i].x = a.joints[i].x + u * (b.joints[i].x - a.joints[i].x);
    out.joints[i].y = a.joints[i].y + u * (b.joints[i].y - a.joints[i].y);
  }
  return out;
}

inline CsiSequence synthesize_csi(const std::vector<Pose>& poses,
                                  const SceneConfig& cfg,
                                  std::size_t packets_per_frame) {
  cfg.validate();
  if (poses.empty() || packets_per_frame < 1)
    throw DomainError("need at least one pose and one packet per frame");
  const std::size_t n_pkt = poses.size() * packets_per_frame;
  Rng noise(splitmix64(cfg.seed ^ 0x6e6f697365ULL));

  std::vector<ComplexCfr> values;
  values.reserve(n_pkt * cfg.n_rx * cfg.n_tx * cfg.n_sub);
  std::vector<std::uint64_t> timestamps(n_pkt);
  for (std::size_t i = 0; i < n_pkt; ++i) {
    timestamps[i] = i;
    const double pos = static_cast<double>(i) / packets_per_frame;
    const std::size_t f0 = std::min(static_cast<std::size_t>(pos),
                                    poses.size() - 1);
    const std::size_t f1 = std::min(f0 + 1, poses.size() - 1);
    const Pose pose = lerp_pose(poses[f0], poses[f1], pos - f0);
    for (std::size_t r = 0; r < cfg.n_rx; ++r)
      for (std::size_t t = 0; t < cfg.n_tx; ++t)
        for (std::size_t s = 0; s < cfg.n_sub; ++s) {
          ComplexCfr h = body_channel_response(pose, cfg, s);
          if (cfg.noise_std > 0.0) {
            h.re += noise.normal(0.0, cfg.noise_std);
            h.im += noise.normal(0.0, cfg.noise_std);
          }
          values.push_back(h);
        }
  }
  return CsiSequence(cfg.n_rx, cfg.n_tx, cfg.n_sub, n_pkt, std::move(values),
                     std::move(timestamps));
}

struct SamplePair {
  VideoClip clip;
  CsiSequence csi;
};

// Paired samples with per-sample derived seeds, so parallel and serial
// generation agree bitwise.
inline std::vector<SamplePair> generate_dataset(
    std::size_t n_samples, std::size_t t, std::size_t p,
    const SceneConfig& cfg, VideoClip::Kind kind, std::size_t height,
    std::size_t width) {
  cfg.validate();
  if (p % t != 0)
    throw IndivisiblePacketCount("packet count must be divisible by T");
  const std::size_t ppf = p / t;

  std::vector<SamplePair> out;
  out.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::uint64_t sample_seed =
        splitmix64(cfg.seed + 0x9e3779b97f4a7c15ULL * (i + 1));
    const std::vector<Pose> poses =
        pose_trajectory(sample_seed, t, cfg.motion_scale);

    std::vector<VideoClip> frames;
    frames.reserve(t);
    for (const Pose& pose : poses)
      frames.push_back(kind == VideoClip::Kind::kSilhouette
                           ? render_silhouette(pose, height, width)
                           : render_skeleton(pose, height, width));

    SceneConfig sample_cfg = cfg;
    sample_cfg.seed = sample_seed;
    out.push_back(
        {stack_frames(frames), synthesize_csi(poses, sample_cfg, ppf)});
  }
  return out;
}

}  // namespace wisynth
