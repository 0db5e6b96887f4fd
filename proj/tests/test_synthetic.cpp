#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "wisynth/synthetic.hpp"

using namespace wisynth;

TEST(PoseTrajectory, SinglePoseValid) {
  const std::vector<Pose> traj = pose_trajectory(7, 1);
  ASSERT_EQ(traj.size(), 1u);
  for (const Vec2& j : traj[0].joints) {
    EXPECT_GE(j.x, 0.0);
    EXPECT_LE(j.x, 1.0);
    EXPECT_GE(j.y, 0.0);
    EXPECT_LE(j.y, 1.0);
  }
}

TEST(PoseTrajectory, Deterministic) {
  const std::vector<Pose> a = pose_trajectory(7, 16);
  const std::vector<Pose> b = pose_trajectory(7, 16);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t t = 0; t < a.size(); ++t)
    for (int j = 0; j < Pose::kJointCount; ++j) {
      EXPECT_EQ(a[t].joints[j].x, b[t].joints[j].x);
      EXPECT_EQ(a[t].joints[j].y, b[t].joints[j].y);
    }
}

// [DERIVED] exhaustive scan: per-step joint displacement stays <= 0.05.
TEST(PoseTrajectory, BoundedStepDisplacement) {
  const std::vector<Pose> traj = pose_trajectory(123, 1000);
  double max_step = 0.0;
  for (std::size_t t = 1; t < traj.size(); ++t)
    for (int j = 0; j < Pose::kJointCount; ++j) {
      max_step = std::max(
          max_step, std::abs(traj[t].joints[j].x - traj[t - 1].joints[j].x));
      max_step = std::max(
          max_step, std::abs(traj[t].joints[j].y - traj[t - 1].joints[j].y));
    }
  EXPECT_LE(max_step, 0.05);
}

// [TRIVIAL] the default motion_scale of 1 is bit-identical to omitting it.
TEST(PoseTrajectory, UnitMotionScaleBitIdentical) {
  const std::vector<Pose> a = pose_trajectory(7, 16);
  const std::vector<Pose> b = pose_trajectory(7, 16, 1.0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t t = 0; t < a.size(); ++t)
    for (int j = 0; j < Pose::kJointCount; ++j) {
      EXPECT_EQ(a[t].joints[j].x, b[t].joints[j].x);
      EXPECT_EQ(a[t].joints[j].y, b[t].joints[j].y);
    }
}

// [DERIVED] the 0.05 per-step bound scales linearly with motion_scale.
TEST(PoseTrajectory, MotionScaleShrinksSteps) {
  const std::vector<Pose> traj = pose_trajectory(123, 1000, 0.1);
  double max_step = 0.0;
  for (std::size_t t = 1; t < traj.size(); ++t)
    for (int j = 0; j < Pose::kJointCount; ++j) {
      max_step = std::max(
          max_step, std::abs(traj[t].joints[j].x - traj[t - 1].joints[j].x));
      max_step = std::max(
          max_step, std::abs(traj[t].joints[j].y - traj[t - 1].joints[j].y));
    }
  EXPECT_LE(max_step, 0.1 * 0.05);
  EXPECT_GT(max_step, 0.0);  // still moving
}

TEST(PoseTrajectory, MotionScaleValidated) {
  EXPECT_THROW(pose_trajectory(1, 4, 0.0), DomainError);
  EXPECT_THROW(pose_trajectory(1, 4, 1.5), DomainError);
}

TEST(PoseTrajectory, JointsStayInScene) {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 99ull}) {
    for (const Pose& pose : pose_trajectory(seed, 200))
      for (const Vec2& j : pose.joints) {
        EXPECT_GE(j.x, 0.0);
        EXPECT_LE(j.x, 1.0);
        EXPECT_GE(j.y, 0.0);
        EXPECT_LE(j.y, 1.0);
      }
  }
}

TEST(RenderSilhouette, BinaryValuesAndNonemptyForeground) {
  const Pose pose = pose_trajectory(5, 1)[0];
  const VideoClip clip = render_silhouette(pose, 48, 64);
  std::size_t fg = 0;
  for (double v : clip.data) {
    EXPECT_TRUE(v == 1.0 || v == -1.0);
    if (v == 1.0) ++fg;
  }
  EXPECT_GT(fg, 0u);
}

// [DERIVED] pixel-shift oracle: +delta x translation moves the mask by
// exactly delta*W pixels when delta*W is integral.
TEST(RenderSilhouette, TranslationShiftsMask) {
  const std::size_t h = 48, w = 64;
  Pose pose = pose_trajectory(6, 1)[0];
  const double delta = 4.0 / w;  // exactly 4 pixels
  Pose moved = pose;
  for (Vec2& j : moved.joints) j.x += delta;

  const VideoClip base = render_silhouette(pose, h, w);
  const VideoClip shifted = render_silhouette(moved, h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x + 4 < w; ++x)
      EXPECT_EQ(shifted.at(0, 0, y, x + 4), base.at(0, 0, y, x))
          << "y=" << y << " x=" << x;
}

TEST(RenderSkeleton, DeterministicAndInRange) {
  const Pose pose = pose_trajectory(8, 1)[0];
  const VideoClip a = render_skeleton(pose, 48, 64);
  const VideoClip b = render_skeleton(pose, 48, 64);
  EXPECT_EQ(a.data, b.data);
  for (double v : a.data) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(RenderSkeleton, LeftRightForearmsDifferInColor) {
  const Pose pose = pose_trajectory(9, 1)[0];
  const VideoClip clip = render_skeleton(pose, 96, 128);
  auto dominant_at = [&clip](const Vec2& a, const Vec2& b) {
    const std::size_t x = static_cast<std::size_t>(
        std::clamp(0.5 * (a.x + b.x) * clip.width, 0.0, clip.width - 1.0));
    const std::size_t y = static_cast<std::size_t>(
        std::clamp(0.5 * (a.y + b.y) * clip.height, 0.0, clip.height - 1.0));
    // red-minus-blue signature at the bone midpoint
    return clip.at(0, 0, y, x) - clip.at(0, 2, y, x);
  };
  const double left = dominant_at(pose.joints[Pose::kLElbow],
                                  pose.joints[Pose::kLWrist]);
  const double right = dominant_at(pose.joints[Pose::kRElbow],
                                   pose.joints[Pose::kRWrist]);
  EXPECT_GT(left, 0.0);   // warm (red-dominant)
  EXPECT_LT(right, 0.0);  // cool (blue-dominant)
}

TEST(SynthesizeCsi, ConstantPoseNoNoiseIsTimeInvariant) {
  SceneConfig cfg;
  cfg.noise_std = 0.0;
  const Pose pose = pose_trajectory(11, 1)[0];
  const CsiSequence seq = synthesize_csi({pose, pose, pose}, cfg, 4);
  for (std::size_t p = 1; p < seq.n_pkt(); ++p)
    for (std::size_t r = 0; r < cfg.n_rx; ++r)
      for (std::size_t t = 0; t < cfg.n_tx; ++t)
        for (std::size_t k = 0; k < cfg.n_sub; ++k) {
          EXPECT_EQ(seq.at(p, r, t, k).re, seq.at(0, r, t, k).re);
          EXPECT_EQ(seq.at(p, r, t, k).im, seq.at(0, r, t, k).im);
        }
}

TEST(SynthesizeCsi, UnitChannel) {
  SceneConfig cfg;
  cfg.noise_std = 0.0;
  cfg.static_paths = {{0.0, 1.0}};
  cfg.body_path_gain = 0.0;
  const Pose pose = pose_trajectory(12, 1)[0];
  const CsiSequence seq = synthesize_csi({pose}, cfg, 2);
  for (std::size_t p = 0; p < seq.n_pkt(); ++p)
    for (std::size_t k = 0; k < cfg.n_sub; ++k)
      EXPECT_NEAR(cfr_amplitude(seq.at(p, 0, 0, k)), 1.0, 1e-12);
}

// [DERIVED] direct evaluation of the stated path-sum formula as oracle.
TEST(SynthesizeCsi, MatchesPathSumOracle) {
  SceneConfig cfg;
  cfg.noise_std = 0.0;
  const Pose pose = pose_trajectory(13, 1)[0];
  const CsiSequence seq = synthesize_csi({pose}, cfg, 1);
  const Vec2 c = pose.centroid();
  const double body_delay = 1e-8 + 4e-8 * 0.5 * (c.x + c.y);
  const double body_gain = cfg.body_path_gain * (0.25 + pose.spread());
  for (std::size_t k = 0; k < cfg.n_sub; ++k) {
    const double f = k * cfg.carrier_spacing_hz;
    double re = 0.0, im = 0.0;
    for (const Path& path : cfg.static_paths) {
      re += path.gain * std::cos(-2.0 * M_PI * f * path.delay_s);
      im += path.gain * std::sin(-2.0 * M_PI * f * path.delay_s);
    }
    re += body_gain * std::cos(-2.0 * M_PI * f * body_delay);
    im += body_gain * std::sin(-2.0 * M_PI * f * body_delay);
    EXPECT_NEAR(seq.at(0, 0, 0, k).re, re, 1e-9);
    EXPECT_NEAR(seq.at(0, 0, 0, k).im, im, 1e-9);
  }
}

TEST(SynthesizeCsi, DifferentCentroidsDifferInAmplitude) {
  SceneConfig cfg;
  cfg.noise_std = 0.0;
  Pose a = pose_trajectory(14, 1)[0];
  Pose b = a;
  for (Vec2& j : b.joints) j.x = std::min(1.0, j.x + 0.2);
  const CsiSequence sa = synthesize_csi({a}, cfg, 1);
  const CsiSequence sb = synthesize_csi({b}, cfg, 1);
  bool any_diff = false;
  for (std::size_t k = 1; k < cfg.n_sub; ++k)
    if (std::abs(cfr_amplitude(sa.at(0, 0, 0, k)) -
                 cfr_amplitude(sb.at(0, 0, 0, k))) > 1e-9)
      any_diff = true;
  EXPECT_TRUE(any_diff);
}

TEST(SynthesizeCsi, AmplitudeBoundedByGainSum) {
  SceneConfig cfg;
  cfg.noise_std = 0.0;
  const Pose pose = pose_trajectory(15, 1)[0];
  double bound = cfg.body_path_gain * (0.25 + pose.spread());
  for (const Path& p : cfg.static_paths) bound += std::abs(p.gain);
  const CsiSequence seq = synthesize_csi({pose}, cfg, 1);
  for (std::size_t k = 0; k < cfg.n_sub; ++k)
    EXPECT_LE(cfr_amplitude(seq.at(0, 0, 0, k)), bound + 1e-9);
}

TEST(GenerateDataset, ShapesAndDeterminism) {
  SceneConfig cfg;
  cfg.seed = 42;
  const auto a = generate_dataset(1, 4, 8, cfg, VideoClip::Kind::kSilhouette,
                                  16, 16);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].clip.frames_count, 4u);
  EXPECT_EQ(a[0].csi.n_pkt(), 8u);

  const auto b = generate_dataset(1, 4, 8, cfg, VideoClip::Kind::kSilhouette,
                                  16, 16);
  EXPECT_EQ(a[0].clip.data, b[0].clip.data);
  EXPECT_TRUE(a[0].csi == b[0].csi);
}

TEST(GenerateDataset, IndivisiblePacketCountThrows) {
  SceneConfig cfg;
  EXPECT_THROW(
      generate_dataset(1, 4, 10, cfg, VideoClip::Kind::kSilhouette, 16, 16),
      IndivisiblePacketCount);
}
