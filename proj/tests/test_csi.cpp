#include <gtest/gtest.h>

#include <cmath>

#include "wisynth/csi.hpp"
#include "wisynth/rng.hpp"

using namespace wisynth;

TEST(CfrAmplitude, PythagoreanTriple) {
  EXPECT_DOUBLE_EQ(cfr_amplitude({3.0, 4.0}), 5.0);
}

TEST(CfrAmplitude, ZeroCase) {
  EXPECT_DOUBLE_EQ(cfr_amplitude({0.0, 0.0}), 0.0);
}

TEST(CfrAmplitude, SignInvariance) {
  EXPECT_DOUBLE_EQ(cfr_amplitude({-1.0, 0.0}), 1.0);
}

TEST(CfrAmplitude, ConjugateInvariant) {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const ComplexCfr h{rng.uniform(-50, 50), rng.uniform(-50, 50)};
    EXPECT_DOUBLE_EQ(cfr_amplitude(h), cfr_amplitude({h.re, -h.im}));
  }
}

TEST(CfrAmplitude, ScalarHomogeneity) {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const ComplexCfr h{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    const double s = rng.uniform(-5, 5);
    EXPECT_NEAR(cfr_amplitude({s * h.re, s * h.im}),
                std::abs(s) * cfr_amplitude(h), 1e-12);
  }
}

TEST(CfrPhase, Axes) {
  EXPECT_DOUBLE_EQ(cfr_phase({1.0, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(cfr_phase({0.0, 1.0}), M_PI / 2.0);
  EXPECT_DOUBLE_EQ(cfr_phase({-1.0, 0.0}), M_PI);
}

TEST(CfrPhase, ZeroThrows) { EXPECT_THROW(cfr_phase({0.0, 0.0}), ZeroCfr); }

TEST(CsiSequence, RejectsBadShapes) {
  EXPECT_THROW(CsiSequence(0, 1, 1, 1, {}), ShapeError);
  EXPECT_THROW(CsiSequence(1, 1, 1, 2, {{1, 1}}), ShapeError);
  EXPECT_THROW(CsiSequence(1, 1, 1, 1, {{1, 1}}, {1, 2}), ShapeError);
  EXPECT_THROW(CsiSequence(1, 1, 1, 2, {{1, 1}, {2, 2}}, {5, 4}), ShapeError);
}

TEST(CsiSequence, AcceptsMonotoneTimestamps) {
  const CsiSequence s(1, 1, 1, 2, {{1, 1}, {2, 2}}, {4, 4});
  EXPECT_TRUE(s.has_timestamps());
}

TEST(ExtractAmplitudes, AllZero) {
  const CsiSequence s(2, 2, 3, 4, std::vector<ComplexCfr>(2 * 2 * 3 * 4));
  const AmplitudeTensor a = extract_amplitudes(s);
  for (double v : a.values()) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(ExtractAmplitudes, SingleValue) {
  const CsiSequence s(1, 1, 1, 1, {{3.0, 4.0}});
  const AmplitudeTensor a = extract_amplitudes(s);
  EXPECT_DOUBLE_EQ(a.at(0, 0, 0, 0), 5.0);
}

TEST(ExtractAmplitudes, MatchesElementwiseOracle) {
  Rng rng(99);
  std::vector<ComplexCfr> values(2 * 2 * 4 * 10);
  for (auto& h : values) {
    h.re = rng.uniform(-100, 100);
    h.im = rng.uniform(-100, 100);
  }
  const CsiSequence s(2, 2, 4, 10, values);
  const AmplitudeTensor a = extract_amplitudes(s);
  for (std::size_t p = 0; p < 10; ++p)
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t k = 0; k < 4; ++k) {
          const ComplexCfr& h = s.at(p, r, t, k);
          EXPECT_DOUBLE_EQ(a.at(r, t, k, p),
                           std::sqrt(h.re * h.re + h.im * h.im));
        }
}

// Permuting packets permutes only the P axis of the amplitude tensor.
TEST(ExtractAmplitudes, PacketPermutationEquivariance) {
  Rng rng(7);
  const std::size_t n_pkt = 6;
  std::vector<ComplexCfr> values(2 * 1 * 3 * n_pkt);
  for (auto& h : values) {
    h.re = rng.uniform(-10, 10);
    h.im = rng.uniform(-10, 10);
  }
  const CsiSequence orig(2, 1, 3, n_pkt, values);

  const std::size_t block = 2 * 1 * 3;
  std::vector<ComplexCfr> reversed(values.size());
  for (std::size_t p = 0; p < n_pkt; ++p)
    for (std::size_t i = 0; i < block; ++i)
      reversed[p * block + i] = values[(n_pkt - 1 - p) * block + i];
  const CsiSequence rev(2, 1, 3, n_pkt, reversed);

  const AmplitudeTensor a = extract_amplitudes(orig);
  const AmplitudeTensor b = extract_amplitudes(rev);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t p = 0; p < n_pkt; ++p)
        EXPECT_DOUBLE_EQ(a.at(r, 0, k, p), b.at(r, 0, k, n_pkt - 1 - p));
}
