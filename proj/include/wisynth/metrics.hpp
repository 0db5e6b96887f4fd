#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wisynth/errors.hpp"
#include "wisynth/image_io.hpp"

namespace wisynth {

struct MetricReport {
  double mse = 0.0;
  double ssim = 0.0;
  double fsim = 0.0;
  std::map<double, double> pcs;  // threshold -> percentage
};

namespace detail {

inline void check_clip_pair(const VideoClip& a, const VideoClip& b) {
  if (a.frames_count != b.frames_count || a.channels != b.channels ||
      a.height != b.height || a.width != b.width)
    throw ShapeError("clip shapes differ");
}

// Channel-mean grayscale frame rescaled from [-1,1] to [0,1].
inline std::vector<double> gray_frame(const VideoClip& clip, std::size_t t) {
  const std::size_t hw = clip.height * clip.width;
  std::vector<double> out(hw, 0.0);
  for (std::size_t c = 0; c < clip.channels; ++c)
    for (std::size_t i = 0; i < hw; ++i)
      out[i] += clip.data[(t * clip.channels + c) * hw + i];
  for (double& v : out) v = (v / clip.channels + 1.0) * 0.5;
  return out;
}

inline std::vector<double> gaussian_kernel_11() {
  std::vector<double> k(11);
  double sum = 0.0;
  for (int i = 0; i < 11; ++i) {
    const double d = i - 5.0;
    k[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace detail

// Mean squared difference over all pixels, channels, and frames, computed
// on the [0,1] rescale of the stored [-1,1] values.
inline double mse_frames(const VideoClip& x, const VideoClip& g) {
  detail::check_clip_pair(x, g);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double d = (x.data[i] - g.data[i]) * 0.5;
    acc += d * d;
  }
  return acc / static_cast<double>(x.data.size());
}

// Single-frame SSIM: 11x11 Gaussian window (sigma 1.5), L = 1,
// C1=(0.01L)^2, C2=(0.03L)^2, mean over valid window positions.
inline double ssim_frame(const std::vector<double>& x,
                         const std::vector<double>& y, std::size_t h,
                         std::size_t w) {
  if (x.size() != h * w || y.size() != h * w)
    throw ShapeError("frame buffer size mismatch");
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  static const std::vector<double> kernel = detail::gaussian_kernel_11();
  const int r = 5;
  if (h < 11 || w < 11) throw ShapeError("frame too small for 11x11 SSIM");

  // Separable Gaussian filtering of the five required moment maps.
  auto filter = [&](const std::vector<double>& src) {
    std::vector<double> tmp(h * w, 0.0), out(h * w, 0.0);
    for (std::size_t yy = 0; yy < h; ++yy)
      for (int xx = r; xx < static_cast<int>(w) - r; ++xx) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k)
          acc += kernel[k + r] * src[yy * w + xx + k];
        tmp[yy * w + xx] = acc;
      }
    for (int yy = r; yy < static_cast<int>(h) - r; ++yy)
      for (std::size_t xx = 0; xx < w; ++xx) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k)
          acc += kernel[k + r] * tmp[(yy + k) * w + xx];
        out[yy * w + xx] = acc;
      }
    return out;
  };

  std::vector<double> xx(h * w), yy(h * w), xy(h * w);
  for (std::size_t i = 0; i < h * w; ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mu_x = filter(x);
  const auto mu_y = filter(y);
  const auto m_xx = filter(xx);
  const auto m_yy = filter(yy);
  const auto m_xy = filter(xy);

  double acc = 0.0;
  std::size_t count = 0;
  for (int py = r; py < static_cast<int>(h) - r; ++py)
    for (int px = r; px < static_cast<int>(w) - r; ++px) {
      const std::size_t i = py * w + px;
      const double var_x = m_xx[i] - mu_x[i] * mu_x[i];
      const double var_y = m_yy[i] - mu_y[i] * mu_y[i];
      const double cov = m_xy[i] - mu_x[i] * mu_y[i];
      const double num = (2.0 * mu_x[i] * mu_y[i] + kC1) * (2.0 * cov + kC2);
      const double den =
          (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + kC1) * (var_x + var_y + kC2);
      acc += num / den;
      ++count;
    }
  return acc / static_cast<double>(count);
}

inline double ssim(const VideoClip& x, const VideoClip& g) {
  detail::check_clip_pair(x, g);
  double acc = 0.0;
  for (std::size_t t = 0; t < x.frames_count; ++t)
    acc += ssim_frame(detail::gray_frame(x, t), detail::gray_frame(g, t),
                      x.height, x.width);
  return acc / static_cast<double>(x.frames_count);
}

namespace detail {

// Log-Gabor phase congruency, 4 scales x 4 orientations, local-energy
// form. Input is a [0,1] grayscale frame.
inline std::vector<double> phase_congruency(const std::vector<double>& img,
                                            std::size_t h, std::size_t w) {
  constexpr int kScales = 4;
  constexpr int kOrients = 4;
  constexpr double kMinWavelength = 6.0;
  constexpr double kMult = 2.0;
  constexpr double kSigmaOnf = 0.55;
  constexpr double kDThetaOnSigma = 1.2;
  constexpr double kEps = 1e-4;
  const std::size_t n = h * w;

  fftw_complex* in = fftw_alloc_complex(n);
  fftw_complex* freq = fftw_alloc_complex(n);
  fftw_complex* band = fftw_alloc_complex(n);
  fftw_complex* resp = fftw_alloc_complex(n);
  for (std::size_t i = 0; i < n; ++i) {
    in[i][0] = img[i];
    in[i][1] = 0.0;
  }
  fftw_plan fwd = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w),
                                   in, freq, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_plan inv = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w),
                                   band, resp, FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(fwd);

  // Normalized frequency grid.
  std::vector<double> radius(n), theta(n);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double fy =
          (y <= h / 2 ? static_cast<double>(y) : static_cast<double>(y) - h) /
          static_cast<double>(h);
      const double fx =
          (x <= w / 2 ? static_cast<double>(x) : static_cast<double>(x) - w) /
          static_cast<double>(w);
      radius[y * w + x] = std::sqrt(fx * fx + fy * fy);
      theta[y * w + x] = std::atan2(-fy, fx);
    }
  radius[0] = 1.0;  // avoid log(0) at DC; the filter is zeroed there anyway

  const double theta_sigma = M_PI / kOrients / kDThetaOnSigma;
  const double log_sigma = std::log(kSigmaOnf);
  const double denom_log = 2.0 * log_sigma * log_sigma;

  std::vector<double> pc(n, 0.0);
  std::vector<double> sum_e(n), sum_o(n), sum_an(n);
  std::vector<double> total_energy(n, 0.0), total_an(n, 0.0);

  for (int o = 0; o < kOrients; ++o) {
    const double angle = o * M_PI / kOrients;
    std::fill(sum_e.begin(), sum_e.end(), 0.0);
    std::fill(sum_o.begin(), sum_o.end(), 0.0);
    std::fill(sum_an.begin(), sum_an.end(), 0.0);
    for (int s = 0; s < kScales; ++s) {
      const double wavelength = kMinWavelength * std::pow(kMult, s);
      const double f0 = 1.0 / wavelength;
      for (std::size_t i = 0; i < n; ++i) {
        const double lg = std::log(radius[i] / f0);
        double g = std::exp(-lg * lg / denom_log);
        if (i == 0) g = 0.0;
        const double ds = std::sin(theta[i] - angle);
        const double dc = std::cos(theta[i] - angle);
        const double dtheta = std::abs(std::atan2(ds, dc));
        const double spread =
            std::exp(-dtheta * dtheta / (2.0 * theta_sigma * theta_sigma));
        const double filt = g * spread;
        band[i][0] = freq[i][0] * filt;
        band[i][1] = freq[i][1] * filt;
      }
      fftw_execute(inv);
      const double scale = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double e = resp[i][0] * scale;
        const double od = resp[i][1] * scale;
        sum_e[i] += e;
        sum_o[i] += od;
        sum_an[i] += std::sqrt(e * e + od * od);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      total_energy[i] += std::sqrt(sum_e[i] * sum_e[i] + sum_o[i] * sum_o[i]);
      total_an[i] += sum_an[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    pc[i] = total_energy[i] / (total_an[i] + kEps);

  fftw_destroy_plan(fwd);
  fftw_destroy_plan(inv);
  fftw_free(in);
  fftw_free(freq);
  fftw_free(band);
  fftw_free(resp);
  return pc;
}

// Scharr gradient magnitude on the [0,255] scale.
inline std::vector<double> gradient_magnitude(const std::vector<double>& img,
                                              std::size_t h, std::size_t w) {
  std::vector<double> out(h * w, 0.0);
  auto px = [&](long y, long x) {
    y = std::clamp<long>(y, 0, static_cast<long>(h) - 1);
    x = std::clamp<long>(x, 0, static_cast<long>(w) - 1);
    return img[y * w + x] * 255.0;
  };
  for (long y = 0; y < static_cast<long>(h); ++y)
    for (long x = 0; x < static_cast<long>(w); ++x) {
      const double gx =
          (3.0 * px(y - 1, x - 1) + 10.0 * px(y, x - 1) + 3.0 * px(y + 1, x - 1) -
           3.0 * px(y - 1, x + 1) - 10.0 * px(y, x + 1) - 3.0 * px(y + 1, x + 1)) /
          16.0;
      const double gy =
          (3.0 * px(y - 1, x - 1) + 10.0 * px(y - 1, x) + 3.0 * px(y - 1, x + 1) -
           3.0 * px(y + 1, x - 1) - 10.0 * px(y + 1, x) - 3.0 * px(y + 1, x + 1)) /
          16.0;
      out[y * w + x] = std::sqrt(gx * gx + gy * gy);
    }
  return out;
}

}  // namespace detail

// Feature similarity: phase congruency and gradient similarity pooled with
// PC-max weighting.
inline double fsim_frame(const std::vector<double>& x,
                         const std::vector<double>& y, std::size_t h,
                         std::size_t w) {
  constexpr double kT1 = 0.85;
  constexpr double kT2 = 160.0;
  const auto pc1 = detail::phase_congruency(x, h, w);
  const auto pc2 = detail::phase_congruency(y, h, w);
  const auto g1 = detail::gradient_magnitude(x, h, w);
  const auto g2 = detail::gradient_magnitude(y, h, w);

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < h * w; ++i) {
    const double s_pc = (2.0 * pc1[i] * pc2[i] + kT1) /
                        (pc1[i] * pc1[i] + pc2[i] * pc2[i] + kT1);
    const double s_g =
        (2.0 * g1[i] * g2[i] + kT2) / (g1[i] * g1[i] + g2[i] * g2[i] + kT2);
    const double pcm = std::max(pc1[i], pc2[i]);
    num += s_pc * s_g * pcm;
    den += pcm;
  }
  return den > 0.0 ? num / den : 1.0;
}

inline double fsim(const VideoClip& x, const VideoClip& g) {
  detail::check_clip_pair(x, g);
  double acc = 0.0;
  for (std::size_t t = 0; t < x.frames_count; ++t)
    acc += fsim_frame(detail::gray_frame(x, t), detail::gray_frame(g, t),
                      x.height, x.width);
  return acc / static_cast<double>(x.frames_count);
}

// Percentage of frames whose whole-frame Euclidean distance (8-bit pixel
// scale) falls within each threshold.
inline std::map<double, double> pcs(const VideoClip& s, const VideoClip& g,
                                    const std::vector<double>& thresholds) {
  detail::check_clip_pair(s, g);
  const std::size_t fsz = s.frame_size();
  std::vector<double> dist(s.frames_count, 0.0);
  for (std::size_t t = 0; t < s.frames_count; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < fsz; ++i) {
      const double d =
          (s.data[t * fsz + i] - g.data[t * fsz + i]) * 0.5 * 255.0;
      acc += d * d;
    }
    dist[t] = std::sqrt(acc);
  }
  std::map<double, double> out;
  for (double xi : thresholds) {
    std::size_t within = 0;
    for (double d : dist)
      if (d <= xi) ++within;
    out[xi] = 100.0 * static_cast<double>(within) /
              static_cast<double>(s.frames_count);
  }
  return out;
}

inline MetricReport evaluate_clips(const VideoClip& pred,
                                   const VideoClip& truth,
                                   const std::vector<double>& thresholds) {
  MetricReport report;
  report.mse = mse_frames(pred, truth);
  report.ssim = ssim(pred, truth);
  report.fsim = fsim(pred, truth);
  report.pcs = pcs(pred, truth, thresholds);
  return report;
}

inline std::string report_to_text(const MetricReport& r) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "{\n"
      << "  \"mse\": " << r.mse << ",\n"
      << "  \"ssim\": " << r.ssim << ",\n"
      << "  \"fsim\": " << r.fsim << ",\n"
      << "  \"pcs\": {";
  bool first = true;
  for (const auto& [xi, pct] : r.pcs) {
    out << (first ? "" : ", ") << "\"" << xi << "\": " << pct;
    first = false;
  }
  out << "}\n}\n";
  return out.str();
}

}  // namespace wisynth
