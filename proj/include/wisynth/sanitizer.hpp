#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "wisynth/csi.hpp"
#include "wisynth/errors.hpp"

namespace wisynth {

// Sliding-window outlier filter settings: window must be odd so the
// center element is well defined.
struct HampelConfig {
  std::size_t window = 51;
  double n_sigmas = 3.0;

  void validate() const {
    if (window < 3 || window % 2 == 0)
      throw DomainError("hampel window must be odd and >= 3");
    if (!(n_sigmas > 0.0)) throw DomainError("hampel n_sigmas must be > 0");
  }
};

// Sanitized per-packet, per-subcarrier amplitudes (P rows, K columns).
class AmplitudeMatrix {
 public:
  AmplitudeMatrix(std::size_t n_pkt, std::size_t n_sub)
      : n_pkt_(n_pkt), n_sub_(n_sub), values_(n_pkt * n_sub, 0.0) {}

  std::size_t n_pkt() const { return n_pkt_; }
  std::size_t n_sub() const { return n_sub_; }
  double& at(std::size_t pkt, std::size_t sub) {
    return values_[pkt * n_sub_ + sub];
  }
  double at(std::size_t pkt, std::size_t sub) const {
    return values_[pkt * n_sub_ + sub];
  }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

 private:
  std::size_t n_pkt_, n_sub_;
  std::vector<double> values_;
};

namespace detail {

// Median of an unsorted scratch buffer. Even counts (truncated boundary
// windows) average the two middle order statistics.
inline double median_of(std::vector<double>& scratch) {
  std::sort(scratch.begin(), scratch.end());
  const std::size_t n = scratch.size();
  if (n % 2 == 1) return scratch[n / 2];
  return 0.5 * (scratch[n / 2 - 1] + scratch[n / 2]);
}

// Lower median: always an element of the window, used for replacement of
// leading outliers so the filter never invents a value.
inline double lower_median_of(std::vector<double>& scratch) {
  std::sort(scratch.begin(), scratch.end());
  return scratch[(scratch.size() - 1) / 2];
}

}  // namespace detail

// Hampel identifier over a packet series. All windows are evaluated on the
// raw series first, then flagged values are replaced with the most recent
// preceding non-outlier raw value; a leading outlier takes its window's
// lower median. Boundary windows are truncated, not padded.
inline std::vector<double> hampel_filter(const std::vector<double>& series,
                                         const HampelConfig& cfg) {
  cfg.validate();
  const std::size_t n = series.size();
  if (n == 0) throw EmptySeries();

  const std::size_t half = cfg.window / 2;
  std::vector<char> outlier(n, 0);
  std::vector<double> head_median(n, 0.0);
  std::vector<double> scratch;
  scratch.reserve(cfg.window);

  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t lo = p > half ? p - half : 0;
    const std::size_t hi = std::min(n - 1, p + half);
    scratch.assign(series.begin() + lo, series.begin() + hi + 1);
    const double mu = detail::median_of(scratch);
    for (auto& v : scratch) v = std::abs(v - mu);
    const double mad = detail::median_of(scratch);
    const double band = cfg.n_sigmas * mad;
    if (series[p] < mu - band || series[p] > mu + band) {
      outlier[p] = 1;
      scratch.assign(series.begin() + lo, series.begin() + hi + 1);
      head_median[p] = detail::lower_median_of(scratch);
    }
  }

  std::vector<double> out(series);
  bool have_prev = false;
  double prev = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    if (outlier[p]) {
      out[p] = have_prev ? prev : head_median[p];
    } else {
      prev = series[p];
      have_prev = true;
    }
  }
  return out;
}

// Hampel filtering applied independently along the packet axis of every
// (rx, tx, sub) series.
inline AmplitudeTensor sanitize(const AmplitudeTensor& amps,
                                const HampelConfig& cfg) {
  AmplitudeTensor out(amps.n_rx(), amps.n_tx(), amps.n_sub(), amps.n_pkt());
  std::vector<double> series(amps.n_pkt());
  for (std::size_t r = 0; r < amps.n_rx(); ++r)
    for (std::size_t t = 0; t < amps.n_tx(); ++t)
      for (std::size_t s = 0; s < amps.n_sub(); ++s) {
        const double* src = amps.series(r, t, s);
        series.assign(src, src + amps.n_pkt());
        const std::vector<double> filtered = hampel_filter(series, cfg);
        std::copy(filtered.begin(), filtered.end(), out.series(r, t, s));
      }
  return out;
}

// Median over the rx*tx transmissions at each (packet, subcarrier) cell.
inline AmplitudeMatrix condense(const AmplitudeTensor& sanitized) {
  AmplitudeMatrix a(sanitized.n_pkt(), sanitized.n_sub());
  std::vector<double> cell;
  cell.reserve(sanitized.n_rx() * sanitized.n_tx());
  for (std::size_t p = 0; p < sanitized.n_pkt(); ++p)
    for (std::size_t s = 0; s < sanitized.n_sub(); ++s) {
      cell.clear();
      for (std::size_t r = 0; r < sanitized.n_rx(); ++r)
        for (std::size_t t = 0; t < sanitized.n_tx(); ++t)
          cell.push_back(sanitized.at(r, t, s, p));
      a.at(p, s) = detail::median_of(cell);
    }
  return a;
}

}  // namespace wisynth
