#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "wisynth/errors.hpp"

namespace wisynth {

// One complex CFR value H for a (rx, tx, subcarrier) combination.
struct ComplexCfr {
  double re = 0.0;
  double im = 0.0;
};

inline double cfr_amplitude(const ComplexCfr& h) {
  return std::hypot(h.re, h.im);
}

// Phase in (-pi, pi]; undefined at the origin.
inline double cfr_phase(const ComplexCfr& h) {
  if (h.re == 0.0 && h.im == 0.0) throw ZeroCfr();
  return std::atan2(h.im, h.re);
}

// Ordered packets of CFR values over (rx, tx, subcarrier).
// Values are stored packet-major, then rx, tx, subcarrier.
class CsiSequence {
 public:
  CsiSequence(std::size_t n_rx, std::size_t n_tx, std::size_t n_sub,
              std::size_t n_pkt, std::vector<ComplexCfr> values,
              std::vector<std::uint64_t> timestamps_ms = {})
      : n_rx_(n_rx),
        n_tx_(n_tx),
        n_sub_(n_sub),
        n_pkt_(n_pkt),
        values_(std::move(values)),
        timestamps_ms_(std::move(timestamps_ms)) {
    if (n_rx_ < 1 || n_tx_ < 1 || n_sub_ < 1 || n_pkt_ < 1)
      throw ShapeError("CsiSequence dimensions must all be >= 1");
    if (values_.size() != n_pkt_ * n_rx_ * n_tx_ * n_sub_)
      throw ShapeError("CsiSequence value count does not match shape");
    if (!timestamps_ms_.empty()) {
      if (timestamps_ms_.size() != n_pkt_)
        throw ShapeError("one timestamp per packet required");
      for (std::size_t p = 1; p < n_pkt_; ++p)
        if (timestamps_ms_[p] < timestamps_ms_[p - 1])
          throw ShapeError("timestamps must be monotone non-decreasing");
    }
  }

  std::size_t n_rx() const { return n_rx_; }
  std::size_t n_tx() const { return n_tx_; }
  std::size_t n_sub() const { return n_sub_; }
  std::size_t n_pkt() const { return n_pkt_; }
  bool has_timestamps() const { return !timestamps_ms_.empty(); }
  const std::vector<std::uint64_t>& timestamps_ms() const {
    return timestamps_ms_;
  }
  const std::vector<ComplexCfr>& values() const { return values_; }

  const ComplexCfr& at(std::size_t pkt, std::size_t rx, std::size_t tx,
                       std::size_t sub) const {
    return values_[((pkt * n_rx_ + rx) * n_tx_ + tx) * n_sub_ + sub];
  }

  bool operator==(const CsiSequence& o) const {
    if (n_rx_ != o.n_rx_ || n_tx_ != o.n_tx_ || n_sub_ != o.n_sub_ ||
        n_pkt_ != o.n_pkt_ || timestamps_ms_ != o.timestamps_ms_)
      return false;
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (values_[i].re != o.values_[i].re || values_[i].im != o.values_[i].im)
        return false;
    return true;
  }

 private:
  std::size_t n_rx_, n_tx_, n_sub_, n_pkt_;
  std::vector<ComplexCfr> values_;
  std::vector<std::uint64_t> timestamps_ms_;
};

// Nonnegative |H| values with shape (rx, tx, sub, pkt); the packet axis is
// innermost so per-series filtering walks contiguous memory.
class AmplitudeTensor {
 public:
  AmplitudeTensor(std::size_t n_rx, std::size_t n_tx, std::size_t n_sub,
                  std::size_t n_pkt)
      : n_rx_(n_rx),
        n_tx_(n_tx),
        n_sub_(n_sub),
        n_pkt_(n_pkt),
        values_(n_rx * n_tx * n_sub * n_pkt, 0.0) {}

  std::size_t n_rx() const { return n_rx_; }
  std::size_t n_tx() const { return n_tx_; }
  std::size_t n_sub() const { return n_sub_; }
  std::size_t n_pkt() const { return n_pkt_; }

  double& at(std::size_t rx, std::size_t tx, std::size_t sub,
             std::size_t pkt) {
    return values_[((rx * n_tx_ + tx) * n_sub_ + sub) * n_pkt_ + pkt];
  }
  double at(std::size_t rx, std::size_t tx, std::size_t sub,
            std::size_t pkt) const {
    return values_[((rx * n_tx_ + tx) * n_sub_ + sub) * n_pkt_ + pkt];
  }

  // Contiguous packet series for one (rx, tx, sub) combination.
  double* series(std::size_t rx, std::size_t tx, std::size_t sub) {
    return &values_[((rx * n_tx_ + tx) * n_sub_ + sub) * n_pkt_];
  }
  const double* series(std::size_t rx, std::size_t tx, std::size_t sub) const {
    return &values_[((rx * n_tx_ + tx) * n_sub_ + sub) * n_pkt_];
  }

  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t n_rx_, n_tx_, n_sub_, n_pkt_;
  std::vector<double> values_;
};

inline AmplitudeTensor extract_amplitudes(const CsiSequence& seq) {
  AmplitudeTensor out(seq.n_rx(), seq.n_tx(), seq.n_sub(), seq.n_pkt());
  for (std::size_t p = 0; p < seq.n_pkt(); ++p)
    for (std::size_t r = 0; r < seq.n_rx(); ++r)
      for (std::size_t t = 0; t < seq.n_tx(); ++t)
        for (std::size_t s = 0; s < seq.n_sub(); ++s)
          out.at(r, t, s, p) = cfr_amplitude(seq.at(p, r, t, s));
  return out;
}

}  // namespace wisynth
