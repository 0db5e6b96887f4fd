#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "wisynth/csi.hpp"
#include "wisynth/errors.hpp"
#include "wisynth/sanitizer.hpp"

namespace wisynth {

// CSIB container, version 1. Little-endian throughout. 13-byte header:
//   0  4  magic "CSIB"
//   4  1  version (= 1)
//   5  1  n_rx
//   6  1  n_tx
//   7  1  n_sub
//   8  4  n_pkt
//  12  1  flags (bit 0: timestamps present)
// then, if flagged, n_pkt u64 millisecond timestamps,
// then n_pkt*n_rx*n_tx*n_sub signed 8-bit (re, im) pairs in
// packet-major, rx-major, tx-major, sub-minor order.
inline constexpr std::size_t kCsibHeaderSize = 13;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct ByteReader {
  const std::uint8_t* p;
  std::size_t n;
  std::size_t pos = 0;

  void need(std::size_t k) const {
    if (pos + k > n) throw TruncatedPayload("csib stream ends early");
  }
  std::uint8_t u8() {
    need(1);
    return p[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
};

inline std::int8_t round_to_i8(double v) {
  const double r = std::nearbyint(v);
  if (r < -128.0 || r > 127.0)
    throw RangeOverflow("CFR component outside signed 8-bit range");
  return static_cast<std::int8_t>(r);
}

}  // namespace detail

inline std::vector<std::uint8_t> write_csib(const CsiSequence& seq) {
  std::vector<std::uint8_t> out;
  out.reserve(kCsibHeaderSize + 8 * seq.timestamps_ms().size() +
              2 * seq.values().size());
  out.insert(out.end(), {'C', 'S', 'I', 'B'});
  out.push_back(1);  // version
  out.push_back(static_cast<std::uint8_t>(seq.n_rx()));
  out.push_back(static_cast<std::uint8_t>(seq.n_tx()));
  out.push_back(static_cast<std::uint8_t>(seq.n_sub()));
  detail::put_u32(out, static_cast<std::uint32_t>(seq.n_pkt()));
  out.push_back(seq.has_timestamps() ? 1 : 0);  // flags
  for (std::uint64_t ts : seq.timestamps_ms()) detail::put_u64(out, ts);
  for (const ComplexCfr& h : seq.values()) {
    out.push_back(static_cast<std::uint8_t>(detail::round_to_i8(h.re)));
    out.push_back(static_cast<std::uint8_t>(detail::round_to_i8(h.im)));
  }
  return out;
}

inline CsiSequence read_csib(const std::uint8_t* bytes, std::size_t size) {
  detail::ByteReader r{bytes, size};
  r.need(4);
  if (!(bytes[0] == 'C' && bytes[1] == 'S' && bytes[2] == 'I' && bytes[3] == 'B'))
    throw BadMagic("not a CSIB stream");
  r.pos = 4;
  const std::uint8_t version = r.u8();
  if (version != 1) throw UnsupportedVersion("unsupported CSIB version");
  const std::size_t n_rx = r.u8();
  const std::size_t n_tx = r.u8();
  const std::size_t n_sub = r.u8();
  const std::size_t n_pkt = r.u32();
  const std::uint8_t flags = r.u8();
  if (n_rx < 1 || n_tx < 1 || n_sub < 1 || n_pkt < 1)
    throw ParseError("CSIB counts must all be >= 1");

  std::vector<std::uint64_t> timestamps;
  if (flags & 1) {
    timestamps.resize(n_pkt);
    for (auto& ts : timestamps) ts = r.u64();
  }
  const std::size_t count = n_pkt * n_rx * n_tx * n_sub;
  r.need(2 * count);
  std::vector<ComplexCfr> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i].re = static_cast<std::int8_t>(bytes[r.pos + 2 * i]);
    values[i].im = static_cast<std::int8_t>(bytes[r.pos + 2 * i + 1]);
  }
  return CsiSequence(n_rx, n_tx, n_sub, n_pkt, std::move(values),
                     std::move(timestamps));
}

inline CsiSequence read_csib(const std::vector<std::uint8_t>& bytes) {
  return read_csib(bytes.data(), bytes.size());
}

inline std::string export_amplitude_csv(const AmplitudeMatrix& a) {
  std::string out;
  for (std::size_t k = 0; k < a.n_sub(); ++k) {
    if (k) out += ',';
    out += 'k';
    out += std::to_string(k);
  }
  out += '\n';
  char buf[48];
  for (std::size_t p = 0; p < a.n_pkt(); ++p) {
    for (std::size_t k = 0; k < a.n_sub(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.6f", a.at(p, k));
      if (k) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline void write_file(const std::string& path,
                       const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path);
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f),
                                   std::istreambuf_iterator<char>());
}

}  // namespace wisynth
