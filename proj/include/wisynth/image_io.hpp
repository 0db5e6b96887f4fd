#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "wisynth/errors.hpp"

namespace wisynth {

// A frame stack in [-1, 1]: frames[t][c*H*W + y*W + x], c in {0} or {0,1,2}.
struct VideoClip {
  enum class Kind { kSilhouette, kSkeleton };

  Kind kind = Kind::kSilhouette;
  std::size_t frames_count = 0;  // T
  std::size_t channels = 1;      // 1 silhouette, 3 skeleton
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;  // T*C*H*W

  double& at(std::size_t t, std::size_t c, std::size_t y, std::size_t x) {
    return data[((t * channels + c) * height + y) * width + x];
  }
  double at(std::size_t t, std::size_t c, std::size_t y, std::size_t x) const {
    return data[((t * channels + c) * height + y) * width + x];
  }
  std::size_t frame_size() const { return channels * height * width; }
};

inline std::uint8_t to_byte(double v) {
  const double clamped = v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<std::uint8_t>(std::lround((clamped + 1.0) * 0.5 * 255.0));
}

inline double from_byte(std::uint8_t b) { return b / 255.0 * 2.0 - 1.0; }

// Binary PGM (P5) / PPM (P6), 8-bit, one frame per file.
inline std::vector<std::uint8_t> encode_pnm(const VideoClip& clip,
                                            std::size_t frame) {
  const bool color = clip.channels == 3;
  char header[64];
  const int header_len =
      std::snprintf(header, sizeof(header), "%s\n%zu %zu\n255\n",
                    color ? "P6" : "P5", clip.width, clip.height);
  std::vector<std::uint8_t> out(header, header + header_len);
  for (std::size_t y = 0; y < clip.height; ++y)
    for (std::size_t x = 0; x < clip.width; ++x)
      for (std::size_t c = 0; c < clip.channels; ++c)
        out.push_back(to_byte(clip.at(frame, c, y, x)));
  return out;
}

namespace detail {

inline std::size_t pnm_token(const std::vector<std::uint8_t>& b,
                             std::size_t pos, std::string& tok) {
  while (pos < b.size() &&
         (b[pos] == ' ' || b[pos] == '\t' || b[pos] == '\n' || b[pos] == '\r'))
    ++pos;
  tok.clear();
  while (pos < b.size() && !(b[pos] == ' ' || b[pos] == '\t' ||
                             b[pos] == '\n' || b[pos] == '\r'))
    tok += static_cast<char>(b[pos++]);
  return pos;
}

}  // namespace detail

// Decodes one PNM file into a single-frame clip.
inline VideoClip decode_pnm(const std::vector<std::uint8_t>& bytes) {
  std::string tok;
  std::size_t pos = detail::pnm_token(bytes, 0, tok);
  bool color = false;
  if (tok == "P6")
    color = true;
  else if (tok != "P5")
    throw ParseError("not a binary PGM/PPM file");
  std::string w_tok, h_tok, max_tok;
  pos = detail::pnm_token(bytes, pos, w_tok);
  pos = detail::pnm_token(bytes, pos, h_tok);
  pos = detail::pnm_token(bytes, pos, max_tok);
  if (max_tok != "255") throw ParseError("only 8-bit PNM supported");
  const std::size_t w = std::stoul(w_tok);
  const std::size_t h = std::stoul(h_tok);
  ++pos;  // single whitespace after maxval
  const std::size_t channels = color ? 3 : 1;
  if (pos + w * h * channels > bytes.size())
    throw ParseError("PNM payload truncated");

  VideoClip clip;
  clip.kind = color ? VideoClip::Kind::kSkeleton : VideoClip::Kind::kSilhouette;
  clip.frames_count = 1;
  clip.channels = channels;
  clip.height = h;
  clip.width = w;
  clip.data.resize(channels * h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < channels; ++c)
        clip.at(0, c, y, x) = from_byte(bytes[pos + (y * w + x) * channels + c]);
  return clip;
}

// Concatenates single-frame clips into one clip; shapes must agree.
inline VideoClip stack_frames(const std::vector<VideoClip>& frames) {
  if (frames.empty()) throw ShapeError("no frames to stack");
  VideoClip out = frames[0];
  out.frames_count = frames.size();
  out.data.reserve(frames.size() * frames[0].frame_size());
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const VideoClip& f = frames[i];
    if (f.channels != out.channels || f.height != out.height ||
        f.width != out.width || f.frames_count != 1)
      throw ShapeError("inconsistent frame shapes");
    out.data.insert(out.data.end(), f.data.begin(), f.data.end());
  }
  return out;
}

}  // namespace wisynth
