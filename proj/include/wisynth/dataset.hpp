#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wisynth/csi_io.hpp"
#include "wisynth/errors.hpp"
#include "wisynth/image_io.hpp"
#include "wisynth/synthetic.hpp"

namespace wisynth {

// On-disk layout: DIR/sample_%04d/ holding clip_%03d.pgm (P5) or .ppm (P6)
// per frame plus csi.csib.

namespace detail {

inline std::string sample_dir_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%04zu", i);
  return buf;
}

inline std::string frame_file_name(std::size_t t, bool color) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "clip_%03zu.%s", t, color ? "ppm" : "pgm");
  return buf;
}

}  // namespace detail

inline void write_dataset(const std::string& dir,
                          const std::vector<SamplePair>& samples) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset directory: " + dir);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SamplePair& s = samples[i];
    const std::string sdir = dir + "/" + detail::sample_dir_name(i);
    fs::create_directories(sdir, ec);
    if (ec) throw IoError("cannot create sample directory: " + sdir);
    const bool color = s.clip.channels == 3;
    for (std::size_t t = 0; t < s.clip.frames_count; ++t)
      write_file(sdir + "/" + detail::frame_file_name(t, color),
                 encode_pnm(s.clip, t));
    write_file(sdir + "/csi.csib", write_csib(s.csi));
  }
}

inline std::vector<std::string> list_sample_dirs(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind("sample_", 0) == 0)
      out.push_back(entry.path().string());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw EmptyDataset();
  return out;
}

// Frame files of one sample directory, in frame order.
inline std::vector<std::string> list_frame_files(const std::string& sdir) {
  namespace fs = std::filesystem;
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(sdir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("clip_", 0) == 0 &&
        (name.ends_with(".pgm") || name.ends_with(".ppm")))
      out.push_back(entry.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline CsiSequence load_sample_csi(const std::string& sdir) {
  return read_csib(read_file(sdir + "/csi.csib"));
}

inline VideoClip load_sample_clip(const std::string& sdir) {
  const std::vector<std::string> files = list_frame_files(sdir);
  if (files.empty()) throw IoError("no frame files in " + sdir);
  std::vector<VideoClip> frames;
  frames.reserve(files.size());
  for (const std::string& f : files) frames.push_back(decode_pnm(read_file(f)));
  return stack_frames(frames);
}

inline SamplePair load_sample(const std::string& sdir) {
  return {load_sample_clip(sdir), load_sample_csi(sdir)};
}

inline std::vector<SamplePair> load_dataset(const std::string& dir) {
  std::vector<SamplePair> out;
  for (const std::string& sdir : list_sample_dirs(dir))
    out.push_back(load_sample(sdir));
  return out;
}

}  // namespace wisynth
