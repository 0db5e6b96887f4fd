#pragma once

#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "wisynth/errors.hpp"
#include "wisynth/tensor.hpp"

namespace wisynth {

// W8TS parameter container, little-endian:
//   4   magic "W8TS"
//   4   u32 block count
// per block:
//   4   u32 name length, then UTF-8 name bytes
//   4   u32 rank, then rank u64 dims
//   8*n IEEE-754 doubles
//
// Blocks are written in map order (sorted by name) so equal contents give
// byte-identical files.
using BlockMap = std::map<std::string, Tensor>;

inline std::vector<std::uint8_t> write_checkpoint(const BlockMap& blocks) {
  std::vector<std::uint8_t> out = {'W', '8', 'T', 'S'};
  auto put_u32 = [&out](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto put_u64 = [&out](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put_u32(static_cast<std::uint32_t>(blocks.size()));
  for (const auto& [name, tensor] : blocks) {
    put_u32(static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(static_cast<std::uint32_t>(tensor.shape().size()));
    for (std::size_t dim : tensor.shape()) put_u64(dim);
    for (double v : tensor.data()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      put_u64(bits);
    }
  }
  return out;
}

inline BlockMap read_checkpoint(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto need = [&](std::size_t k) {
    if (pos + k > bytes.size())
      throw TruncatedPayload("checkpoint stream ends early");
  };
  auto get_u32 = [&]() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  };
  auto get_u64 = [&]() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    pos += 8;
    return v;
  };

  need(4);
  if (std::memcmp(bytes.data(), "W8TS", 4) != 0)
    throw BadMagic("not a W8TS checkpoint");
  pos = 4;
  const std::uint32_t count = get_u32();
  BlockMap blocks;
  for (std::uint32_t b = 0; b < count; ++b) {
    const std::uint32_t name_len = get_u32();
    need(name_len);
    std::string name(bytes.begin() + pos, bytes.begin() + pos + name_len);
    pos += name_len;
    const std::uint32_t rank = get_u32();
    Shape shape(rank);
    for (auto& dim : shape) dim = get_u64();
    const std::size_t n = shape_size(shape);
    std::vector<double> data(n);
    for (auto& v : data) {
      const std::uint64_t bits = get_u64();
      std::memcpy(&v, &bits, 8);
    }
    blocks.emplace(std::move(name), Tensor::from_data(std::move(shape), std::move(data)));
  }
  return blocks;
}

// Plain-text payloads (run configs, counters) ride along as byte blocks.
inline Tensor text_block(const std::string& text) {
  std::vector<double> data(text.size());
  for (std::size_t i = 0; i < text.size(); ++i)
    data[i] = static_cast<unsigned char>(text[i]);
  return Tensor::from_data({text.size()}, std::move(data));
}

inline std::string text_from_block(const Tensor& t) {
  std::string s(t.size(), '\0');
  for (std::size_t i = 0; i < t.size(); ++i)
    s[i] = static_cast<char>(static_cast<unsigned char>(t.data()[i]));
  return s;
}

}  // namespace wisynth
