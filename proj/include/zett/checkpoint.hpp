// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

// Checkpoint container:
//   "ZETTCKPT" | u32 version | u32 header byte length | JSON header |
//   tensors as little-endian float32, row-major, in manifest order.
// The header carries the model config, the tensor manifest (name, shape),
// the vocabulary hash, the training-step counter and the seed.

#ifndef ZETT_CHECKPOINT_HPP_
#define ZETT_CHECKPOINT_HPP_

#include <cstdint>
#include <cstring>
#include <string>
#include <utility>

#include "json.hpp"
#include "zett/seq2seq.hpp"

namespace zett {

inline constexpr std::string_view kCheckpointMagic = "ZETTCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::string vocab_hash;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
};

namespace detail {
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
inline std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + static_cast<std::size_t>(i)]))
         << (8 * i);
  return v;
}
}  // namespace detail

template <typename T>
std::string serialize_checkpoint(const Seq2SeqModel<T>& model, const CheckpointMeta& meta) {
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& t : model.tensors())
    manifest.push_back({{"name", t.name}, {"shape", {t.rows, t.cols}}});
  const nlohmann::json header = {{"format_version", kCheckpointVersion},
                                 {"config", model.config().to_json()},
                                 {"tensors", manifest},
                                 {"vocab_hash", meta.vocab_hash},
                                 {"step", meta.step},
                                 {"seed", meta.seed}};
  const std::string h = header.dump();
  std::string out(kCheckpointMagic);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(h.size()));
  out += h;
  const auto params = model.params();
  out.reserve(out.size() + params.size() * 4);
  for (T v : params) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    detail::put_u32(out, bits);
  }
  return out;
}

template <typename T>
std::pair<Seq2SeqModel<T>, CheckpointMeta> parse_checkpoint(std::string_view bytes) {
  const std::size_t fixed = kCheckpointMagic.size() + 8;
  if (bytes.size() < fixed || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic)
    throw DataError("not a checkpoint (bad magic)");
  const std::uint32_t version = detail::get_u32(bytes, kCheckpointMagic.size());
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t hlen = detail::get_u32(bytes, kCheckpointMagic.size() + 4);
  if (bytes.size() < fixed + hlen) throw DataError("truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(fixed, hlen));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("corrupt checkpoint header: ") + e.what());
  }
  Seq2SeqModel<T> model(ModelConfig::from_json(header.at("config")));
  const auto& manifest = header.at("tensors");
  if (manifest.size() != model.tensors().size())
    throw DataError("checkpoint manifest does not match the model layout");
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& t = model.tensors()[i];
    const auto shape = manifest[i].at("shape").get<std::vector<int>>();
    if (manifest[i].at("name").get<std::string>() != t.name || shape.size() != 2 ||
        shape[0] != t.rows || shape[1] != t.cols)
      throw DataError("checkpoint tensor mismatch at " + t.name);
  }
  auto params = model.params();
  if (bytes.size() != fixed + hlen + params.size() * 4)
    throw DataError("checkpoint payload has the wrong size");
  std::size_t at = fixed + hlen;
  for (auto& p : params) {
    const std::uint32_t bits = detail::get_u32(bytes, at);
    float f;
    std::memcpy(&f, &bits, 4);
    p = static_cast<T>(f);
    at += 4;
  }
  CheckpointMeta meta;
  meta.vocab_hash = header.value("vocab_hash", std::string{});
  meta.step = header.value("step", std::uint64_t{0});
  meta.seed = header.value("seed", std::uint64_t{0});
  return {std::move(model), std::move(meta)};
}

template <typename T>
void save_checkpoint(const std::string& path, const Seq2SeqModel<T>& model,
                     const CheckpointMeta& meta) {
  write_file(path, serialize_checkpoint(model, meta));
}

template <typename T = float>
std::pair<Seq2SeqModel<T>, CheckpointMeta> load_checkpoint(const std::string& path) {
  return parse_checkpoint<T>(read_file(path));
}

}  // namespace zett

#endif  // ZETT_CHECKPOINT_HPP_
