#pragma once

// Versioned model artifact.
//
//   bytes 0..7    magic "CLSTMART"
//   bytes 8..11   format version, uint32 little-endian
//   bytes 12..15  reserved, zero
//   bytes 16..23  header length N, uint64 little-endian
//   next N bytes  JSON header (architecture, target scale, window, tensor manifest)
//   remainder     payload: IEEE-754 float64 little-endian, tensors in manifest
//                 order, each stored row-major
//
// Each manifest entry is {"name", "shape": [rows, cols], "offset"} with offset
// in bytes from the start of the payload.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cyclelife/dataset.hpp"
#include "cyclelife/error.hpp"
#include "cyclelife/features.hpp"
#include "cyclelife/nn.hpp"

namespace cyclelife {

inline constexpr std::string_view kArtifactMagic = "CLSTMART";
inline constexpr std::uint32_t kArtifactVersion = 1;

struct ModelArtifact {
  Network net;
  Scaler scaler;
  double target_scale = 1000.0;
  int start_cycle = 11;
  int terminal_cycle = 80;
  int baseline_cycle = 10;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

inline std::uint64_t get_le(std::string_view bytes, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int b = 0; b < width; ++b)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + static_cast<std::size_t>(b)])) << (8 * b);
  return v;
}

template <typename Artifact, typename Fn>
void for_each_artifact_tensor(Artifact& a, Fn&& fn) {
  for_each_tensor(a.net, fn);
  fn("scaler.means", a.scaler.means);
  fn("scaler.stds", a.scaler.stds);
}

inline nlohmann::json architecture_to_json(const Architecture& a) {
  return {{"input_size", a.input_size},
          {"hidden1", a.hidden1},
          {"hidden2", a.hidden2},
          {"dense_units", a.dense_units},
          {"dropout_rate", a.dropout_rate},
          {"dropout_after_lstm1", a.dropout_after_lstm1},
          {"dropout_after_lstm2", a.dropout_after_lstm2},
          {"dropout_after_dense1", a.dropout_after_dense1}};
}

inline Architecture architecture_from_json(const nlohmann::json& j) {
  Architecture a;
  a.input_size = require_field<int>(j, "input_size", "architecture");
  a.hidden1 = require_field<int>(j, "hidden1", "architecture");
  a.hidden2 = require_field<int>(j, "hidden2", "architecture");
  a.dense_units = require_field<int>(j, "dense_units", "architecture");
  a.dropout_rate = require_field<double>(j, "dropout_rate", "architecture");
  a.dropout_after_lstm1 = require_field<bool>(j, "dropout_after_lstm1", "architecture");
  a.dropout_after_lstm2 = require_field<bool>(j, "dropout_after_lstm2", "architecture");
  a.dropout_after_dense1 = require_field<bool>(j, "dropout_after_dense1", "architecture");
  return a;
}

}  // namespace detail

inline std::string serialize_model(const ModelArtifact& artifact) {
  nlohmann::json tensors = nlohmann::json::array();
  std::string payload;
  detail::for_each_artifact_tensor(artifact, [&](std::string_view name, const auto& t) {
    tensors.push_back({{"name", name}, {"shape", {t.rows(), t.cols()}}, {"offset", payload.size()}});
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) detail::put_u64(payload, std::bit_cast<std::uint64_t>(t(r, c)));
  });
  const nlohmann::json header{
      {"format", "cyclelife-lstm"},
      {"version", kArtifactVersion},
      {"architecture", detail::architecture_to_json(artifact.net.arch)},
      {"target_scale", artifact.target_scale},
      {"window",
       {{"start_cycle", artifact.start_cycle},
        {"terminal_cycle", artifact.terminal_cycle},
        {"baseline_cycle", artifact.baseline_cycle}}},
      {"tensors", std::move(tensors)},
      {"payload_bytes", payload.size()},
  };
  const std::string head = header.dump();
  std::string out(kArtifactMagic);
  detail::put_u32(out, kArtifactVersion);
  detail::put_u32(out, 0);
  detail::put_u64(out, head.size());
  out += head;
  out += payload;
  return out;
}

inline ModelArtifact deserialize_model(std::string_view bytes) {
  constexpr std::size_t kPrefix = 24;
  if (bytes.size() < kPrefix || bytes.substr(0, 8) != kArtifactMagic)
    fail(ErrorCode::SchemaViolation, "not a model artifact (bad magic)");
  const auto version = static_cast<std::uint32_t>(detail::get_le(bytes, 8, 4));
  if (version != kArtifactVersion)
    fail(ErrorCode::ArtifactVersionMismatch,
         "artifact version " + std::to_string(version) + ", expected " + std::to_string(kArtifactVersion));
  const std::uint64_t head_len = detail::get_le(bytes, 16, 8);
  if (head_len > bytes.size() - kPrefix) fail(ErrorCode::SchemaViolation, "truncated artifact header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kPrefix, head_len));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::SchemaViolation, std::string("malformed artifact header: ") + e.what());
  }
  const std::string_view payload = bytes.substr(kPrefix + head_len);
  if (detail::require_field<std::uint64_t>(header, "payload_bytes", "artifact") != payload.size())
    fail(ErrorCode::SchemaViolation, "artifact payload size does not match its header");

  ModelArtifact a;
  a.net.arch = detail::architecture_from_json(detail::require_field<nlohmann::json>(header, "architecture", "artifact"));
  validate_architecture(a.net.arch);
  a.target_scale = detail::require_field<double>(header, "target_scale", "artifact");
  const auto window = detail::require_field<nlohmann::json>(header, "window", "artifact");
  a.start_cycle = detail::require_field<int>(window, "start_cycle", "window");
  a.terminal_cycle = detail::require_field<int>(window, "terminal_cycle", "window");
  a.baseline_cycle = detail::require_field<int>(window, "baseline_cycle", "window");

  // Shapes come from a freshly initialized network of the declared architecture.
  a.net = init_network(a.net.arch, 0);
  a.scaler = Scaler::identity(a.net.arch.input_size);
  const auto manifest = detail::require_field<nlohmann::json>(header, "tensors", "artifact");
  std::size_t index = 0;
  detail::for_each_artifact_tensor(a, [&](std::string_view name, auto& t) {
    if (index >= manifest.size()) fail(ErrorCode::SchemaViolation, "artifact manifest is missing tensors");
    const auto& entry = manifest[index++];
    const auto shape = detail::require_field<std::vector<Eigen::Index>>(entry, "shape", "tensor");
    const auto offset = detail::require_field<std::size_t>(entry, "offset", "tensor");
    if (detail::require_field<std::string>(entry, "name", "tensor") != name || shape.size() != 2 ||
        shape[0] != t.rows() || shape[1] != t.cols())
      fail(ErrorCode::SchemaViolation, "tensor '" + std::string(name) + "' does not match the architecture");
    const std::size_t bytes_needed = static_cast<std::size_t>(t.size()) * 8;
    if (offset > payload.size() || bytes_needed > payload.size() - offset)
      fail(ErrorCode::SchemaViolation, "tensor '" + std::string(name) + "' overruns the payload");
    std::size_t pos = offset;
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c, pos += 8)
        t(r, c) = std::bit_cast<double>(detail::get_le(payload, pos, 8));
  });
  if (index != manifest.size()) fail(ErrorCode::SchemaViolation, "artifact manifest has extra tensors");
  return a;
}

inline void save_model(const ModelArtifact& artifact, const std::filesystem::path& path) {
  detail::write_text_file(path, serialize_model(artifact));
}

inline ModelArtifact load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingFile, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace cyclelife
