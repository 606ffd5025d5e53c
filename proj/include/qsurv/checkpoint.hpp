// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Parameter checkpoints: a JSON document listing each parameter's name, shape
/// and a base64 payload of its values as little-endian IEEE-754 doubles.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsurv/autodiff.hpp"
#include "qsurv/errors.hpp"

namespace qsurv {

inline constexpr int kCheckpointSchemaVersion = 1;

struct NamedParameter {
  std::string name;
  ad::Tensor tensor;
};

namespace base64 {

inline constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  if (const std::size_t rest = bytes.size() - i; rest > 0) {
    std::uint32_t n = bytes[i] << 16;
    if (rest == 2) n |= bytes[i + 1] << 8;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += rest == 2 ? kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

inline std::vector<std::uint8_t> decode(std::string_view text) {
  if (text.size() % 4 != 0) throw IngestionError("base64 payload length is not a multiple of 4");
  auto value_of = [](char c) -> int {
    const auto pos = kAlphabet.find(c);
    if (pos == std::string_view::npos) throw IngestionError(std::string("invalid base64 character '") + c + "'");
    return static_cast<int>(pos);
  };
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const int a = value_of(text[i]), b = value_of(text[i + 1]);
    const bool pad2 = text[i + 2] == '=', pad3 = text[i + 3] == '=';
    const int c = pad2 ? 0 : value_of(text[i + 2]);
    const int d = pad3 ? 0 : value_of(text[i + 3]);
    const std::uint32_t n = (a << 18) | (b << 12) | (c << 6) | d;
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    if (!pad2) out.push_back(static_cast<std::uint8_t>((n >> 8) & 0xFF));
    if (!pad3) out.push_back(static_cast<std::uint8_t>(n & 0xFF));
  }
  return out;
}

}  // namespace base64

inline std::string encode_doubles(std::span<const double> values) {
  std::vector<std::uint8_t> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return base64::encode(bytes);
}

inline std::vector<double> decode_doubles(std::string_view text) {
  const auto bytes = base64::decode(text);
  if (bytes.size() % 8 != 0) throw IngestionError("parameter payload is not a whole number of doubles");
  std::vector<double> values(bytes.size() / 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

inline nlohmann::json checkpoint_to_json(const std::vector<NamedParameter>& params) {
  nlohmann::json doc;
  doc["schema_version"] = kCheckpointSchemaVersion;
  doc["encoding"] = "float64-le-base64";
  auto& list = doc["parameters"] = nlohmann::json::array();
  for (const auto& p : params) {
    list.push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"data", encode_doubles(p.tensor.values())}});
  }
  return doc;
}

/// Copy checkpoint values into existing parameters, matching by name and shape.
inline void load_checkpoint(const nlohmann::json& doc, std::vector<NamedParameter>& params) {
  if (!doc.contains("parameters")) throw IngestionError("checkpoint has no 'parameters' list");
  const auto& list = doc.at("parameters");
  for (auto& p : params) {
    const auto it = std::find_if(list.begin(), list.end(),
                                 [&](const nlohmann::json& e) { return e.at("name") == p.name; });
    if (it == list.end()) throw IngestionError("checkpoint is missing parameter '" + p.name + "'");
    const auto shape = it->at("shape").get<ad::Shape>();
    if (shape != p.tensor.shape()) {
      throw ShapeError("checkpoint parameter '" + p.name + "' has shape " + ad::shape_str(shape) +
                       ", model expects " + ad::shape_str(p.tensor.shape()));
    }
    const auto values = decode_doubles(it->at("data").get<std::string>());
    if (values.size() != p.tensor.size()) throw IngestionError("payload size mismatch for '" + p.name + "'");
    std::copy(values.begin(), values.end(), p.tensor.values().begin());
  }
}

}  // namespace qsurv
