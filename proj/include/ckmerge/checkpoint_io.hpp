#pragma once

/**
 * Binary checkpoint container, version 1.
 *
 * Layout (all integers little-endian):
 *   bytes 0..7   magic "CKPTSOUP"
 *   byte  8      format version (0x01)
 *   bytes 9..12  manifest length N (uint32)
 *   N bytes      UTF-8 JSON manifest:
 *                  {"tensors": {name: {"shape": [...],
 *                                      "offset": <bytes from payload start>,
 *                                      "nbytes": <byte length>}, ...},
 *                   "meta": {key: value, ...}}
 *   rest         raw float32 payloads, little-endian, packed back-to-back
 *                in manifest (= lexicographic name) order
 *
 * Saving is deterministic: equal Checkpoint values serialize to identical
 * bytes. Writes go through a temp file in the same directory followed by a
 * rename.
 */

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ckmerge/checkpoint.hpp"
#include "ckmerge/errors.hpp"

namespace ckmerge {

inline constexpr char kContainerMagic[8] = {'C', 'K', 'P', 'T', 'S', 'O', 'U', 'P'};
inline constexpr std::uint8_t kContainerVersion = 1;

namespace detail {

inline void byteswap_f32_inplace(std::vector<float>& v) {
  for (float& f : v) {
    auto u = std::bit_cast<std::uint32_t>(f);
    u = ((u & 0x000000ffu) << 24) | ((u & 0x0000ff00u) << 8) |
        ((u & 0x00ff0000u) >> 8) | ((u & 0xff000000u) >> 24);
    f = std::bit_cast<float>(u);
  }
}

inline void write_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

}  // namespace detail

struct LoadOptions {
  bool allow_nonfinite = false;
};

// Serializes to the container byte layout. Pure function of the checkpoint.
inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
  ckpt.validate(/*allow_nonfinite=*/true);

  nlohmann::ordered_json manifest;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {  // std::map: lexicographic
    const std::uint64_t nbytes = static_cast<std::uint64_t>(t.data.size()) * 4;
    tensors[name] = {{"shape", t.shape}, {"offset", offset}, {"nbytes", nbytes}};
    offset += nbytes;
  }
  manifest["tensors"] = std::move(tensors);
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  for (const auto& [k, v] : ckpt.meta) meta[k] = v;
  manifest["meta"] = std::move(meta);

  const std::string manifest_str = manifest.dump();

  std::string out;
  out.reserve(13 + manifest_str.size() + offset);
  out.append(kContainerMagic, sizeof(kContainerMagic));
  out.push_back(static_cast<char>(kContainerVersion));
  detail::write_u32_le(out, static_cast<std::uint32_t>(manifest_str.size()));
  out += manifest_str;
  for (const auto& [name, t] : ckpt.tensors) {
    if constexpr (std::endian::native == std::endian::little) {
      out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * 4);
    } else {
      std::vector<float> tmp = t.data;
      detail::byteswap_f32_inplace(tmp);
      out.append(reinterpret_cast<const char*>(tmp.data()), tmp.size() * 4);
    }
  }
  return out;
}

inline Checkpoint parse_checkpoint(const std::string& bytes, const std::string& origin,
                                   const LoadOptions& opts = {}) {
  if (bytes.size() < 13) throw FormatError(origin + ": truncated header");
  if (std::memcmp(bytes.data(), kContainerMagic, sizeof(kContainerMagic)) != 0)
    throw FormatError(origin + ": bad magic bytes");
  const auto version = static_cast<std::uint8_t>(bytes[8]);
  if (version != kContainerVersion)
    throw FormatError(origin + ": unsupported container version " + std::to_string(version));
  std::uint32_t manifest_len = 0;
  for (int i = 0; i < 4; ++i)
    manifest_len |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[9 + i])) << (8 * i);
  if (bytes.size() < 13 + static_cast<std::size_t>(manifest_len))
    throw FormatError(origin + ": truncated manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(13, manifest_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(origin + ": bad manifest: " + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("tensors"))
    throw FormatError(origin + ": manifest missing tensors");

  const std::size_t payload_start = 13 + manifest_len;
  Checkpoint ckpt;
  for (const auto& [name, entry] : manifest["tensors"].items()) {
    Tensor t;
    try {
      t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto nbytes = entry.at("nbytes").get<std::uint64_t>();
      if (nbytes % 4 != 0) throw FormatError(origin + ": tensor '" + name + "' byte length not a multiple of 4");
      if (payload_start + offset + nbytes > bytes.size())
        throw FormatError(origin + ": truncated payload for tensor '" + name + "'");
      t.data.resize(nbytes / 4);
      std::memcpy(t.data.data(), bytes.data() + payload_start + offset, nbytes);
      if constexpr (std::endian::native != std::endian::little)
        detail::byteswap_f32_inplace(t.data);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(origin + ": bad manifest entry for tensor '" + name + "': " + e.what());
    }
    if (static_cast<std::int64_t>(t.data.size()) != t.numel())
      throw FormatError(origin + ": tensor '" + name + "' payload does not match shape");
    ckpt.tensors.emplace(name, std::move(t));
  }
  if (manifest.contains("meta")) {
    for (const auto& [k, v] : manifest["meta"].items())
      ckpt.meta[k] = v.get<std::string>();
  }
  ckpt.validate(opts.allow_nonfinite);
  return ckpt;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path, const LoadOptions& opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path.string());
  return parse_checkpoint(bytes, path.string(), opts);
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ckpt.validate();
  const std::string bytes = serialize_checkpoint(ckpt);

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write failure on " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string());
  }
}

}  // namespace ckmerge
