#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "windownet/keyvalue.hpp"

namespace windownet {

struct NamedArray {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;

  friend bool operator==(const NamedArray&, const NamedArray&) = default;
};

/// On-disk layout, little-endian throughout:
///   "WNCK" | u32 version | u32 config length | config (UTF-8 key=value lines)
///   | u32 array count | per array: u32 name length, name, u32 rank, u32 dims[rank],
///   f64 payload
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t version = kVersion;
  KeyValues config;
  std::vector<NamedArray> arrays;

  const NamedArray& array(std::string_view name) const;
  bool has_array(std::string_view name) const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string serialize_checkpoint(const Checkpoint& ck);
Checkpoint deserialize_checkpoint(std::string_view bytes, const std::string& source = "checkpoint");

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace windownet
