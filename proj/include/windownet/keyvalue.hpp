#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace windownet {

/// Ordered key=value text, the format shared by checkpoint headers, dataset
/// manifests and experiment spec files.
///
/// Parsing accepts '#' comments, blank lines and INI-style `[section]` headers;
/// keys below a header are stored as `section.key`.
class KeyValues {
 public:
  using Entry = std::pair<std::string, std::string>;

  static KeyValues parse(std::string_view text);

  /// Overwrites in place if present, otherwise appends.
  void set(const std::string& key, std::string value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, bool value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }

  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  std::string get_string(std::string_view key, std::string fallback) const;
  double get_double(std::string_view key, double fallback) const;
  long long get_int(std::string_view key, long long fallback) const;
  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;

  /// Throws ParameterError naming the key when absent.
  std::string require(std::string_view key) const;

  const std::vector<Entry>& entries() const { return entries_; }
  std::string to_text() const;

  friend bool operator==(const KeyValues&, const KeyValues&) = default;

 private:
  std::vector<Entry> entries_;
};

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);
double parse_double(std::string_view text);

/// 64-bit FNV-1a, used for config and dataset fingerprints.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace windownet
