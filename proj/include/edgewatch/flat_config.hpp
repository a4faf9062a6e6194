#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edgewatch {

/// Line-oriented `section.key = value` text with `#` comments. Keys are
/// unique; values run to end of line with surrounding whitespace trimmed.
class FlatConfig {
 public:
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
  };

  static FlatConfig parse(std::istream &in);
  static FlatConfig parse(std::string_view text);
  /// Throws IoError when the file cannot be opened.
  static FlatConfig load(const std::filesystem::path &path);

  const std::vector<Entry> &entries() const noexcept { return entries_; }
  const Entry *find(std::string_view key) const;
  bool contains(std::string_view key) const { return find(key) != nullptr; }

 private:
  std::vector<Entry> entries_;
};

std::string_view trim(std::string_view text) noexcept;
std::vector<std::string> split(std::string_view text, char sep);

// Strict scalar parsing; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);
std::optional<bool> parse_bool(std::string_view text);

}  // namespace edgewatch
