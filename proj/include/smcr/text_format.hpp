#pragma once

// Line-oriented key=value files and shortest-exact number formatting shared by
// datasets, configs, parameter bundles and reports.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smcr {

/// 17 significant digits; parses back to the identical double.
std::string format_double(double v);
std::string join_doubles(std::span<const double> values, char sep = ',');

/// Throws Parse with `context` in the message.
double parse_double(std::string_view text, const std::string& context);
std::int64_t parse_int(std::string_view text, const std::string& context);
std::vector<double> parse_double_list(std::string_view text, const std::string& context);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

/// Ordered key=value store. `#` starts a comment; blank lines are ignored.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text, const std::string& source_name);
  static KeyValues load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  /// Throws Config naming the key when absent.
  const std::string& require(const std::string& key) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& entries() const { return values_; }
  /// Line number of the key's definition (0 if set programmatically).
  int line_of(const std::string& key) const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace smcr
