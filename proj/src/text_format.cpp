#include "smcr/text_format.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "smcr/error.hpp"

namespace smcr {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string join_doubles(std::span<const double> values, char sep) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(sep);
    out += format_double(values[i]);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

double parse_double(std::string_view text, const std::string& context) {
  const auto t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t.front() == '+') ++first;
  auto res = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    fail(ErrorKind::Parse, context + ": cannot parse '" + std::string(t) + "' as a real number");
  return v;
}

std::int64_t parse_int(std::string_view text, const std::string& context) {
  const auto t = trim(text);
  std::int64_t v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    fail(ErrorKind::Parse, context + ": cannot parse '" + std::string(t) + "' as an integer");
  return v;
}

std::vector<double> parse_double_list(std::string_view text, const std::string& context) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (auto part : split(text, ',')) out.push_back(parse_double(part, context));
  return out;
}

KeyValues KeyValues::parse(std::string_view text, const std::string& source_name) {
  KeyValues kv;
  int line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    auto line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::Parse, source_name + " line " + std::to_string(line_no) + ": expected key=value");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty())
      fail(ErrorKind::Parse, source_name + " line " + std::to_string(line_no) + ": empty key");
    kv.values_[key] = std::string(trim(line.substr(eq + 1)));
    kv.lines_[key] = line_no;
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  return parse(read_text_file(path), path.string());
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

const std::string& KeyValues::require(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorKind::Config, "missing required key '" + key + "'");
  return it->second;
}

int KeyValues::line_of(const std::string& key) const {
  auto it = lines_.find(key);
  return it == lines_.end() ? 0 : it->second;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

}  // namespace smcr
