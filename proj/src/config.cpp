#include "lipkit/config.hpp"

#include <algorithm>
#include <charconv>

#include "lipkit/error.hpp"
#include "lipkit/io.hpp"

namespace lipkit {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

// Strips a trailing comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

double parse_double(const std::string& text, const std::string& where) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) fail(ErrorKind::Parse, where + ": '" + text + "' is not a number");
  return value;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::string section;
  const auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = origin + ":" + std::to_string(i + 1);
    const std::string line = trim(strip_comment(lines[i]));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::Parse, where + ": unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Parse, where + ": expected 'key = value'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty() || value.empty()) fail(ErrorKind::Parse, where + ": empty key or value");
    if (!section.empty()) key = section + "." + key;
    if (cfg.values_.count(key)) fail(ErrorKind::Parse, where + ": duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  return parse(io::read_file(path), path.string());
}

std::optional<std::string> KeyValueConfig::lookup(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto v = lookup(key);
  return v ? parse_double(*v, origin_ + ": " + key) : fallback;
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  auto v = lookup(key);
  if (!v) return fallback;
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), value);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    fail(ErrorKind::Parse, origin_ + ": " + key + ": '" + *v + "' is not an integer");
  }
  return value;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto v = lookup(key);
  if (!v) return fallback;
  if (*v == "true") return true;
  if (*v == "false") return false;
  fail(ErrorKind::Parse, origin_ + ": " + key + ": expected true or false");
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto v = lookup(key);
  if (!v) return fallback;
  if (v->size() >= 2 && v->front() == '"' && v->back() == '"') return v->substr(1, v->size() - 2);
  return *v;
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key,
                                                const std::vector<double>& fallback) const {
  auto v = lookup(key);
  if (!v) return fallback;
  if (v->size() < 2 || v->front() != '[' || v->back() != ']') {
    return {parse_double(*v, origin_ + ": " + key)};
  }
  std::vector<double> out;
  std::string_view body(v->data() + 1, v->size() - 2);
  while (!body.empty()) {
    const auto comma = body.find(',');
    const std::string item = trim(body.substr(0, comma));
    if (!item.empty()) out.push_back(parse_double(item, origin_ + ": " + key));
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return out;
}

void KeyValueConfig::require_known(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      fail(ErrorKind::Parse, origin_ + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace lipkit
