#include "odenet/config.hpp"

#include "odenet/errors.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>

namespace odenet {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config '" + path + "'");
  Config c = parse(in, path);
  c.base_dir_ = std::filesystem::path(path).parent_path().string();
  return c;
}

Config Config::parse(std::istream& in, const std::string& source) {
  Config c;
  c.source_ = source;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find_first_of("#;"); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string at = source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw FormatError(at + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw FormatError(at + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(at + ": expected `key = value`");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw FormatError(at + ": empty key");
    if (section.empty()) throw FormatError(at + ": key '" + key + "' outside any [section]");
    const std::string full = section + "." + key;
    if (c.entries_.count(full) != 0) throw FormatError(at + ": duplicate key '" + key + "'");
    c.entries_[full] = {value, line_no};
  }
  return c;
}

std::optional<std::string> Config::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second.value;
}

std::string Config::where(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end() || it->second.line == 0) return source_;
  return source_ + ":" + std::to_string(it->second.line);
}

std::string Config::require(const std::string& key) const {
  auto v = get(key);
  if (!v) {
    const auto dot = key.find('.');
    throw FormatError(source_ + ": missing required key '" + key.substr(dot + 1) + "' in [" +
                      key.substr(0, dot) + "]");
  }
  return *v;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double Config::require_double(const std::string& key) const {
  const std::string text = require(key);
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw FormatError(where(key) + ": key '" + key + "' expects a number, got '" + text + "'");
  }
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? require_double(key) : fallback;
}

long Config::require_int(const std::string& key) const {
  const std::string text = require(key);
  long v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw FormatError(where(key) + ": key '" + key + "' expects an integer, got '" + text + "'");
  }
  return v;
}

long Config::get_int(const std::string& key, long fallback) const {
  return has(key) ? require_int(key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string text = require(key);
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw FormatError(where(key) + ": key '" + key + "' expects an unsigned integer, got '" +
                      text + "'");
  }
  return v;
}

void Config::reject_unknown(const std::set<std::string>& known) const {
  for (const auto& [key, entry] : entries_) {
    if (known.count(key) == 0) {
      const auto dot = key.find('.');
      throw FormatError(source_ + ":" + std::to_string(entry.line) + ": unknown key '" +
                        key.substr(dot + 1) + "' in [" + key.substr(0, dot) + "]");
    }
  }
}

std::string Config::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir_.empty()) return path;
  return (std::filesystem::path(base_dir_) / p).string();
}

}  // namespace odenet
