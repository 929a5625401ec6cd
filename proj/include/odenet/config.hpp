#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace odenet {

/// Flat `key = value` file with `[section]` headers. `#` and `;` start
/// comments. Keys are addressed as "section.key".
class Config {
 public:
  static Config load(const std::string& path);
  static Config parse(std::istream& in, const std::string& source);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string require(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  double require_double(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  long require_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

  /// Throws for any key outside `known`, citing its line.
  void reject_unknown(const std::set<std::string>& known) const;

  /// Directory of the file the config came from ("" for streams).
  const std::string& base_dir() const { return base_dir_; }
  /// `path` unchanged when absolute, else resolved against base_dir().
  std::string resolve(const std::string& path) const;
  /// "file:line" of a key, or the file name if the key is absent.
  std::string where(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> entries_;
  std::string source_;
  std::string base_dir_;
};

}  // namespace odenet
