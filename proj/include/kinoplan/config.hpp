#pragma once

#include "kinoplan/types.hpp"

#include <iosfwd>
#include <map>
#include <string>

namespace kinoplan {

/// Flat key = value configuration file. '#' starts a comment; keys may be
/// dotted (steer.n = 60). CLI flags override file entries by calling set().
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig load(const std::string& path);
  static KvConfig parse(std::istream& in);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace kinoplan
