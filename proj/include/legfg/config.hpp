#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace legfg {

/// Sectioned key=value text. Keys before any `[section]` header live in the
/// "" section. `#` starts a comment. Lookups take "section.key" or "key".
class KeyValueConfig {
 public:
  static KeyValueConfig Parse(const std::string& text, const std::string& origin = "config");
  static KeyValueConfig Load(const std::string& path);

  void set(const std::string& qualified_key, const std::string& value);
  bool has(const std::string& qualified_key) const;
  std::optional<std::string> find(const std::string& qualified_key) const;

  std::string getString(const std::string& key, const std::string& fallback) const;
  double getDouble(const std::string& key, double fallback) const;
  int getInt(const std::string& key, int fallback) const;
  std::uint64_t getUint64(const std::string& key, std::uint64_t fallback) const;
  bool getBool(const std::string& key, bool fallback) const;
  std::vector<std::string> getList(const std::string& key) const;

  /// Every key of one section (without the section prefix).
  std::map<std::string, std::string> section(const std::string& name) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

  /// Merges another config; its values win.
  void merge(const KeyValueConfig& other);

  /// Canonical text, sections in lexical order.
  std::string toText() const;

  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string> entries_;  // qualified key → value
  std::string origin_;
};

/// Locale-independent round-trip formatting with 17 significant digits.
std::string formatDouble(double v);
/// Strict number parsing; throws ValidationError naming `field` on failure.
double parseDouble(const std::string& text, const std::string& field);

}  // namespace legfg
