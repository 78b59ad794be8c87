#include "legfg/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "legfg/errors.hpp"

namespace legfg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string formatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parseDouble(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ValidationError("field '" + field + "': malformed number '" + text + "'");
  }
  return v;
}

KeyValueConfig KeyValueConfig::Parse(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ValidationError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.entries_[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str(), path);
}

void KeyValueConfig::set(const std::string& qualified_key, const std::string& value) {
  entries_[qualified_key] = value;
}

bool KeyValueConfig::has(const std::string& qualified_key) const {
  return entries_.count(qualified_key) != 0;
}

std::optional<std::string> KeyValueConfig::find(const std::string& qualified_key) const {
  auto it = entries_.find(qualified_key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::getString(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

double KeyValueConfig::getDouble(const std::string& key, double fallback) const {
  auto v = find(key);
  return v ? parseDouble(*v, key) : fallback;
}

int KeyValueConfig::getInt(const std::string& key, int fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  int out = 0;
  const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
  if (v->empty() || res.ec != std::errc() || res.ptr != v->data() + v->size()) {
    throw ValidationError("field '" + key + "': malformed integer '" + *v + "'");
  }
  return out;
}

std::uint64_t KeyValueConfig::getUint64(const std::string& key, std::uint64_t fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
  if (v->empty() || res.ec != std::errc() || res.ptr != v->data() + v->size()) {
    throw ValidationError("field '" + key + "': malformed integer '" + *v + "'");
  }
  return out;
}

bool KeyValueConfig::getBool(const std::string& key, bool fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ValidationError("field '" + key + "': expected a boolean, got '" + *v + "'");
}

std::vector<std::string> KeyValueConfig::getList(const std::string& key) const {
  std::vector<std::string> out;
  auto v = find(key);
  if (!v) return out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::map<std::string, std::string> KeyValueConfig::section(const std::string& name) const {
  std::map<std::string, std::string> out;
  const std::string prefix = name + ".";
  for (const auto& [k, v] : entries_) {
    if (name.empty()) {
      if (k.find('.') == std::string::npos) out[k] = v;
    } else if (k.compare(0, prefix.size(), prefix) == 0) {
      out[k.substr(prefix.size())] = v;
    }
  }
  return out;
}

void KeyValueConfig::merge(const KeyValueConfig& other) {
  for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

std::string KeyValueConfig::toText() const {
  std::map<std::string, std::map<std::string, std::string>> grouped;
  for (const auto& [k, v] : entries_) {
    const auto dot = k.find('.');
    if (dot == std::string::npos) {
      grouped[""][k] = v;
    } else {
      grouped[k.substr(0, dot)][k.substr(dot + 1)] = v;
    }
  }
  std::ostringstream os;
  bool first = true;
  for (const auto& [sec, kv] : grouped) {
    if (!sec.empty()) {
      if (!first) os << '\n';
      os << '[' << sec << "]\n";
    }
    for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
    first = false;
  }
  return os.str();
}

}  // namespace legfg
