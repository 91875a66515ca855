#ifndef SVYCAT_CONFIG_HPP
#define SVYCAT_CONFIG_HPP

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace svycat {

/// Flat key=value configuration. One assignment per line, '#' starts a
/// comment, blank lines are skipped. Keys must be unique. Lookups mark keys
/// consumed so a run can reject entries nothing asked for.
class KeyValues {
 public:
  KeyValues() = default;

  static KeyValues parse_text(const std::string& text, const std::string& origin) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    long rowno = 0;
    while (std::getline(in, line)) {
      ++rowno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error(origin + ": line " + std::to_string(rowno) +
                                 " is not a key=value assignment");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error(origin + ": line " + std::to_string(rowno) + " has an empty key");
      if (!kv.values_.emplace(key, value).second)
        throw std::runtime_error(origin + ": duplicate key " + key);
    }
    return kv;
  }

  static KeyValues parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const std::string* find(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    consumed_.insert(key);
    return &it->second;
  }

  std::string get_string(const std::string& key, const std::string& dflt) const {
    const std::string* v = find(key);
    return v ? *v : dflt;
  }

  long get_long(const std::string& key, long dflt) const {
    const std::string* v = find(key);
    if (!v) return dflt;
    return to_long(*v, key);
  }

  int get_int(const std::string& key, int dflt) const {
    const long v = get_long(key, dflt);
    if (v < INT32_MIN || v > INT32_MAX)
      throw std::runtime_error("config: value of " + key + " out of int range");
    return static_cast<int>(v);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const {
    const std::string* v = find(key);
    if (!v) return dflt;
    try {
      std::size_t pos = 0;
      const std::uint64_t out = std::stoull(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument("trailing");
      return out;
    } catch (const std::exception&) {
      throw std::runtime_error("config: value of " + key + " is not an unsigned integer");
    }
  }

  double get_double(const std::string& key, double dflt) const {
    const std::string* v = find(key);
    if (!v) return dflt;
    return to_double(*v, key);
  }

  bool get_bool(const std::string& key, bool dflt) const {
    const std::string* v = find(key);
    if (!v) return dflt;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw std::runtime_error("config: value of " + key + " is not a boolean");
  }

  /// Comma-separated list of doubles; an empty value is an empty list.
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& dflt) const {
    const std::string* v = find(key);
    if (!v) return dflt;
    std::vector<double> out;
    std::string item;
    std::istringstream ss(*v);
    while (std::getline(ss, item, ',')) {
      const std::string part = trim(item);
      if (part.empty())
        throw std::runtime_error("config: value of " + key + " has an empty list entry");
      out.push_back(to_double(part, key));
    }
    return out;
  }

  /// Keys never looked up; a nonempty result means the file had entries the
  /// run does not understand.
  std::vector<std::string> unconsumed() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_)
      if (consumed_.count(key) == 0) out.push_back(key);
    return out;
  }

  void require_all_consumed(const std::string& origin) const {
    const auto leftover = unconsumed();
    if (leftover.empty()) return;
    std::string msg = origin + ": unknown key";
    if (leftover.size() > 1) msg += "s";
    for (const auto& key : leftover) msg += " " + key;
    throw std::runtime_error(msg);
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

  static std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }

 private:
  static long to_long(const std::string& v, const std::string& key) {
    try {
      std::size_t pos = 0;
      const long out = std::stol(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing");
      return out;
    } catch (const std::exception&) {
      throw std::runtime_error("config: value of " + key + " is not an integer");
    }
  }

  static double to_double(const std::string& v, const std::string& key) {
    try {
      std::size_t pos = 0;
      const double out = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing");
      return out;
    } catch (const std::exception&) {
      throw std::runtime_error("config: value of " + key + " is not a number");
    }
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

/// 64-bit FNV-1a over the canonical form of an effective configuration.
inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace svycat

#endif
