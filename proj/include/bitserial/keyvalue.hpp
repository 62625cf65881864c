#pragma once
// flat "key = value" files; '#' starts a comment

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "bitserial/error.hpp"

namespace bitserial {

struct KeyValueEntry {
  std::string value;
  std::size_t line = 0;
};

using KeyValueMap = std::map<std::string, KeyValueEntry>;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline KeyValueMap parse_key_values(std::istream& is) {
  KeyValueMap kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    lineno++;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(lineno, "expected key=value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(lineno, "empty key");
    if (kv.count(key)) throw ParseError(lineno, "duplicate key '" + key + "'");
    kv[key] = {value, lineno};
  }
  return kv;
}

inline KeyValueMap load_key_values(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return parse_key_values(is);
}

inline std::uint64_t parse_uint(const std::string& s, std::size_t line,
                                const std::string& key) {
  std::uint64_t v = 0;
  int base = 10;
  std::string_view sv(s);
  if (sv.size() > 2 && sv[0] == '0' && (sv[1] == 'x' || sv[1] == 'X')) {
    base = 16;
    sv.remove_prefix(2);
  }
  auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v, base);
  if (ec != std::errc() || p != sv.data() + sv.size())
    throw ParseError(line, "bad unsigned integer for '" + key + "': '" + s + "'");
  return v;
}

inline double parse_double(const std::string& s, std::size_t line,
                           const std::string& key) {
  std::istringstream is(s);
  double v = 0;
  is >> v;
  if (is.fail() || !is.eof())
    throw ParseError(line, "bad number for '" + key + "': '" + s + "'");
  return v;
}

}  // namespace bitserial
