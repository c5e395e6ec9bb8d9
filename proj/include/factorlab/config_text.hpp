#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "factorlab/common.hpp"

namespace factorlab {

/// Minimal structured-text format: "key: value" lines, nesting by two-space
/// indentation, '#' lines are comments. Nested keys flatten to dotted paths.
///
///   model:
///     n_layers: 2
///
/// parses to {"model.n_layers": "2"}.
class ConfigText {
 public:
  static ConfigText parse_string(const std::string& text, const std::string& origin = "<string>") {
    ConfigText c;
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> stack;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      size_t indent = 0;
      while (indent < line.size() && line[indent] == ' ') ++indent;
      const std::string body = line.substr(indent);
      if (body.empty() || body[0] == '#') continue;
      if (indent % 2 != 0) fail(origin, " line ", line_no, ": indentation must be two spaces");
      const size_t depth = indent / 2;
      if (depth > stack.size()) fail(origin, " line ", line_no, ": indentation jumps a level");
      stack.resize(depth);

      const size_t colon = body.find(':');
      if (colon == std::string::npos) fail(origin, " line ", line_no, ": expected 'key: value'");
      const std::string key = trim(body.substr(0, colon));
      const std::string value = trim(body.substr(colon + 1));
      require(!key.empty(), cat(origin, " line ", line_no, ": empty key"));

      if (value.empty()) {
        stack.push_back(key);
      } else {
        std::string path;
        for (const auto& part : stack) path += part + ".";
        path += key;
        c.values_[path] = value;
        c.order_.push_back(path);
      }
    }
    return c;
  }

  static ConfigText parse_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), cat("ConfigText: cannot open ", path));
    std::ostringstream os;
    os << in.rdbuf();
    return parse_string(os.str(), path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) fail("ConfigText: missing key \"", key, "\"");
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
  }

  const std::vector<std::string>& keys_in_order() const { return order_; }
  const std::map<std::string, std::string>& values() const { return values_; }

  static std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
    return s.substr(a, b - a);
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

}  // namespace factorlab
