// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace sep::json {

/// Single-line JSON object writer. Fields come out in insertion order and
/// doubles use 17 significant digits, so reports diff cleanly and round-trip.
class Object {
 public:
  Object& field(std::string_view key, double v) {
    if (!std::isfinite(v)) return raw(key, "null");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return raw(key, buf);
  }
  Object& field(std::string_view key, std::int64_t v) { return raw(key, std::to_string(v)); }
  Object& field(std::string_view key, std::uint64_t v) { return raw(key, std::to_string(v)); }
  Object& field(std::string_view key, int v) { return raw(key, std::to_string(v)); }
  Object& field(std::string_view key, bool v) { return raw(key, v ? "true" : "false"); }
  Object& field(std::string_view key, std::string_view v) { return raw(key, quote(v)); }
  Object& field(std::string_view key, const char* v) { return field(key, std::string_view(v)); }
  Object& field(std::string_view key, const std::vector<std::int64_t>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(v[i]);
    }
    return raw(key, s + "]");
  }

  /// Inserts pre-serialised JSON.
  Object& raw(std::string_view key, std::string_view json) {
    if (!body_.empty()) body_ += ",";
    body_ += quote(key);
    body_ += ":";
    body_ += json;
    return *this;
  }

  std::string str() const { return "{" + body_ + "}"; }

  static std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\u%04x", c);
            out += buf;
          } else {
            out += c;
          }
      }
    }
    return out + "\"";
  }

 private:
  std::string body_;
};

inline std::string array(const std::vector<std::string>& items) {
  std::string s = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) s += ",";
    s += items[i];
  }
  return s + "]";
}

}  // namespace sep::json
