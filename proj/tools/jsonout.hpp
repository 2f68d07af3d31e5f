#pragma once

// Minimal ordered JSON emitter for the CLI reports. Keys keep insertion
// order and every double is printed with 12 significant digits so repeated
// runs with the same seed produce byte-identical output.

#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace pidcli {

class Json {
 public:
  enum class Kind { Null, Bool, Int, Real, Str, Arr, Obj };

  Json() : kind_(Kind::Null) {}
  static Json boolean(bool v) {
    Json j;
    j.kind_ = Kind::Bool;
    j.int_ = v ? 1 : 0;
    return j;
  }
  static Json integer(long long v) {
    Json j;
    j.kind_ = Kind::Int;
    j.int_ = v;
    return j;
  }
  static Json real(double v) {
    Json j;
    j.kind_ = Kind::Real;
    j.real_ = v;
    return j;
  }
  static Json str(std::string v) {
    Json j;
    j.kind_ = Kind::Str;
    j.str_ = std::move(v);
    return j;
  }
  static Json array() {
    Json j;
    j.kind_ = Kind::Arr;
    return j;
  }
  static Json object() {
    Json j;
    j.kind_ = Kind::Obj;
    return j;
  }

  Json& push(Json v) {
    items_.push_back(std::move(v));
    return *this;
  }
  Json& set(std::string key, Json v) {
    keys_.push_back(std::move(key));
    items_.push_back(std::move(v));
    return *this;
  }

  std::string dump(int indent = 0, int depth = 0) const {
    switch (kind_) {
      case Kind::Null: return "null";
      case Kind::Bool: return int_ ? "true" : "false";
      case Kind::Int: return std::to_string(int_);
      case Kind::Real: return format_real(real_);
      case Kind::Str: return quote(str_);
      case Kind::Arr: return dump_seq('[', ']', false, indent, depth);
      case Kind::Obj: return dump_seq('{', '}', true, indent, depth);
    }
    return "null";
  }

 private:
  static std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    std::string s = buf;
    // keep it a JSON number token
    if (s == "inf") return "1e999";
    if (s == "-inf") return "-1e999";
    if (s == "nan" || s == "-nan") return "null";
    return s;
  }

  static std::string quote(const std::string& s) {
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

  std::string dump_seq(char open, char close, bool with_keys, int indent, int depth) const {
    if (items_.empty()) return std::string(1, open) + close;
    std::string pad(indent * (depth + 1), ' ');
    std::string pad_close(indent * depth, ' ');
    std::string sep = indent > 0 ? ",\n" : ", ";
    std::string out(1, open);
    if (indent > 0) out += "\n";
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (i) out += sep;
      if (indent > 0) out += pad;
      if (with_keys) out += quote(keys_[i]) + (indent > 0 ? ": " : ": ");
      out += items_[i].dump(indent, depth + 1);
    }
    if (indent > 0) out += "\n" + pad_close;
    out += close;
    return out;
  }

  Kind kind_;
  long long int_ = 0;
  double real_ = 0.0;
  std::string str_;
  std::vector<std::string> keys_;
  std::vector<Json> items_;
};

}  // namespace pidcli
