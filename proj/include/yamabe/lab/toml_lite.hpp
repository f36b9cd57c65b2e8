#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "yamabe/errors.hpp"

namespace yamabe::lab {

class ConfigError : public Error {
public:
  using Error::Error;
};

/// Parser for the TOML subset used by experiment configs: [section] headers, bare keys,
/// basic strings, integers, floats, booleans and (possibly multi-line) arrays of those.
/// Inline tables, dotted keys, dates and literal strings are rejected.
struct TomlValue;
using TomlArray = std::vector<TomlValue>;

struct TomlValue {
  std::variant<bool, std::int64_t, double, std::string, TomlArray> v;

  bool is_bool() const { return std::holds_alternative<bool>(v); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
  bool is_float() const { return std::holds_alternative<double>(v); }
  bool is_number() const { return is_int() || is_float(); }
  bool is_string() const { return std::holds_alternative<std::string>(v); }
  bool is_array() const { return std::holds_alternative<TomlArray>(v); }
};

/// section name ("" for top level) -> key -> value
using TomlDocument = std::map<std::string, std::map<std::string, TomlValue>>;

namespace detail {

class TomlParser {
public:
  explicit TomlParser(std::string_view text) : s_(text) {}

  TomlDocument parse() {
    TomlDocument doc;
    doc[""];
    std::string section;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        skip_spaces();
        section = bare_key();
        skip_spaces();
        expect(']');
        if (doc.count(section) != 0 && section.size() > 0) fail("duplicate section [" + section + "]");
        doc[section];
        end_of_line();
        continue;
      }
      const std::string key = bare_key();
      skip_spaces();
      expect('=');
      skip_spaces();
      auto value = parse_value();
      auto& table = doc[section];
      if (table.count(key) != 0) fail("duplicate key '" + key + "'");
      table.emplace(key, std::move(value));
      end_of_line();
    }
    return doc;
  }

private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + what);
  }
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }
  void skip_blank_lines() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\r') ++pos_;
      if (peek() == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      break;
    }
  }
  /// whitespace, comments and newlines inside arrays
  void skip_array_space() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\r' || peek() == '\n') {
        if (peek() == '\n') ++line_;
        ++pos_;
        continue;
      }
      break;
    }
  }
  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (eof()) return;
    if (peek() != '\n') fail("unexpected text after value");
    ++pos_;
    ++line_;
  }
  std::string bare_key() {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  TomlValue parse_value() {
    const char c = peek();
    if (c == '"') return {parse_string()};
    if (c == '[') return {parse_array()};
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return {true};
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return {false};
    }
    return parse_number();
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') break;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (eof()) fail("unterminated escape");
      const char e = s_[pos_++];
      switch (e) {
      case '"': out.push_back('"'); break;
      case '\\': out.push_back('\\'); break;
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      default: fail(std::string("unsupported escape \\") + e);
      }
    }
    return out;
  }

  TomlArray parse_array() {
    expect('[');
    TomlArray out;
    skip_array_space();
    if (peek() == ']') {
      ++pos_;
      return out;
    }
    while (true) {
      skip_array_space();
      out.push_back(parse_value());
      skip_array_space();
      if (peek() == ',') {
        ++pos_;
        skip_array_space();
        if (peek() == ']') {
          ++pos_;
          return out;
        }
        continue;
      }
      expect(']');
      return out;
    }
  }

  TomlValue parse_number() {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                      peek() == '.' || peek() == '_'))
      ++pos_;
    std::string tok(s_.substr(start, pos_ - start));
    if (tok.empty()) fail("expected a value");
    std::string clean;
    for (char c : tok)
      if (c != '_') clean.push_back(c);
    if (clean == "inf" || clean == "+inf" || clean == "-inf" || clean == "nan" || clean == "+nan" || clean == "-nan")
      fail("non-finite numbers are not accepted");
    const char* first = clean.data() + (clean[0] == '+' ? 1 : 0);
    const char* last = clean.data() + clean.size();
    const bool is_float = clean.find_first_of(".eE") != std::string::npos;
    if (!is_float) {
      std::int64_t v = 0;
      const auto [p, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || p != last) fail("invalid value '" + tok + "'");
      return {v};
    }
    double v = 0.0;
    const auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last) fail("invalid number '" + tok + "'");
    return {v};
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

} // namespace detail

inline TomlDocument parse_toml(std::string_view text) { return detail::TomlParser(text).parse(); }

} // namespace yamabe::lab
