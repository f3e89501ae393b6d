#pragma once

// Shared tokenizer and header parsing for the line-oriented file formats.

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace stab360::detail {

std::vector<std::string> split_tokens(std::string_view line);

int parse_int(const std::string& token, int line_no);
double parse_double(const std::string& token, int line_no);

/// Shortest round-trippable decimal form of a double.
std::string format_double(double v);

/// `<magic> v1 key=value ...`
struct Header {
  std::map<std::string, std::string> fields;

  bool has(const std::string& key) const { return fields.count(key) != 0; }
  const std::string& get(const std::string& key, int line_no) const;
  int get_int(const std::string& key, int line_no) const;
  double get_double(const std::string& key, int line_no) const;
};

/// Throws parse-error when the magic word or version does not match.
Header parse_header(const std::vector<std::string>& tokens, std::string_view magic, int line_no);

/// Splits "a,b,c" into doubles.
std::vector<double> parse_double_list(const std::string& text, int line_no);

}  // namespace stab360::detail
