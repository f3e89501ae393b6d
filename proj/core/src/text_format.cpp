#include "stab360/text_format.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "stab360/error.hpp"

namespace stab360::detail {

namespace {

[[noreturn]] void fail(int line_no, const std::string& what) {
  throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::vector<std::string> split_tokens(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

int parse_int(const std::string& token, int line_no) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    fail(line_no, "expected integer, got '" + token + "'");
  }
  return v;
}

double parse_double(const std::string& token, int line_no) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size() || !std::isfinite(v)) {
    fail(line_no, "expected number, got '" + token + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const std::string& Header::get(const std::string& key, int line_no) const {
  const auto it = fields.find(key);
  if (it == fields.end()) fail(line_no, "header is missing '" + key + "'");
  return it->second;
}

int Header::get_int(const std::string& key, int line_no) const {
  return parse_int(get(key, line_no), line_no);
}

double Header::get_double(const std::string& key, int line_no) const {
  return parse_double(get(key, line_no), line_no);
}

Header parse_header(const std::vector<std::string>& tokens, std::string_view magic, int line_no) {
  if (tokens.size() < 2 || tokens[0] != magic) {
    fail(line_no, "expected '" + std::string(magic) + " v1' header");
  }
  if (tokens[1] != "v1") {
    throw Error(ErrorCode::kUnsupportedFormat, "unsupported " + std::string(magic) +
                                                   " version '" + tokens[1] + "'");
  }
  Header h;
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string::npos || eq == 0) fail(line_no, "malformed header field '" + tokens[i] + "'");
    h.fields[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
  }
  return h;
}

std::vector<double> parse_double_list(const std::string& text, int line_no) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string::npos ? text.size() : comma;
    out.push_back(parse_double(text.substr(start, end - start), line_no));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace stab360::detail
