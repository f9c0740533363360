#pragma once
// Minimal comma-separated numeric rows. Doubles are written with enough
// digits to round-trip exactly.

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "wristhap/errors.hpp"

namespace wristhap {

class CsvRow {
 public:
  CsvRow& add(double v) {
    sep();
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    line_.append(buf, end);
    return *this;
  }
  CsvRow& add(std::uint64_t v) {
    sep();
    line_ += std::to_string(v);
    return *this;
  }
  CsvRow& add(int v) {
    sep();
    line_ += std::to_string(v);
    return *this;
  }
  CsvRow& add(bool v) {
    sep();
    line_ += v ? '1' : '0';
    return *this;
  }
  CsvRow& add(std::string_view s) {
    sep();
    line_ += s;
    return *this;
  }
  CsvRow& add(const char* s) { return add(std::string_view(s)); }

  const std::string& str() const { return line_; }

 private:
  void sep() {
    if (!first_) line_ += ',';
    first_ = false;
  }
  std::string line_;
  bool first_ = true;
};

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<double> parse_csv_doubles(std::string_view line) {
  std::vector<double> out;
  for (auto field : split_csv(line)) out.push_back(parse_double(field));
  return out;
}

}  // namespace wristhap
