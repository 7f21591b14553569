#include "finer/csv.hpp"

#include <cstdio>

namespace finer {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvBuilder::CsvBuilder(std::initializer_list<std::string_view> header) {
  bool first = true;
  for (auto h : header) {
    if (!first) text_ += ',';
    text_ += h;
    first = false;
  }
  text_ += '\n';
}

CsvBuilder& CsvBuilder::row(std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) text_ += ',';
    text_ += format_double(v);
    first = false;
  }
  text_ += '\n';
  return *this;
}

CsvBuilder& CsvBuilder::row(long long label, std::initializer_list<double> values) {
  text_ += std::to_string(label);
  for (double v : values) {
    text_ += ',';
    text_ += format_double(v);
  }
  text_ += '\n';
  return *this;
}

CsvBuilder& CsvBuilder::raw_row(std::string_view line) {
  text_ += line;
  text_ += '\n';
  return *this;
}

}  // namespace finer
