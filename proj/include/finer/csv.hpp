#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

namespace finer {

/// "%.17g": enough digits for an exact double round trip.
std::string format_double(double v);

/// Builds CSV text with '\n' line endings and 17-significant-digit numbers.
class CsvBuilder {
 public:
  explicit CsvBuilder(std::initializer_list<std::string_view> header);

  CsvBuilder& row(std::initializer_list<double> values);
  /// Row whose first field is an integer label (iteration, neuron index, ...).
  CsvBuilder& row(long long label, std::initializer_list<double> values);
  CsvBuilder& raw_row(std::string_view line);

  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

}  // namespace finer
