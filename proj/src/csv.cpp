#include "repctl/csv.hpp"

#include <array>
#include <charconv>
#include <ostream>

namespace repctl::csv {

std::string format(double x) {
  std::array<char, 64> buf{};
  const auto res =
      std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

void header(std::ostream& os, std::initializer_list<std::string_view> columns) {
  bool first = true;
  for (auto c : columns) {
    if (!first) os << ',';
    os << c;
    first = false;
  }
  os << '\n';
}

void row(std::ostream& os, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) os << ',';
    os << format(v);
    first = false;
  }
  os << '\n';
}

}  // namespace repctl::csv
