#ifndef REPCTL_CSV_HPP
#define REPCTL_CSV_HPP

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>

namespace repctl::csv {

/// Rendering with 17 significant digits and '.' as
/// decimal separator regardless of the global locale.
std::string format(double x);

void header(std::ostream& os, std::initializer_list<std::string_view> columns);
void row(std::ostream& os, std::initializer_list<double> values);

}  // namespace repctl::csv

#endif  // REPCTL_CSV_HPP
