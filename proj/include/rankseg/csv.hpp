#ifndef RANKSEG_CSV_HPP
#define RANKSEG_CSV_HPP

#include <string>
#include <string_view>
#include <vector>

namespace rankseg::csv {

/// Splits one line into fields. Double-quoted fields may contain the delimiter and "" escapes.
std::vector<std::string> split_line(std::string_view line, char delimiter = ',');

/// Quotes a field when it contains the delimiter, a quote or a newline.
std::string escape(std::string_view field, char delimiter = ',');

std::string trim(std::string_view s);

/// Shortest representation that reads back to the same double.
std::string number(double v);

}  // namespace rankseg::csv

#endif  // RANKSEG_CSV_HPP
