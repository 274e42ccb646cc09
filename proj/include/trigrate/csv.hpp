// Locale-independent CSV output.
#ifndef TRIGRATE_CSV_HPP
#define TRIGRATE_CSV_HPP

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace trigrate {

/// Shortest round-trip decimal form ("inf", "-inf", "nan" for non-finite).
std::string format_number(double v);

/// Quote a field when it contains a comma, quote or line break.
std::string csv_escape(std::string_view field);

void write_csv_row(std::ostream& os, const std::vector<std::string>& fields);

}  // namespace trigrate

#endif  // TRIGRATE_CSV_HPP
