#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace demand::csv {

using Record = std::vector<std::string>;

/// Minimal RFC-4180 reader: comma separated, optional double quotes, CRLF tolerated.
/// Blank lines are skipped.
std::vector<Record> read_all(std::istream& in);

/// Quotes a field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// Shortest round-trip decimal representation; integral values print without a fraction.
std::string format_number(double v);

}  // namespace demand::csv
