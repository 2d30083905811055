#pragma once

#include "pot/core.hpp"

#include <istream>
#include <string>
#include <vector>

namespace pot::io {

// Reads `date,value` or `value` CSV. A header row is required; lines starting
// with '#' are comments. Blank, NaN or unparsable rows raise DataError citing
// the 1-based line number.
TimeSeries parse_series_csv(std::istream& in, const std::string& source_name = "<input>");
TimeSeries read_series_csv(const std::string& path);

// Writes the series with optional leading '# ' comment lines.
std::string format_series_csv(const TimeSeries& series, const std::vector<std::string>& comments = {});

std::string format_date(DayNumber day);
DayNumber parse_date(std::string_view text);

// Shortest round-trip decimal representation.
std::string format_double(double value);

// Writes to a temporary sibling file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace pot::io
