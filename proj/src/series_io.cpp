#include "pot/series_io.hpp"

#include "pot/error.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace pot::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

double parse_value(std::string_view field, const std::string& source, std::size_t line) {
  field = trim(field);
  if (field.empty()) fail(source, line, "blank value");
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    fail(source, line, "cannot parse value '" + std::string(field) + "'");
  if (!std::isfinite(v)) fail(source, line, "non-finite value '" + std::string(field) + "'");
  return v;
}

}  // namespace

DayNumber parse_date(std::string_view text) {
  text = trim(text);
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw DataError("malformed ISO-8601 date");
  auto num = [&](std::size_t pos, std::size_t len, auto& out) {
    const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    if (ec != std::errc() || ptr != text.data() + pos + len) throw DataError("malformed ISO-8601 date");
  };
  num(0, 4, y);
  num(5, 2, m);
  num(8, 2, d);
  static constexpr unsigned kDays[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m < 1 || m > 12 || d < 1 || d > kDays[m - 1]) throw DataError("invalid calendar date");
  const DayNumber day = days_from_civil(y, m, d);
  int y2;
  unsigned m2, d2;
  civil_from_days(day, y2, m2, d2);
  if (m2 != m || d2 != d) throw DataError("invalid calendar date");
  return day;
}

std::string format_date(DayNumber day) {
  int y;
  unsigned m, d;
  civil_from_days(day, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
  return buf;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

TimeSeries parse_series_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  bool dated = false;
  std::vector<double> values;
  std::vector<DayNumber> dates;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (!view.empty() && view.front() == '#') continue;
    if (!have_header) {
      const auto header = lower(view);
      if (header == "value") {
        dated = false;
      } else if (header == "date,value") {
        dated = true;
      } else {
        fail(source_name, line_no, "expected header 'date,value' or 'value'");
      }
      have_header = true;
      continue;
    }
    if (view.empty()) fail(source_name, line_no, "blank row");
    if (dated) {
      const auto comma = view.find(',');
      if (comma == std::string_view::npos) fail(source_name, line_no, "expected two columns");
      const auto date_field = view.substr(0, comma);
      const auto value_field = view.substr(comma + 1);
      if (value_field.find(',') != std::string_view::npos) fail(source_name, line_no, "too many columns");
      DayNumber day = 0;
      try {
        day = parse_date(date_field);
      } catch (const DataError& e) {
        fail(source_name, line_no, std::string(e.what()) + " '" + std::string(trim(date_field)) + "'");
      }
      if (!dates.empty() && day <= dates.back()) fail(source_name, line_no, "dates not strictly increasing");
      dates.push_back(day);
      values.push_back(parse_value(value_field, source_name, line_no));
    } else {
      if (view.find(',') != std::string_view::npos) fail(source_name, line_no, "too many columns");
      values.push_back(parse_value(view, source_name, line_no));
    }
  }
  if (!have_header) throw DataError(source_name + ": missing header row");
  if (values.size() < 2) throw DataError(source_name + ": fewer than two observations");
  Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
  if (dated) return TimeSeries(std::move(v), std::move(dates), source_name);
  return TimeSeries(std::move(v), source_name);
}

TimeSeries read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file '" + path + "'");
  return parse_series_csv(in, path);
}

std::string format_series_csv(const TimeSeries& series, const std::vector<std::string>& comments) {
  std::ostringstream out;
  for (const auto& c : comments) out << "# " << c << '\n';
  const bool dated = series.has_timestamps();
  out << (dated ? "date,value\n" : "value\n");
  for (Index i = 0; i < series.size(); ++i) {
    if (dated) out << format_date(series.timestamps()[static_cast<std::size_t>(i)]) << ',';
    out << format_double(series.values()[i]) << '\n';
  }
  return out.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp + "' for writing");
    out << contents;
    if (!out) throw DataError("write to '" + tmp + "' failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw DataError("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

}  // namespace pot::io
