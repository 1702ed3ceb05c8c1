#pragma once
// CSV reader/writer for point clouds in C^2: four real columns per row
// (re0, im0, re1, im1), one header line.  Parse errors carry the path and
// the 1-based data-row index.

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "clink/common.hpp"
#include "clink/geometry.hpp"

namespace clink {

inline constexpr const char* kPointCsvHeader = "re0,im0,re1,im1";

namespace detail_csv {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_field(const std::string& field, const std::string& path,
                          std::size_t row, std::size_t col) {
  std::size_t used = 0;
  double value = 0.0;
  bool ok = true;
  try {
    value = std::stod(field, &used);
  } catch (const std::exception&) {
    ok = false;
  }
  // Allow trailing spaces only.
  for (std::size_t i = used; ok && i < field.size(); ++i)
    if (field[i] != ' ' && field[i] != '\t') ok = false;
  if (!ok)
    throw io_error(path + ": row " + std::to_string(row) + ", column " +
                   std::to_string(col) + ": cannot parse '" + field +
                   "' as a number");
  return value;
}

}  // namespace detail_csv

// Reads a point cloud; the header line is required to match
// kPointCsvHeader (ignoring surrounding whitespace).
inline std::vector<ChartPoint> read_point_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open for reading");

  std::string line;
  if (!std::getline(in, line))
    throw io_error(path + ": empty file (expected header '" +
                   std::string(kPointCsvHeader) + "')");
  {
    std::string trimmed;
    for (char ch : line)
      if (ch != ' ' && ch != '\t' && ch != '\r') trimmed.push_back(ch);
    if (trimmed != kPointCsvHeader)
      throw io_error(path + ": bad header '" + line + "' (expected '" +
                     std::string(kPointCsvHeader) + "')");
  }

  std::vector<ChartPoint> points;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    {
      bool blank = true;
      for (char ch : line)
        if (ch != ' ' && ch != '\t' && ch != '\r') blank = false;
      if (blank) continue;
    }
    const auto fields = detail_csv::split_fields(line);
    if (fields.size() != 4)
      throw io_error(path + ": row " + std::to_string(row) + ": expected 4 " +
                     "fields, found " + std::to_string(fields.size()));
    std::array<double, 4> v{};
    for (std::size_t c = 0; c < 4; ++c)
      v[c] = detail_csv::parse_field(fields[c], path, row, c + 1);
    points.push_back(
        ChartPoint::from_complex({cplx(v[0], v[1]), cplx(v[2], v[3])}));
  }
  return points;
}

inline void write_point_csv(const std::string& path,
                            const std::vector<ChartPoint>& points) {
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  out << kPointCsvHeader << '\n';
  for (const auto& p : points) {
    const cplx a = p.complex_coord(0);
    const cplx b = p.complex_coord(1);
    out << detail_csv::format_double(a.real()) << ','
        << detail_csv::format_double(a.imag()) << ','
        << detail_csv::format_double(b.real()) << ','
        << detail_csv::format_double(b.imag()) << '\n';
  }
  if (!out) throw io_error(path + ": write failed");
}

}  // namespace clink
