#pragma once

#include "condu/errors.hpp"
#include "condu/hoeffding.hpp"
#include "condu/kernels.hpp"
#include "condu/ucore.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace condu {

//! 17 significant digits, enough to round-trip any double.
inline std::string
format_double(double v)
{
  char buf[40];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

namespace detail {

inline std::string
trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string>
split_csv_line(const std::string& line)
{
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ','))
    out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

//! Reads a numeric CSV with exactly the given header. Row numbers in errors
//! count data rows from 1, not counting the header.
inline std::vector<std::vector<double>>
read_numeric_csv(const std::filesystem::path& path, const std::vector<std::string>& header)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line))
    throw SchemaError("'" + path.string() + "' is empty");
  if (split_csv_line(line) != header) {
    std::string want;
    for (std::size_t i = 0; i < header.size(); ++i)
      want += (i ? "," : "") + header[i];
    throw SchemaError("'" + path.string() + "': expected header '" + want + "'");
  }
  std::vector<std::vector<double>> cols(header.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty())
      continue;
    ++row;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw SchemaError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(cells.size()));
    for (std::size_t c = 0; c < header.size(); ++c) {
      const std::string& s = cells[c];
      if (s.empty())
        throw SchemaError("row " + std::to_string(row) + ": missing value for '" + header[c] + "'");
      double v = 0.0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw SchemaError("row " + std::to_string(row) + ": '" + s + "' is not a number");
      if (!std::isfinite(v))
        throw SchemaError("row " + std::to_string(row) + ": non-finite value for '" + header[c] + "'");
      cols[c].push_back(v);
    }
  }
  if (row == 0)
    throw SchemaError("'" + path.string() + "' has no data rows");
  return cols;
}

} // namespace detail

//! Sample from a CSV with header `x,y`.
inline Sample
ingest_csv(const std::filesystem::path& path)
{
  auto cols = detail::read_numeric_csv(path, { "x", "y" });
  return Sample(std::move(cols[0]), std::move(cols[1]));
}

//! Kernel from a CSV table with header `u,k`.
inline Kernel1D
load_kernel_table(const std::filesystem::path& path, double kappa = 0.0)
{
  auto cols = detail::read_numeric_csv(path, { "u", "k" });
  return Kernel1D::from_table(std::move(cols[0]), std::move(cols[1]), kappa);
}

//! Reference measure from a CSV with header `x,y,w`.
inline ReferenceMeasure
load_reference_measure(const std::filesystem::path& path)
{
  auto cols = detail::read_numeric_csv(path, { "x", "y", "w" });
  return ReferenceMeasure(std::move(cols[0]), std::move(cols[1]), std::move(cols[2]));
}

//! Writes `content` to a temporary sibling and renames it over `path`.
inline void
write_atomic(const std::filesystem::path& path, const std::string& content)
{
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec)
      throw IoError("cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out)
      throw IoError("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

inline std::string
sample_to_csv(const Sample& s)
{
  std::string out = "x,y\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    out += format_double(s.x[i]) + "," + format_double(s.y[i]) + "\n";
  return out;
}

} // namespace condu
