#pragma once

#include "dataset.hpp"
#include "errors.hpp"
#include "kernel.hpp"

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace dgwr::io {

//! Raw numeric table: header names plus row-major values.
struct Table
{
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const
  {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name)
        return k;
    fail(ErrorCode::Input, "column '" + std::string(name) + "' not found in header");
  }
};

namespace detail {

inline std::string
trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"')
    out = out.substr(1, out.size() - 2);
  return out;
}

inline std::vector<std::string>
split(const std::string& line)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(
      start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos)
      break;
    start = pos + 1;
  }
  return out;
}

} // namespace detail

//! Comma-separated, header row, '.' decimal point. Blank lines are ignored.
inline Table
read_csv(std::istream& in)
{
  Table t;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 &&
        line.compare(0, 3, "\xEF\xBB\xBF") == 0)
      line.erase(0, 3);
    if (detail::trim(line).empty())
      continue;
    auto fields = detail::split(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      fail(ErrorCode::Input, "line " + std::to_string(line_no) + ": expected " +
                               std::to_string(t.header.size()) + " fields, got " +
                               std::to_string(fields.size()));
    std::vector<double> row(fields.size());
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const std::string& f = fields[k];
      const char* first = f.data();
      const char* last = f.data() + f.size();
      if (!f.empty() && *first == '+')
        ++first;
      const auto [ptr, ec] = std::from_chars(first, last, row[k]);
      if (f.empty() || ec != std::errc() || ptr != last || !std::isfinite(row[k]))
        fail(ErrorCode::Input, "non-numeric value '" + f + "' at row " +
                                 std::to_string(t.rows.size() + 1) + ", column '" +
                                 t.header[k] + "'");
    }
    t.rows.push_back(std::move(row));
  }
  if (!have_header)
    fail(ErrorCode::Input, "CSV input is empty");
  return t;
}

inline Table
read_csv_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::Io, "cannot open '" + path + "'");
  return read_csv(in);
}

struct Bindings
{
  std::string coord_x;
  std::string coord_y;
  std::string response;
  std::vector<std::string> covariates;
};

//! Response transform. log1p_per_area maps a count y* with area a to
//! log(1 + y* / a).
struct Transform
{
  enum class Kind
  {
    None,
    Log1pPerArea,
  };
  Kind kind = Kind::None;
  std::string area_column;

  std::string describe() const
  {
    return kind == Kind::None ? "none" : "log1p_per_area:" + area_column;
  }

  static Transform parse(std::string_view spec)
  {
    Transform t;
    if (spec.empty() || spec == "none")
      return t;
    constexpr std::string_view prefix = "log1p_per_area";
    if (spec.substr(0, prefix.size()) == prefix) {
      t.kind = Kind::Log1pPerArea;
      if (spec.size() > prefix.size() + 1 && spec[prefix.size()] == ':')
        t.area_column = std::string(spec.substr(prefix.size() + 1));
      if (t.area_column.empty())
        fail(ErrorCode::Config, "log1p_per_area needs an area column, e.g. "
                                "log1p_per_area:area");
      return t;
    }
    fail(ErrorCode::Config, "unknown transform '" + std::string(spec) + "'");
  }
};

struct ColumnScaling
{
  std::string column;
  double mean = 0.0;
  double sd = 1.0;
};

struct Ingested
{
  SpatialDataset dataset;
  //! Design column names, "(intercept)" first.
  std::vector<std::string> design_columns;
  //! Applied standardization, empty when not requested.
  std::vector<ColumnScaling> scaling;
};

inline Ingested
ingest(const Table& table, const Bindings& bind, const Transform& transform,
       bool standardize)
{
  const std::size_t cx = table.column(bind.coord_x);
  const std::size_t cy = table.column(bind.coord_y);
  const std::size_t cr = table.column(bind.response);
  std::vector<std::size_t> cov;
  for (const auto& name : bind.covariates)
    cov.push_back(table.column(name));
  std::optional<std::size_t> carea;
  if (transform.kind == Transform::Kind::Log1pPerArea)
    carea = table.column(transform.area_column);

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto p = static_cast<Eigen::Index>(cov.size() + 1);
  if (n < p + 1)
    fail(ErrorCode::Input, "need at least p + 1 = " + std::to_string(p + 1) +
                             " rows, got " + std::to_string(n));

  Coordinates coords(n, 2);
  Eigen::MatrixXd design(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    coords(i, 0) = row[cx];
    coords(i, 1) = row[cy];
    design(i, 0) = 1.0;
    for (std::size_t k = 0; k < cov.size(); ++k)
      design(i, static_cast<Eigen::Index>(k + 1)) = row[cov[k]];
    double v = row[cr];
    if (carea) {
      const double area = row[*carea];
      if (!(area > 0.0))
        fail(ErrorCode::Input, "non-positive area at row " + std::to_string(i + 1));
      v = std::log1p(v / area);
      if (!std::isfinite(v))
        fail(ErrorCode::Input, "transform undefined at row " + std::to_string(i + 1));
    }
    y(i) = v;
  }

  std::vector<ColumnScaling> scaling;
  if (standardize) {
    for (std::size_t k = 0; k < cov.size(); ++k) {
      auto col = design.col(static_cast<Eigen::Index>(k + 1));
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() /
                                  static_cast<double>(n - 1));
      if (!(sd > 0.0))
        fail(ErrorCode::Input,
             "cannot standardize constant column '" + bind.covariates[k] + "'");
      col = ((col.array() - mean) / sd).matrix();
      scaling.push_back({ bind.covariates[k], mean, sd });
    }
  }

  std::vector<std::string> names{ "(intercept)" };
  names.insert(names.end(), bind.covariates.begin(), bind.covariates.end());
  return { SpatialDataset(std::move(coords), std::move(design), std::move(y)),
           std::move(names), std::move(scaling) };
}

inline Ingested
ingest_csv(const std::string& path, const Bindings& bind,
           const Transform& transform, bool standardize = false)
{
  return ingest(read_csv_file(path), bind, transform, standardize);
}

//! Heuristic: every point inside lon/lat bounds and an extent above one
//! degree suggests raw geographic coordinates.
inline bool
looks_geographic(const Coordinates& coords)
{
  const double xmin = coords.col(0).minCoeff(), xmax = coords.col(0).maxCoeff();
  const double ymin = coords.col(1).minCoeff(), ymax = coords.col(1).maxCoeff();
  const bool in_bounds =
    xmin >= -180.0 && xmax <= 180.0 && ymin >= -90.0 && ymax <= 90.0;
  return in_bounds && std::max(xmax - xmin, ymax - ymin) > 1.0;
}

} // namespace dgwr::io
