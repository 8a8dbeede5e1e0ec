#include "dte/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "dte/errors.hpp"

namespace dte {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view field, std::size_t row, const std::string& col) {
  if (field.empty() || field == "NA" || field == "NaN" || field == "nan") {
    throw ParseError(row, "missing value in column '" + col + "'");
  }
  if (field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(row, "cannot parse '" + std::string(field) + "' in column '" + col + "'");
  }
  if (!std::isfinite(v)) {
    throw ParseError(row, "non-finite value in column '" + col + "'");
  }
  return v;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw ConfigError("column '" + name + "' not found in header");
  }
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

Dataset load_dataset(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_dataset(in, schema);
}

Dataset read_dataset(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(0, "missing header row");
  std::vector<std::string> header;
  for (auto f : split_fields(line)) header.emplace_back(f);

  const std::size_t y_idx = find_column(header, schema.y_col);
  const std::size_t d_idx = find_column(header, schema.d_col);
  std::optional<std::size_t> g_idx, p_idx;
  if (!schema.group_col.empty()) g_idx = find_column(header, schema.group_col);
  if (!schema.propensity_col.empty()) p_idx = find_column(header, schema.propensity_col);

  std::vector<std::string> names;
  std::vector<int> group;
  std::vector<double> propensity;
  std::vector<std::size_t> x_idx;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j == y_idx || j == d_idx || (g_idx && j == *g_idx) || (p_idx && j == *p_idx)) continue;
    if (!schema.x_prefix.empty() && header[j].rfind(schema.x_prefix, 0) == 0) {
      x_idx.push_back(j);
      names.push_back(header[j]);
    }
  }

  std::vector<double> y, x;
  std::vector<int> d;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(row, "expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(fields.size()));
    }
    y.push_back(parse_number(fields[y_idx], row, schema.y_col));
    const double dv = parse_number(fields[d_idx], row, schema.d_col);
    if (dv != 0.0 && dv != 1.0) {
      throw ParseError(row, "treatment column '" + schema.d_col + "' must be 0 or 1, found " +
                                std::string(fields[d_idx]));
    }
    d.push_back(static_cast<int>(dv));
    for (std::size_t j : x_idx) x.push_back(parse_number(fields[j], row, header[j]));
    if (g_idx) {
      const double g = parse_number(fields[*g_idx], row, schema.group_col);
      if (g != std::floor(g)) throw ParseError(row, "group id must be an integer");
      group.push_back(static_cast<int>(g));
    }
    if (p_idx) propensity.push_back(parse_number(fields[*p_idx], row, schema.propensity_col));
  }
  if (row == 0) throw ParseError(0, "no data rows");
  Sample sample = Sample::from_columns(std::move(y), std::move(d), std::move(x), x_idx.size());
  return Dataset{std::move(sample), std::move(names), std::move(group), std::move(propensity)};
}

std::vector<std::vector<double>> read_columns(const std::string& path,
                                              const std::vector<std::string>& names) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(0, "missing header row");
  std::vector<std::string> header;
  for (auto f : split_fields(line)) header.emplace_back(f);
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(find_column(header, n));
  std::vector<std::vector<double>> out(names.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(row, "expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < names.size(); ++j) {
      out[j].push_back(parse_number(fields[idx[j]], row, names[j]));
    }
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("formatting failed");
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const Sample& sample,
               const std::vector<std::string>& covariate_names) {
  out << "y,d";
  for (std::size_t j = 0; j < sample.dim(); ++j) {
    out << ',' << (j < covariate_names.size() ? covariate_names[j] : "x" + std::to_string(j + 1));
  }
  out << '\n';
  for (std::size_t i = 0; i < sample.size(); ++i) {
    out << format_double(sample.y(i)) << ',' << sample.d(i);
    for (double v : sample.x(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace dte
