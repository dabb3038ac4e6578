#include "mmrd/design/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mmrd/errors.hpp"

namespace mmrd::csv {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    fail(ErrorKind::InvalidInput, "line " + std::to_string(line) + ": '" + s + "' is not a finite number");
  return v;
}

bool starts_with(const std::string& s, char c) { return !s.empty() && s.front() == c; }

std::size_t count_prefix(const std::vector<std::string>& header, char c) {
  std::size_t k = 0;
  while (k < header.size() && starts_with(header[k], c)) ++k;
  return k;
}

Matrix leading_columns(const Matrix& m, std::size_t count) {
  Matrix out(m.rows(), count);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = m(i, j);
  return out;
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  fail(ErrorKind::InvalidInput, "missing column '" + name + "'");
}

Table parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Table t;
  std::size_t lineno = 0;
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(trim(line));
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      fail(ErrorKind::InvalidInput, "line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                                        " fields, header has " + std::to_string(t.header.size()));
    for (const auto& c : cells) values.push_back(parse_double(c, lineno));
    ++rows;
  }
  if (t.header.empty()) fail(ErrorKind::InvalidInput, "empty CSV (no header row)");
  if (rows == 0) fail(ErrorKind::InvalidInput, "CSV has a header but no data rows");
  t.data = Matrix(rows, t.header.size(), std::move(values));
  return t;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double round12(double v) { return std::strtod(format_number(v).c_str(), nullptr); }

void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::InvalidInput, "cannot write '" + path.string() + "'");
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << format_number(r[j]);
    out << '\n';
  }
}

ExternalBasis read_external_basis(const std::filesystem::path& path) {
  const Table t = read(path);
  const std::size_t q = count_prefix(t.header, 'x');
  require(q >= 1, "external basis file needs x1..xq columns first");
  const std::size_t p = t.header.size() - q;
  require(p >= 1, "external basis file needs f1..fp columns after the x columns");
  for (std::size_t j = q; j < t.header.size(); ++j)
    require(starts_with(t.header[j], 'f'), "unexpected column '" + t.header[j] + "' in external basis file");
  Matrix F(t.data.rows(), p);
  for (std::size_t i = 0; i < t.data.rows(); ++i)
    for (std::size_t j = 0; j < p; ++j) F(i, j) = t.data(i, q + j);
  return {DesignSpace(leading_columns(t.data, q)), std::move(F)};
}

DesignSpace read_points(const std::filesystem::path& path) {
  const Table t = read(path);
  const std::size_t q = count_prefix(t.header, 'x');
  require(q == t.header.size(), "point file must contain only x1..xq columns");
  return DesignSpace(t.data);
}

namespace {

std::size_t match_row(const Matrix& data, std::size_t i, std::size_t q, const DesignSpace& space) {
  require(q == space.dimension(), "file has " + std::to_string(q) + " coordinates, design space has " +
                                      std::to_string(space.dimension()));
  const auto idx = space.find(std::span<const double>(data.row(i).data(), q));
  if (!idx) fail(ErrorKind::InvalidInput, "row " + std::to_string(i + 1) + " does not match any design point");
  return *idx;
}

}  // namespace

Vector read_true_mean(const std::filesystem::path& path, const DesignSpace& space) {
  const Table t = read(path);
  const std::size_t q = count_prefix(t.header, 'x');
  require(q + 1 == t.header.size() && t.header.back() == "mean", "true-mean file needs columns x1..xq,mean");
  Vector mean(space.size(), 0.0);
  std::vector<bool> seen(space.size(), false);
  for (std::size_t i = 0; i < t.data.rows(); ++i) {
    const std::size_t k = match_row(t.data, i, q, space);
    require(!seen[k], "duplicate point in true-mean file");
    seen[k] = true;
    mean[k] = t.data(i, q);
  }
  for (bool s : seen) require(s, "true-mean file does not cover every design point");
  return mean;
}

DesignFile read_design(const std::filesystem::path& path, const DesignSpace& space) {
  const Table t = read(path);
  const std::size_t q = count_prefix(t.header, 'x');
  require(q + 1 == t.header.size(), "design file needs columns x1..xq followed by weight or n_i");
  const std::string kind = t.header.back();
  require(kind == "weight" || kind == "n_i", "design file's last column must be 'weight' or 'n_i'");
  Vector values(space.size(), 0.0);
  for (std::size_t i = 0; i < t.data.rows(); ++i) values[match_row(t.data, i, q, space)] += t.data(i, q);
  DesignFile out;
  if (kind == "weight") {
    double sum = 0.0;
    for (double v : values) sum += v;
    // Weights written at 12 significant digits: accept and renormalize small drift.
    require(std::abs(sum - 1.0) <= 1e-9, "design weights must sum to one");
    out.continuous = Design::normalized(std::move(values));
  } else {
    std::vector<long> counts(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      require(values[i] >= 0.0 && values[i] == std::floor(values[i]), "n_i must be non-negative integers");
      counts[i] = static_cast<long>(values[i]);
    }
    out.implementable = ImplementableDesign(std::move(counts));
  }
  return out;
}

namespace {

std::vector<std::string> x_header(std::size_t q, const std::string& last) {
  std::vector<std::string> h;
  for (std::size_t j = 0; j < q; ++j) h.push_back("x" + std::to_string(j + 1));
  h.push_back(last);
  return h;
}

}  // namespace

void write_continuous_design(const std::filesystem::path& path, const DesignSpace& space, const Design& xi) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < space.size(); ++i) {
    std::vector<double> r(space.point(i).begin(), space.point(i).end());
    r.push_back(xi[i]);
    rows.push_back(std::move(r));
  }
  write(path, x_header(space.dimension(), "weight"), rows);
}

void write_implementable_design(const std::filesystem::path& path, const DesignSpace& space,
                                const ImplementableDesign& design) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < space.size(); ++i) {
    std::vector<double> r(space.point(i).begin(), space.point(i).end());
    r.push_back(static_cast<double>(design.counts[i]));
    rows.push_back(std::move(r));
  }
  write(path, x_header(space.dimension(), "n_i"), rows);
}

Dataset read_dataset(const std::filesystem::path& path) {
  const Table t = read(path);
  const std::size_t q = count_prefix(t.header, 'x');
  require(q >= 1 && q + 1 == t.header.size() && t.header.back() == "y", "dataset needs columns x1..xq,y");
  Dataset d{leading_columns(t.data, q), t.data.col(q)};
  return d;
}

}  // namespace mmrd::csv
