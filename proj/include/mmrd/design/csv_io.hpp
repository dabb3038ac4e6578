#pragma once

// CSV ingestion and emission. Numbers are written as %.12g, comma-delimited,
// always with a header row.

#include <filesystem>
#include <string>
#include <vector>

#include "mmrd/design/design.hpp"

namespace mmrd::csv {

struct Table {
  std::vector<std::string> header;
  Matrix data;

  /// Index of the named column; throws InvalidInput if absent.
  std::size_t column(const std::string& name) const;
};

Table read(const std::filesystem::path& path);
Table parse(const std::string& text);

std::string format_number(double v);
/// Value after a %.12g round trip.
double round12(double v);

void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& rows);

/// External basis file: columns x1..xq then f1..fp.
struct ExternalBasis {
  DesignSpace space;
  Matrix F;
};
ExternalBasis read_external_basis(const std::filesystem::path& path);

/// Design-space point file: columns x1..xq.
DesignSpace read_points(const std::filesystem::path& path);

/// True-mean file: columns x1..xq, mean; rows are matched to `space` by x.
Vector read_true_mean(const std::filesystem::path& path, const DesignSpace& space);

/// A design file is either continuous (last column `weight`) or implementable
/// (last column `n_i`). Rows are matched to `space` by x; missing points get 0.
struct DesignFile {
  std::optional<Design> continuous;
  std::optional<ImplementableDesign> implementable;
};
DesignFile read_design(const std::filesystem::path& path, const DesignSpace& space);

void write_continuous_design(const std::filesystem::path& path, const DesignSpace& space, const Design& xi);
void write_implementable_design(const std::filesystem::path& path, const DesignSpace& space,
                                const ImplementableDesign& design);

/// Observation file: columns x1..xq, y. Replicates repeat x.
struct Dataset {
  Matrix x;
  Vector y;
};
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace mmrd::csv
