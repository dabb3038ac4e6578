#pragma once

// Command-line pipeline: configuration ingestion and the five subcommands.
// Each cmd_* writes its files into `cfg.out` and returns the JSON it wrote.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmrd/design/design.hpp"
#include "mmrd/loss/loss.hpp"
#include "mmrd/mestimate/psi.hpp"
#include "mmrd/simulate/error_model.hpp"

namespace mmrd::cli {

using Json = nlohmann::json;
namespace fs = std::filesystem;

struct RunConfig {
  // space: a grid, or an explicit point file
  double lo = -1.0;
  double hi = 1.0;
  std::size_t N = 20;
  std::optional<fs::path> points_file;

  // model: polynomial degree, monomial exponents, or an external basis file
  int degree = 1;
  std::optional<std::vector<Monomial>> monomials;
  std::optional<fs::path> basis_file;

  // exactly one of nu / raw
  std::optional<double> nu;
  std::optional<LossParams::Raw> raw;

  long n = 10;
  PsiSpec psi = PsiSpec::huber(1.345);
  long max_iters = 5000;
  double tol_rel = 1e-7;
  long window = 50;
  std::uint64_t seed = 1;
  fs::path out = ".";

  std::optional<fs::path> design_file;
  std::optional<fs::path> data_file;

  // simulate
  long reps = 2000;
  unsigned threads = 0;
  std::string tau_mode = "worst_case";  // zero | worst_case | true_mean
  std::optional<fs::path> true_mean_file;
  double kappa = 1.0;
  std::optional<Vector> theta0;
  ErrorModel errors = ErrorModel::normal(1.0);
  bool sweep = true;
  std::vector<double> rho_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  double alpha_max_sq = 1.0;
  long sweep_reps = 200;

  // nu-analysis
  double c_min = 1e-4, c_max = 10.0;
  std::size_t c_points = 60;
  double gamma_sq_min = 1e-3, gamma_sq_max = 100.0;
  std::size_t gamma_sq_points = 400;

  /// Relative paths in `j` resolve against `base`.
  static RunConfig from_json(const Json& j, const fs::path& base = {});

  /// Throws InvalidInput unless exactly one of nu / raw is set.
  LossParams loss_params() const;
};

struct Overrides {
  std::optional<double> nu;
  std::optional<long> n;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
};

/// Reads the JSON config (if any) and applies flag overrides; flags win.
RunConfig load_config(const std::optional<fs::path>& path, const Overrides& ov);

Json cmd_design(const RunConfig& cfg);
Json cmd_evaluate(const RunConfig& cfg, const fs::path& design_file);
Json cmd_estimate(const RunConfig& cfg, const fs::path& data_file);
Json cmd_simulate(const RunConfig& cfg);
Json cmd_nu_analysis(const RunConfig& cfg);

/// Full CLI entry point; returns the process exit code (0 ok, 1 input error, 2 numerical failure).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mmrd::cli
