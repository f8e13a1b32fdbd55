#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ballistica/evolve.hpp"
#include "ballistica/limits.hpp"

namespace ballistica {

inline constexpr const char* kVersion = "1.0.0";

// Parsed run parameters shared by the CLI subcommands. Ranges are validated
// before dispatch (m <= 8, grid N a power of two <= 1024, samples <= 1e6).
struct RunConfig {
  std::string subcommand;
  std::string lattice = "z1";
  std::string state;           // path; empty = delta at the origin
  std::string tree_graph;      // path or "regular:q"
  int m = 1;
  int beta = 1;
  std::vector<double> times;
  int grid_n = 128;   // theta grid resolution (power of two <= 1024)
  int dist_n = 4096;  // atom resolution for distribution comparisons (<= 4096)
  double eta = 0.01;
  double lambda = 0.0;
  double lambda_min = 0.0, lambda_max = 0.0;
  int lambda_points = 200;
  double epsilon = 0.0;
  std::uint64_t seed = 1;
  double safety = 1.5;
  int samples = 1000;
  int depth = 10;
  std::vector<double> s_list;
  double tolerance = 0.05;
  double sigma = 1.0;  // contfree gaussian width
  double t = 50.0;     // contfree single time
  std::string out_dir = ".";
  std::optional<EvolveMethod> method;

  void validate() const;  // throws InvalidArgument
  std::string echo() const;  // one-line provenance string
};

RunConfig parse_run_config_json(const std::string& json_text, const std::string& origin);

struct CompareReport {
  double closed_form = 0.0;
  std::optional<double> zd_closed_form;  // when the lattice is Z^d
  std::vector<CurvePoint> curve;
  double final_relative_error = 0.0;
  double boundary_mass = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  int grid_n = 0;
  int box_radius = 0;
  std::string provenance;
};

// Closed form (periodic_limit, plus zd_limit when applicable) vs the
// simulated ballistic curve; pass iff the final relative error is within
// tolerance and the boundary mass stays below 1e-8.
CompareReport run_compare(const RunConfig& config);

struct DistCompareReport {
  double sup_cdf_distance = 0.0;               // max over axes
  std::vector<double> per_axis_distance;
  std::vector<double> second_moment_gap;       // |empirical - closed form| per axis
  double tolerance = 0.0;
  bool passed = false;
  std::string provenance;
};

// nu_infinity atoms vs the empirical distribution at the largest time.
DistCompareReport run_dist_compare(const RunConfig& config);

// Weighted per-axis Kolmogorov distance between two atom clouds.
double sup_cdf_distance(const std::vector<std::pair<double, double>>& a,
                        const std::vector<std::pair<double, double>>& b);

// CSV writing with a "# provenance:" comment header; deterministic byte
// output for identical inputs.
void write_csv(const std::string& path, const std::string& provenance,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

}  // namespace ballistica
