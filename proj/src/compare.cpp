#include "ballistica/compare.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ballistica/error.hpp"
#include "ballistica/io.hpp"
#include "json.hpp"

namespace ballistica {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

StateVector resolve_state(const RunConfig& config, const Lattice& lattice) {
  if (config.state.empty())
    return StateVector::delta(lattice.dim(), std::vector<int>(lattice.dim(), 0), 0);
  return load_state(config.state, lattice.dim());
}

std::vector<double> second_moments(const std::vector<std::pair<Eigen::VectorXd, double>>& atoms,
                                   int d) {
  std::vector<double> m(d, 0.0);
  for (const auto& [v, w] : atoms)
    for (int j = 0; j < d; ++j) m[j] += w * v[j] * v[j];
  return m;
}

}  // namespace

void RunConfig::validate() const {
  if (m < 1 || m > 8)
    throw Error(ErrorCode::InvalidArgument, "m must be in [1, 8]");
  if (!is_pow2(grid_n) || grid_n > 1024)
    throw Error(ErrorCode::InvalidArgument, "grid N must be a power of two <= 1024");
  if (!is_pow2(dist_n) || dist_n > 4096)
    throw Error(ErrorCode::InvalidArgument, "dist N must be a power of two <= 4096");
  if (samples < 1 || samples > 1000000)
    throw Error(ErrorCode::InvalidArgument, "samples must be in [1, 1e6]");
  if (safety <= 0.0) throw Error(ErrorCode::InvalidArgument, "safety must be positive");
  if (tolerance <= 0.0) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  for (double t : times)
    if (t <= 0.0) throw Error(ErrorCode::ZeroTime, "times must be positive");
}

std::string RunConfig::echo() const {
  std::ostringstream os;
  os << "version=" << kVersion << " subcommand=" << subcommand << " lattice=" << lattice;
  if (!state.empty()) os << " state=" << state;
  if (!tree_graph.empty()) os << " tree=" << tree_graph;
  os << " m=" << m << " beta=" << beta << " grid_n=" << grid_n << " dist_n=" << dist_n
     << " eta=" << format_double(eta) << " epsilon=" << format_double(epsilon)
     << " seed=" << seed << " safety=" << format_double(safety)
     << " samples=" << samples << " depth=" << depth
     << " tolerance=" << format_double(tolerance);
  if (!times.empty()) {
    os << " times=";
    for (std::size_t i = 0; i < times.size(); ++i)
      os << (i ? "," : "") << format_double(times[i]);
  }
  return os.str();
}

RunConfig parse_run_config_json(const std::string& text, const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, origin + ": " + e.what());
  }
  RunConfig c;
  try {
    c.subcommand = j.value("subcommand", c.subcommand);
    c.lattice = j.value("lattice", c.lattice);
    c.state = j.value("state", c.state);
    c.tree_graph = j.value("tree", c.tree_graph);
    c.m = j.value("m", c.m);
    c.beta = j.value("beta", c.beta);
    if (j.contains("times")) c.times = j["times"].get<std::vector<double>>();
    c.grid_n = j.value("grid_n", c.grid_n);
    c.dist_n = j.value("dist_n", c.dist_n);
    c.eta = j.value("eta", c.eta);
    c.lambda = j.value("lambda", c.lambda);
    c.lambda_min = j.value("lambda_min", c.lambda_min);
    c.lambda_max = j.value("lambda_max", c.lambda_max);
    c.lambda_points = j.value("lambda_points", c.lambda_points);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.seed = j.value("seed", c.seed);
    c.safety = j.value("safety", c.safety);
    c.samples = j.value("samples", c.samples);
    c.depth = j.value("depth", c.depth);
    if (j.contains("s_list")) c.s_list = j["s_list"].get<std::vector<double>>();
    c.tolerance = j.value("tolerance", c.tolerance);
    c.sigma = j.value("sigma", c.sigma);
    c.t = j.value("t", c.t);
    c.out_dir = j.value("out", c.out_dir);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, origin + ": " + e.what());
  }
  return c;
}

double sup_cdf_distance(const std::vector<std::pair<double, double>>& a,
                        const std::vector<std::pair<double, double>>& b) {
  auto sorted = [](std::vector<std::pair<double, double>> v) {
    std::sort(v.begin(), v.end());
    double total = 0.0;
    for (auto& [x, w] : v) total += w;
    if (total > 0.0)
      for (auto& [x, w] : v) w /= total;
    return v;
  };
  std::vector<std::pair<double, double>> sa = sorted(a), sb = sorted(b);
  double ca = 0.0, cb = 0.0, d = 0.0;
  std::size_t i = 0, k = 0;
  while (i < sa.size() || k < sb.size()) {
    double x;
    if (k >= sb.size() || (i < sa.size() && sa[i].first <= sb[k].first))
      x = sa[i].first;
    else
      x = sb[k].first;
    while (i < sa.size() && sa[i].first <= x) ca += sa[i++].second;
    while (k < sb.size() && sb[k].first <= x) cb += sb[k++].second;
    d = std::max(d, std::abs(ca - cb));
  }
  return d;
}

CompareReport run_compare(const RunConfig& config) {
  RunConfig cfg = config;
  cfg.validate();
  if (cfg.times.empty())
    throw Error(ErrorCode::InvalidArgument, "run_compare needs a time list");

  Lattice lattice = load_lattice(cfg.lattice);
  StateVector psi = resolve_state(cfg, lattice);
  if (psi.empty()) throw Error(ErrorCode::EmptyState, "state is empty");

  ThetaGrid grid{lattice.dim(), cfg.grid_n};
  BandGrid bands = BandGrid::build(lattice, grid);

  CompareReport report;
  report.grid_n = cfg.grid_n;
  report.tolerance = cfg.tolerance;
  report.closed_form = periodic_limit(bands, psi, cfg.m);
  if (lattice.is_integer_lattice())
    report.zd_closed_form = zd_limit(psi, lattice.dim(), cfg.m);

  report.curve = ballistic_curve(lattice, psi, cfg.m, cfg.times, cfg.safety,
                                 cfg.method.value_or(EvolveMethod::Auto));
  const CurvePoint& last = report.curve.back();
  report.box_radius = last.box_radius;
  report.boundary_mass = last.boundary_mass;
  report.final_relative_error =
      std::abs(last.ratio - report.closed_form) / std::max(std::abs(report.closed_form), 1e-300);
  report.passed = report.final_relative_error <= cfg.tolerance && !last.flagged;
  report.provenance = cfg.echo() + " box_r=" + std::to_string(report.box_radius);
  return report;
}

DistCompareReport run_dist_compare(const RunConfig& config) {
  RunConfig cfg = config;
  cfg.validate();
  if (cfg.times.empty())
    throw Error(ErrorCode::InvalidArgument, "run_dist_compare needs a time list");

  Lattice lattice = load_lattice(cfg.lattice);
  StateVector psi = resolve_state(cfg, lattice);
  if (std::abs(psi.norm() - 1.0) > 1e-9)
    throw Error(ErrorCode::NotNormalized, "run_dist_compare requires a normalized state");

  const int d = lattice.dim();
  ThetaGrid grid{d, cfg.dist_n};
  BandGrid bands = BandGrid::build(lattice, grid);
  LimitDistribution limit = limit_distribution(bands, psi);

  double t = cfg.times.back();
  double ld = lattice.max_edge_length() * lattice.max_degree();
  int radius = std::max(psi.support_radius() + 1,
                        static_cast<int>(std::ceil(cfg.safety * (ld * t + psi.support_radius()))));
  TruncatedOperator op = TruncatedOperator::build(lattice, radius);
  Eigen::VectorXcd vt = evolve_state(op, op.to_dense_vector(psi), t,
                                     cfg.method.value_or(EvolveMethod::Auto));
  EmpiricalDist emp = empirical_distribution(op, vt, t);

  DistCompareReport report;
  report.tolerance = cfg.tolerance;
  std::vector<std::pair<Eigen::VectorXd, double>> atoms_inf, atoms_t;
  for (const auto& a : limit.atoms) atoms_inf.emplace_back(a.velocity, a.weight);
  for (const auto& a : emp.atoms) atoms_t.emplace_back(a.velocity, a.weight);

  for (int j = 0; j < d; ++j) {
    std::vector<std::pair<double, double>> pa, pb;
    for (const auto& [v, w] : atoms_inf) pa.emplace_back(v[j], w);
    for (const auto& [v, w] : atoms_t) pb.emplace_back(v[j], w);
    report.per_axis_distance.push_back(sup_cdf_distance(pa, pb));
  }
  report.sup_cdf_distance =
      *std::max_element(report.per_axis_distance.begin(), report.per_axis_distance.end());

  std::vector<double> m_inf = second_moments(atoms_inf, d);
  std::vector<double> m_t = second_moments(atoms_t, d);
  for (int j = 0; j < d; ++j)
    report.second_moment_gap.push_back(std::abs(m_inf[j] - m_t[j]));

  report.passed = report.sup_cdf_distance <= cfg.tolerance;
  report.provenance = cfg.echo() + " box_r=" + std::to_string(radius);
  return report;
}

void write_csv(const std::string& path, const std::string& provenance,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  out << "# provenance: " << provenance << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
}

}  // namespace ballistica
