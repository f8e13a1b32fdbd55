#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ballistica/compare.hpp"
#include "ballistica/contfree.hpp"
#include "ballistica/error.hpp"
#include "ballistica/evolve.hpp"
#include "ballistica/io.hpp"
#include "ballistica/limits.hpp"
#include "ballistica/trees.hpp"

namespace bl = ballistica;

namespace {

// exit codes: 0 pass, 1 tolerance fail, 2 invalid input, 3 numerical failure
constexpr int kExitPass = 0;
constexpr int kExitToleranceFail = 1;
constexpr int kExitInvalidInput = 2;
constexpr int kExitNumericalFailure = 3;

std::string out_path(const bl::RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

bl::StateVector resolve_state(const bl::RunConfig& cfg, const bl::Lattice& lattice) {
  if (cfg.state.empty())
    return bl::StateVector::delta(lattice.dim(), std::vector<int>(lattice.dim(), 0), 0);
  return bl::load_state(cfg.state, lattice.dim());
}

bl::TreeModel resolve_tree(const std::string& source, bool anderson) {
  if (source.rfind("regular:", 0) == 0) {
    int q = std::stoi(source.substr(8));
    return bl::TreeModel::regular_tree(q + 1);
  }
  return bl::TreeModel::from_base_graph(bl::load_base_graph(source), anderson);
}

int cmd_bands(const bl::RunConfig& cfg) {
  bl::Lattice lattice = bl::load_lattice(cfg.lattice);
  bl::BandGrid bands = bl::BandGrid::build(lattice, {lattice.dim(), cfg.grid_n});
  const int d = lattice.dim();
  const int nu = lattice.num_cell_vertices();

  std::vector<std::string> cols;
  for (int j = 0; j < d; ++j) cols.push_back("theta_" + std::to_string(j + 1));
  cols.push_back("n");
  cols.push_back("E_n");
  for (int j = 0; j < d; ++j) cols.push_back("h_" + std::to_string(j + 1));
  cols.push_back("degenerate_flag");

  std::vector<std::vector<double>> rows;
  for (const auto& p : bands.points()) {
    for (int n = 0; n < nu; ++n) {
      std::vector<double> row;
      for (int j = 0; j < d; ++j) row.push_back(p.theta[j]);
      row.push_back(n + 1);
      row.push_back(p.energies[n]);
      for (int j = 0; j < d; ++j) row.push_back(p.velocities(n, j));
      row.push_back(p.degenerate[n] ? 1.0 : 0.0);
      rows.push_back(std::move(row));
    }
  }
  bl::write_csv(out_path(cfg, "bands.csv"), cfg.echo(), cols, rows);
  std::cout << "wrote bands.csv (" << rows.size() << " rows)\n";
  return kExitPass;
}

int cmd_limit(const bl::RunConfig& cfg) {
  bl::Lattice lattice = bl::load_lattice(cfg.lattice);
  bl::StateVector psi = resolve_state(cfg, lattice);
  bl::BandGrid bands = bl::BandGrid::build(lattice, {lattice.dim(), cfg.grid_n});
  double limit = bl::periodic_limit(bands, psi, cfg.m);
  std::cout << "limit = " << bl::format_double(limit) << "\n";
  if (lattice.is_integer_lattice())
    std::cout << "zd_limit = "
              << bl::format_double(bl::zd_limit(psi, lattice.dim(), cfg.m)) << "\n";

  if (std::abs(psi.norm() - 1.0) <= 1e-9) {
    bl::LimitDistribution dist = bl::limit_distribution(bands, psi);
    std::vector<std::string> cols;
    for (int j = 0; j < lattice.dim(); ++j) cols.push_back("v_" + std::to_string(j + 1));
    cols.push_back("weight");
    std::vector<std::vector<double>> rows;
    for (const auto& a : dist.atoms) {
      std::vector<double> row;
      for (int j = 0; j < lattice.dim(); ++j) row.push_back(a.velocity[j]);
      row.push_back(a.weight);
      rows.push_back(std::move(row));
    }
    bl::write_csv(out_path(cfg, "limit.csv"), cfg.echo(), cols, rows);
    std::cout << "wrote limit.csv (" << rows.size() << " atoms)\n";
  }
  return kExitPass;
}

int cmd_evolve(const bl::RunConfig& cfg) {
  bl::Lattice lattice = bl::load_lattice(cfg.lattice);
  bl::StateVector psi = resolve_state(cfg, lattice);
  auto curve = bl::ballistic_curve(lattice, psi, cfg.m, cfg.times, cfg.safety,
                                   cfg.method.value_or(bl::EvolveMethod::Auto));
  std::vector<std::vector<double>> rows;
  for (const auto& p : curve)
    rows.push_back({p.t, p.ratio, p.boundary_mass, p.flagged ? 1.0 : 0.0});
  bl::write_csv(out_path(cfg, "evolve.csv"), cfg.echo(),
                {"t", "ratio", "boundary_mass", "flag"}, rows);
  for (const auto& p : curve)
    std::cout << "t=" << p.t << " ratio=" << bl::format_double(p.ratio)
              << " boundary_mass=" << bl::format_double(p.boundary_mass)
              << (p.flagged ? " FLAGGED" : "") << "\n";
  return kExitPass;
}

int cmd_dist(const bl::RunConfig& cfg) {
  bl::Lattice lattice = bl::load_lattice(cfg.lattice);
  bl::StateVector psi = resolve_state(cfg, lattice);
  double t = cfg.times.empty() ? cfg.t : cfg.times.back();
  double ld = lattice.max_edge_length() * lattice.max_degree();
  int radius = std::max(psi.support_radius() + 1,
                        static_cast<int>(std::ceil(cfg.safety * (ld * t + psi.support_radius()))));
  bl::TruncatedOperator op = bl::TruncatedOperator::build(lattice, radius);
  Eigen::VectorXcd vt = bl::evolve_state(op, op.to_dense_vector(psi), t,
                                         cfg.method.value_or(bl::EvolveMethod::Auto));
  bl::EmpiricalDist dist = bl::empirical_distribution(op, vt, t);

  std::vector<std::string> cols = {"t"};
  for (int j = 0; j < lattice.dim(); ++j) cols.push_back("v_" + std::to_string(j + 1));
  cols.push_back("weight");
  std::vector<std::vector<double>> rows;
  for (const auto& a : dist.atoms) {
    std::vector<double> row = {t};
    for (int j = 0; j < lattice.dim(); ++j) row.push_back(a.velocity[j]);
    row.push_back(a.weight);
    rows.push_back(std::move(row));
  }
  bl::write_csv(out_path(cfg, "dist.csv"), cfg.echo(), cols, rows);
  std::cout << "wrote dist.csv (" << rows.size() << " atoms, leak "
            << bl::format_double(dist.leak) << ")\n";
  return kExitPass;
}

int cmd_compare(const bl::RunConfig& cfg, bool distribution) {
  if (distribution) {
    bl::DistCompareReport r = bl::run_dist_compare(cfg);
    std::cout << "sup_cdf_distance = " << bl::format_double(r.sup_cdf_distance) << "\n";
    for (std::size_t j = 0; j < r.second_moment_gap.size(); ++j)
      std::cout << "second_moment_gap_" << j + 1 << " = "
                << bl::format_double(r.second_moment_gap[j]) << "\n";
    std::cout << (r.passed ? "PASS" : "FAIL") << " (tolerance "
              << bl::format_double(r.tolerance) << ")\n";
    return r.passed ? kExitPass : kExitToleranceFail;
  }
  bl::CompareReport r = bl::run_compare(cfg);
  std::cout << "closed_form = " << bl::format_double(r.closed_form) << "\n";
  if (r.zd_closed_form)
    std::cout << "zd_closed_form = " << bl::format_double(*r.zd_closed_form) << "\n";
  std::vector<std::vector<double>> rows;
  for (const auto& p : r.curve)
    rows.push_back({p.t, p.ratio, p.boundary_mass, p.flagged ? 1.0 : 0.0});
  bl::write_csv(out_path(cfg, "compare.csv"), r.provenance,
                {"t", "ratio", "boundary_mass", "flag"}, rows);
  std::cout << "final_relative_error = " << bl::format_double(r.final_relative_error)
            << "\nboundary_mass = " << bl::format_double(r.boundary_mass) << "\n"
            << (r.passed ? "PASS" : "FAIL") << " (tolerance "
            << bl::format_double(r.tolerance) << ")\n";
  return r.passed ? kExitPass : kExitToleranceFail;
}

int cmd_contfree(const bl::RunConfig& cfg, const std::string& profile) {
  if (profile != "gaussian")
    throw bl::Error(bl::ErrorCode::InvalidArgument, "unknown profile '" + profile + "'");
  const double sigma = cfg.sigma;
  const double t = cfg.t;
  // box sized so the evolved packet stays clear of the edge
  double spread = std::sqrt((std::pow(sigma, 4) + 4.0 * t * t) / 2.0) / sigma;
  double half_width = 8.0 * spread + 10.0 * sigma;
  double dx_needed = M_PI * sigma / 8.0;
  int points = 64;
  while (points < 2.0 * half_width / dx_needed && points < 16384) points *= 2;

  double amp = std::pow(M_PI * sigma * sigma, -0.25);
  bl::GridFunction f = bl::GridFunction::sample(
      1, half_width, points, [&](const std::vector<double>& x) {
        return std::complex<double>(amp * std::exp(-x[0] * x[0] / (2.0 * sigma * sigma)), 0.0);
      });

  double limit = bl::cont_free_limit(f, cfg.m);
  bl::GridFunction ft = bl::free_evolve(f, t);
  double mom = 0.0;
  double nrm = bl::position_moment_norm(ft, 0, cfg.m);
  mom = nrm * nrm;
  double ratio = mom / std::pow(t, 2.0 * cfg.m);
  double rel = std::abs(ratio - limit) / std::max(std::abs(limit), 1e-300);

  bl::write_csv(out_path(cfg, "contfree.csv"), cfg.echo(),
                {"t", "ratio", "limit", "rel_err"}, {{t, ratio, limit, rel}});
  std::cout << "t=" << t << " ratio=" << bl::format_double(ratio)
            << " limit=" << bl::format_double(limit)
            << " rel_err=" << bl::format_double(rel) << "\n";
  return rel <= cfg.tolerance ? kExitPass : kExitToleranceFail;
}

int cmd_tree_green(const bl::RunConfig& cfg) {
  bl::TreeModel model = resolve_tree(cfg.tree_graph, false);
  bl::GreenCache cache = bl::zeta_fixed_point(model, {cfg.lambda, cfg.eta});
  bl::green_diagonal(model, cache);

  std::vector<std::vector<double>> rows;
  for (int b = 0; b < model.num_edge_classes(); ++b)
    rows.push_back({static_cast<double>(b + 1), static_cast<double>(model.edge_origin(b) + 1),
                    static_cast<double>(model.edge_target(b) + 1), cache.zeta[b].real(),
                    cache.zeta[b].imag()});
  bl::write_csv(out_path(cfg, "tree_green_zeta.csv"), cfg.echo(),
                {"edge_class", "origin", "target", "zeta_re", "zeta_im"}, rows);
  rows.clear();
  for (int v = 0; v < model.num_vertex_classes(); ++v)
    rows.push_back({static_cast<double>(v + 1), cache.g_diag[v].real(),
                    cache.g_diag[v].imag()});
  bl::write_csv(out_path(cfg, "tree_green_diag.csv"), cfg.echo(),
                {"vertex", "g_re", "g_im"}, rows);
  std::cout << "z_gamma = " << bl::format_double(bl::spectral_floor(cache))
            << " residual = " << bl::format_double(cache.residual) << "\n";
  return kExitPass;
}

int cmd_tree_bound(const bl::RunConfig& cfg) {
  bl::TreeModel model = resolve_tree(cfg.tree_graph, false);
  double lo = cfg.lambda_min, hi = cfg.lambda_max;
  if (lo >= hi) {
    double bound = model.max_degree() + 1.0;
    lo = -bound;
    hi = bound;
  }
  bl::LambdaGrid grid = bl::LambdaGrid::uniform(lo, hi, cfg.lambda_points);
  bl::LowerBoundResult lower = bl::pertree_lower_bound(model, cfg.beta, grid);
  bl::AveragedMomentResult avg = bl::averaged_moment(model, cfg.beta, cfg.eta, grid);
  bl::write_csv(out_path(cfg, "tree_bound.csv"), cfg.echo(),
                {"beta", "eta", "averaged_moment", "lower_bound", "lower_bound_2eta"},
                {{static_cast<double>(cfg.beta), cfg.eta, avg.value, lower.value,
                  lower.value_at_2eta}});
  std::cout << "averaged_moment = " << bl::format_double(avg.value)
            << "\nlower_bound = " << bl::format_double(lower.value) << "\n";
  return avg.value >= lower.value * 0.98 ? kExitPass : kExitToleranceFail;
}

int cmd_tree_anderson(const bl::RunConfig& cfg) {
  bl::TreeModel model = resolve_tree(cfg.tree_graph, true);
  bl::AndersonConfig acfg;
  acfg.epsilon = cfg.epsilon;
  acfg.depth = cfg.depth;
  acfg.samples = cfg.samples;
  acfg.seed = cfg.seed;
  std::vector<double> s_list = cfg.s_list.empty() ? std::vector<double>{1.0} : cfg.s_list;
  bl::AndersonStatistics stats =
      bl::anderson_statistics(model, acfg, cfg.lambda, cfg.eta, s_list);

  std::vector<std::string> cols = {"samples", "mean_im_g", "stderr_im_g",
                                   "herglotz_violations", "max_redu_residual"};
  std::vector<double> row = {static_cast<double>(stats.samples), stats.mean_im_g,
                             stats.stderr_im_g,
                             static_cast<double>(stats.herglotz_violations),
                             stats.max_redu_residual};
  for (std::size_t i = 0; i < s_list.size(); ++i) {
    cols.push_back("mean_inv_im_zeta_s" + std::to_string(i + 1));
    cols.push_back("stderr_inv_im_zeta_s" + std::to_string(i + 1));
    cols.push_back("heavy_tail_s" + std::to_string(i + 1));
    row.push_back(stats.mean_inv_im_zeta[i]);
    row.push_back(stats.stderr_inv_im_zeta[i]);
    row.push_back(stats.heavy_tail_flag[i] ? 1.0 : 0.0);
  }
  bl::write_csv(out_path(cfg, "tree_anderson.csv"), cfg.echo(), cols, {row});
  std::cout << "E[Im G] = " << bl::format_double(stats.mean_im_g) << " +- "
            << bl::format_double(stats.stderr_im_g) << " ("
            << stats.herglotz_violations << " Herglotz violations)\n";
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  bl::RunConfig cfg;
  // --config seeds the defaults; explicit flags override it
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        std::ifstream in(argv[i + 1]);
        if (!in) throw bl::Error(bl::ErrorCode::InvalidArgument,
                                 std::string("cannot open '") + argv[i + 1] + "'");
        std::ostringstream os;
        os << in.rdbuf();
        cfg = bl::parse_run_config_json(os.str(), argv[i + 1]);
      } catch (const bl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
      }
    }
  }

  CLI::App app{"ballistic transport of periodic and random media: closed-form "
               "moment limits cross-checked against direct simulation"};
  app.require_subcommand(1);
  std::string config_path, profile = "gaussian";
  bool distribution = false;
  std::string method;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", cfg.out_dir, "output directory");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path);
    sub->add_option("--out", cfg.out_dir);
    sub->add_option("--method", method, "auto|dense|chebyshev");
  };

  CLI::App* bands = app.add_subcommand("bands", "band structure and group velocities");
  bands->add_option("--lattice", cfg.lattice);
  bands->add_option("--grid", cfg.grid_n);
  add_common(bands);

  CLI::App* limit = app.add_subcommand("limit", "closed-form moment limit and atoms");
  limit->add_option("--lattice", cfg.lattice);
  limit->add_option("--state", cfg.state);
  limit->add_option("--m", cfg.m);
  limit->add_option("--grid", cfg.grid_n);
  add_common(limit);

  CLI::App* evolve = app.add_subcommand("evolve", "ballistic curve by direct simulation");
  evolve->add_option("--lattice", cfg.lattice);
  evolve->add_option("--state", cfg.state);
  evolve->add_option("--m", cfg.m);
  evolve->add_option("--times", cfg.times)->delimiter(',');
  evolve->add_option("--safety", cfg.safety);
  add_common(evolve);

  CLI::App* dist = app.add_subcommand("dist", "empirical distribution of X_t / t");
  dist->add_option("--lattice", cfg.lattice);
  dist->add_option("--state", cfg.state);
  dist->add_option("--t", cfg.t);
  dist->add_option("--safety", cfg.safety);
  add_common(dist);

  CLI::App* compare = app.add_subcommand("compare", "closed form vs simulation");
  compare->add_option("--lattice", cfg.lattice);
  compare->add_option("--state", cfg.state);
  compare->add_option("--m", cfg.m);
  compare->add_option("--times", cfg.times)->delimiter(',');
  compare->add_option("--safety", cfg.safety);
  compare->add_option("--grid", cfg.grid_n);
  compare->add_option("--dist-grid", cfg.dist_n);
  compare->add_option("--tol", cfg.tolerance);
  compare->add_flag("--distribution", distribution, "compare limiting distributions");
  add_common(compare);

  CLI::App* contfree = app.add_subcommand("contfree", "free Laplacian on R^d");
  contfree->add_option("--profile", profile);
  contfree->add_option("--sigma", cfg.sigma);
  contfree->add_option("--t", cfg.t);
  contfree->add_option("--m", cfg.m);
  contfree->add_option("--tol", cfg.tolerance);
  add_common(contfree);

  CLI::App* tree = app.add_subcommand("tree", "universal covers of finite graphs");
  tree->require_subcommand(1);
  CLI::App* tgreen = tree->add_subcommand("green", "zeta fixed point and Green diagonal");
  tgreen->add_option("--graph", cfg.tree_graph)->required();
  tgreen->add_option("--lambda", cfg.lambda);
  tgreen->add_option("--eta", cfg.eta);
  add_common(tgreen);
  CLI::App* tbound = tree->add_subcommand("bound", "averaged moment vs lower bound");
  tbound->add_option("--graph", cfg.tree_graph)->required();
  tbound->add_option("--beta", cfg.beta);
  tbound->add_option("--eta", cfg.eta);
  tbound->add_option("--grid-lo", cfg.lambda_min);
  tbound->add_option("--grid-hi", cfg.lambda_max);
  tbound->add_option("--grid", cfg.lambda_points);
  add_common(tbound);
  CLI::App* tanderson = tree->add_subcommand("anderson", "random potential statistics");
  tanderson->add_option("--graph", cfg.tree_graph)->required();
  tanderson->add_option("--epsilon", cfg.epsilon);
  tanderson->add_option("--samples", cfg.samples);
  tanderson->add_option("--seed", cfg.seed);
  tanderson->add_option("--lambda", cfg.lambda);
  tanderson->add_option("--eta", cfg.eta);
  tanderson->add_option("--depth", cfg.depth);
  tanderson->add_option("--s", cfg.s_list)->delimiter(',');
  add_common(tanderson);

  CLI11_PARSE(app, argc, argv);

  if (!method.empty()) {
    if (method == "auto") cfg.method = bl::EvolveMethod::Auto;
    else if (method == "dense") cfg.method = bl::EvolveMethod::Dense;
    else if (method == "chebyshev") cfg.method = bl::EvolveMethod::Chebyshev;
    else {
      std::cerr << "error: unknown method '" << method << "'\n";
      return kExitInvalidInput;
    }
  }

  try {
    if (bands->parsed()) { cfg.subcommand = "bands"; cfg.validate(); return cmd_bands(cfg); }
    if (limit->parsed()) { cfg.subcommand = "limit"; cfg.validate(); return cmd_limit(cfg); }
    if (evolve->parsed()) {
      cfg.subcommand = "evolve";
      cfg.validate();
      if (cfg.times.empty()) throw bl::Error(bl::ErrorCode::InvalidArgument, "need --times");
      return cmd_evolve(cfg);
    }
    if (dist->parsed()) { cfg.subcommand = "dist"; cfg.validate(); return cmd_dist(cfg); }
    if (compare->parsed()) {
      cfg.subcommand = "compare";
      cfg.validate();
      if (cfg.times.empty()) throw bl::Error(bl::ErrorCode::InvalidArgument, "need --times");
      return cmd_compare(cfg, distribution);
    }
    if (contfree->parsed()) {
      cfg.subcommand = "contfree";
      cfg.validate();
      return cmd_contfree(cfg, profile);
    }
    if (tree->parsed()) {
      if (tree->get_subcommand("green")->parsed()) {
        cfg.subcommand = "tree green";
        cfg.validate();
        return cmd_tree_green(cfg);
      }
      if (tree->get_subcommand("bound")->parsed()) {
        cfg.subcommand = "tree bound";
        cfg.validate();
        return cmd_tree_bound(cfg);
      }
      if (tree->get_subcommand("anderson")->parsed()) {
        cfg.subcommand = "tree anderson";
        cfg.validate();
        return cmd_tree_anderson(cfg);
      }
    }
  } catch (const bl::Error& e) {
    std::cerr << "error [" << bl::error_code_name(e.code()) << "]: " << e.what() << "\n";
    return e.is_input_error() ? kExitInvalidInput : kExitNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericalFailure;
  }
  return kExitInvalidInput;
}
