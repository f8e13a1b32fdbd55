#include "ballistica/trees.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "ballistica/error.hpp"
#include "ballistica/parallel.hpp"

namespace ballistica {

namespace detail {

std::uint64_t SplitMix64::next() {
  std::uint64_t x = (state += 0x9e3779b97f4a7c15ULL);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double SplitMix64::uniform01() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  SplitMix64 s(seed ^ (salt * 0x632be59bd9b4e019ULL + 0x9e3779b97f4a7c15ULL));
  return s.next();
}

}  // namespace detail

TreeModel TreeModel::from_base_graph(const BaseGraph& graph, bool anderson) {
  const int n = graph.num_vertices;
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "base graph needs vertices");
  if (static_cast<int>(graph.potential.size()) != n)
    throw Error(ErrorCode::InvalidArgument, "potential needs one value per vertex");
  if (graph.root < 0 || graph.root >= n)
    throw Error(ErrorCode::InvalidArgument, "root vertex out of range");

  std::vector<std::vector<int>> adj(n);
  std::set<std::pair<int, int>> seen;
  for (auto [u, v] : graph.edges) {
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw Error(ErrorCode::InvalidArgument, "edge vertex out of range");
    if (u == v) throw Error(ErrorCode::InvalidArgument, "self-loops are not allowed");
    auto key = std::minmax(u, v);
    if (!seen.insert(key).second)
      throw Error(ErrorCode::InvalidArgument, "multi-edges are not allowed");
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());

  // connectivity
  std::vector<bool> visited(n, false);
  std::queue<int> bfs;
  bfs.push(graph.root);
  visited[graph.root] = true;
  int reached = 0;
  while (!bfs.empty()) {
    int u = bfs.front();
    bfs.pop();
    ++reached;
    for (int w : adj[u])
      if (!visited[w]) {
        visited[w] = true;
        bfs.push(w);
      }
  }
  if (reached != n)
    throw Error(ErrorCode::InvalidArgument, "base graph must be connected");

  TreeModel model;
  model.potential_ = graph.potential;
  model.root_ = graph.root;
  model.name_ = graph.name.empty() ? "base-graph" : graph.name;
  model.min_degree_ = n ? static_cast<int>(adj[0].size()) : 0;
  model.max_degree_ = 0;
  for (const auto& list : adj) {
    model.min_degree_ = std::min(model.min_degree_, static_cast<int>(list.size()));
    model.max_degree_ = std::max(model.max_degree_, static_cast<int>(list.size()));
  }
  if (model.min_degree_ < 2)
    throw Error(ErrorCode::InvalidArgument, "universal cover requires min degree >= 2");
  if (anderson && model.min_degree_ < 3)
    throw Error(ErrorCode::InvalidArgument, "Anderson mode requires min degree >= 3");

  // directed edge classes
  std::map<std::pair<int, int>, int> class_of;
  for (int u = 0; u < n; ++u)
    for (int v : adj[u]) {
      if (class_of.count({u, v})) continue;
      class_of[{u, v}] = static_cast<int>(model.edge_origin_.size());
      model.edge_origin_.push_back(u);
      model.edge_target_.push_back(v);
    }
  const int nb = static_cast<int>(model.edge_origin_.size());
  model.edge_reverse_.resize(nb);
  model.outgoing_.resize(nb);
  for (int b = 0; b < nb; ++b) {
    int u = model.edge_origin_[b], v = model.edge_target_[b];
    model.edge_reverse_[b] = class_of.at({v, u});
    for (int w : adj[v])
      if (w != u) model.outgoing_[b].push_back(class_of.at({v, w}));
  }
  model.vertex_edges_.resize(n);
  for (int b = 0; b < nb; ++b) model.vertex_edges_[model.edge_origin_[b]].push_back(b);
  return model;
}

TreeModel TreeModel::regular_tree(int degree, double potential) {
  if (degree < 2)
    throw Error(ErrorCode::InvalidArgument, "regular tree degree must be >= 2");
  TreeModel model;
  model.potential_ = {potential};
  model.root_ = 0;
  model.min_degree_ = model.max_degree_ = degree;
  model.edge_origin_ = {0};
  model.edge_target_ = {0};
  model.edge_reverse_ = {0};
  model.outgoing_ = {std::vector<int>(degree - 1, 0)};
  model.vertex_edges_ = {std::vector<int>(degree, 0)};
  std::ostringstream name;
  name << "regular-tree-q" << (degree - 1);
  model.name_ = name.str();
  return model;
}

namespace {

// One fixed-point sweep; returns the max defect |map(zeta) - zeta|.
double sweep(const TreeModel& model, cplx_t gamma, std::vector<cplx_t>& zeta,
             double damping) {
  const int nb = model.num_edge_classes();
  std::vector<cplx_t> mapped(nb);
  double defect = 0.0;
  for (int b = 0; b < nb; ++b) {
    cplx_t s = model.potential(model.edge_target(b)) - gamma;
    for (int child : model.outgoing(b)) s += zeta[child];
    mapped[b] = -1.0 / s;
    defect = std::max(defect, std::abs(mapped[b] - zeta[b]));
  }
  for (int b = 0; b < nb; ++b)
    zeta[b] = (1.0 - damping) * zeta[b] + damping * mapped[b];
  return defect;
}

bool iterate(const TreeModel& model, cplx_t gamma, std::vector<cplx_t>& zeta,
             const FixedPointOptions& opts, double& residual, int& iterations) {
  for (int it = 0; it < opts.max_iterations; ++it) {
    residual = sweep(model, gamma, zeta, opts.damping);
    ++iterations;
    if (residual < opts.tolerance) return true;
  }
  return false;
}

}  // namespace

GreenCache zeta_fixed_point(const TreeModel& model, cplx_t gamma,
                            const FixedPointOptions& opts) {
  if (gamma.imag() <= 0.0)
    throw Error(ErrorCode::InvalidArgument, "zeta_fixed_point requires Im gamma > 0");
  const int nb = model.num_edge_classes();
  GreenCache cache;
  cache.gamma = gamma;
  cache.zeta.assign(nb, cplx_t(0.0, -1.0));
  if (opts.initial) {
    if (static_cast<int>(opts.initial->size()) != nb)
      throw Error(ErrorCode::InvalidArgument, "warm-start size mismatch");
    cache.zeta = *opts.initial;
  }

  double residual = 0.0;
  int iterations = 0;
  if (!iterate(model, gamma, cache.zeta, opts, residual, iterations) &&
      opts.allow_homotopy) {
    // track the Herglotz branch from large eta down to the target
    cache.zeta.assign(nb, cplx_t(0.0, -1.0));
    double eta_target = gamma.imag();
    double eta = std::max(1.0, 4.0 * eta_target);
    while (true) {
      cplx_t g(gamma.real(), eta);
      if (!iterate(model, g, cache.zeta, opts, residual, iterations)) break;
      if (eta == eta_target) break;
      eta = std::max(eta_target, eta / 2.0);
    }
  }
  cache.residual = residual;
  cache.iterations = iterations;
  if (residual >= opts.tolerance) {
    std::ostringstream msg;
    msg << "zeta fixed point did not converge (residual " << residual << " at gamma "
        << gamma.real() << "+" << gamma.imag() << "i)";
    throw Error(ErrorCode::NoConvergence, msg.str());
  }
  for (const auto& z : cache.zeta) {
    if (!(z.imag() < 0.0))
      throw Error(ErrorCode::NoConvergence, "Herglotz sign lost in fixed point");
  }
  return cache;
}

const std::vector<cplx_t>& green_diagonal(const TreeModel& model, GreenCache& cache) {
  const int nv = model.num_vertex_classes();
  cache.g_diag.assign(nv, cplx_t(0.0, 0.0));
  for (int v = 0; v < nv; ++v) {
    cplx_t s = model.potential(v) - cache.gamma;
    for (int b : model.edges_at(v)) s += cache.zeta[b];
    if (std::abs(s) < 1e-14)
      throw Error(ErrorCode::DegenerateDenominator, "Green denominator vanished");
    cache.g_diag[v] = 1.0 / s;
  }
  return cache.g_diag;
}

double spectral_floor(const GreenCache& cache) {
  double z = std::numeric_limits<double>::infinity();
  for (const auto& zeta : cache.zeta) z = std::min(z, std::abs(zeta.imag()));
  return z;
}

double spectral_floor(const TreeModel& model, double lambda, double eta) {
  GreenCache cache = zeta_fixed_point(model, cplx_t(lambda, eta));
  return spectral_floor(cache);
}

double herglotz_identity_residual(const TreeModel& model, const GreenCache& cache) {
  double worst = 0.0;
  const double eta = cache.gamma.imag();
  for (int b = 0; b < model.num_edge_classes(); ++b) {
    double lhs = std::abs(cache.zeta[b].imag()) / std::norm(cache.zeta[b]);
    double rhs = eta;
    for (int child : model.outgoing(b)) rhs += std::abs(cache.zeta[child].imag());
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

double zeta_inversion_residual(const TreeModel& model, GreenCache& cache) {
  if (cache.g_diag.empty()) green_diagonal(model, cache);
  double worst = 0.0;
  for (int b = 0; b < model.num_edge_classes(); ++b) {
    cplx_t lhs = 1.0 / cache.zeta[b] - cache.zeta[model.edge_reverse(b)];
    cplx_t rhs = -1.0 / cache.g_diag[model.edge_target(b)];
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

LambdaGrid LambdaGrid::uniform(double lo, double hi, int n) {
  if (n < 1 || hi <= lo)
    throw Error(ErrorCode::InvalidArgument, "bad lambda grid");
  LambdaGrid g;
  double h = (hi - lo) / n;
  for (int i = 0; i < n; ++i) {
    g.points.push_back(lo + (i + 0.5) * h);  // midpoint rule
    g.weights.push_back(h);
  }
  return g;
}

std::vector<double> sphere_sums(const TreeModel& model, const GreenCache& cache,
                                int depth) {
  GreenCache work = cache;
  if (work.g_diag.empty()) green_diagonal(model, work);
  const double g2 = std::norm(work.g_diag[model.root()]);
  const int nb = model.num_edge_classes();
  std::vector<double> z2(nb);
  for (int b = 0; b < nb; ++b) z2[b] = std::norm(work.zeta[b]);

  std::vector<double> sums(depth + 1, 0.0);
  sums[0] = g2;
  std::vector<double> t(nb, 0.0), tn(nb, 0.0);
  for (int b : model.edges_at(model.root())) t[b] += z2[b];
  for (int r = 1; r <= depth; ++r) {
    double s = 0.0;
    for (int b = 0; b < nb; ++b) s += t[b];
    sums[r] = g2 * s;
    std::fill(tn.begin(), tn.end(), 0.0);
    for (int b = 0; b < nb; ++b) {
      if (t[b] == 0.0) continue;
      for (int child : model.outgoing(b)) tn[child] += t[b] * z2[child];
    }
    t.swap(tn);
  }
  return sums;
}

AveragedMomentResult averaged_moment(const TreeModel& model, int beta, double eta,
                                     const LambdaGrid& grid, int depth_cap) {
  if (beta < 0 || beta > 8)
    throw Error(ErrorCode::InvalidArgument, "beta must be in [0, 8]");
  if (eta <= 0.0) throw Error(ErrorCode::InvalidArgument, "eta must be positive");

  const int nb = model.num_edge_classes();
  double factorial_beta = 1.0;
  for (int i = 2; i <= beta; ++i) factorial_beta *= i;

  AveragedMomentResult result;
  std::vector<double> lambda_terms(grid.points.size(), 0.0);
  std::vector<cplx_t> warm;

  for (std::size_t li = 0; li < grid.points.size(); ++li) {
    FixedPointOptions opts;
    if (!warm.empty()) opts.initial = &warm;
    GreenCache cache = zeta_fixed_point(model, cplx_t(grid.points[li], eta), opts);
    warm = cache.zeta;
    green_diagonal(model, cache);
    const double g2 = std::norm(cache.g_diag[model.root()]);

    std::vector<double> z2(nb);
    for (int b = 0; b < nb; ++b) z2[b] = std::norm(cache.zeta[b]);
    std::vector<double> t(nb, 0.0), tn(nb, 0.0);
    for (int b : model.edges_at(model.root())) t[b] += z2[b];

    double acc = (beta == 0) ? g2 : 0.0;  // r = 0 term
    double prev_sum = 0.0;
    int r = 1;
    for (; r <= depth_cap; ++r) {
      double s = 0.0;
      for (int b = 0; b < nb; ++b) s += t[b];
      double sphere = g2 * s;
      acc += std::pow(static_cast<double>(r), beta) * sphere;

      if (r > 4 && prev_sum > 0.0) {
        double rho = s / prev_sum;
        if (rho < 1.0) {
          // tail sum_{j>=1} (r+j)^beta rho^j <= 2^beta (r^beta rho/(1-rho)
          //   + beta! rho/(1-rho)^{beta+1})
          double tail = std::pow(2.0, beta) * g2 * s *
                        (std::pow(static_cast<double>(r), beta) * rho / (1.0 - rho) +
                         factorial_beta * rho / std::pow(1.0 - rho, beta + 1));
          if (tail < 1e-10 * std::max(acc, 1e-300)) {
            result.tail_estimate = std::max(result.tail_estimate, tail);
            break;
          }
        }
      }
      prev_sum = s;
      std::fill(tn.begin(), tn.end(), 0.0);
      for (int b = 0; b < nb; ++b) {
        if (t[b] == 0.0) continue;
        for (int child : model.outgoing(b)) tn[child] += t[b] * z2[child];
      }
      t.swap(tn);
    }
    if (r > depth_cap)
      throw Error(ErrorCode::DepthInsufficient,
                  "sphere-sum tail bound not met within the depth cap");
    result.max_depth_used = std::max(result.max_depth_used, r);
    lambda_terms[li] = grid.weights[li] * acc;
  }
  result.value = std::pow(eta, beta + 1) / M_PI * pairwise_sum(lambda_terms);
  return result;
}

LowerBoundResult pertree_lower_bound(const TreeModel& model, int beta,
                                     const LambdaGrid& grid, double eta_small) {
  if (eta_small <= 0.0)
    throw Error(ErrorCode::InvalidArgument, "eta_small must be positive");
  LowerBoundResult out;
  const double norm = 1.0 / (std::pow(2.0, beta + 1) * M_PI);

  for (double eta : {eta_small, 2.0 * eta_small}) {
    std::vector<double> terms(grid.points.size(), 0.0);
    int skipped = 0;
    std::vector<cplx_t> warm;
    for (std::size_t li = 0; li < grid.points.size(); ++li) {
      try {
        FixedPointOptions opts;
        if (!warm.empty()) opts.initial = &warm;
        GreenCache cache = zeta_fixed_point(model, cplx_t(grid.points[li], eta), opts);
        warm = cache.zeta;
        green_diagonal(model, cache);
        double img = cache.g_diag[model.root()].imag();
        if (img <= 1e-6) {
          ++skipped;
          continue;
        }
        terms[li] = grid.weights[li] * std::pow(spectral_floor(cache), beta) * img;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoConvergence) throw;
        warm.clear();
        ++skipped;
      }
    }
    double v = norm * pairwise_sum(terms);
    if (eta == eta_small) {
      out.value = v;
      out.skipped_points = skipped;
    } else {
      out.value_at_2eta = v;
    }
  }
  return out;
}

namespace {

struct ConeSampler {
  const TreeModel& model;
  const std::vector<cplx_t>& periodic;
  cplx_t gamma;
  double epsilon;
  detail::SplitMix64 rng;

  cplx_t sample_edge(int b, int levels) {
    if (levels == 0) return periodic[b];
    cplx_t s = model.potential(model.edge_target(b)) + epsilon * rng.uniform_pm1() - gamma;
    for (int child : model.outgoing(b)) s += sample_edge(child, levels - 1);
    return -1.0 / s;
  }
};

}  // namespace

// First root cone expanded one level by hand so the Herglotz identity defect
// at the root edge can be recorded from the same draws.
AndersonSample anderson_sample_with_cache(const TreeModel& model, const AndersonConfig& cfg,
                                          cplx_t gamma, std::uint64_t sample_index,
                                          const std::vector<cplx_t>& periodic) {
  ConeSampler sampler{model, periodic, gamma, cfg.epsilon,
                      detail::SplitMix64(detail::mix_seed(cfg.seed, sample_index))};

  // root vertex potential first, then its cones in edge order
  double w_root = model.potential(model.root()) + cfg.epsilon * sampler.rng.uniform_pm1();

  const auto& root_edges = model.edges_at(model.root());
  AndersonSample out;
  cplx_t sum_root = w_root - gamma;
  bool herglotz = true;
  for (std::size_t bi = 0; bi < root_edges.size(); ++bi) {
    int b = root_edges[bi];
    cplx_t z;
    if (bi == 0) {
      double w_v = model.potential(model.edge_target(b)) +
                   cfg.epsilon * sampler.rng.uniform_pm1();
      cplx_t s = w_v - gamma;
      double child_im = 0.0;
      for (int child : model.outgoing(b)) {
        cplx_t zc = sampler.sample_edge(child, cfg.depth - 1);
        s += zc;
        child_im += std::abs(zc.imag());
      }
      z = -1.0 / s;
      double lhs = std::abs(z.imag()) / std::norm(z);
      out.redu_residual = std::abs(lhs - (gamma.imag() + child_im));
      out.zeta_root = z;
    } else {
      z = sampler.sample_edge(b, cfg.depth);
    }
    herglotz = herglotz && (z.imag() < 0.0);
    sum_root += z;
  }
  out.g_root = 1.0 / sum_root;
  out.herglotz_ok = herglotz && out.g_root.imag() > 0.0;
  return out;
}

AndersonSample anderson_sample(const TreeModel& model, const AndersonConfig& cfg,
                               cplx_t gamma, std::uint64_t sample_index) {
  if (gamma.imag() <= 0.0)
    throw Error(ErrorCode::InvalidArgument, "anderson_sample requires Im gamma > 0");
  if (cfg.epsilon < 0.0 || cfg.depth < 1 || cfg.samples < 1)
    throw Error(ErrorCode::InvalidArgument, "bad Anderson configuration");
  if (!model.anderson_ready())
    throw Error(ErrorCode::InvalidArgument, "Anderson mode requires min degree >= 3");
  GreenCache cache = zeta_fixed_point(model, gamma);
  return anderson_sample_with_cache(model, cfg, gamma, sample_index, cache.zeta);
}

AndersonStatistics anderson_statistics(const TreeModel& model, const AndersonConfig& cfg,
                                       double lambda, double eta,
                                       const std::vector<double>& s_list) {
  if (cfg.samples < 100)
    throw Error(ErrorCode::InvalidArgument, "anderson_statistics needs >= 100 samples");
  if (cfg.epsilon < 0.0 || cfg.depth < 1)
    throw Error(ErrorCode::InvalidArgument, "bad Anderson configuration");
  if (!model.anderson_ready())
    throw Error(ErrorCode::InvalidArgument, "Anderson mode requires min degree >= 3");
  cplx_t gamma(lambda, eta);
  GreenCache cache = zeta_fixed_point(model, gamma);

  const int n = cfg.samples;
  std::vector<double> im_g(n), redu(n);
  std::vector<char> ok(n);
  std::vector<std::vector<double>> inv_zeta(s_list.size(), std::vector<double>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    AndersonSample s = anderson_sample_with_cache(model, cfg, gamma, i, cache.zeta);
    im_g[i] = s.g_root.imag();
    redu[i] = s.redu_residual;
    ok[i] = s.herglotz_ok ? 1 : 0;
    double aim = std::abs(s.zeta_root.imag());
    for (std::size_t si = 0; si < s_list.size(); ++si)
      inv_zeta[si][i] = std::pow(aim, -s_list[si]);
  });

  auto mean_stderr = [n](const std::vector<double>& x) {
    double mean = pairwise_sum(x) / n;
    std::vector<double> dev(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dev[i] = (x[i] - mean) * (x[i] - mean);
    double var = (n > 1) ? pairwise_sum(dev) / (n - 1) : 0.0;
    return std::make_pair(mean, std::sqrt(var / n));
  };

  AndersonStatistics stats;
  stats.samples = n;
  std::tie(stats.mean_im_g, stats.stderr_im_g) = mean_stderr(im_g);
  stats.s_values = s_list;
  for (std::size_t si = 0; si < s_list.size(); ++si) {
    auto [mean, se] = mean_stderr(inv_zeta[si]);
    stats.mean_inv_im_zeta.push_back(mean);
    stats.stderr_inv_im_zeta.push_back(se);
    // heavy-tail diagnostic: top 1% of samples carrying > 50% of the mean
    std::vector<double> sorted = inv_zeta[si];
    std::sort(sorted.begin(), sorted.end());
    std::size_t top = std::max<std::size_t>(1, sorted.size() / 100);
    double top_sum = 0.0;
    for (std::size_t i = sorted.size() - top; i < sorted.size(); ++i) top_sum += sorted[i];
    stats.heavy_tail_flag.push_back(top_sum > 0.5 * pairwise_sum(sorted));
  }
  for (int i = 0; i < n; ++i) {
    if (!ok[i]) ++stats.herglotz_violations;
    stats.max_redu_residual = std::max(stats.max_redu_residual, redu[i]);
  }
  return stats;
}

}  // namespace ballistica
