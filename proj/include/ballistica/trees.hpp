#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace ballistica {

using cplx_t = std::complex<double>;

// Finite base graph (simple, undirected, connected) with a potential and a
// distinguished root vertex.
struct BaseGraph {
  int num_vertices = 0;
  std::vector<std::pair<int, int>> edges;  // 0-based vertex pairs
  std::vector<double> potential;
  int root = 0;
  std::string name;
};

// Universal cover of a finite graph, reduced to directed-edge classes: zeta
// depends only on the class of the directed edge, so all recursions run over
// the (finitely many) classes of the base graph. The (q+1)-regular tree is
// exposed directly as a single-class model.
class TreeModel {
 public:
  // Throws InvalidArgument on disconnected / multi-edge / min degree < 2
  // input (min degree >= 3 required when anderson is set).
  static TreeModel from_base_graph(const BaseGraph& graph, bool anderson = false);
  static TreeModel regular_tree(int degree, double potential = 0.0);

  int num_vertex_classes() const { return static_cast<int>(potential_.size()); }
  int num_edge_classes() const { return static_cast<int>(edge_target_.size()); }
  double potential(int vclass) const { return potential_[vclass]; }
  int root() const { return root_; }
  int min_degree() const { return min_degree_; }
  int max_degree() const { return max_degree_; }

  int edge_origin(int b) const { return edge_origin_[b]; }
  int edge_target(int b) const { return edge_target_[b]; }
  int edge_reverse(int b) const { return edge_reverse_[b]; }
  // Outgoing edge classes from the terminus of b, backtracking excluded
  // (repeated entries encode multiplicity on regular trees).
  const std::vector<int>& outgoing(int b) const { return outgoing_[b]; }
  // All edge classes leaving a vertex class.
  const std::vector<int>& edges_at(int vclass) const { return vertex_edges_[vclass]; }

  const std::string& name() const { return name_; }
  bool anderson_ready() const { return min_degree_ >= 3; }

 private:
  std::vector<double> potential_;
  std::vector<int> edge_origin_, edge_target_, edge_reverse_;
  std::vector<std::vector<int>> outgoing_;
  std::vector<std::vector<int>> vertex_edges_;
  int root_ = 0;
  int min_degree_ = 0;
  int max_degree_ = 0;
  std::string name_;
};

// Converged per-edge-class zeta values and diagonal Green function at
// gamma = lambda + i eta.
struct GreenCache {
  cplx_t gamma;
  std::vector<cplx_t> zeta;    // per edge class, Im < 0
  std::vector<cplx_t> g_diag;  // per vertex class, Im > 0
  double residual = 0.0;       // max fixed-point defect
  int iterations = 0;
};

struct FixedPointOptions {
  double tolerance = 1e-12;
  int max_iterations = 100000;
  double damping = 0.5;
  const std::vector<cplx_t>* initial = nullptr;  // warm start
  bool allow_homotopy = true;  // halve eta from 1 toward the target on stall
};

// Solves -1/zeta_{w->v} = W(v) + sum_{u in N_v \ w} zeta_{v->u} - gamma by
// damped iteration from zeta = -i. Requires Im gamma > 0. Throws
// NoConvergence with the residual in the message.
GreenCache zeta_fixed_point(const TreeModel& model, cplx_t gamma,
                            const FixedPointOptions& opts = {});

// G(v,v) = 1 / (W(v) + sum_{u ~ v} zeta_{v->u} - gamma) per vertex class;
// fills cache.g_diag. Throws DegenerateDenominator.
const std::vector<cplx_t>& green_diagonal(const TreeModel& model, GreenCache& cache);

// z_gamma: minimum of |Im zeta| over edge classes at lambda + i eta.
double spectral_floor(const TreeModel& model, double lambda, double eta);
double spectral_floor(const GreenCache& cache);

// Maximum residual of the identity |Im zeta_{w->v}| / |zeta_{w->v}|^2
//   = Im gamma + sum_{u in N_v \ w} |Im zeta_{v->u}| over edge classes.
double herglotz_identity_residual(const TreeModel& model, const GreenCache& cache);
// Maximum residual of 1/zeta_{w->v} - zeta_{v->w} = -1/G(v,v).
double zeta_inversion_residual(const TreeModel& model, GreenCache& cache);

struct LambdaGrid {
  std::vector<double> points;
  std::vector<double> weights;

  static LambdaGrid uniform(double lo, double hi, int n);
};

// Sphere sums S_r = sum_{|v| = r} |G(o, v)|^2, r = 0..depth, propagated by
// the non-backtracking multiplicative structure of off-diagonal Green values.
std::vector<double> sphere_sums(const TreeModel& model, const GreenCache& cache, int depth);

struct AveragedMomentResult {
  double value = 0.0;      // (eta^{beta+1}/pi) sum_lambda w sum_r r^beta S_r
  int max_depth_used = 0;
  double tail_estimate = 0.0;
};

// Exponentially time-averaged moment eta^beta <x^beta>_{delta_o, eta},
// evaluated by the Plancherel identity with sphere sums propagated over
// directed-edge classes. Throws DepthInsufficient when the geometric tail
// bound is not reached within depth_cap.
AveragedMomentResult averaged_moment(const TreeModel& model, int beta, double eta,
                                     const LambdaGrid& grid, int depth_cap = 2000000);

struct LowerBoundResult {
  double value = 0.0;          // quadrature of z^beta Im G(o,o) / (2^{beta+1} pi)
  double value_at_2eta = 0.0;  // Richardson consistency value
  int skipped_points = 0;      // below the Im G threshold or non-converged
};

// Transport lower bound at eta_small as a proxy for the eta -> 0 boundary
// values; grid points with Im G <= 1e-6 are excluded.
LowerBoundResult pertree_lower_bound(const TreeModel& model, int beta,
                                     const LambdaGrid& grid, double eta_small = 1e-6);

struct AndersonConfig {
  double epsilon = 0.0;  // coupling
  int depth = 10;
  int samples = 1000;
  std::uint64_t seed = 1;
  // v1 distribution: uniform on [-1, 1]
};

struct AndersonSample {
  cplx_t zeta_root;  // sampled zeta at the root edge class
  cplx_t g_root;     // sampled G(o, o)
  double redu_residual = 0.0;  // Herglotz identity defect at the root edge
  bool herglotz_ok = false;    // Im zeta_root < 0 and Im g_root > 0
};

// One draw of the finite-depth cone: fresh i.i.d. potential eps * U[-1,1]
// at every vertex, boundary seeded with the non-random fixed point.
// Deterministic given (cfg.seed, sample_index).
AndersonSample anderson_sample(const TreeModel& model, const AndersonConfig& cfg,
                               cplx_t gamma, std::uint64_t sample_index = 0);

struct AndersonStatistics {
  double mean_im_g = 0.0;
  double stderr_im_g = 0.0;
  std::vector<double> s_values;
  std::vector<double> mean_inv_im_zeta;    // E |Im zeta|^{-s}
  std::vector<double> stderr_inv_im_zeta;
  std::vector<bool> heavy_tail_flag;       // top 1% carries > 50% of the mean
  int samples = 0;
  int herglotz_violations = 0;
  double max_redu_residual = 0.0;
};

// Monte-Carlo means with standard errors over cfg.samples draws (>= 100),
// parallel over samples with per-sample seeds.
AndersonStatistics anderson_statistics(const TreeModel& model, const AndersonConfig& cfg,
                                       double lambda, double eta,
                                       const std::vector<double>& s_list);

namespace detail {
// SplitMix64 stream; uniform01 in (0,1).
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next();
  double uniform01();
  double uniform_pm1() { return 2.0 * uniform01() - 1.0; }
};
}  // namespace detail

}  // namespace ballistica
