#include "ballistica/limits.hpp"

#include <cmath>
#include <map>

#include "ballistica/error.hpp"
#include "ballistica/parallel.hpp"

namespace ballistica {

namespace {
constexpr int kMaxMomentOrder = 8;  // binomials stay exact in int64

void check_m(int m) {
  if (m < 1 || m > kMaxMomentOrder)
    throw Error(ErrorCode::InvalidArgument, "moment order m must be in [1, 8]");
}

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}
}  // namespace

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  k = std::min(k, n - k);
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double LimitDistribution::total_weight() const {
  std::vector<double> w;
  w.reserve(atoms.size());
  for (const auto& a : atoms) w.push_back(a.weight);
  return pairwise_sum(w);
}

double zd_limit(const StateVector& psi, int dim, int m) {
  check_m(m);
  if (psi.empty() || psi.norm() == 0.0)
    throw Error(ErrorCode::EmptyState, "zd_limit needs a nonzero state");
  if (psi.dim() != dim)
    throw Error(ErrorCode::InvalidArgument, "state dimension mismatch");

  std::map<std::vector<int>, cplx> amp;
  for (const auto& e : psi.entries()) {
    if (e.index != 0)
      throw Error(ErrorCode::InvalidArgument, "zd_limit expects a single-vertex cell");
    amp[e.cell] += e.amp;
  }

  // <psi, S_k psi> with (S_k psi)(n) = sum_j psi(n - k e_j) + psi(n + k e_j)
  auto s_inner = [&](int k) {
    double acc = 0.0;
    for (const auto& [cell, a] : amp) {
      for (int j = 0; j < dim; ++j) {
        for (int sgn : {-1, +1}) {
          std::vector<int> shifted = cell;
          shifted[j] += sgn * k;
          auto it = amp.find(shifted);
          if (it != amp.end()) acc += std::real(std::conj(a) * it->second);
        }
      }
    }
    return acc;
  };

  double n2 = psi.squared_norm();
  double result = static_cast<double>(dim) * static_cast<double>(binomial(2 * m, m)) * n2;
  for (int q = 0; q <= m - 1; ++q) {
    double sign = ((q + m) % 2 == 0) ? 1.0 : -1.0;
    result += static_cast<double>(binomial(2 * m, q)) * sign * s_inner(2 * m - 2 * q);
  }
  return result;
}

double periodic_limit(const BandGrid& bands, const StateVector& psi, int m) {
  check_m(m);
  if (psi.empty() || psi.norm() == 0.0)
    throw Error(ErrorCode::EmptyState, "periodic_limit needs a nonzero state");
  BlochField field = bloch_transform(bands.lattice(), psi, bands.grid());
  const int nu = bands.lattice().num_cell_vertices();
  const int d = bands.lattice().dim();
  const std::size_t n = bands.grid().num_nodes();
  const double w = bands.grid().weight();

  std::vector<double> node_vals(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    const BandPoint& p = bands.point(i);
    const Eigen::VectorXcd& u = field.values[i];
    double acc = 0.0;
    for (int band = 0; band < nu; ++band) {
      double vpow = 0.0;
      for (int j = 0; j < d; ++j) vpow += ipow(p.velocities(band, j), 2 * m);
      double proj = std::norm(cplx(p.eigenvectors.col(band).dot(u)));
      acc += vpow * proj;
    }
    node_vals[i] = w * acc;
  });
  return pairwise_sum(node_vals);
}

LimitDistribution limit_distribution(const BandGrid& bands, const StateVector& psi) {
  if (std::abs(psi.norm() - 1.0) > 1e-9)
    throw Error(ErrorCode::NotNormalized, "limit_distribution requires a normalized state");
  BlochField field = bloch_transform(bands.lattice(), psi, bands.grid());
  const int nu = bands.lattice().num_cell_vertices();
  const std::size_t n = bands.grid().num_nodes();
  const double w = bands.grid().weight();

  LimitDistribution dist;
  dist.grid_resolution = bands.grid().resolution;
  dist.lattice_name = bands.lattice().spec().name;
  dist.atoms.resize(n * nu);
  parallel_for(n, [&](std::size_t i) {
    const BandPoint& p = bands.point(i);
    const Eigen::VectorXcd& u = field.values[i];
    for (int band = 0; band < nu; ++band) {
      auto& atom = dist.atoms[i * nu + band];
      atom.velocity = p.velocities.row(band).transpose();
      atom.weight = w * std::norm(cplx(p.eigenvectors.col(band).dot(u)));
    }
  });
  return dist;
}

double dist_moment(const LimitDistribution& dist,
                   const std::function<double(const Eigen::VectorXd&)>& f) {
  std::vector<double> vals;
  vals.reserve(dist.atoms.size());
  for (const auto& a : dist.atoms) vals.push_back(a.weight * f(a.velocity));
  return pairwise_sum(vals);
}

}  // namespace ballistica
