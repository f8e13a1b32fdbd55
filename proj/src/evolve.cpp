#include "ballistica/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ballistica/error.hpp"
#include "ballistica/parallel.hpp"

namespace ballistica {

namespace {

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

std::size_t checked_box_size(int d, int radius, int nu) {
  std::size_t cells = 1;
  std::size_t extent = 2 * static_cast<std::size_t>(radius) + 1;
  for (int j = 0; j < d; ++j) {
    if (cells > TruncatedOperator::kMaxVertices / extent)
      throw Error(ErrorCode::BoxTooLarge, "truncation box exceeds the vertex cap");
    cells *= extent;
  }
  if (cells > TruncatedOperator::kMaxVertices / nu)
    throw Error(ErrorCode::BoxTooLarge, "truncation box exceeds the vertex cap");
  return cells;
}

}  // namespace

TruncatedOperator TruncatedOperator::build(const Lattice& lattice, int radius,
                                           std::vector<int> center) {
  if (radius < 1) throw Error(ErrorCode::InvalidArgument, "box radius must be >= 1");
  const int d = lattice.dim();
  const int nu = lattice.num_cell_vertices();
  if (center.empty()) center.assign(d, 0);
  if (static_cast<int>(center.size()) != d)
    throw Error(ErrorCode::InvalidArgument, "center dimension mismatch");

  TruncatedOperator op(lattice);
  op.dense_cache_ = std::make_unique<DenseCache>();
  op.radius_ = radius;
  op.center_ = std::move(center);
  op.cells_per_axis_ = 2 * static_cast<std::size_t>(radius) + 1;
  op.num_cells_ = checked_box_size(d, radius, nu);
  op.num_vertices_ = op.num_cells_ * nu;

  const auto& spec = lattice.spec();
  double max_q = 0.0;
  for (double q : spec.potential) max_q = std::max(max_q, std::abs(q));
  op.norm_bound_ = lattice.max_degree() + max_q;

  std::vector<std::vector<const EdgeSpec*>> by_origin(nu);
  for (const auto& e : spec.edges) by_origin[e.i].push_back(&e);

  op.row_start_.assign(op.num_vertices_ + 1, 0);
  op.diag_.resize(op.num_vertices_);
  // two passes: count, then fill
  std::vector<int> cell(d);
  auto decode_cell = [&](std::size_t c) {
    for (int j = d - 1; j >= 0; --j) {
      cell[j] = static_cast<int>(c % op.cells_per_axis_) - radius + op.center_[j];
      c /= op.cells_per_axis_;
    }
  };
  std::vector<int> target(d);
  for (std::size_t c = 0; c < op.num_cells_; ++c) {
    decode_cell(c);
    for (int vi = 0; vi < nu; ++vi) {
      std::size_t row = c * nu + vi;
      op.diag_[row] = spec.potential[vi];
      std::size_t cnt = 0;
      for (const EdgeSpec* e : by_origin[vi]) {
        bool inside = true;
        for (int j = 0; j < d; ++j) {
          target[j] = cell[j] + e->offset[j];
          if (std::abs(target[j] - op.center_[j]) > radius) { inside = false; break; }
        }
        if (inside) ++cnt;
      }
      op.row_start_[row + 1] = cnt;
    }
  }
  for (std::size_t r = 0; r < op.num_vertices_; ++r) op.row_start_[r + 1] += op.row_start_[r];
  op.cols_.resize(op.row_start_.back());
  for (std::size_t c = 0; c < op.num_cells_; ++c) {
    decode_cell(c);
    for (int vi = 0; vi < nu; ++vi) {
      std::size_t row = c * nu + vi;
      std::size_t at = op.row_start_[row];
      for (const EdgeSpec* e : by_origin[vi]) {
        bool inside = true;
        for (int j = 0; j < d; ++j) {
          target[j] = cell[j] + e->offset[j];
          if (std::abs(target[j] - op.center_[j]) > radius) { inside = false; break; }
        }
        if (!inside) continue;
        std::size_t tc = 0;
        for (int j = 0; j < d; ++j)
          tc = tc * op.cells_per_axis_ +
               static_cast<std::size_t>(target[j] - op.center_[j] + radius);
        op.cols_[at++] = tc * nu + e->j;
      }
    }
  }
  return op;
}

bool TruncatedOperator::contains(const std::vector<int>& cell) const {
  for (int j = 0; j < lattice_.dim(); ++j)
    if (std::abs(cell[j] - center_[j]) > radius_) return false;
  return true;
}

std::size_t TruncatedOperator::vertex_index(const std::vector<int>& cell, int index) const {
  std::size_t c = 0;
  for (int j = 0; j < lattice_.dim(); ++j)
    c = c * cells_per_axis_ + static_cast<std::size_t>(cell[j] - center_[j] + radius_);
  return c * lattice_.num_cell_vertices() + index;
}

VertexId TruncatedOperator::vertex_id(std::size_t flat) const {
  const int d = lattice_.dim();
  const int nu = lattice_.num_cell_vertices();
  VertexId v;
  v.index = static_cast<int>(flat % nu);
  std::size_t c = flat / nu;
  v.cell.resize(d);
  for (int j = d - 1; j >= 0; --j) {
    v.cell[j] = static_cast<int>(c % cells_per_axis_) - radius_ + center_[j];
    c /= cells_per_axis_;
  }
  return v;
}

Eigen::VectorXd TruncatedOperator::position(std::size_t flat) const {
  return lattice_.position(vertex_id(flat));
}

void TruncatedOperator::apply(const cplx* in, cplx* out) const {
  const std::size_t n = num_vertices_;
  const std::size_t chunk = 8192;
  const std::size_t nchunks = (n + chunk - 1) / chunk;
  parallel_for(nchunks, [&](std::size_t b) {
    std::size_t lo = b * chunk, hi = std::min(n, lo + chunk);
    for (std::size_t r = lo; r < hi; ++r) {
      cplx acc = diag_[r] * in[r];
      for (std::size_t k = row_start_[r]; k < row_start_[r + 1]; ++k) acc += in[cols_[k]];
      out[r] = acc;
    }
  });
}

Eigen::VectorXcd TruncatedOperator::to_dense_vector(const StateVector& psi) const {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(num_vertices_);
  for (const auto& e : psi.entries()) {
    if (!contains(e.cell))
      throw Error(ErrorCode::NotInBox, "state support leaves the truncation box");
    v[vertex_index(e.cell, e.index)] += e.amp;
  }
  return v;
}

StateVector TruncatedOperator::to_state(const Eigen::VectorXcd& amps) const {
  StateVector psi(lattice_.dim());
  for (std::size_t i = 0; i < num_vertices_; ++i) {
    if (amps[i] != cplx(0.0, 0.0)) {
      VertexId v = vertex_id(i);
      psi.add(v.cell, v.index, amps[i]);
    }
  }
  psi.finalize();
  return psi;
}

double TruncatedOperator::boundary_mass(const Eigen::VectorXcd& amps) const {
  std::vector<double> vals;
  for (std::size_t i = 0; i < num_vertices_; ++i) {
    VertexId v = vertex_id(i);
    int mx = 0;
    for (int j = 0; j < lattice_.dim(); ++j)
      mx = std::max(mx, std::abs(v.cell[j] - center_[j]));
    if (mx == radius_) vals.push_back(std::norm(amps[i]));
  }
  return pairwise_sum(vals);
}

const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>&
TruncatedOperator::dense_factorization() const {
  std::call_once(dense_cache_->once, [&] {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(num_vertices_, num_vertices_);
    for (std::size_t r = 0; r < num_vertices_; ++r) {
      H(r, r) = diag_[r];
      for (std::size_t k = row_start_[r]; k < row_start_[r + 1]; ++k) H(r, cols_[k]) += 1.0;
    }
    dense_cache_->solver = std::make_unique<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>>(H);
    if (dense_cache_->solver->info() != Eigen::Success)
      throw Error(ErrorCode::EigSolverFailure, "dense factorization failed");
  });
  return *dense_cache_->solver;
}

namespace detail {

std::vector<double> bessel_j_array(int n, double x) {
  std::vector<double> j(n + 1, 0.0);
  if (x == 0.0) {
    j[0] = 1.0;
    return j;
  }
  // downward Miller recurrence, normalized with J_0 + 2 sum_k J_{2k} = 1
  int start = n + 40 + static_cast<int>(2.0 * std::sqrt(static_cast<double>(n) + x));
  std::vector<double> work(start + 2, 0.0);
  work[start + 1] = 0.0;
  work[start] = 1e-30;
  for (int k = start; k >= 1; --k) {
    work[k - 1] = (2.0 * k / x) * work[k] - work[k + 1];
    if (std::abs(work[k - 1]) > 1e250) {
      for (int i = k - 1; i <= start + 1; ++i) work[i] *= 1e-250;
    }
  }
  double norm = work[0];
  for (int k = 2; k <= start; k += 2) norm += 2.0 * work[k];
  for (int k = 0; k <= n; ++k) j[k] = work[k] / norm;
  return j;
}

int dispersive_box_radius(const Lattice& lattice, const StateVector& psi, double t) {
  double speed = 0.0;
  for (int j = 0; j < lattice.dim(); ++j)
    speed = std::max(speed, lattice.axis_speed_bound(j));
  double z = std::max(speed * std::abs(t), 1.0);
  double r = speed * std::abs(t) + 10.0 * std::cbrt(z) + 10.0 + psi.support_radius();
  return static_cast<int>(std::ceil(r));
}

}  // namespace detail

namespace {

Eigen::VectorXcd evolve_dense(const TruncatedOperator& op, const Eigen::VectorXcd& psi,
                              double t) {
  const auto& es = op.dense_factorization();
  Eigen::VectorXcd coeffs = es.eigenvectors().transpose() * psi;
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    coeffs[i] *= std::polar(1.0, -t * es.eigenvalues()[i]);
  return es.eigenvectors() * coeffs;
}

Eigen::VectorXcd evolve_chebyshev(const TruncatedOperator& op, const Eigen::VectorXcd& psi,
                                  double t) {
  const double b = std::max(op.norm_bound(), 1e-12);
  const double z = std::abs(t) * b;
  if (z == 0.0) return psi;

  int kmax = static_cast<int>(std::ceil(z + 14.0 * std::cbrt(z) + 60.0));
  std::vector<double> bj = detail::bessel_j_array(kmax, z);
  // smallest K with uniform tail sum_{k>K} 2|J_k| < 1e-10
  std::vector<double> tail(kmax + 2, 0.0);
  for (int k = kmax; k >= 0; --k) tail[k] = tail[k + 1] + 2.0 * std::abs(bj[k]);
  int K = kmax;
  for (int k = 0; k <= kmax; ++k) {
    if (tail[k + 1] < 1e-10) { K = k; break; }
  }

  const double sgn = (t >= 0.0) ? -1.0 : 1.0;  // (sgn i)^k with e^{-itH}, t>=0
  const std::size_t n = op.size();
  Eigen::VectorXcd phi0 = psi;
  Eigen::VectorXcd phi1(n), phi2(n), acc(n), tmp(n);

  auto apply_scaled = [&](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
    op.apply(in.data(), out.data());
    out /= b;
  };

  cplx ik = cplx(1.0, 0.0);  // (sgn*i)^k
  acc = bj[0] * phi0;
  if (K >= 1) {
    apply_scaled(phi0, phi1);
    ik *= cplx(0.0, sgn);
    acc += 2.0 * bj[1] * ik * phi1;
    for (int k = 2; k <= K; ++k) {
      apply_scaled(phi1, tmp);
      phi2 = 2.0 * tmp - phi0;
      ik *= cplx(0.0, sgn);
      acc += 2.0 * bj[k] * ik * phi2;
      phi0.swap(phi1);
      phi1.swap(phi2);
    }
  }
  return acc;
}

}  // namespace

Eigen::VectorXcd evolve_state(const TruncatedOperator& op, const Eigen::VectorXcd& psi,
                              double t, EvolveMethod method) {
  if (static_cast<std::size_t>(psi.size()) != op.size())
    throw Error(ErrorCode::NotInBox, "state vector does not match the box");
  if (t == 0.0) return psi;
  EvolveMethod m = method;
  if (m == EvolveMethod::Auto)
    m = (op.size() <= 6000) ? EvolveMethod::Dense : EvolveMethod::Chebyshev;
  Eigen::VectorXcd out =
      (m == EvolveMethod::Dense) ? evolve_dense(op, psi, t) : evolve_chebyshev(op, psi, t);
  double n0 = psi.norm(), n1 = out.norm();
  if (n0 > 0.0 && std::abs(n1 - n0) > 1e-9 * std::max(1.0, n0))
    throw Error(ErrorCode::EigSolverFailure, "propagator lost unitarity");
  return out;
}

StateVector evolve_state(const TruncatedOperator& op, const StateVector& psi, double t,
                         EvolveMethod method) {
  return op.to_state(evolve_state(op, op.to_dense_vector(psi), t, method));
}

double moment(const TruncatedOperator& op, const Eigen::VectorXcd& amps, int m,
              const Eigen::VectorXd& origin) {
  const int d = op.lattice().dim();
  Eigen::VectorXd o = origin.size() ? origin : Eigen::VectorXd::Zero(d);
  std::vector<double> vals;
  vals.reserve(op.size());
  for (std::size_t i = 0; i < op.size(); ++i) {
    double w = std::norm(amps[i]);
    if (w == 0.0) continue;
    Eigen::VectorXd x = op.position(i) - o;
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += ipow(x[j], 2 * m);
    vals.push_back(s * w);
  }
  return pairwise_sum(vals);
}

double moment(const Lattice& lattice, const StateVector& psi, int m,
              const Eigen::VectorXd& origin) {
  const int d = lattice.dim();
  Eigen::VectorXd o = origin.size() ? origin : Eigen::VectorXd::Zero(d);
  std::vector<double> vals;
  vals.reserve(psi.size());
  for (const auto& e : psi.entries()) {
    Eigen::VectorXd x = lattice.position({e.cell, e.index}) - o;
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += ipow(x[j], 2 * m);
    vals.push_back(s * std::norm(e.amp));
  }
  return pairwise_sum(vals);
}

double abs_moment_norm(const TruncatedOperator& op, const Eigen::VectorXcd& amps, int j) {
  std::vector<double> vals;
  vals.reserve(op.size());
  for (std::size_t i = 0; i < op.size(); ++i) {
    double w = std::norm(amps[i]);
    if (w == 0.0) continue;
    double r2 = op.position(i).squaredNorm();
    vals.push_back(std::pow(r2, j) * w);
  }
  return std::sqrt(pairwise_sum(vals));
}

std::vector<CurvePoint> ballistic_curve(const Lattice& lattice, const StateVector& psi,
                                        int m, const std::vector<double>& times,
                                        double safety, EvolveMethod method) {
  if (times.empty()) throw Error(ErrorCode::InvalidArgument, "empty time list");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (times[i] <= times[i - 1])
      throw Error(ErrorCode::InvalidArgument, "times must be ascending");
  if (times.front() <= 0.0) throw Error(ErrorCode::ZeroTime, "times must be positive");

  const double ld = lattice.max_edge_length() * lattice.max_degree();
  std::vector<CurvePoint> out;
  for (double t : times) {
    int radius = std::max(psi.support_radius() + 1,
                          static_cast<int>(std::ceil(safety * (ld * t + psi.support_radius()))));
    TruncatedOperator op = TruncatedOperator::build(lattice, radius);
    Eigen::VectorXcd v = op.to_dense_vector(psi);
    Eigen::VectorXcd vt = evolve_state(op, v, t, method);
    CurvePoint p;
    p.t = t;
    p.box_radius = radius;
    p.ratio = moment(op, vt, m) / ipow(t, 2 * m);
    p.boundary_mass = op.boundary_mass(vt);
    p.flagged = p.boundary_mass >= 1e-8;
    out.push_back(p);
  }
  return out;
}

double EmpiricalDist::total_weight() const {
  std::vector<double> w;
  w.reserve(atoms.size());
  for (const auto& a : atoms) w.push_back(a.weight);
  return pairwise_sum(w);
}

double EmpiricalDist::mass_outside_box(double half_width) const {
  std::vector<double> w;
  for (const auto& a : atoms) {
    bool outside = false;
    for (Eigen::Index j = 0; j < a.velocity.size(); ++j)
      if (std::abs(a.velocity[j]) > half_width) { outside = true; break; }
    if (outside) w.push_back(a.weight);
  }
  return pairwise_sum(w);
}

EmpiricalDist empirical_distribution(const TruncatedOperator& op,
                                     const Eigen::VectorXcd& amps, double t) {
  if (t <= 0.0) throw Error(ErrorCode::ZeroTime, "empirical distribution needs t > 0");
  double total = amps.squaredNorm();
  if (std::abs(std::sqrt(total) - 1.0) > 1e-9)
    throw Error(ErrorCode::NotNormalized, "empirical distribution requires a normalized state");
  EmpiricalDist dist;
  dist.t = t;
  const double drop = 1e-16 * total;
  double kept = 0.0;
  for (std::size_t i = 0; i < op.size(); ++i) {
    double w = std::norm(amps[i]);
    if (w <= drop) continue;
    dist.atoms.push_back({op.position(i) / t, w});
    kept += w;
  }
  dist.leak = total - kept;
  return dist;
}

UpperBoundReport upper_bound_check(const Lattice& lattice, const StateVector& psi, int m,
                                   const std::vector<double>& times, double slack,
                                   EvolveMethod method) {
  if (times.empty()) throw Error(ErrorCode::InvalidArgument, "empty time list");
  const double t_max = *std::max_element(times.begin(), times.end());
  TruncatedOperator op =
      TruncatedOperator::build(lattice, detail::dispersive_box_radius(lattice, psi, t_max));
  return upper_bound_check(op, psi, m, times, slack, method);
}

UpperBoundReport upper_bound_check(const TruncatedOperator& op, const StateVector& psi,
                                   int m, const std::vector<double>& times, double slack,
                                   EvolveMethod method) {
  if (psi.empty()) throw Error(ErrorCode::EmptyState, "upper_bound_check needs a state");
  if (times.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "need at least two sample times");

  UpperBoundReport report;
  report.m = m;
  report.slack = slack;
  report.min_interpolation_slack = std::numeric_limits<double>::infinity();

  const Lattice& lattice = op.lattice();
  Eigen::VectorXcd v0 = op.to_dense_vector(psi);
  const double psi_norm = v0.norm();
  const double dm = ipow(lattice.max_degree(), m);

  struct Row {
    double t, root, bmass;
  };
  std::vector<Row> rows;
  for (double t : times) {
    Eigen::VectorXcd vt = evolve_state(op, v0, t, method);
    Row r{t, std::sqrt(moment(op, vt, m)), op.boundary_mass(vt)};
    rows.push_back(r);

    // Hoelder chain || |x|^j psi_t ||^m <= || |x|^m psi_t ||^j |psi_t|^{m-j}
    double am = abs_moment_norm(op, vt, m);
    double a0 = vt.norm();
    for (int j = 1; j < m; ++j) {
      double lhs = std::pow(abs_moment_norm(op, vt, j), m);
      double rhs = std::pow(am, j) * std::pow(a0, m - j);
      double s = (rhs - lhs) / std::max(rhs, 1e-300);
      report.min_interpolation_slack = std::min(report.min_interpolation_slack, s);
      if (s < -1e-12) ++report.interpolation_violations;
    }
  }

  // C(psi, m): fitted over the first half of the times, asserted on the rest
  std::size_t half = rows.size() / 2;
  double c_fit = 0.0;
  for (std::size_t i = 0; i < half; ++i)
    c_fit = std::max(c_fit, rows[i].root - (1.0 + slack) * dm * ipow(rows[i].t, m) * psi_norm);
  report.c_fit = c_fit;

  bool all_ok = true;
  for (std::size_t i = half; i < rows.size(); ++i) {
    double bound = (1.0 + slack) * dm * ipow(rows[i].t, m) * psi_norm + c_fit;
    bool ok = rows[i].root <= bound * (1.0 + 1e-12) && rows[i].bmass < 1e-9;
    all_ok = all_ok && ok;
    report.samples.push_back({rows[i].t, rows[i].root, bound, ok});
  }
  if (!std::isfinite(report.min_interpolation_slack)) report.min_interpolation_slack = 0.0;
  report.passed = all_ok && report.interpolation_violations == 0;
  return report;
}

}  // namespace ballistica
