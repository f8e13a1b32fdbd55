#include "ballistica/contfree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ballistica/error.hpp"
#include "ballistica/fft.hpp"
#include "ballistica/parallel.hpp"

namespace ballistica {

namespace {

constexpr double kEdgeMassTol = 1e-10;
constexpr double kSpectralTailTol = 1e-10;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

}  // namespace

GridFunction::GridFunction(int dim, double half_width, int points_per_axis)
    : dim_(dim), half_width_(half_width), points_(points_per_axis) {
  if (dim < 1 || dim > 3)
    throw Error(ErrorCode::InvalidArgument, "grid dimension must be 1..3");
  if (!is_pow2(points_))
    throw Error(ErrorCode::InvalidArgument, "points per axis must be a power of two");
  if (half_width <= 0.0)
    throw Error(ErrorCode::InvalidArgument, "box half-width must be positive");
  std::size_t total = 1;
  for (int j = 0; j < dim; ++j) total *= static_cast<std::size_t>(points_);
  data_.assign(total, {0.0, 0.0});
}

GridFunction GridFunction::sample(
    int dim, double half_width, int points_per_axis,
    const std::function<std::complex<double>(const std::vector<double>&)>& f) {
  GridFunction g(dim, half_width, points_per_axis);
  std::vector<double> x(dim);
  for (std::size_t flat = 0; flat < g.data_.size(); ++flat) {
    std::size_t rem = flat;
    for (int j = dim - 1; j >= 0; --j) {
      x[j] = g.coordinate(static_cast<int>(rem % points_per_axis));
      rem /= points_per_axis;
    }
    g.data_[flat] = f(x);
  }
  return g;
}

double GridFunction::coordinate(int i) const {
  return -half_width_ + i * spacing();
}

double GridFunction::frequency(int i) const {
  int j = (i < points_ / 2) ? i : i - points_;
  return M_PI / half_width_ * j;
}

std::vector<int> GridFunction::unflatten(std::size_t flat) const {
  std::vector<int> idx(dim_);
  for (int j = dim_ - 1; j >= 0; --j) {
    idx[j] = static_cast<int>(flat % points_);
    flat /= points_;
  }
  return idx;
}

double GridFunction::norm() const {
  double s = 0.0;
  for (const auto& v : data_) s += std::norm(v);
  double cell = 1.0;
  for (int j = 0; j < dim_; ++j) cell *= spacing();
  return std::sqrt(s * cell);
}

GridFunction GridFunction::normalized() const {
  GridFunction g = *this;
  double n = norm();
  if (n == 0.0) throw Error(ErrorCode::EmptyState, "cannot normalize the zero function");
  for (auto& v : g.data_) v /= n;
  return g;
}

double GridFunction::edge_mass_fraction(double fraction) const {
  int margin = std::max(1, static_cast<int>(fraction * points_));
  double edge = 0.0, total = 0.0;
  for (std::size_t flat = 0; flat < data_.size(); ++flat) {
    double w = std::norm(data_[flat]);
    total += w;
    std::vector<int> idx = unflatten(flat);
    for (int j = 0; j < dim_; ++j)
      if (idx[j] < margin || idx[j] >= points_ - margin) {
        edge += w;
        break;
      }
  }
  return total > 0.0 ? edge / total : 0.0;
}

double GridFunction::spectral_tail_fraction(double fraction) const {
  std::vector<std::complex<double>> hat = data_;
  fft_nd(hat, dim_, points_);
  int cutoff = static_cast<int>((1.0 - fraction) * (points_ / 2));
  double tail = 0.0, total = 0.0;
  for (std::size_t flat = 0; flat < hat.size(); ++flat) {
    double w = std::norm(hat[flat]);
    total += w;
    std::size_t rem = flat;
    for (int j = dim_ - 1; j >= 0; --j) {
      int i = static_cast<int>(rem % points_);
      rem /= points_;
      int signed_i = (i < points_ / 2) ? i : i - points_;
      if (std::abs(signed_i) >= cutoff) {
        tail += w;
        break;
      }
    }
  }
  return total > 0.0 ? tail / total : 0.0;
}

namespace {

void check_spectral(const GridFunction& f) {
  double tail = f.spectral_tail_fraction(0.10);
  if (tail >= kSpectralTailTol)
    throw Error(ErrorCode::AliasRisk,
                "significant spectral mass near the Nyquist frequency (" +
                    std::to_string(tail) + ")");
}

void check_edges(const GridFunction& f) {
  double edge = f.edge_mass_fraction(0.05);
  if (edge >= kEdgeMassTol)
    throw Error(ErrorCode::AliasRisk,
                "state does not decay at the box edge (mass fraction " +
                    std::to_string(edge) + ")");
}

}  // namespace

GridFunction free_evolve(const GridFunction& f, double t) {
  check_edges(f);
  check_spectral(f);
  GridFunction g = f;
  if (t == 0.0) return g;
  auto& data = g.data();
  fft_nd(data, f.dim(), f.points_per_axis());
  const int M = f.points_per_axis();
  for (std::size_t flat = 0; flat < data.size(); ++flat) {
    std::size_t rem = flat;
    double k2 = 0.0;
    for (int j = f.dim() - 1; j >= 0; --j) {
      double k = f.frequency(static_cast<int>(rem % M));
      rem /= M;
      k2 += k * k;
    }
    data[flat] *= std::polar(1.0, -t * k2);
  }
  fft_nd(data, f.dim(), M, /*inverse=*/true);
  double scale = 1.0;
  for (int j = 0; j < f.dim(); ++j) scale *= M;
  for (auto& v : data) v /= scale;
  return g;
}

double cont_free_limit(const GridFunction& f, int m) {
  if (m < 1 || m > 8)
    throw Error(ErrorCode::InvalidArgument, "moment order m must be in [1, 8]");
  check_spectral(f);
  std::vector<std::complex<double>> hat = f.data();
  fft_nd(hat, f.dim(), f.points_per_axis());
  // |f_hat|^2 in continuum normalization integrates with weight
  // (dx/sqrt(2pi))^2d * dk^d; combined constant below
  const int M = f.points_per_axis();
  double dx = f.spacing();
  double dk = 2.0 * M_PI / (M * dx);
  double weight = 1.0;
  for (int j = 0; j < f.dim(); ++j) weight *= dx * dx / (2.0 * M_PI) * dk;
  double acc = 0.0;
  for (std::size_t flat = 0; flat < hat.size(); ++flat) {
    double w = std::norm(hat[flat]);
    if (w == 0.0) continue;
    std::size_t rem = flat;
    double kpow = 0.0;
    for (int j = f.dim() - 1; j >= 0; --j) {
      double k = f.frequency(static_cast<int>(rem % M));
      rem /= M;
      kpow += ipow(k, 2 * m);
    }
    acc += kpow * w;
  }
  return ipow(4.0, m) * weight * acc;
}

double VelocityDensity::total_mass() const {
  double cell = cell_volume;
  double s = 0.0;
  for (double v : density) s += v;
  return s * cell;
}

VelocityDensity cont_limit_density(const GridFunction& f) {
  if (std::abs(f.norm() - 1.0) > 1e-9)
    throw Error(ErrorCode::NotNormalized, "cont_limit_density requires a normalized state");
  const int M = f.points_per_axis();
  const int d = f.dim();
  std::vector<std::complex<double>> hat = f.data();
  fft_nd(hat, d, M);
  double dx = f.spacing();
  double hat_weight = 1.0;  // |f_hat(k)|^2 in continuum normalization
  for (int j = 0; j < d; ++j) hat_weight *= dx * dx / (2.0 * M_PI);

  VelocityDensity out;
  out.dim = d;
  out.axis.resize(M);
  // reorder axis to ascending velocity x = 2k
  std::vector<int> order(M);
  for (int i = 0; i < M; ++i) order[i] = (i + M / 2) % M;
  for (int i = 0; i < M; ++i) out.axis[i] = 2.0 * f.frequency(order[i]);
  out.density.resize(hat.size());
  for (std::size_t flat = 0; flat < hat.size(); ++flat) {
    // density(x) = 2^{-d} |f_hat(x/2)|^2 at x = 2k, reordered per axis
    std::size_t src = 0;
    std::size_t rem = flat;
    std::vector<int> idx(d);
    for (int j = d - 1; j >= 0; --j) {
      idx[j] = static_cast<int>(rem % M);
      rem /= M;
    }
    for (int j = 0; j < d; ++j) src = src * M + order[idx[j]];
    out.density[flat] = std::pow(2.0, -d) * hat_weight * std::norm(hat[src]);
  }
  double dk = 2.0 * M_PI / (M * dx);
  out.cell_volume = 1.0;
  for (int j = 0; j < d; ++j) out.cell_volume *= 2.0 * dk;  // velocity spacing = 2 dk
  return out;
}

double position_moment_norm(const GridFunction& f, int axis, int j) {
  const int M = f.points_per_axis();
  double cell = 1.0;
  for (int a = 0; a < f.dim(); ++a) cell *= f.spacing();
  double acc = 0.0;
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    double w = std::norm(f.data()[flat]);
    if (w == 0.0) continue;
    std::size_t rem = flat;
    double x = 0.0;
    for (int a = f.dim() - 1; a >= 0; --a) {
      int i = static_cast<int>(rem % M);
      rem /= M;
      if (a == axis) x = f.coordinate(i);
    }
    acc += ipow(x, 2 * j) * w;
  }
  return std::sqrt(acc * cell);
}

double derivative_moment_norm(const GridFunction& f, int axis, int j) {
  const int M = f.points_per_axis();
  std::vector<std::complex<double>> hat = f.data();
  fft_nd(hat, f.dim(), M);
  double dx = f.spacing();
  double dk = 2.0 * M_PI / (M * dx);
  double weight = 1.0;
  for (int a = 0; a < f.dim(); ++a) weight *= dx * dx / (2.0 * M_PI) * dk;
  double acc = 0.0;
  for (std::size_t flat = 0; flat < hat.size(); ++flat) {
    double w = std::norm(hat[flat]);
    if (w == 0.0) continue;
    std::size_t rem = flat;
    double k = 0.0;
    for (int a = f.dim() - 1; a >= 0; --a) {
      int i = static_cast<int>(rem % M);
      rem /= M;
      if (a == axis) k = f.frequency(i);
    }
    acc += ipow(k, 2 * j) * w;
  }
  return std::sqrt(acc * weight);
}

InequalityReport inequality_suite(const GridFunction& f, int m) {
  if (m < 1 || m > 8)
    throw Error(ErrorCode::InvalidArgument, "moment order m must be in [1, 8]");
  InequalityReport report;
  report.min_slack = std::numeric_limits<double>::infinity();
  const double fn = f.norm();
  auto push = [&report](const std::string& name, int axis, int j, int n, double lhs,
                        double rhs) {
    double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    double slack = (rhs - lhs) / scale;
    bool ok = slack >= -1e-12;
    report.items.push_back({name, axis, j, n, lhs, rhs, ok});
    report.min_slack = std::min(report.min_slack, slack);
    if (!ok) ++report.violations;
  };

  for (int axis = 0; axis < f.dim(); ++axis) {
    std::vector<double> xm(m + 1), dm(m + 1);
    for (int j = 0; j <= m; ++j) {
      xm[j] = position_moment_norm(f, axis, j);
      dm[j] = derivative_moment_norm(f, axis, j);
    }
    for (int j = 0; j <= m; ++j) {
      // Hoelder moment interpolation, squared form
      push("moment_interpolation", axis, j, 0, xm[j] * xm[j],
           std::pow(xm[m], 2.0 * j / m) * std::pow(fn, 2.0 * (m - j) / m));
      // Gagliardo-Nirenberg
      push("gagliardo_nirenberg", axis, j, 0, dm[j],
           std::pow(dm[m], static_cast<double>(j) / m) *
               std::pow(fn, static_cast<double>(m - j) / m));
    }
    // uncertainty principle
    push("uncertainty", axis, m, 0, fn * fn, ipow(2.0, m) * xm[m] * dm[m]);
    // product upper bounds at t = 0
    for (int j = 0; j <= m; ++j)
      push("product_bound", axis, j, j, xm[j] * dm[j], ipow(2.0, m - j) * xm[m] * dm[m]);
    for (int j = 0; j <= m; ++j)
      for (int n = 0; n <= m; ++n)
        push("product_bound_mixed", axis, j, n, xm[j] * dm[n],
             std::pow(2.0, (2.0 * m - j - n) / 2.0) *
                 std::pow(xm[m], (2.0 * m + j - n) / (2.0 * m)) *
                 std::pow(dm[m], (2.0 * m - j + n) / (2.0 * m)));
  }
  if (!std::isfinite(report.min_slack)) report.min_slack = 0.0;
  report.passed = report.violations == 0;
  return report;
}

}  // namespace ballistica
