#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace ballistica {

// Sampled wave function on a periodic spectral grid standing in for R^d:
// box [-X, X)^d, M points per axis (power of two), grid spacing 2X/M.
// Frequencies per axis are k = (pi/X) j with j in [-M/2, M/2).
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(int dim, double half_width, int points_per_axis);

  // Sample a closure f(x) on the grid.
  static GridFunction sample(int dim, double half_width, int points_per_axis,
                             const std::function<std::complex<double>(const std::vector<double>&)>& f);

  int dim() const { return dim_; }
  double half_width() const { return half_width_; }
  int points_per_axis() const { return points_; }
  double spacing() const { return 2.0 * half_width_ / points_; }
  std::size_t size() const { return data_.size(); }

  std::vector<std::complex<double>>& data() { return data_; }
  const std::vector<std::complex<double>>& data() const { return data_; }

  double coordinate(int grid_index) const;   // x of a 1d index along an axis
  double frequency(int grid_index) const;    // k of a 1d index (FFT order)
  std::vector<int> unflatten(std::size_t flat) const;

  double norm() const;          // discrete L2 norm
  GridFunction normalized() const;

  // Relative |f|^2 mass in the outer `fraction` of the spatial box.
  double edge_mass_fraction(double fraction = 0.05) const;
  // Relative spectral mass in the outer `fraction` of the frequency box.
  double spectral_tail_fraction(double fraction = 0.10) const;

 private:
  int dim_ = 1;
  double half_width_ = 1.0;
  int points_ = 2;
  std::vector<std::complex<double>> data_;
};

// exp(i t Laplacian) f: multiply the DFT by exp(-i t |k|^2) and invert.
// Throws AliasRisk when the state touches the box edge or carries spectral
// mass near the Nyquist frequency.
GridFunction free_evolve(const GridFunction& f, double t);

// 4^m sum_j || k_j^m f_hat ||^2 computed spectrally. Throws AliasRisk.
double cont_free_limit(const GridFunction& f, int m);

// Limiting velocity density x -> 2^{-d} |f_hat(x/2)|^2, returned as samples
// on the velocity grid x = 2k. Requires |f| = 1.
struct VelocityDensity {
  int dim = 1;
  std::vector<double> axis;     // velocity samples along one axis (sorted)
  std::vector<double> density;  // density values, row-major over axes
  double cell_volume = 0.0;

  double total_mass() const;
};
VelocityDensity cont_limit_density(const GridFunction& f);

struct InequalityReport {
  struct Item {
    std::string name;
    int axis;
    int j, n;
    double lhs, rhs;
    bool ok;
  };
  std::vector<Item> items;
  int violations = 0;
  double min_slack = 0.0;  // min of (rhs - lhs) / scale over all items
  bool passed = false;
};

// Checks, per axis k and all j <= m: the Hoelder moment interpolation, the
// Gagliardo-Nirenberg chain, the uncertainty principle |f|^2 <= 2^m |x^m f||D^m f|,
// and the t = 0 product bounds. Tolerates -1e-12 relative slack for roundoff.
InequalityReport inequality_suite(const GridFunction& f, int m);

// || x_k^j f || and || D_k^j f || (spectral), used by the suite and tests.
double position_moment_norm(const GridFunction& f, int axis, int j);
double derivative_moment_norm(const GridFunction& f, int axis, int j);

}  // namespace ballistica
