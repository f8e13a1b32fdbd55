#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ballistica/lattice.hpp"
#include "ballistica/state.hpp"

namespace ballistica {

// Uniform rectangle-rule grid on the Brillouin torus T_*^d = [0,1)^d,
// nodes theta = (k_1/N, ..., k_d/N), weight 1/N^d each.
struct ThetaGrid {
  int dim = 1;
  int resolution = 1;  // N per axis

  std::size_t num_nodes() const;
  Eigen::VectorXd node(std::size_t flat_index) const;
  std::vector<int> node_indices(std::size_t flat_index) const;
  double weight() const;
};

// nu x nu Hermitian fiber H(theta_b): entry (n,m) sums
// exp(2 pi i theta . (offset + s_m - s_n)) over edges n->m, plus Q on the
// diagonal.
Eigen::MatrixXcd fiber_matrix(const Lattice& lattice, const Eigen::VectorXd& theta);

// Analytic derivative d/d theta_i of the fiber matrix.
Eigen::MatrixXcd fiber_matrix_derivative(const Lattice& lattice,
                                         const Eigen::VectorXd& theta, int axis);

struct BandPoint {
  Eigen::VectorXd theta;
  Eigen::VectorXd energies;      // ascending
  Eigen::MatrixXcd eigenvectors; // orthonormal columns
  Eigen::MatrixXd velocities;    // nu rows, d columns: h(theta, n) in R^d
  std::vector<bool> degenerate;  // per band: velocity came from finite differences
};

// Sorted eigenvalues and orthonormal eigenvectors of a Hermitian fiber.
// Velocities are left empty. Throws EigSolverFailure on residual > 1e-10.
BandPoint band_decomposition(const Eigen::MatrixXcd& fiber, const Eigen::VectorXd& theta);

// Group velocity h(theta, n) = (1/2pi) sum_i a_i <w_n, dH/d theta_i w_n>
// (Hellmann-Feynman) for simple eigenvalues; central finite differences of
// the sorted bands (step 1e-5) when the gap to a neighbor band is below
// 1e-8, in which case the point is flagged.
void fill_velocities(const Lattice& lattice, BandPoint& point);

class BandGrid {
 public:
  static BandGrid build(const Lattice& lattice, const ThetaGrid& grid);

  const Lattice& lattice() const { return lattice_; }
  const ThetaGrid& grid() const { return grid_; }
  const std::vector<BandPoint>& points() const { return points_; }
  const BandPoint& point(std::size_t i) const { return points_[i]; }

  // Band n is flat when max - min of E_n over the grid is < 1e-9.
  bool is_flat_band(int n) const;
  double band_min(int n) const;
  double band_max(int n) const;

 private:
  BandGrid(Lattice lattice, ThetaGrid grid) : lattice_(std::move(lattice)), grid_(grid) {}
  Lattice lattice_;
  ThetaGrid grid_;
  std::vector<BandPoint> points_;
};

// Per-node Bloch transform values (U psi)_theta in C^nu.
struct BlochField {
  ThetaGrid grid;
  std::vector<Eigen::VectorXcd> values;
};

// (U psi)_theta(v_n) = sum_k exp(-2 pi i theta.(k + s_n)) psi(k, n) at every
// grid node. Throws SupportExceedsGrid when two support cells collide mod N
// (grid Parseval would fail).
BlochField bloch_transform(const Lattice& lattice, const StateVector& psi,
                           const ThetaGrid& grid);

}  // namespace ballistica
