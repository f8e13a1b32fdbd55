#pragma once

#include <Eigen/Dense>
#include <memory>
#include <mutex>
#include <vector>

#include "ballistica/lattice.hpp"
#include "ballistica/state.hpp"

namespace ballistica {

// Finite-volume restriction of H = A + Q: all cells with |k_j - c_j| <= R,
// edges leaving the box dropped (hard wall). The matrix is real symmetric
// (adjacency entries are 1) and is stored in CSR form.
class TruncatedOperator {
 public:
  static constexpr std::size_t kMaxVertices = 4'000'000;

  static TruncatedOperator build(const Lattice& lattice, int radius,
                                 std::vector<int> center = {});

  const Lattice& lattice() const { return lattice_; }
  int radius() const { return radius_; }
  const std::vector<int>& center() const { return center_; }
  std::size_t size() const { return num_vertices_; }

  // flat index <-> (cell, vertex); checked in debug only
  std::size_t vertex_index(const std::vector<int>& cell, int index) const;
  bool contains(const std::vector<int>& cell) const;
  VertexId vertex_id(std::size_t flat) const;
  Eigen::VectorXd position(std::size_t flat) const;

  void apply(const cplx* in, cplx* out) const;  // out = H in
  double norm_bound() const { return norm_bound_; }  // D + max|Q|

  Eigen::VectorXcd to_dense_vector(const StateVector& psi) const;  // NotInBox on miss
  StateVector to_state(const Eigen::VectorXcd& amps) const;

  // Mass |psi|^2 on the outermost cell shell (max_j |k_j - c_j| = R).
  double boundary_mass(const Eigen::VectorXcd& amps) const;

  // Dense spectral factorization, computed once on first use.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& dense_factorization() const;

 private:
  explicit TruncatedOperator(Lattice lattice) : lattice_(std::move(lattice)) {}

  struct DenseCache {
    std::once_flag once;
    std::unique_ptr<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>> solver;
  };

  Lattice lattice_;
  int radius_ = 0;
  std::vector<int> center_;
  std::size_t cells_per_axis_ = 0;
  std::size_t num_cells_ = 0;
  std::size_t num_vertices_ = 0;
  double norm_bound_ = 0.0;
  std::vector<std::size_t> row_start_;
  std::vector<std::size_t> cols_;
  std::vector<double> diag_;  // Q values per vertex

  mutable std::unique_ptr<DenseCache> dense_cache_;
};

enum class EvolveMethod { Auto, Dense, Chebyshev };

// psi_t = exp(-i t H_R) psi. Auto uses the dense factorization when the box
// dimension is <= 6000 and a Chebyshev expansion otherwise, with the
// truncation order chosen so the uniform remainder is < 1e-10.
Eigen::VectorXcd evolve_state(const TruncatedOperator& op, const Eigen::VectorXcd& psi,
                              double t, EvolveMethod method = EvolveMethod::Auto);
StateVector evolve_state(const TruncatedOperator& op, const StateVector& psi, double t,
                         EvolveMethod method = EvolveMethod::Auto);

// sum_v sum_j (x_j(v) - origin_j)^{2m} |psi(v)|^2 over Cartesian positions.
double moment(const TruncatedOperator& op, const Eigen::VectorXcd& amps, int m,
              const Eigen::VectorXd& origin = Eigen::VectorXd());
double moment(const Lattice& lattice, const StateVector& psi, int m,
              const Eigen::VectorXd& origin = Eigen::VectorXd());

// |x|_2-moment norms: || |x|^j psi || = (sum_v |x(v)|_2^{2j} |psi|^2)^{1/2}.
double abs_moment_norm(const TruncatedOperator& op, const Eigen::VectorXcd& amps, int j);

struct CurvePoint {
  double t = 0.0;
  double ratio = 0.0;          // moment / t^{2m}
  double boundary_mass = 0.0;  // |psi_t|^2 on the outermost shell
  bool flagged = false;        // boundary mass >= 1e-8
  int box_radius = 0;
};

// For each t, sizes a box R >= safety (L D t + support radius), evolves and
// records moment/t^{2m} plus the boundary mass. Throws BoxTooLarge.
std::vector<CurvePoint> ballistic_curve(const Lattice& lattice, const StateVector& psi,
                                        int m, const std::vector<double>& times,
                                        double safety,
                                        EvolveMethod method = EvolveMethod::Auto);

struct EmpiricalDist {
  double t = 0.0;
  struct Atom {
    Eigen::VectorXd velocity;  // position / t
    double weight = 0.0;
  };
  std::vector<Atom> atoms;
  double leak = 0.0;

  double total_weight() const;
  // Probability mass with any |v_j| > half_width.
  double mass_outside_box(double half_width) const;
};

// nu_t^psi: atoms (position(v)/t, |psi_t(v)|^2). Requires t > 0, |psi| = 1.
EmpiricalDist empirical_distribution(const TruncatedOperator& op,
                                     const Eigen::VectorXcd& amps, double t);

struct UpperBoundReport {
  struct Sample {
    double t;
    double moment_root;   // moment(psi_t, m)^{1/2}
    double bound;         // (1 + slack) D^m t^m |psi| + C_fit
    bool ok;
  };
  int m = 0;
  double c_fit = 0.0;         // fitted over the first half of the times
  double slack = 0.01;
  std::vector<Sample> samples;          // checked on the second half
  int interpolation_violations = 0;     // Hoelder chain failures across all t
  double min_interpolation_slack = 0.0;
  bool passed = false;
};

// Checks moment(psi_t, m)^{1/2} <= (1+slack) D^m t^m |psi| + C at sampled
// times (C fitted on the first half of the times, asserted on the rest) and
// the interpolation chain || |x|^j psi_t ||^m <= || |x|^m psi_t ||^j |psi_t|^{m-j}
// exactly at every sampled t.
UpperBoundReport upper_bound_check(const Lattice& lattice, const StateVector& psi, int m,
                                   const std::vector<double>& times, double slack = 0.01,
                                   EvolveMethod method = EvolveMethod::Auto);
// Same check on a caller-provided box (reused across states and orders).
UpperBoundReport upper_bound_check(const TruncatedOperator& op, const StateVector& psi,
                                   int m, const std::vector<double>& times,
                                   double slack = 0.01,
                                   EvolveMethod method = EvolveMethod::Auto);

namespace detail {
// J_0..J_n at x >= 0 by downward (Miller) recurrence.
std::vector<double> bessel_j_array(int n, double x);
// Box radius for upper_bound_check: certified per-axis speed plus a
// dispersive t^(1/3) margin; validity is confirmed by the boundary mass.
int dispersive_box_radius(const Lattice& lattice, const StateVector& psi, double t);
}  // namespace detail

}  // namespace ballistica
