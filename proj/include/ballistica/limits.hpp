#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "ballistica/floquet.hpp"
#include "ballistica/state.hpp"

namespace ballistica {

// Weighted point cloud { (velocity v in R^d, weight w) } representing the
// limiting velocity distribution of X_t / t.
struct LimitDistribution {
  struct Atom {
    Eigen::VectorXd velocity;
    double weight = 0.0;
  };
  std::vector<Atom> atoms;
  int grid_resolution = 0;
  std::string lattice_name;

  double total_weight() const;
};

// Exact binomial C(n, k) in integer arithmetic (n <= 16 in v1).
std::int64_t binomial(int n, int k);

// Closed-form moment limit for the adjacency matrix on Z^d:
//   d C(2m,m) |psi|^2 + sum_{q=0}^{m-1} C(2m,q) (-1)^{q+m} <psi, S_{2m-2q} psi>
// with (S_k psi)(n) = sum_j psi(n - k e_j) + psi(n + k e_j). m in [1, 8].
double zd_limit(const StateVector& psi, int dim, int m);

// Quadrature of the band-decomposition moment limit:
//   sum_theta w sum_n (sum_j h_j(theta,n)^{2m}) |P_n (U psi)_theta|^2.
double periodic_limit(const BandGrid& bands, const StateVector& psi, int m);

// One atom per (theta node, band): velocity h(theta, n), weight
// w_theta |P_n (U psi)_theta|^2. Requires |psi| = 1 (1e-9).
LimitDistribution limit_distribution(const BandGrid& bands, const StateVector& psi);

// sum over atoms of w f(v) for bounded continuous f.
double dist_moment(const LimitDistribution& dist,
                   const std::function<double(const Eigen::VectorXd&)>& f);

}  // namespace ballistica
