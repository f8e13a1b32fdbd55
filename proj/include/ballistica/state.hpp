#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "ballistica/lattice.hpp"

namespace ballistica {

using cplx = std::complex<double>;

// Sparse complex amplitudes on lattice vertices, keyed by (cell offset,
// cell-vertex index). Entries are kept in canonical (lexicographic) order
// with duplicates merged; the norm is cached.
class StateVector {
 public:
  struct Entry {
    std::vector<int> cell;
    int index = 0;
    cplx amp;
  };

  StateVector() = default;
  explicit StateVector(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  void add(const std::vector<int>& cell, int index, cplx amp);
  void finalize();  // sort, merge duplicates, drop exact zeros, cache norm

  double norm() const { return norm_; }
  double squared_norm() const { return norm_ * norm_; }

  StateVector scaled(cplx c) const;

  // Max over entries and axes of |cell_j| (0 for the empty state).
  int support_radius() const;

  // delta state at (cell, index)
  static StateVector delta(int dim, const std::vector<int>& cell, int index = 0);

 private:
  int dim_ = 0;
  std::vector<Entry> entries_;
  double norm_ = 0.0;
};

}  // namespace ballistica
