#include "ballistica/state.hpp"

#include <algorithm>
#include <cmath>

#include "ballistica/error.hpp"

namespace ballistica {

void StateVector::add(const std::vector<int>& cell, int index, cplx amp) {
  if (static_cast<int>(cell.size()) != dim_)
    throw Error(ErrorCode::InvalidArgument, "state entry cell dimension mismatch");
  entries_.push_back({cell, index, amp});
  norm_ = -1.0;  // invalidated until finalize
}

void StateVector::finalize() {
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    if (a.cell != b.cell) return a.cell < b.cell;
    return a.index < b.index;
  });
  std::vector<Entry> merged;
  merged.reserve(entries_.size());
  for (auto& e : entries_) {
    if (!merged.empty() && merged.back().cell == e.cell && merged.back().index == e.index)
      merged.back().amp += e.amp;
    else
      merged.push_back(std::move(e));
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const Entry& e) { return e.amp == cplx(0.0, 0.0); }),
               merged.end());
  entries_ = std::move(merged);
  double s = 0.0;
  for (const auto& e : entries_) s += std::norm(e.amp);
  norm_ = std::sqrt(s);
}

StateVector StateVector::scaled(cplx c) const {
  StateVector out(dim_);
  for (const auto& e : entries_) out.add(e.cell, e.index, c * e.amp);
  out.finalize();
  return out;
}

int StateVector::support_radius() const {
  int r = 0;
  for (const auto& e : entries_)
    for (int k : e.cell) r = std::max(r, std::abs(k));
  return r;
}

StateVector StateVector::delta(int dim, const std::vector<int>& cell, int index) {
  StateVector psi(dim);
  psi.add(cell, index, cplx(1.0, 0.0));
  psi.finalize();
  return psi;
}

}  // namespace ballistica
