#include "ballistica/floquet.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>

#include "ballistica/error.hpp"
#include "ballistica/parallel.hpp"

namespace ballistica {

namespace {
constexpr double kDegeneracyTol = 1e-8;
constexpr double kFdStep = 1e-5;
}  // namespace

std::size_t ThetaGrid::num_nodes() const {
  std::size_t n = 1;
  for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(resolution);
  return n;
}

std::vector<int> ThetaGrid::node_indices(std::size_t flat) const {
  std::vector<int> idx(dim);
  for (int i = dim - 1; i >= 0; --i) {
    idx[i] = static_cast<int>(flat % resolution);
    flat /= resolution;
  }
  return idx;
}

Eigen::VectorXd ThetaGrid::node(std::size_t flat) const {
  std::vector<int> idx = node_indices(flat);
  Eigen::VectorXd theta(dim);
  for (int i = 0; i < dim; ++i) theta[i] = static_cast<double>(idx[i]) / resolution;
  return theta;
}

double ThetaGrid::weight() const {
  return 1.0 / static_cast<double>(num_nodes());
}

Eigen::MatrixXcd fiber_matrix(const Lattice& lattice, const Eigen::VectorXd& theta) {
  const int nu = lattice.num_cell_vertices();
  const int d = lattice.dim();
  const auto& spec = lattice.spec();
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(nu, nu);
  for (const auto& e : spec.edges) {
    double phase = 0.0;
    for (int j = 0; j < d; ++j)
      phase += theta[j] * (e.offset[j] + spec.cell_vertices[e.j][j] -
                           spec.cell_vertices[e.i][j]);
    H(e.i, e.j) += std::polar(1.0, 2.0 * M_PI * phase);
  }
  for (int n = 0; n < nu; ++n) H(n, n) += spec.potential[n];
  return H;
}

Eigen::MatrixXcd fiber_matrix_derivative(const Lattice& lattice,
                                         const Eigen::VectorXd& theta, int axis) {
  const int nu = lattice.num_cell_vertices();
  const int d = lattice.dim();
  const auto& spec = lattice.spec();
  Eigen::MatrixXcd dH = Eigen::MatrixXcd::Zero(nu, nu);
  for (const auto& e : spec.edges) {
    double phase = 0.0;
    for (int j = 0; j < d; ++j)
      phase += theta[j] * (e.offset[j] + spec.cell_vertices[e.j][j] -
                           spec.cell_vertices[e.i][j]);
    double coeff = e.offset[axis] + spec.cell_vertices[e.j][axis] -
                   spec.cell_vertices[e.i][axis];
    dH(e.i, e.j) += cplx(0.0, 2.0 * M_PI * coeff) * std::polar(1.0, 2.0 * M_PI * phase);
  }
  return dH;
}

BandPoint band_decomposition(const Eigen::MatrixXcd& fiber, const Eigen::VectorXd& theta) {
  const int nu = static_cast<int>(fiber.rows());
  double herm = (fiber - fiber.adjoint()).cwiseAbs().maxCoeff();
  double scale = std::max(1.0, fiber.cwiseAbs().maxCoeff());
  if (herm > 1e-12 * scale)
    throw Error(ErrorCode::InvalidArgument, "fiber matrix is not Hermitian");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(fiber);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::EigSolverFailure, "fiber eigendecomposition failed");

  BandPoint p;
  p.theta = theta;
  p.energies = solver.eigenvalues();
  p.eigenvectors = solver.eigenvectors();
  double resid = (fiber * p.eigenvectors - p.eigenvectors * p.energies.asDiagonal())
                     .cwiseAbs()
                     .maxCoeff();
  if (resid > 1e-10 * scale)
    throw Error(ErrorCode::EigSolverFailure, "fiber eigen-residual too large");
  p.degenerate.assign(nu, false);
  return p;
}

void fill_velocities(const Lattice& lattice, BandPoint& point) {
  const int nu = lattice.num_cell_vertices();
  const int d = lattice.dim();
  point.velocities = Eigen::MatrixXd::Zero(nu, d);

  std::vector<Eigen::MatrixXcd> dH(d);
  for (int i = 0; i < d; ++i) dH[i] = fiber_matrix_derivative(lattice, point.theta, i);

  // finite-difference band slopes, shared by all degenerate bands at this node
  Eigen::MatrixXd fd_slopes;
  auto fd = [&]() -> const Eigen::MatrixXd& {
    if (fd_slopes.size() == 0) {
      fd_slopes = Eigen::MatrixXd::Zero(nu, d);
      for (int i = 0; i < d; ++i) {
        Eigen::VectorXd tp = point.theta, tm = point.theta;
        tp[i] += kFdStep;
        tm[i] -= kFdStep;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> sp(fiber_matrix(lattice, tp));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> sm(fiber_matrix(lattice, tm));
        for (int n = 0; n < nu; ++n)
          fd_slopes(n, i) = (sp.eigenvalues()[n] - sm.eigenvalues()[n]) / (2.0 * kFdStep);
      }
    }
    return fd_slopes;
  };

  for (int n = 0; n < nu; ++n) {
    bool degen = (n > 0 && point.energies[n] - point.energies[n - 1] < kDegeneracyTol) ||
                 (n + 1 < nu && point.energies[n + 1] - point.energies[n] < kDegeneracyTol);
    Eigen::VectorXd slope(d);
    if (!degen) {
      const auto w = point.eigenvectors.col(n);
      for (int i = 0; i < d; ++i) slope[i] = std::real(cplx(w.dot(dH[i] * w)));
    } else {
      slope = fd().row(n).transpose();
      point.degenerate[n] = true;
    }
    Eigen::VectorXd h = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) h += slope[i] / (2.0 * M_PI) * lattice.spec().basis[i];
    point.velocities.row(n) = h.transpose();
  }
}

BandGrid BandGrid::build(const Lattice& lattice, const ThetaGrid& grid) {
  if (grid.dim != lattice.dim())
    throw Error(ErrorCode::InvalidArgument, "theta grid dimension mismatch");
  if (grid.resolution < 1)
    throw Error(ErrorCode::InvalidArgument, "grid resolution must be >= 1");
  BandGrid bg(lattice, grid);
  std::size_t n = grid.num_nodes();
  bg.points_.resize(n);
  parallel_for(n, [&](std::size_t i) {
    Eigen::VectorXd theta = grid.node(i);
    BandPoint p = band_decomposition(fiber_matrix(bg.lattice_, theta), theta);
    fill_velocities(bg.lattice_, p);
    bg.points_[i] = std::move(p);
  });
  return bg;
}

double BandGrid::band_min(int n) const {
  double lo = points_[0].energies[n];
  for (const auto& p : points_) lo = std::min(lo, p.energies[n]);
  return lo;
}

double BandGrid::band_max(int n) const {
  double hi = points_[0].energies[n];
  for (const auto& p : points_) hi = std::max(hi, p.energies[n]);
  return hi;
}

bool BandGrid::is_flat_band(int n) const {
  return band_max(n) - band_min(n) < 1e-9;
}

BlochField bloch_transform(const Lattice& lattice, const StateVector& psi,
                           const ThetaGrid& grid) {
  if (psi.dim() != lattice.dim())
    throw Error(ErrorCode::InvalidArgument, "state dimension mismatch");
  const int d = lattice.dim();
  const int nu = lattice.num_cell_vertices();
  const int N = grid.resolution;

  // Grid Parseval holds iff support cells occupy distinct residues mod N.
  std::map<std::vector<int>, std::vector<int>> residues;
  for (const auto& e : psi.entries()) {
    std::vector<int> r(d);
    for (int j = 0; j < d; ++j) r[j] = ((e.cell[j] % N) + N) % N;
    auto [it, inserted] = residues.try_emplace(r, e.cell);
    if (!inserted && it->second != e.cell)
      throw Error(ErrorCode::SupportExceedsGrid,
                  "state support exceeds the N-periodic index box");
  }

  BlochField field;
  field.grid = grid;
  field.values.resize(grid.num_nodes());
  const auto& spec = lattice.spec();
  parallel_for(grid.num_nodes(), [&](std::size_t idx) {
    Eigen::VectorXd theta = grid.node(idx);
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(nu);
    for (const auto& e : psi.entries()) {
      double phase = 0.0;
      for (int j = 0; j < d; ++j)
        phase += theta[j] * (e.cell[j] + spec.cell_vertices[e.index][j]);
      v[e.index] += std::polar(1.0, -2.0 * M_PI * phase) * e.amp;
    }
    field.values[idx] = std::move(v);
  });
  return field;
}

}  // namespace ballistica
