#include "ballistica/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "ballistica/error.hpp"

namespace ballistica {

namespace {

constexpr double kDualityTol = 1e-12;
constexpr double kFractionTol = 1e-9;

std::string edge_to_string(const EdgeSpec& e) {
  std::ostringstream os;
  os << "(" << e.i + 1 << ", " << e.j + 1 << ", [";
  for (std::size_t k = 0; k < e.offset.size(); ++k) {
    if (k) os << ",";
    os << e.offset[k];
  }
  os << "])";
  return os.str();
}

}  // namespace

std::vector<Eigen::VectorXd> dual_basis(const std::vector<Eigen::VectorXd>& basis) {
  const int d = static_cast<int>(basis.size());
  Eigen::MatrixXd A(d, d);
  double scale = 1.0;
  for (int i = 0; i < d; ++i) {
    if (basis[i].size() != d)
      throw Error(ErrorCode::InvalidArgument, "basis vector dimension mismatch");
    A.row(i) = basis[i].transpose();
    scale *= std::max(basis[i].norm(), 1e-300);
  }
  double det = A.determinant();
  if (std::abs(det) <= 1e-12 * scale)
    throw Error(ErrorCode::SingularBasis, "basis vectors are linearly dependent");
  // rows b_j of B solve A B^T = 2 pi I
  Eigen::MatrixXd B = 2.0 * M_PI * A.inverse().transpose();
  std::vector<Eigen::VectorXd> out(d);
  for (int j = 0; j < d; ++j) out[j] = B.row(j).transpose();
  return out;
}

Lattice Lattice::build(LatticeSpec spec) {
  const int d = spec.dim;
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "dim must be >= 1");
  if (static_cast<int>(spec.basis.size()) != d)
    throw Error(ErrorCode::InvalidArgument, "expected dim basis vectors");
  if (spec.cell_vertices.empty())
    throw Error(ErrorCode::InvalidArgument, "at least one cell vertex required");
  const int nu = static_cast<int>(spec.cell_vertices.size());
  if (static_cast<int>(spec.potential.size()) != nu)
    throw Error(ErrorCode::InvalidArgument, "potential needs one value per cell vertex");

  for (const auto& s : spec.cell_vertices) {
    if (s.size() != d)
      throw Error(ErrorCode::InvalidArgument, "cell vertex dimension mismatch");
    for (int j = 0; j < d; ++j) {
      if (s[j] < -kFractionTol || s[j] >= 1.0 - kFractionTol)
        throw Error(ErrorCode::BadFraction, "fractional coordinates must lie in [0,1)");
    }
  }

  std::set<std::tuple<int, int, std::vector<int>>> seen;
  for (const auto& e : spec.edges) {
    if (e.i < 0 || e.i >= nu || e.j < 0 || e.j >= nu)
      throw Error(ErrorCode::InvalidArgument, "edge vertex index out of range");
    if (static_cast<int>(e.offset.size()) != d)
      throw Error(ErrorCode::InvalidArgument, "edge offset dimension mismatch");
    if (e.weight != 1.0)
      throw Error(ErrorCode::InvalidArgument,
                  "edge weights are reserved and must equal 1 in v1");
    bool zero = std::all_of(e.offset.begin(), e.offset.end(), [](int k) { return k == 0; });
    if (e.i == e.j && zero)
      throw Error(ErrorCode::InvalidArgument, "self-loop with zero offset: " + edge_to_string(e));
    if (!seen.insert({e.i, e.j, e.offset}).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate edge " + edge_to_string(e));
  }
  for (const auto& e : spec.edges) {
    std::vector<int> neg(e.offset.size());
    for (std::size_t k = 0; k < neg.size(); ++k) neg[k] = -e.offset[k];
    if (!seen.count({e.j, e.i, neg}))
      throw Error(ErrorCode::AsymmetricEdges,
                  "missing reverse of edge " + edge_to_string(e));
  }

  Lattice lat;
  lat.dual_basis_ = ::ballistica::dual_basis(spec.basis);
  // duality residual guard
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double want = (i == j) ? 2.0 * M_PI : 0.0;
      if (std::abs(spec.basis[i].dot(lat.dual_basis_[j]) - want) >
          kDualityTol * 2.0 * M_PI * std::max(1.0, spec.basis[i].norm()))
        throw Error(ErrorCode::SingularBasis, "dual basis residual too large");
    }

  lat.degrees_.assign(nu, 0);
  lat.axis_speed_.assign(d, 0.0);
  std::vector<std::vector<double>> per_vertex_axis(nu, std::vector<double>(d, 0.0));
  double max_len = 0.0;
  for (const auto& e : spec.edges) {
    lat.degrees_[e.i] += 1;
    Eigen::VectorXd disp = Eigen::VectorXd::Zero(d);
    for (int j = 0; j < d; ++j) {
      double frac = e.offset[j] + spec.cell_vertices[e.j][j] - spec.cell_vertices[e.i][j];
      disp += frac * spec.basis[j];
      per_vertex_axis[e.i][j] += std::abs(frac);
    }
    max_len = std::max(max_len, disp.norm());
  }
  for (int n = 0; n < nu; ++n)
    for (int j = 0; j < d; ++j)
      lat.axis_speed_[j] = std::max(lat.axis_speed_[j], per_vertex_axis[n][j]);
  lat.max_degree_ = *std::max_element(lat.degrees_.begin(), lat.degrees_.end());
  lat.max_edge_length_ = max_len;

  // Structural Z^d detection (enables the zd_limit closed form).
  bool zd = (nu == 1);
  if (zd) {
    for (int i = 0; i < d && zd; ++i)
      for (int j = 0; j < d && zd; ++j)
        if (std::abs(spec.basis[i][j] - (i == j ? 1.0 : 0.0)) > 1e-12) zd = false;
    if (zd && static_cast<int>(spec.edges.size()) != 2 * d) zd = false;
    if (zd) {
      for (const auto& e : spec.edges) {
        int nonzero = 0, axis = -1;
        for (int j = 0; j < d; ++j)
          if (e.offset[j] != 0) { ++nonzero; axis = j; }
        if (nonzero != 1 || std::abs(e.offset[axis]) != 1) { zd = false; break; }
      }
    }
  }
  lat.is_integer_lattice_ = zd;
  lat.spec_ = std::move(spec);
  return lat;
}

Eigen::VectorXd Lattice::position(const VertexId& v) const {
  const int d = spec_.dim;
  if (v.index < 0 || v.index >= num_cell_vertices())
    throw Error(ErrorCode::InvalidArgument, "vertex index out of range");
  if (static_cast<int>(v.cell.size()) != d)
    throw Error(ErrorCode::InvalidArgument, "cell offset dimension mismatch");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  const Eigen::VectorXd& s = spec_.cell_vertices[v.index];
  for (int j = 0; j < d; ++j) x += (v.cell[j] + s[j]) * spec_.basis[j];
  return x;
}

namespace {

LatticeSpec make_zd(int d) {
  LatticeSpec s;
  s.dim = d;
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(d);
    a[i] = 1.0;
    s.basis.push_back(a);
  }
  s.cell_vertices.push_back(Eigen::VectorXd::Zero(d));
  s.potential.assign(1, 0.0);
  for (int i = 0; i < d; ++i) {
    std::vector<int> plus(d, 0), minus(d, 0);
    plus[i] = 1;
    minus[i] = -1;
    s.edges.push_back({0, 0, plus, 1.0});
    s.edges.push_back({0, 0, minus, 1.0});
  }
  s.name = (d == 1) ? "z1" : (d == 2 ? "z2" : "z" + std::to_string(d));
  return s;
}

LatticeSpec make_triangular() {
  LatticeSpec s = make_zd(2);
  s.edges.push_back({0, 0, {1, 1}, 1.0});
  s.edges.push_back({0, 0, {-1, -1}, 1.0});
  s.name = "triangular";
  return s;
}

LatticeSpec make_hexagonal() {
  // a_1 = (1,0), a_2 = (1/2, sqrt(3)/2); two cell vertices at fractional
  // (0,0) and (1/3,1/3), i.e. the second sits at (a_1 + a_2)/3.
  LatticeSpec s;
  s.dim = 2;
  Eigen::VectorXd a1(2), a2(2);
  a1 << 1.0, 0.0;
  a2 << 0.5, std::sqrt(3.0) / 2.0;
  s.basis = {a1, a2};
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(2), s2(2);
  s2 << 1.0 / 3.0, 1.0 / 3.0;
  s.cell_vertices = {s1, s2};
  s.potential = {0.0, 0.0};
  // vertex 0 neighbors: v, v - a_1, v - a_2 (all copies of vertex 1)
  s.edges.push_back({0, 1, {0, 0}, 1.0});
  s.edges.push_back({1, 0, {0, 0}, 1.0});
  s.edges.push_back({0, 1, {-1, 0}, 1.0});
  s.edges.push_back({1, 0, {1, 0}, 1.0});
  s.edges.push_back({0, 1, {0, -1}, 1.0});
  s.edges.push_back({1, 0, {0, 1}, 1.0});
  s.name = "hexagonal";
  return s;
}

// Rhombus chain: three vertices per cell, A linked to B and C in its own
// cell, B and C linked to A of the next cell. Carries a flat band at E = 0.
LatticeSpec make_diamond1d() {
  LatticeSpec s;
  s.dim = 1;
  Eigen::VectorXd a(1);
  a << 1.0;
  s.basis = {a};
  Eigen::VectorXd sA(1), sB(1), sC(1);
  sA << 0.0;
  sB << 1.0 / 3.0;
  sC << 2.0 / 3.0;
  s.cell_vertices = {sA, sB, sC};
  s.potential = {0.0, 0.0, 0.0};
  auto link = [&s](int i, int j, int off) {
    s.edges.push_back({i, j, {off}, 1.0});
    s.edges.push_back({j, i, {-off}, 1.0});
  };
  link(0, 1, 0);
  link(0, 2, 0);
  link(1, 0, 1);
  link(2, 0, 1);
  s.name = "diamond1d";
  return s;
}

}  // namespace

bool is_lattice_preset(const std::string& name) {
  return name == "z1" || name == "z2" || name == "triangular" ||
         name == "hexagonal" || name == "diamond1d";
}

LatticeSpec lattice_preset(const std::string& name) {
  if (name == "z1") return make_zd(1);
  if (name == "z2") return make_zd(2);
  if (name == "triangular") return make_triangular();
  if (name == "hexagonal") return make_hexagonal();
  if (name == "diamond1d") return make_diamond1d();
  throw Error(ErrorCode::InvalidArgument, "unknown lattice preset '" + name + "'");
}

}  // namespace ballistica
