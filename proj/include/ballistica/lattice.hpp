#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace ballistica {

// A directed edge record (i -> j, cell offset n): vertex i of cell k is
// adjacent to vertex j of cell k+n, for every cell k. The edge set is stored
// once per direction and must be symmetric under (i,j,n) -> (j,i,-n).
struct EdgeSpec {
  int i = 0;  // 0-based cell-vertex index
  int j = 0;
  std::vector<int> offset;
  double weight = 1.0;  // reserved; must equal 1
};

// Periodic graph in R^d: basis vectors of the translation group, cell
// vertices given in fractional coordinates, offset-labeled edges and a
// periodic potential (one value per cell vertex).
struct LatticeSpec {
  int dim = 0;
  std::vector<Eigen::VectorXd> basis;          // a_1..a_d
  std::vector<Eigen::VectorXd> cell_vertices;  // fractional coords in [0,1)^d
  std::vector<EdgeSpec> edges;
  std::vector<double> potential;
  std::string name;  // preset name or file path, for provenance
};

struct VertexId {
  std::vector<int> cell;  // k in Z^d
  int index = 0;          // 0-based cell-vertex index
};

class Lattice {
 public:
  // Validates the spec and derives the dual basis, the maximal degree D and
  // the longest edge length L. Throws SingularBasis / AsymmetricEdges /
  // BadFraction / InvalidArgument.
  static Lattice build(LatticeSpec spec);

  const LatticeSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  int num_cell_vertices() const { return static_cast<int>(spec_.cell_vertices.size()); }
  int max_degree() const { return max_degree_; }
  double max_edge_length() const { return max_edge_length_; }
  const std::vector<Eigen::VectorXd>& dual_basis() const { return dual_basis_; }

  // Cartesian position of a vertex: sum_j (k_j + s_j) a_j.
  Eigen::VectorXd position(const VertexId& v) const;

  // Degree of cell vertex n (same for every translate).
  int degree(int n) const { return degrees_[n]; }

  // Per-axis group-velocity bound, in cell-offset units per unit time:
  // |d theta_j E_n| / 2pi <= max_n sum_{edges at n} |offset_j + s_j(to) - s_j(from)|.
  double axis_speed_bound(int axis) const { return axis_speed_[axis]; }

  bool is_integer_lattice() const { return is_integer_lattice_; }

 private:
  Lattice() = default;
  LatticeSpec spec_;
  std::vector<Eigen::VectorXd> dual_basis_;
  std::vector<int> degrees_;
  std::vector<double> axis_speed_;
  int max_degree_ = 0;
  double max_edge_length_ = 0.0;
  bool is_integer_lattice_ = false;
};

// Dual basis B with a_i . b_j = 2 pi delta_ij. Throws SingularBasis.
std::vector<Eigen::VectorXd> dual_basis(const std::vector<Eigen::VectorXd>& basis);

// Bundled presets: "z1", "z2", "triangular", "hexagonal", "diamond1d".
LatticeSpec lattice_preset(const std::string& name);
bool is_lattice_preset(const std::string& name);

}  // namespace ballistica
