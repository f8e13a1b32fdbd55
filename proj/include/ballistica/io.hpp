#pragma once

#include <string>

#include "ballistica/lattice.hpp"
#include "ballistica/state.hpp"
#include "ballistica/trees.hpp"

namespace ballistica {

// Lattice spec file: JSON with keys dim, basis, cell_vertices, edges
// ([i, j, offset-array] with 1-based indices, optional weight), potential.
LatticeSpec load_lattice_spec(const std::string& path);
LatticeSpec parse_lattice_spec(const std::string& json_text, const std::string& origin);

// Resolves a preset name or a file path.
Lattice load_lattice(const std::string& name_or_path);

// State file: JSON list of [cell-offset array, vertex index (1-based), re, im].
StateVector load_state(const std::string& path, int dim);
StateVector parse_state(const std::string& json_text, int dim, const std::string& origin);

// Tree base graph file: JSON with vertices, edges (pairs, 1-based), potential, root.
BaseGraph load_base_graph(const std::string& path);
BaseGraph parse_base_graph(const std::string& json_text, const std::string& origin);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace ballistica
