#include "ballistica/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ballistica/error.hpp"
#include "json.hpp"

namespace ballistica {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, origin + ": " + e.what());
  }
}

Eigen::VectorXd to_vector(const json& arr, const std::string& origin) {
  if (!arr.is_array())
    throw Error(ErrorCode::InvalidArgument, origin + ": expected an array of numbers");
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

LatticeSpec parse_lattice_spec(const std::string& text, const std::string& origin) {
  json j = parse_json(text, origin);
  try {
    LatticeSpec spec;
    spec.dim = j.at("dim").get<int>();
    for (const auto& row : j.at("basis"))
      spec.basis.push_back(to_vector(row, origin + ".basis"));
    for (const auto& row : j.at("cell_vertices"))
      spec.cell_vertices.push_back(to_vector(row, origin + ".cell_vertices"));
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() < 3)
        throw Error(ErrorCode::InvalidArgument,
                    origin + ".edges: expected [i, j, offset-array]");
      EdgeSpec edge;
      edge.i = e[0].get<int>() - 1;  // file indices are 1-based
      edge.j = e[1].get<int>() - 1;
      for (const auto& o : e[2]) edge.offset.push_back(o.get<int>());
      if (e.size() > 3) edge.weight = e[3].get<double>();
      spec.edges.push_back(std::move(edge));
    }
    for (const auto& q : j.at("potential")) spec.potential.push_back(q.get<double>());
    spec.name = origin;
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, origin + ": " + e.what());
  }
}

LatticeSpec load_lattice_spec(const std::string& path) {
  return parse_lattice_spec(read_file(path), path);
}

Lattice load_lattice(const std::string& name_or_path) {
  if (is_lattice_preset(name_or_path)) return Lattice::build(lattice_preset(name_or_path));
  LatticeSpec spec = load_lattice_spec(name_or_path);
  try {
    return Lattice::build(std::move(spec));
  } catch (const Error& e) {
    throw Error(e.code(), name_or_path + ": " + e.what());
  }
}

StateVector parse_state(const std::string& text, int dim, const std::string& origin) {
  json j = parse_json(text, origin);
  if (!j.is_array())
    throw Error(ErrorCode::InvalidArgument,
                origin + ": expected a list of [cell, vertex, re, im]");
  StateVector psi(dim);
  try {
    for (const auto& row : j) {
      if (!row.is_array() || row.size() != 4)
        throw Error(ErrorCode::InvalidArgument,
                    origin + ": each entry must be [cell-array, vertex, re, im]");
      std::vector<int> cell;
      for (const auto& c : row[0]) cell.push_back(c.get<int>());
      int vi = row[1].get<int>() - 1;  // 1-based in files
      psi.add(cell, vi, cplx(row[2].get<double>(), row[3].get<double>()));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, origin + ": " + e.what());
  }
  psi.finalize();
  return psi;
}

StateVector load_state(const std::string& path, int dim) {
  return parse_state(read_file(path), dim, path);
}

BaseGraph parse_base_graph(const std::string& text, const std::string& origin) {
  json j = parse_json(text, origin);
  try {
    BaseGraph g;
    g.num_vertices = j.at("vertices").get<int>();
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2)
        throw Error(ErrorCode::InvalidArgument, origin + ".edges: expected pairs");
      g.edges.emplace_back(e[0].get<int>() - 1, e[1].get<int>() - 1);
    }
    for (const auto& q : j.at("potential")) g.potential.push_back(q.get<double>());
    g.root = j.value("root", 1) - 1;
    g.name = origin;
    return g;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, origin + ": " + e.what());
  }
}

BaseGraph load_base_graph(const std::string& path) {
  return parse_base_graph(read_file(path), path);
}

}  // namespace ballistica
