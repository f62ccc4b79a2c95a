#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "cansys/graph.hpp"

namespace cansys {

struct PotentialStep {
  double length = 0.0;
  double value = 0.0;
};

/// -y'' + V y = z y on (start, start + sum of lengths), continued by the
/// constant `tail_potential` to infinity for half lines (which are assumed
/// limit point).
struct SchrodingerEdge {
  double start = 0.0;
  std::vector<PotentialStep> steps;
  std::optional<double> tail_potential;

  double end() const;
  double potential(double x) const;

  /// Zero-energy transfer T(x) = [[p', q'], [p, q]] with T(start) = I.
  Real2 transfer(double x) const;
};

/// Canonical coefficient [[p^2, pq], [pq, q^2]] of the edge.
Hamiltonian schrodinger_to_canonical(const SchrodingerEdge& e);

/// beta C (T_1 + ... + T_d) C*, before re-normalization. `t_values` follow
/// the role order of the vertex.
Matrix transport_interface_raw(const BoundaryCondition& beta, const std::vector<Real2>& t_values);

BoundaryCondition transport_interface(const BoundaryCondition& beta, const std::vector<Real2>& t_values);

/// x -> T(x)^{-1} (0, f(x)).
VectorFunction map_U(const SchrodingerEdge& e, std::function<cplx(double)> f);

struct SchrodingerGraph {
  Topology topology;
  std::vector<SchrodingerEdge> edges;

  void validate() const;
};

/// Canonical graph with the same topology: converted edges and transported
/// vertex conditions.
QuantumGraph schrodinger_to_canonical(const SchrodingerGraph& g);

struct SchrodingerCompiled {
  QuantumGraph graph;
  CompiledSystem system;
};

SchrodingerCompiled schrodinger_graph_pipeline(const SchrodingerGraph& g);

}  // namespace cansys
