#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cansys/hamiltonian.hpp"
#include "cansys/spectral.hpp"

namespace cansys {

/// An edge runs from its initial vertex (at -r) to its terminal vertex
/// (at r). Half lines live on (-1, inf), have no terminal vertex and r = 1.
struct EdgeSpec {
  std::string name;
  int from = -1;
  int to = -1;
  double r = 1.0;
  bool halfline = false;
};

/// One slot of a vertex condition: an edge end meeting the vertex.
struct Role {
  int edge = 0;
  bool terminal = false;
};

/// Vertices, directed edges and vertex conditions, shared by canonical and
/// Schrodinger graphs.
///
/// The condition at v acts on (signed first components; second components)
/// of its roles, listed as initial edges then terminal edges, each in edge
/// order. First components at terminal roles enter with a minus sign.
class Topology {
 public:
  int add_vertex(const std::string& name);
  int add_edge(EdgeSpec e);
  void set_condition(int vertex, BoundaryCondition condition);

  int vertex_count() const { return static_cast<int>(names_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::string& vertex_name(int v) const { return names_.at(v); }
  int find_vertex(const std::string& name) const;  // -1 if absent
  const EdgeSpec& edge(int e) const { return edges_.at(e); }
  EdgeSpec& edge(int e) { return edges_.at(e); }
  const std::vector<EdgeSpec>& edges() const { return edges_; }
  const std::optional<BoundaryCondition>& condition(int v) const { return conditions_.at(v); }

  std::vector<Role> roles(int vertex) const;
  int degree(int vertex) const { return static_cast<int>(roles(vertex).size()); }
  bool has_halfline() const;

  /// Finite edges in order, then half lines in order; position = compiled slot.
  std::vector<int> compiled_order() const;

  /// Throws InvalidGraph (structure) or InvalidInput (condition sizes).
  void validate() const;

 private:
  std::vector<std::string> names_;
  std::vector<EdgeSpec> edges_;
  std::vector<std::optional<BoundaryCondition>> conditions_;
};

/// Canonical system graph: one order-2 coefficient per edge, given on
/// (-r, r) for finite edges and on (-1, inf) with a tail for half lines.
struct QuantumGraph {
  Topology topology;
  std::vector<Hamiltonian> dynamics;

  void validate() const;
};

enum class PresetKind { Kirchhoff, Dirichlet, Delta, Custom };

/// Vertex condition of degree d. `gamma` is the delta strength; `b1`, `b2`
/// the raw blocks for Custom. Throws NotSelfAdjoint, RankDeficient.
BoundaryCondition interface_preset(PresetKind kind, int degree, double gamma = 0.0, const Matrix& b1 = {},
                                   const Matrix& b2 = {});

/// Index maps, 0-based: C_d e_i = e_{c[i]}.
std::vector<int> interleave_map(int d);
std::vector<int> inverse_map(const std::vector<int>& p);

/// Half-line shift D e_m = e_{sigma[m]} of order 4k for k edges of which
/// kf are finite.
std::vector<int> shift_map(int k, int kf);

/// Selection Q (keeps the finite-edge entries) and its complement, as lists
/// of kept compiled indices.
std::vector<int> q_indices(int k, int kf);
std::vector<int> q_perp_indices(int k, int kf);

/// Where a compiled coordinate comes from.
struct IndexEntry {
  int index = 0;      // compiled coordinate
  int edge = 0;       // graph edge
  int half = 1;       // 1: reflected left half, 2: right half
  int component = 1;  // solution component 1 or 2
};

struct CompiledSystem {
  Hamiltonian h;
  BoundaryCondition alpha;
  std::optional<BoundaryCondition> beta;  // compact graphs only
  int k = 0;                              // edges
  int k_finite = 0;                       // finite edges
  std::vector<int> edge_order;            // compiled slot -> graph edge
  std::vector<int> c_map;                 // C_{4k}
  std::vector<int> d_map;                 // D, non-compact only
  Matrix vertex_beta;                     // assembled beta of the vertex conditions
  std::vector<IndexEntry> index;
  std::vector<std::string> warnings;
  std::vector<ThetaLine> theta_blocks;  // filled when every block is theta-form

  SpectralProblem problem() const;
  bool compact() const { return beta.has_value(); }
};

/// Assembled (k + kf) x 2(k + kf) boundary matrix of all vertex conditions.
Matrix assemble_beta(const Topology& t);

CompiledSystem compile_compact(const QuantumGraph& g);

/// Replaces half lines that are theta-form on (0, inf) by the finite edge
/// (-1, 0) ending in a new vertex with condition (cos t) u1 + (sin t) u2 = 0.
QuantumGraph reduce_indefinite_halflines(const QuantumGraph& g);

CompiledSystem compile_noncompact(const QuantumGraph& g);

/// compile_compact or reduce + compile_noncompact.
CompiledSystem compile(const QuantumGraph& g);

/// Rewiring map V0: per-edge functions (in edge coordinates) to a function
/// of the compiled system.
VectorFunction rewire(const CompiledSystem& c, const QuantumGraph& g, const std::vector<VectorFunction>& f);

/// Norm of per-edge functions in the graph space, each half line cut at `cut`.
double graph_norm(const QuantumGraph& g, const std::vector<VectorFunction>& f, double cut);

}  // namespace cansys
