#include "cansys/schrodinger.hpp"

#include <cmath>

namespace cansys {

double SchrodingerEdge::end() const {
  double x = start;
  for (const auto& s : steps) x += s.length;
  return x;
}

double SchrodingerEdge::potential(double x) const {
  double a = start;
  for (const auto& s : steps) {
    if (x < a + s.length) return s.value;
    a += s.length;
  }
  if (tail_potential) return *tail_potential;
  if (!steps.empty()) return steps.back().value;
  throw Error(ErrorKind::OutOfDomain, "empty Schrodinger edge");
}

Real2 SchrodingerEdge::transfer(double x) const {
  if (x < start - 1e-14 * std::max(1.0, std::abs(x))) throw Error(ErrorKind::OutOfDomain, "x before edge start");
  Real2 t = Real2::Identity();
  double a = start;
  for (const auto& s : steps) {
    if (x <= a + s.length) return schrodinger_step_real(s.value, std::max(0.0, x - a)) * t;
    t = schrodinger_step_real(s.value, s.length) * t;
    a += s.length;
  }
  if (!tail_potential) {
    if (x > a + 1e-14 * std::max(1.0, std::abs(x))) throw Error(ErrorKind::OutOfDomain, "x beyond edge end");
    return t;
  }
  return schrodinger_step_real(*tail_potential, x - a) * t;
}

Hamiltonian schrodinger_to_canonical(const SchrodingerEdge& e) {
  std::vector<Segment> segs;
  Real2 t = Real2::Identity();
  for (const auto& s : e.steps) {
    if (!(s.length > 0.0)) throw Error(ErrorKind::InvalidInput, "potential steps need positive length");
    segs.push_back(Segment::schrodinger(s.length, s.value, t));
    t = schrodinger_step_real(s.value, s.length) * t;
  }
  std::optional<Tail> tail;
  if (e.tail_potential) tail = Tail{SchrodingerTail{*e.tail_potential, t}};
  return Hamiltonian(2, e.start, std::move(segs), std::move(tail));
}

Matrix transport_interface_raw(const BoundaryCondition& beta, const std::vector<Real2>& t_values) {
  const int d = beta.n();
  if (static_cast<int>(t_values.size()) != d) throw Error(ErrorKind::InvalidInput, "one T value per role required");
  Matrix blocks = Matrix::Zero(2 * d, 2 * d);
  for (int i = 0; i < d; ++i) {
    if (std::abs(t_values[i].determinant() - 1.0) > 1e-10) {
      throw Error(ErrorKind::InvalidInput, "T value is not in SL(2, R)");
    }
    blocks.block(2 * i, 2 * i, 2, 2) = t_values[i].cast<cplx>();
  }
  const Matrix c = permutation_matrix(interleave_map(2 * d));
  return beta.matrix() * c * blocks * c.adjoint();
}

BoundaryCondition transport_interface(const BoundaryCondition& beta, const std::vector<Real2>& t_values) {
  return validate_boundary(transport_interface_raw(beta, t_values));
}

VectorFunction map_U(const SchrodingerEdge& e, std::function<cplx(double)> f) {
  return [e, f = std::move(f)](double x) -> Vector {
    const Real2 t = e.transfer(x);
    // T^{-1} (0, y) for det T = 1.
    Vector out(2);
    const cplx y = f(x);
    out << -t(0, 1) * y, t(0, 0) * y;
    return out;
  };
}

void SchrodingerGraph::validate() const {
  topology.validate();
  if (static_cast<int>(edges.size()) != topology.edge_count()) {
    throw Error(ErrorKind::InvalidInput, "one potential per edge required");
  }
  for (int i = 0; i < topology.edge_count(); ++i) {
    const EdgeSpec& spec = topology.edge(i);
    const SchrodingerEdge& e = edges[i];
    const double eps = 1e-12 * std::max(1.0, spec.r);
    if (std::abs(e.start + spec.r) > eps) throw Error(ErrorKind::BadDomain, "edge '" + spec.name + "' must start at -r");
    if (spec.halfline != e.tail_potential.has_value()) {
      throw Error(ErrorKind::BadDomain, "edge '" + spec.name + (spec.halfline ? "' needs a tail potential" : "' has a tail potential"));
    }
    if (!spec.halfline && std::abs(e.end() - spec.r) > eps) {
      throw Error(ErrorKind::BadDomain, "edge '" + spec.name + "' potential must cover (-r, r)");
    }
  }
}

QuantumGraph schrodinger_to_canonical(const SchrodingerGraph& g) {
  g.validate();
  QuantumGraph out;
  out.topology = g.topology;
  for (const auto& e : g.edges) out.dynamics.push_back(schrodinger_to_canonical(e));
  Real2 n = Real2::Identity();
  n(0, 0) = -1.0;
  for (int v = 0; v < g.topology.vertex_count(); ++v) {
    std::vector<Real2> ts;
    for (const Role& r : g.topology.roles(v)) {
      const SchrodingerEdge& e = g.edges[r.edge];
      // Terminal ends carry the sign flip of the first component on both sides.
      ts.push_back(r.terminal ? Real2(n * e.transfer(g.topology.edge(r.edge).r) * n) : e.transfer(e.start));
    }
    out.topology.set_condition(v, transport_interface(*g.topology.condition(v), ts));
  }
  return out;
}

SchrodingerCompiled schrodinger_graph_pipeline(const SchrodingerGraph& g) {
  SchrodingerCompiled out;
  out.graph = schrodinger_to_canonical(g);
  out.system = compile(out.graph);
  return out;
}

}  // namespace cansys
