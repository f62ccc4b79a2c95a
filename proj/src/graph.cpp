#include "cansys/graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

namespace cansys {

namespace {

constexpr double kMergeEps = 1e-12;

// Neumann-Kirchhoff gluing of the inserted midpoints, order 4k.
BoundaryCondition gluing(int k) {
  Matrix raw = Matrix::Zero(2 * k, 4 * k);
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < k; ++i) {
    raw(i, i) = s;
    raw(i, k + i) = s;
    raw(k + i, 2 * k + i) = s;
    raw(k + i, 3 * k + i) = -s;
  }
  return validate_boundary(raw);
}

// Coefficient piece of `b` over [s0, s1], where no breakpoint of `b` lies
// strictly inside.
Segment piece_of(const Hamiltonian& b, double s0, double s1) {
  const auto [idx, local] = b.locate(0.5 * (s0 + s1));
  (void)local;
  if (idx == b.segments().size()) return b.tail()->piece(std::max(0.0, s0 - b.end()), s1 - s0);
  const Segment& seg = b.segments()[idx];
  const double lo = std::clamp(s0 - b.breakpoints()[idx], 0.0, seg.length);
  const double hi = std::clamp(lo + (s1 - s0), lo, seg.length);
  return seg.slice(lo, hi);
}

// Splits [a, b] at every breakpoint of the blocks and wraps the pieces.
std::vector<Segment> merge_blocks(const std::vector<Hamiltonian>& blocks, double a, double b,
                                  const std::function<Segment(double, std::vector<Segment>)>& wrap) {
  std::vector<double> cuts{a, b};
  for (const auto& blk : blocks) {
    for (double x : blk.breakpoints()) {
      if (x > a && x < b) cuts.push_back(x);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> uniq;
  for (double x : cuts) {
    if (uniq.empty() || x - uniq.back() > kMergeEps * std::max(1.0, std::abs(x))) uniq.push_back(x);
  }
  uniq.back() = b;
  std::vector<Segment> out;
  for (std::size_t i = 0; i + 1 < uniq.size(); ++i) {
    std::vector<Segment> pieces;
    for (const auto& blk : blocks) pieces.push_back(piece_of(blk, uniq[i], uniq[i + 1]));
    out.push_back(wrap(uniq[i + 1] - uniq[i], std::move(pieces)));
  }
  return out;
}

std::vector<IndexEntry> index_entries(const std::vector<int>& c_map, const std::vector<int>& order, int k) {
  const std::vector<int> perm = inverse_map(c_map);
  std::vector<IndexEntry> out;
  for (int m = 0; m < 4 * k; ++m) {
    const int t = perm[m];
    const int block = t / 2;
    out.push_back({m, order[block % k], block < k ? 1 : 2, t % 2 + 1});
  }
  return out;
}

// Rank-one constant tails become projection tails; anything else that is not
// definite is rejected.
Tail normalize_tail(const Tail& t, const std::string& edge) {
  const auto* c = std::get_if<DefiniteConstantTail>(&t.kind);
  if (!c) return t;
  if (min_eigenvalue_hermitian(c->value) > 1e-12 * std::max(1.0, c->value.norm())) return t;
  const auto line = detect_theta_form(Hamiltonian(2, 0.0, {}, t));
  if (!line || line->weights.back() <= 0.0) {
    throw Error(ErrorKind::IndefiniteTail, "half line '" + edge + "' has a vanishing tail");
  }
  Matrix row(1, 2);
  row << std::cos(line->theta), std::sin(line->theta);
  return Tail{ProjectionTail{validate_boundary(row), line->weights.back()}};
}

}  // namespace

int Topology::add_vertex(const std::string& name) {
  if (find_vertex(name) >= 0) throw Error(ErrorKind::InvalidGraph, "duplicate vertex '" + name + "'");
  names_.push_back(name);
  conditions_.emplace_back();
  return vertex_count() - 1;
}

int Topology::add_edge(EdgeSpec e) {
  edges_.push_back(std::move(e));
  return edge_count() - 1;
}

void Topology::set_condition(int vertex, BoundaryCondition condition) {
  conditions_.at(vertex) = std::move(condition);
}

int Topology::find_vertex(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

std::vector<Role> Topology::roles(int vertex) const {
  std::vector<Role> out;
  for (int e = 0; e < edge_count(); ++e) {
    if (edges_[e].from == vertex) out.push_back({e, false});
  }
  for (int e = 0; e < edge_count(); ++e) {
    if (!edges_[e].halfline && edges_[e].to == vertex) out.push_back({e, true});
  }
  return out;
}

bool Topology::has_halfline() const {
  return std::any_of(edges_.begin(), edges_.end(), [](const EdgeSpec& e) { return e.halfline; });
}

std::vector<int> Topology::compiled_order() const {
  std::vector<int> out;
  for (int e = 0; e < edge_count(); ++e) {
    if (!edges_[e].halfline) out.push_back(e);
  }
  for (int e = 0; e < edge_count(); ++e) {
    if (edges_[e].halfline) out.push_back(e);
  }
  return out;
}

void Topology::validate() const {
  if (edges_.empty()) throw Error(ErrorKind::InvalidGraph, "graph has no edges");
  const int nv = vertex_count();
  std::set<std::pair<int, int>> pairs;
  std::vector<int> parent(nv);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> root = [&](int v) { return parent[v] == v ? v : parent[v] = root(parent[v]); };
  for (const auto& e : edges_) {
    if (e.from < 0 || e.from >= nv) throw Error(ErrorKind::InvalidGraph, "edge '" + e.name + "' has no initial vertex");
    if (e.halfline) {
      if (e.to >= 0) throw Error(ErrorKind::InvalidGraph, "half line '" + e.name + "' has a terminal vertex");
      if (e.r != 1.0) throw Error(ErrorKind::InvalidGraph, "half line '" + e.name + "' must use r = 1");
      continue;
    }
    if (e.to < 0 || e.to >= nv) throw Error(ErrorKind::InvalidGraph, "edge '" + e.name + "' has no terminal vertex");
    if (e.to == e.from) throw Error(ErrorKind::InvalidGraph, "edge '" + e.name + "' is a loop; insert a vertex");
    if (!(e.r > 0.0) || !std::isfinite(e.r)) {
      throw Error(ErrorKind::InvalidGraph, "edge '" + e.name + "' needs a positive half length");
    }
    const auto key = std::minmax(e.from, e.to);
    if (!pairs.insert(key).second) {
      throw Error(ErrorKind::InvalidGraph, "more than one edge between '" + names_[e.from] + "' and '" +
                                               names_[e.to] + "'; insert a vertex");
    }
    parent[root(e.from)] = root(e.to);
  }
  for (int v = 0; v < nv; ++v) {
    if (root(v) != root(0)) throw Error(ErrorKind::InvalidGraph, "graph not connected");
  }
  for (int v = 0; v < nv; ++v) {
    const int d = degree(v);
    if (!conditions_[v]) throw Error(ErrorKind::InvalidInput, "missing condition at vertex '" + names_[v] + "'");
    if (conditions_[v]->n() != d || conditions_[v]->order() != 2 * d) {
      throw Error(ErrorKind::InvalidInput, "condition at vertex '" + names_[v] + "' must be " + std::to_string(d) +
                                               " x " + std::to_string(2 * d));
    }
  }
}

void QuantumGraph::validate() const {
  topology.validate();
  if (static_cast<int>(dynamics.size()) != topology.edge_count()) {
    throw Error(ErrorKind::InvalidInput, "one coefficient per edge required");
  }
  for (int e = 0; e < topology.edge_count(); ++e) {
    const EdgeSpec& spec = topology.edge(e);
    const Hamiltonian& h = dynamics[e];
    if (h.order() != 2) throw Error(ErrorKind::InvalidInput, "edge '" + spec.name + "' must have order 2");
    const double eps = 1e-12 * std::max(1.0, spec.r);
    if (std::abs(h.start() + spec.r) > eps) {
      throw Error(ErrorKind::BadDomain, "edge '" + spec.name + "' must start at -r");
    }
    if (spec.halfline != h.has_tail()) {
      throw Error(ErrorKind::BadDomain, "edge '" + spec.name + (spec.halfline ? "' needs a tail" : "' has a tail"));
    }
    if (!spec.halfline && std::abs(h.end() - spec.r) > eps) {
      throw Error(ErrorKind::BadDomain, "edge '" + spec.name + "' must end at r");
    }
  }
}

BoundaryCondition interface_preset(PresetKind kind, int d, double gamma, const Matrix& b1, const Matrix& b2) {
  if (d < 1) throw Error(ErrorKind::InvalidInput, "vertex degree must be positive");
  Matrix raw = Matrix::Zero(d, 2 * d);
  switch (kind) {
    case PresetKind::Dirichlet:
      raw.rightCols(d) = Matrix::Identity(d, d);
      break;
    case PresetKind::Kirchhoff:
    case PresetKind::Delta:
      for (int i = 0; i + 1 < d; ++i) {
        raw(i, d + i) = 1.0;
        raw(i, d + i + 1) = -1.0;
      }
      raw.row(d - 1).head(d).setOnes();
      if (kind == PresetKind::Delta) raw.row(d - 1).tail(d).setConstant(-gamma / d);
      break;
    case PresetKind::Custom:
      if (b1.rows() != d || b1.cols() != d || b2.rows() != d || b2.cols() != d) {
        throw Error(ErrorKind::InvalidInput, "custom blocks must be " + std::to_string(d) + " x " + std::to_string(d));
      }
      raw << b1, b2;
      break;
  }
  return validate_boundary(raw);
}

std::vector<int> interleave_map(int d) {
  std::vector<int> c(d);
  for (int i = 0; i < d; ++i) c[i] = i % 2 == 0 ? i / 2 : d / 2 + i / 2;
  return c;
}

std::vector<int> inverse_map(const std::vector<int>& p) {
  std::vector<int> q(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) q[p[i]] = static_cast<int>(i);
  return q;
}

std::vector<int> shift_map(int k, int kf) {
  std::vector<int> s(4 * k);
  for (int m = 0; m < 4 * k; ++m) {
    if (m < k + kf) {
      s[m] = m;
    } else if (m < 2 * k) {
      s[m] = k + kf + m;  // half-line first components move below the finite block
    } else if (m < 3 * k + kf) {
      s[m] = m - k + kf;
    } else {
      s[m] = m;
    }
  }
  return s;
}

std::vector<int> q_indices(int k, int kf) {
  std::vector<int> out;
  for (int m = 0; m < 4 * k; ++m) {
    if (m < k + kf || (m >= 2 * k && m < 3 * k + kf)) out.push_back(m);
  }
  return out;
}

std::vector<int> q_perp_indices(int k, int kf) {
  std::vector<int> out;
  for (int m = 0; m < 4 * k; ++m) {
    if ((m >= k + kf && m < 2 * k) || m >= 3 * k + kf) out.push_back(m);
  }
  return out;
}

Matrix assemble_beta(const Topology& t) {
  const std::vector<int> order = t.compiled_order();
  const int k = t.edge_count();
  std::vector<int> slot(k);
  for (int s = 0; s < k; ++s) slot[order[s]] = s;
  int kf = 0;
  for (const auto& e : t.edges()) kf += e.halfline ? 0 : 1;
  const int n = k + kf;
  Matrix beta = Matrix::Zero(n, 2 * n);
  auto block = [&](const Role& r) { return r.terminal ? k + slot[r.edge] : slot[r.edge]; };
  for (int v = 0; v < t.vertex_count(); ++v) {
    const std::vector<Role> roles = t.roles(v);
    const Matrix& b0 = t.condition(v)->matrix();
    const int d = static_cast<int>(roles.size());
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        beta(block(roles[i]), block(roles[j])) = -b0(i, j);
        beta(block(roles[i]), n + block(roles[j])) = b0(i, d + j);
      }
    }
  }
  return beta;
}

SpectralProblem CompiledSystem::problem() const {
  return beta ? SpectralProblem(h, alpha, beta) : SpectralProblem(h, alpha);
}

CompiledSystem compile_compact(const QuantumGraph& g) {
  g.validate();
  const Topology& t = g.topology;
  if (t.has_halfline()) throw Error(ErrorKind::HasHalfLine, "compact compiler needs finite edges only");
  const int k = t.edge_count();
  CompiledSystem out;
  out.k = out.k_finite = k;
  out.edge_order = t.compiled_order();
  out.c_map = interleave_map(4 * k);

  std::vector<Hamiltonian> blocks;
  for (int half : {1, 2}) {
    for (int e : out.edge_order) {
      blocks.push_back(reflect_and_scale(g.dynamics[e], t.edge(e).r, half == 1 ? Side::Left : Side::Right));
    }
  }
  const std::vector<int> perm = inverse_map(out.c_map);
  auto segs = merge_blocks(blocks, 0.0, 1.0, [&](double len, std::vector<Segment> p) {
    return Segment::composite(len, perm, std::move(p));
  });
  out.h = Hamiltonian(4 * k, 0.0, std::move(segs));
  out.alpha = gluing(k);
  out.vertex_beta = assemble_beta(t);
  out.beta = validate_boundary(out.vertex_beta);
  out.index = index_entries(out.c_map, out.edge_order, k);

  std::vector<ThetaLine> lines;
  for (const auto& b : blocks) {
    if (auto line = detect_theta_form(b)) lines.push_back(*line);
  }
  if (lines.size() == blocks.size()) {
    out.theta_blocks = lines;
    out.warnings.push_back("NonDefiniteCompiled: every block has the form h(x) P_theta; the domain is finite-dimensional");
  }
  return out;
}

QuantumGraph reduce_indefinite_halflines(const QuantumGraph& g) {
  QuantumGraph out = g;
  for (int e = 0; e < g.topology.edge_count(); ++e) {
    const EdgeSpec spec = g.topology.edge(e);
    if (!spec.halfline) continue;
    const Hamiltonian right = reflect_and_scale(g.dynamics[e], 1.0, Side::Right);
    const auto line = detect_theta_form(right);
    if (!line || line->weights.back() <= 0.0) continue;
    std::string name = spec.name + ":end";
    while (out.topology.find_vertex(name) >= 0) name += "'";
    const int v = out.topology.add_vertex(name);
    EdgeSpec& edge = out.topology.edge(e);
    edge.halfline = false;
    edge.to = v;
    edge.r = 0.5;
    out.dynamics[e] = Hamiltonian(2, -0.5, g.dynamics[e].slice(-1.0, 0.0));
    // (cos t) u1 + (sin t) u2 = 0 at the new terminal end, where u1 enters with a minus sign.
    Matrix row(1, 2);
    row << -std::cos(line->theta), std::sin(line->theta);
    out.topology.set_condition(v, validate_boundary(row));
  }
  return out;
}

CompiledSystem compile_noncompact(const QuantumGraph& g) {
  g.validate();
  const Topology& t = g.topology;
  if (!t.has_halfline()) throw Error(ErrorKind::InvalidInput, "non-compact compiler needs a half line");
  const int k = t.edge_count();
  CompiledSystem out;
  out.k = k;
  out.edge_order = t.compiled_order();
  for (const auto& e : t.edges()) out.k_finite += e.halfline ? 0 : 1;
  const int kf = out.k_finite, kh = k - kf;
  out.c_map = interleave_map(4 * k);
  out.d_map = shift_map(k, kf);

  std::vector<Hamiltonian> rights;  // half lines on (0, inf)
  for (int s = kf; s < k; ++s) {
    const int e = out.edge_order[s];
    Hamiltonian r = reflect_and_scale(g.dynamics[e], 1.0, Side::Right);
    if (!is_definite(r)) {
      throw Error(ErrorKind::IndefiniteTail,
                  "half line '" + t.edge(e).name + "' is not definite on (0, inf); reduce theta-form half lines first");
    }
    rights.emplace_back(2, 0.0, r.segments(), normalize_tail(*r.tail(), t.edge(e).name));
  }

  std::vector<Hamiltonian> blocks;
  for (int e : out.edge_order) blocks.push_back(reflect_and_scale(g.dynamics[e], t.edge(e).r, Side::Left));
  for (int s = 0; s < k; ++s) {
    const int e = out.edge_order[s];
    if (s < kf) {
      blocks.push_back(reflect_and_scale(g.dynamics[e], t.edge(e).r, Side::Right));
    } else {
      blocks.emplace_back(2, 0.0, rights[s - kf].slice(0.0, 1.0));
    }
  }
  const std::vector<int> perm = inverse_map(out.c_map);
  auto segs = merge_blocks(blocks, 0.0, 1.0, [&](double len, std::vector<Segment> p) {
    return Segment::composite(len, perm, std::move(p));
  });

  out.vertex_beta = assemble_beta(t);
  const BoundaryCondition beta = validate_boundary(out.vertex_beta);
  const Matrix proj = beta.matrix().adjoint() * beta.matrix();
  const std::vector<int> hl_perm = inverse_map(interleave_map(2 * kh));

  double tail_start = 1.0;
  for (const auto& r : rights) tail_start = std::max(tail_start, r.end());
  if (tail_start > 1.0) {
    auto more = merge_blocks(rights, 1.0, tail_start, [&](double len, std::vector<Segment> p) {
      return Segment::composite(len, out.d_map,
                                {Segment::constant(len, proj), Segment::composite(len, hl_perm, std::move(p))});
    });
    segs.insert(segs.end(), more.begin(), more.end());
  }
  std::vector<Tail> hl_tails;
  for (const auto& r : rights) hl_tails.push_back(r.tail_from(tail_start));
  Tail tail{CompositeTail{out.d_map, {Tail{ProjectionTail{beta, 1.0}}, Tail{CompositeTail{hl_perm, hl_tails}}}}};

  out.h = Hamiltonian(4 * k, 0.0, std::move(segs), std::move(tail));
  out.alpha = gluing(k);
  out.index = index_entries(out.c_map, out.edge_order, k);
  return out;
}

CompiledSystem compile(const QuantumGraph& g) {
  const QuantumGraph reduced = reduce_indefinite_halflines(g);
  if (!reduced.topology.has_halfline()) return compile_compact(reduced);
  return compile_noncompact(reduced);
}

VectorFunction rewire(const CompiledSystem& c, const QuantumGraph& g, const std::vector<VectorFunction>& f) {
  const int k = c.k;
  const std::vector<int> perm = inverse_map(c.c_map);
  std::vector<double> radius;
  std::vector<bool> half;
  for (int e : c.edge_order) {
    radius.push_back(g.topology.edge(e).r);
    half.push_back(g.topology.edge(e).halfline);
  }
  return [=](double x) -> Vector {
    Vector tilde = Vector::Zero(4 * k);
    for (int s = 0; s < k; ++s) {
      const int e = c.edge_order[s];
      const double r = radius[s];
      if (x <= 1.0) {
        Vector left = f[e](-r * x);
        left(0) = -left(0);
        tilde.segment(2 * s, 2) = left;
        tilde.segment(2 * (k + s), 2) = f[e](r * x);
      } else if (half[s]) {
        tilde.segment(2 * (k + s), 2) = f[e](x);
      }
    }
    Vector out(4 * k);
    for (int m = 0; m < 4 * k; ++m) out(m) = tilde(perm[m]);
    return out;
  };
}

double graph_norm(const QuantumGraph& g, const std::vector<VectorFunction>& f, double cut) {
  double total = 0.0;
  for (int e = 0; e < g.topology.edge_count(); ++e) {
    const Hamiltonian& h = g.dynamics[e];
    const double b = g.topology.edge(e).halfline ? cut : h.end();
    total += std::real(weighted_inner(h, f[e], f[e], h.start(), b));
  }
  return std::sqrt(std::max(0.0, total));
}

}  // namespace cansys
