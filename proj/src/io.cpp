#include "cansys/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cansys::io {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::InvalidInput, path + ": " + what);
}

const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(path + "." + key, "missing");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  return j.get<double>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& path) {
  auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, path + "." + key);
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) bad(path, "expected a string");
  return j.get<std::string>();
}

std::vector<int> int_list(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number_integer()) bad(path + "[" + std::to_string(i) + "]", "expected an integer");
    out.push_back(j[i].get<int>());
  }
  return out;
}

double positive(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0.0) || !std::isfinite(v)) bad(path, "must be positive");
  return v;
}

Matrix psd_matrix(const json& j, const std::string& path) {
  Matrix m = matrix_from_json(j, path);
  if (m.rows() != m.cols()) bad(path, "matrix must be square");
  const double scale = std::max(1.0, m.norm());
  if ((m - m.adjoint()).norm() > 1e-12 * scale) bad(path, "matrix must be Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12 * scale) bad(path, "matrix must be positive semidefinite");
  return m;
}

Real2 real2(const json& j, const std::string& path) {
  const Matrix m = matrix_from_json(j, path);
  if (m.rows() != 2 || m.cols() != 2 || m.imag().norm() != 0.0) bad(path, "expected a real 2 x 2 matrix");
  return m.real();
}

json real2_to_json(const Real2& t) { return matrix_to_json(t.cast<cplx>()); }

std::vector<Segment> segments_from(const json& j, const std::string& path) {
  std::vector<Segment> out;
  if (!j.is_array()) bad(path, "expected an array");
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(segment_from_json(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

BoundaryCondition condition_from(const json& j, int degree, const std::string& path) {
  if (j.contains("rows")) return validate_boundary(matrix_from_json(j["rows"], path + ".rows"));
  const std::string preset = text(field(j, "preset", path), path + ".preset");
  if (preset == "kirchhoff") return interface_preset(PresetKind::Kirchhoff, degree);
  if (preset == "dirichlet") return interface_preset(PresetKind::Dirichlet, degree);
  if (preset == "delta") return interface_preset(PresetKind::Delta, degree, number(field(j, "gamma", path), path + ".gamma"));
  if (preset == "custom") {
    return interface_preset(PresetKind::Custom, degree, 0.0, matrix_from_json(field(j, "b1", path), path + ".b1"),
                            matrix_from_json(field(j, "b2", path), path + ".b2"));
  }
  bad(path + ".preset", "unknown preset '" + preset + "'");
}

Hamiltonian canonical_edge(const json& dyn, double start, const std::string& path) {
  std::vector<Segment> segs;
  if (dyn.contains("segments")) segs = segments_from(dyn["segments"], path + ".segments");
  std::optional<Tail> tail;
  if (dyn.contains("tail")) tail = tail_from_json(dyn["tail"], path + ".tail");
  return Hamiltonian(2, start, std::move(segs), std::move(tail));
}

SchrodingerEdge schrodinger_edge(const json& dyn, double start, const std::string& path) {
  SchrodingerEdge e;
  e.start = start;
  const json& pot = field(dyn, "potential", path);
  if (!pot.is_array()) bad(path + ".potential", "expected an array");
  for (std::size_t i = 0; i < pot.size(); ++i) {
    const std::string p = path + ".potential[" + std::to_string(i) + "]";
    e.steps.push_back({positive(field(pot[i], "length", p), p + ".length"), number(field(pot[i], "value", p), p + ".value")});
  }
  if (dyn.contains("tail_potential")) e.tail_potential = number(dyn["tail_potential"], path + ".tail_potential");
  return e;
}

Document parse_graph(const json& doc) {
  Topology t;
  const json& vs = field(doc, "vertices", "$");
  if (!vs.is_array()) bad("$.vertices", "expected an array");
  for (std::size_t i = 0; i < vs.size(); ++i) t.add_vertex(text(vs[i], "$.vertices[" + std::to_string(i) + "]"));

  const json& es = field(doc, "edges", "$");
  if (!es.is_array()) bad("$.edges", "expected an array");
  std::vector<std::string> types;
  for (std::size_t i = 0; i < es.size(); ++i) {
    const std::string p = "$.edges[" + std::to_string(i) + "]";
    const json& e = es[i];
    EdgeSpec spec;
    spec.name = e.contains("name") ? text(e["name"], p + ".name") : "e" + std::to_string(i);
    auto vertex = [&](const char* key) {
      const std::string name = text(field(e, key, p), p + "." + key);
      const int v = t.find_vertex(name);
      if (v < 0) bad(p + "." + key, "unknown vertex '" + name + "'");
      return v;
    };
    spec.from = vertex("from");
    const std::string kind = e.contains("kind") ? text(e["kind"], p + ".kind") : (e.contains("to") && !e["to"].is_null() ? "finite" : "halfline");
    if (kind == "finite") {
      spec.to = vertex("to");
      spec.r = positive(field(e, "half_length", p), p + ".half_length");
    } else if (kind == "halfline") {
      if (e.contains("to") && !e["to"].is_null()) bad(p + ".to", "half lines have no terminal vertex");
      spec.halfline = true;
      spec.r = number_or(e, "half_length", 1.0, p);
      if (spec.r != 1.0) bad(p + ".half_length", "half lines use 1");
    } else {
      bad(p + ".kind", "expected 'finite' or 'halfline'");
    }
    const json& dyn = field(e, "dynamics", p);
    types.push_back(text(field(dyn, "type", p + ".dynamics"), p + ".dynamics.type"));
    if (types.back() != "canonical" && types.back() != "schrodinger") {
      bad(p + ".dynamics.type", "expected 'canonical' or 'schrodinger'");
    }
    t.add_edge(spec);
  }
  if (es.empty()) throw Error(ErrorKind::InvalidGraph, "graph has no edges");
  for (const auto& type : types) {
    if (type != types.front()) bad("$.edges", "edges mix canonical and schrodinger dynamics");
  }

  const json& cs = field(doc, "conditions", "$");
  if (!cs.is_object()) bad("$.conditions", "expected an object keyed by vertex name");
  for (auto it = cs.begin(); it != cs.end(); ++it) {
    const int v = t.find_vertex(it.key());
    const std::string p = "$.conditions." + it.key();
    if (v < 0) bad(p, "unknown vertex '" + it.key() + "'");
    try {
      t.set_condition(v, condition_from(it.value(), t.degree(v), p));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::InvalidInput) throw;
      throw Error(e.kind(), "at vertex '" + it.key() + "': " + e.detail());
    }
  }

  Document out;
  if (types.front() == "schrodinger") {
    SchrodingerGraph g;
    g.topology = t;
    for (std::size_t i = 0; i < es.size(); ++i) {
      const EdgeSpec& spec = t.edge(static_cast<int>(i));
      g.edges.push_back(schrodinger_edge(es[i]["dynamics"], -spec.r, "$.edges[" + std::to_string(i) + "].dynamics"));
    }
    g.validate();
    out.kind = Document::Kind::Schrodinger;
    out.schrodinger = std::move(g);
  } else {
    QuantumGraph g;
    g.topology = t;
    for (std::size_t i = 0; i < es.size(); ++i) {
      const EdgeSpec& spec = t.edge(static_cast<int>(i));
      g.dynamics.push_back(canonical_edge(es[i]["dynamics"], -spec.r, "$.edges[" + std::to_string(i) + "].dynamics"));
    }
    g.validate();
    out.kind = Document::Kind::Graph;
    out.graph = std::move(g);
  }
  return out;
}

Document parse_system(const json& sys) {
  const std::string p = "$.system";
  std::vector<Segment> segs;
  if (sys.contains("segments")) segs = segments_from(sys["segments"], p + ".segments");
  std::optional<Tail> tail;
  if (sys.contains("tail")) tail = tail_from_json(sys["tail"], p + ".tail");
  int order = 0;
  if (sys.contains("order")) {
    if (!sys["order"].is_number_integer()) bad(p + ".order", "expected an integer");
    order = sys["order"].get<int>();
  } else if (!segs.empty()) {
    order = segs.front().order();
  } else if (tail) {
    order = tail->order();
  }
  Hamiltonian h(order, number_or(sys, "start", 0.0, p), std::move(segs), std::move(tail));
  const BoundaryCondition alpha = validate_boundary(matrix_from_json(field(sys, "alpha", p), p + ".alpha"));
  std::optional<BoundaryCondition> beta;
  if (sys.contains("beta")) {
    if (h.has_tail()) bad(p + ".beta", "a system with a tail takes no right condition");
    beta = validate_boundary(matrix_from_json(sys["beta"], p + ".beta"));
  } else if (!h.has_tail()) {
    bad(p + ".beta", "missing (required without a tail)");
  }
  if (alpha.order() != h.order() || (beta && beta->order() != h.order())) bad(p, "condition size does not match the order");
  Document out;
  out.kind = Document::Kind::System;
  out.system = SpectralProblem(std::move(h), alpha, beta);
  return out;
}

}  // namespace

Matrix matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) bad(path, "expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) bad(path, "expected a non-empty array of rows");
  Matrix m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string pr = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) bad(pr, "rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      const json& v = j[r][c];
      const std::string pc = pr + "[" + std::to_string(c) + "]";
      if (v.is_number()) {
        m(r, c) = v.get<double>();
      } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        m(r, c) = cplx(v[0].get<double>(), v[1].get<double>());
      } else {
        bad(pc, "expected a number or [re, im]");
      }
    }
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) {
      const cplx v = m(r, c);
      if (v.imag() == 0.0) row.push_back(v.real());
      else row.push_back(json::array({v.real(), v.imag()}));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Segment segment_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  const std::string type = j.contains("type") ? text(j["type"], path + ".type") : "constant";
  const double length = positive(field(j, "length", path), path + ".length");
  if (type == "constant") return Segment::constant(length, psd_matrix(field(j, "matrix", path), path + ".matrix"));
  if (type == "schrodinger") {
    SchrodingerPiece p;
    p.potential = number(field(j, "potential", path), path + ".potential");
    if (j.contains("t_start")) p.t_start = real2(j["t_start"], path + ".t_start");
    p.source_length = number_or(j, "source_length", length, path);
    p.scale = number_or(j, "scale", 1.0, path);
    if (j.contains("reflected")) {
      if (!j["reflected"].is_boolean()) bad(path + ".reflected", "expected a boolean");
      p.reflected = j["reflected"].get<bool>();
    }
    if (!(p.scale > 0.0) || std::abs(p.scale * length - p.source_length) > 1e-12 * std::max(1.0, p.source_length)) {
      bad(path, "scale * length must equal source_length");
    }
    return Segment{length, p};
  }
  if (type == "composite") {
    std::vector<Segment> blocks = segments_from(field(j, "blocks", path), path + ".blocks");
    return Segment::composite(length, int_list(field(j, "perm", path), path + ".perm"), std::move(blocks));
  }
  bad(path + ".type", "unknown segment type '" + type + "'");
}

json segment_to_json(const Segment& s) {
  json j;
  if (auto c = std::get_if<ConstantMatrix>(&s.kind)) {
    j["type"] = "constant";
    j["length"] = s.length;
    j["matrix"] = matrix_to_json(c->value);
  } else if (auto p = std::get_if<SchrodingerPiece>(&s.kind)) {
    j["type"] = "schrodinger";
    j["length"] = s.length;
    j["potential"] = p->potential;
    j["t_start"] = real2_to_json(p->t_start);
    j["source_length"] = p->source_length;
    j["scale"] = p->scale;
    j["reflected"] = p->reflected;
  } else {
    const auto& comp = std::get<Composite>(s.kind);
    j["type"] = "composite";
    j["length"] = s.length;
    j["perm"] = comp.perm;
    j["blocks"] = json::array();
    for (const auto& b : comp.blocks) j["blocks"].push_back(segment_to_json(b));
  }
  return j;
}

Tail tail_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  const std::string type = text(field(j, "type", path), path + ".type");
  if (type == "constant") return Tail{DefiniteConstantTail{psd_matrix(field(j, "matrix", path), path + ".matrix")}};
  if (type == "projection") {
    const double w = number_or(j, "weight", 1.0, path);
    if (!(w > 0.0)) bad(path + ".weight", "must be positive");
    return Tail{ProjectionTail{validate_boundary(matrix_from_json(field(j, "rows", path), path + ".rows")), w}};
  }
  if (type == "schrodinger") {
    SchrodingerTail t;
    t.potential = number(field(j, "potential", path), path + ".potential");
    if (j.contains("t_start")) t.t_start = real2(j["t_start"], path + ".t_start");
    return Tail{t};
  }
  if (type == "composite") {
    CompositeTail c;
    c.perm = int_list(field(j, "perm", path), path + ".perm");
    const json& bs = field(j, "blocks", path);
    if (!bs.is_array()) bad(path + ".blocks", "expected an array");
    int total = 0;
    for (std::size_t i = 0; i < bs.size(); ++i) {
      c.blocks.push_back(tail_from_json(bs[i], path + ".blocks[" + std::to_string(i) + "]"));
      total += c.blocks.back().order();
    }
    if (!is_permutation(c.perm) || static_cast<int>(c.perm.size()) != total) bad(path + ".perm", "does not match the block orders");
    return Tail{std::move(c)};
  }
  bad(path + ".type", "unknown tail type '" + type + "'");
}

json tail_to_json(const Tail& t) {
  json j;
  if (auto p = std::get_if<ProjectionTail>(&t.kind)) {
    j["type"] = "projection";
    j["rows"] = matrix_to_json(p->beta.matrix());
    j["weight"] = p->weight;
  } else if (auto d = std::get_if<DefiniteConstantTail>(&t.kind)) {
    j["type"] = "constant";
    j["matrix"] = matrix_to_json(d->value);
  } else if (auto s = std::get_if<SchrodingerTail>(&t.kind)) {
    j["type"] = "schrodinger";
    j["potential"] = s->potential;
    j["t_start"] = real2_to_json(s->t_start);
  } else {
    const auto& c = std::get<CompositeTail>(t.kind);
    j["type"] = "composite";
    j["perm"] = c.perm;
    j["blocks"] = json::array();
    for (const auto& b : c.blocks) j["blocks"].push_back(tail_to_json(b));
  }
  return j;
}

json hamiltonian_to_json(const Hamiltonian& h) {
  json j;
  j["order"] = h.order();
  j["start"] = h.start();
  j["segments"] = json::array();
  for (const auto& s : h.segments()) j["segments"].push_back(segment_to_json(s));
  if (h.tail()) j["tail"] = tail_to_json(*h.tail());
  return j;
}

json system_to_json(const SpectralProblem& p) {
  json sys = hamiltonian_to_json(p.hamiltonian());
  sys["alpha"] = matrix_to_json(p.alpha().matrix());
  if (p.beta()) sys["beta"] = matrix_to_json(p.beta()->matrix());
  return json{{"system", sys}};
}

json compiled_to_json(const CompiledSystem& c, const Topology& t) {
  json out = system_to_json(c.problem());
  json meta;
  meta["k"] = c.k;
  meta["k_finite"] = c.k_finite;
  meta["edge_order"] = json::array();
  for (int e : c.edge_order) meta["edge_order"].push_back(t.edge(e).name);
  meta["c_map"] = c.c_map;
  if (!c.compact()) meta["d_map"] = c.d_map;
  meta["vertex_beta"] = matrix_to_json(c.vertex_beta);
  meta["index"] = json::array();
  for (const auto& e : c.index) {
    meta["index"].push_back({{"index", e.index}, {"edge", t.edge(e.edge).name}, {"half", e.half}, {"component", e.component}});
  }
  meta["warnings"] = c.warnings;
  out["compiled"] = meta;
  return out;
}

json graph_to_json(const QuantumGraph& g) {
  const Topology& t = g.topology;
  json out;
  out["vertices"] = json::array();
  for (int v = 0; v < t.vertex_count(); ++v) out["vertices"].push_back(t.vertex_name(v));
  out["edges"] = json::array();
  for (int i = 0; i < t.edge_count(); ++i) {
    const EdgeSpec& e = t.edge(i);
    json je{{"name", e.name}, {"from", t.vertex_name(e.from)}};
    if (e.halfline) {
      je["kind"] = "halfline";
    } else {
      je["to"] = t.vertex_name(e.to);
      je["kind"] = "finite";
      je["half_length"] = e.r;
    }
    json dyn = hamiltonian_to_json(g.dynamics[i]);
    dyn.erase("order");
    dyn.erase("start");
    dyn["type"] = "canonical";
    je["dynamics"] = dyn;
    out["edges"].push_back(je);
  }
  out["conditions"] = json::object();
  for (int v = 0; v < t.vertex_count(); ++v) {
    if (t.condition(v)) out["conditions"][t.vertex_name(v)] = json{{"rows", matrix_to_json(t.condition(v)->matrix())}};
  }
  return out;
}

Document parse_document(const json& doc) {
  if (!doc.is_object()) bad("$", "expected an object");
  if (doc.contains("system")) return parse_system(doc["system"]);
  if (doc.contains("edges")) return parse_graph(doc);
  bad("$", "expected a 'system' or a graph with 'edges'");
}

Document parse_document_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidInput, e.what());
  }
  return parse_document(doc);
}

Document load_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_document_text(ss.str());
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace cansys::io
