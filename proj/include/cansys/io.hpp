#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "cansys/graph.hpp"
#include "cansys/schrodinger.hpp"

namespace cansys::io {

using json = nlohmann::json;

/// A parsed input file: a bare canonical system, a canonical graph or a
/// Schrodinger graph. The schema is documented in docs/file-format.md.
struct Document {
  enum class Kind { System, Graph, Schrodinger };
  Kind kind = Kind::System;
  std::optional<SpectralProblem> system;
  std::optional<QuantumGraph> graph;
  std::optional<SchrodingerGraph> schrodinger;
};

/// Throws InvalidInput (with the offending field path) and the validation
/// errors of the library (with the vertex or edge named).
Document parse_document(const json& doc);
Document parse_document_text(const std::string& text);
Document load_document(const std::string& path);

Matrix matrix_from_json(const json& j, const std::string& path);
json matrix_to_json(const Matrix& m);

Segment segment_from_json(const json& j, const std::string& path);
json segment_to_json(const Segment& s);
Tail tail_from_json(const json& j, const std::string& path);
json tail_to_json(const Tail& t);

json hamiltonian_to_json(const Hamiltonian& h);

/// {"system": {...}}; re-readable by parse_document.
json system_to_json(const SpectralProblem& p);

/// The compiled system under "system" plus the index data under "compiled".
json compiled_to_json(const CompiledSystem& c, const Topology& t);

/// Canonical graph file; conditions are written as normalized rows.
json graph_to_json(const QuantumGraph& g);

/// %.17g, the shortest fixed format that round trips every double.
std::string format_double(double x);

}  // namespace cansys::io
