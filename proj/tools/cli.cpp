#include "cansys/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "cansys/io.hpp"

namespace cansys::cli {

namespace {

using io::format_double;
using io::json;

struct Options {
  std::string file;
  std::vector<double> window;
  std::vector<std::string> z;
  std::vector<double> x, y;
  std::string points, h, out, format;
  double tol = std::nan("");
};

struct Loaded {
  io::Document doc;
  std::optional<SpectralProblem> problem;
  std::optional<CompiledSystem> compiled;
  std::vector<std::string> warnings;
};

Loaded load(const std::string& path) {
  Loaded l{io::load_document(path), std::nullopt, std::nullopt, {}};
  switch (l.doc.kind) {
    case io::Document::Kind::System:
      l.problem = *l.doc.system;
      break;
    case io::Document::Kind::Graph:
      l.compiled = compile(*l.doc.graph);
      break;
    case io::Document::Kind::Schrodinger:
      l.compiled = schrodinger_graph_pipeline(*l.doc.schrodinger).system;
      break;
  }
  if (l.compiled) {
    l.problem = l.compiled->problem();
    l.warnings = l.compiled->warnings;
  }
  return l;
}

int thread_count() {
  if (const char* env = std::getenv("CANSYS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void emit(const Options& o, const std::string& data, std::ostream& out) {
  if (o.out.empty()) {
    out << data;
    return;
  }
  std::ofstream f(o.out);
  if (!f) throw Error(ErrorKind::InvalidInput, "cannot write '" + o.out + "'");
  f << data;
}

std::string format_of(const Options& o, const char* fallback) {
  const std::string f = o.format.empty() ? fallback : o.format;
  if (f != "json" && f != "csv") throw Error(ErrorKind::InvalidInput, "--format must be json or csv");
  return f;
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
  return s + "\n";
}

// Full matrix as re/im column pairs.
void complex_cells(const Matrix& m, std::vector<std::string>& cells) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      cells.push_back(format_double(m(i, j).real()));
      cells.push_back(format_double(m(i, j).imag()));
    }
}

void complex_header(const std::string& name, int rows, int cols, std::vector<std::string>& cells) {
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const std::string base = name + "_" + std::to_string(i) + "_" + std::to_string(j);
      cells.push_back(base + "_re");
      cells.push_back(base + "_im");
    }
}

// Hermitian matrix: real diagonal, upper triangle as re/im pairs.
void hermitian_header(const std::string& name, int n, std::vector<std::string>& cells) {
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const std::string base = name + "_" + std::to_string(i) + "_" + std::to_string(j);
      if (i == j) {
        cells.push_back(base);
      } else {
        cells.push_back(base + "_re");
        cells.push_back(base + "_im");
      }
    }
}

void hermitian_cells(const Matrix& m, std::vector<std::string>& cells) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i; j < m.cols(); ++j) {
      if (i == j) {
        cells.push_back(format_double(m(i, i).real()));
      } else {
        cells.push_back(format_double(m(i, j).real()));
        cells.push_back(format_double(m(i, j).imag()));
      }
    }
}

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

std::vector<std::vector<double>> numeric_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot read '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidInput, path + ":" + std::to_string(lineno) + ": not a number '" + tok + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

void report_warnings(const Loaded& l, std::ostream& err) {
  for (const auto& w : l.warnings) err << "warning: " << w << "\n";
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  const Loaded l = load(o.file);
  report_warnings(l, err);
  const Hamiltonian& h = l.problem->hamiltonian();
  if (l.doc.kind == io::Document::Kind::System) {
    out << "OK: system of order " << h.order() << " on [" << format_double(h.start()) << ", "
        << (h.has_tail() ? std::string("inf") : format_double(h.end())) << ")"
        << (h.has_tail() ? ", tail" : ", regular") << "\n";
  } else {
    const Topology& t = l.doc.kind == io::Document::Kind::Graph ? l.doc.graph->topology : l.doc.schrodinger->topology;
    out << "OK: " << t.edge_count() << " edges, " << t.vertex_count() << " vertices, compiled order " << h.order() << "\n";
  }
  out << "definite: " << (is_definite(h) ? "yes" : "no") << "\n";
  return 0;
}

int cmd_compile(const Options& o, std::ostream& out, std::ostream& err) {
  format_of(o, "json");
  const Loaded l = load(o.file);
  if (!l.compiled) throw Error(ErrorKind::InvalidInput, "compile needs a graph file");
  report_warnings(l, err);
  const Topology& t = l.doc.kind == io::Document::Kind::Graph ? l.doc.graph->topology : l.doc.schrodinger->topology;
  emit(o, io::compiled_to_json(*l.compiled, t).dump(2) + "\n", out);
  return 0;
}

int cmd_schr2cs(const Options& o, std::ostream& out, std::ostream&) {
  format_of(o, "json");
  const io::Document doc = io::load_document(o.file);
  if (doc.kind != io::Document::Kind::Schrodinger) throw Error(ErrorKind::InvalidInput, "schr2cs needs a Schrodinger graph file");
  emit(o, io::graph_to_json(schrodinger_to_canonical(*doc.schrodinger)).dump(2) + "\n", out);
  return 0;
}

int cmd_spectrum(const Options& o, std::ostream& out, std::ostream& err) {
  const std::string fmt = format_of(o, "csv");
  const Loaded l = load(o.file);
  report_warnings(l, err);
  EigenOptions opts;
  if (!std::isnan(o.tol)) opts.accept_tol = o.tol;
  const SpectralDecomposition d = eigenvalues(*l.problem, o.window[0], o.window[1], opts);
  for (const auto& w : d.warnings) err << "warning: " << w << "\n";
  const int n = l.problem->n();
  std::string data;
  if (fmt == "csv") {
    std::vector<std::string> head{"t", "multiplicity"};
    hermitian_header("rho", n, head);
    data = csv_line(head);
    for (const auto& e : d.eigen) {
      std::vector<std::string> cells{format_double(e.t), std::to_string(e.multiplicity)};
      hermitian_cells(e.weight, cells);
      data += csv_line(cells);
    }
  } else {
    json j{{"window", {d.t_min, d.t_max}}, {"grid_points", d.grid_points}, {"warnings", d.warnings}};
    j["eigen"] = json::array();
    for (const auto& e : d.eigen) {
      j["eigen"].push_back({{"t", e.t}, {"multiplicity", e.multiplicity}, {"rho", io::matrix_to_json(e.weight)},
                            {"residual", e.residual}});
    }
    data = j.dump(2) + "\n";
  }
  emit(o, data, out);
  return 0;
}

int cmd_mfunction(const Options& o, std::ostream& out, std::ostream& err) {
  const std::string fmt = format_of(o, "csv");
  std::vector<cplx> zs;
  for (const auto& s : o.z) zs.push_back(parse_complex(s));
  if (!o.points.empty()) {
    for (const auto& row : numeric_rows(o.points)) {
      if (row.size() > 2) throw Error(ErrorKind::InvalidInput, o.points + ": expected 're im' per line");
      zs.emplace_back(row[0], row.size() == 2 ? row[1] : 0.0);
    }
  }
  const Loaded l = load(o.file);
  report_warnings(l, err);
  const int n = l.problem->n();

  struct Result {
    std::string status = "ok";
    Matrix m;
  };
  std::vector<Result> res(zs.size());
  const int threads = std::min<int>(thread_count(), std::max<std::size_t>(1, zs.size()));
  auto work = [&](int tid) {
    for (std::size_t i = tid; i < zs.size(); i += threads) {
      try {
        res[i].m = m_function(*l.problem, zs[i]);
      } catch (const Error& e) {
        res[i].status = to_string(e.kind());
        res[i].m = Matrix::Constant(n, n, cplx(std::nan(""), std::nan("")));
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& t : pool) t.join();

  std::string data;
  if (fmt == "csv") {
    std::vector<std::string> head{"re_z", "im_z", "status"};
    complex_header("m", n, n, head);
    data = csv_line(head);
    for (std::size_t i = 0; i < zs.size(); ++i) {
      std::vector<std::string> cells{format_double(zs[i].real()), format_double(zs[i].imag()), res[i].status};
      complex_cells(res[i].m, cells);
      data += csv_line(cells);
    }
  } else {
    json j = json::array();
    for (std::size_t i = 0; i < zs.size(); ++i) {
      json r{{"z", cplx_json(zs[i])}, {"status", res[i].status}};
      r["m"] = res[i].status == "ok" ? io::matrix_to_json(res[i].m) : json(nullptr);
      j.push_back(r);
    }
    data = j.dump(2) + "\n";
  }
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (res[i].status != "ok") err << "warning: z = " << format_double(zs[i].real()) << "," << format_double(zs[i].imag()) << ": " << res[i].status << "\n";
  }
  emit(o, data, out);
  return 0;
}

int cmd_measure(const Options& o, std::ostream& out, std::ostream& err) {
  const std::string fmt = format_of(o, "json");
  const Loaded l = load(o.file);
  report_warnings(l, err);
  const SpectralDecomposition d = eigenvalues(*l.problem, o.window[0], o.window[1]);
  for (const auto& w : d.warnings) err << "warning: " << w << "\n";
  const HerglotzData hd = herglotz_decompose(MFunction(*l.problem), d, std::isnan(o.tol) ? 1e-3 : o.tol);
  std::string data;
  if (fmt == "json") {
    json j{{"A", io::matrix_to_json(hd.A)},
           {"B", io::matrix_to_json(hd.B)},
           {"B_window", io::matrix_to_json(hd.B_window)},
           {"tail_estimate", io::matrix_to_json(hd.tail_estimate)},
           {"truncation_bound", hd.truncation_bound},
           {"window", {hd.t_min, hd.t_max}}};
    j["atoms"] = json::array();
    for (const auto& [t, w] : hd.atoms) j["atoms"].push_back({{"t", t}, {"weight", io::matrix_to_json(w)}});
    data = j.dump(2) + "\n";
  } else {
    std::vector<std::string> head{"t"};
    hermitian_header("rho", l.problem->n(), head);
    data = csv_line(head);
    for (const auto& [t, w] : hd.atoms) {
      std::vector<std::string> cells{format_double(t)};
      hermitian_cells(w, cells);
      data += csv_line(cells);
    }
  }
  emit(o, data, out);
  return 0;
}

int cmd_green(const Options& o, std::ostream& out, std::ostream& err) {
  const std::string fmt = format_of(o, "csv");
  const Loaded l = load(o.file);
  report_warnings(l, err);
  const cplx z = parse_complex(o.z.at(0));
  const GreenKernel g(*l.problem, z);
  const int n = l.problem->n();
  std::string data;
  json j = json::array();
  if (fmt == "csv") {
    std::vector<std::string> head{"x", "y"};
    complex_header("G", n, n, head);
    data = csv_line(head);
  }
  for (double x : o.x)
    for (double y : o.y) {
      const Matrix v = g(x, y);
      if (fmt == "csv") {
        std::vector<std::string> cells{format_double(x), format_double(y)};
        complex_cells(v, cells);
        data += csv_line(cells);
      } else {
        j.push_back({{"x", x}, {"y", y}, {"G", io::matrix_to_json(v)}});
      }
    }
  if (fmt == "json") data = json{{"z", cplx_json(z)}, {"values", j}}.dump(2) + "\n";
  emit(o, data, out);
  return 0;
}

// The same coefficient with extra breakpoints at `cuts`, so that piecewise
// linear input data is smooth on every segment.
SpectralProblem refined(const SpectralProblem& p, const std::vector<double>& cuts) {
  const Hamiltonian& h = p.hamiltonian();
  std::vector<double> pts = h.breakpoints();
  for (double c : cuts) {
    if (c < h.start() || (!h.has_tail() && c > h.end())) throw Error(ErrorKind::OutOfDomain, "sample point outside the domain");
    pts.push_back(c);
  }
  std::sort(pts.begin(), pts.end());
  std::vector<Segment> segs;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i + 1] - pts[i] <= 1e-14 * std::max(1.0, std::abs(pts[i + 1]))) continue;
    for (auto& s : h.slice(pts[i], pts[i + 1])) segs.push_back(std::move(s));
  }
  std::optional<Tail> tail;
  if (h.has_tail()) tail = h.tail_from(pts.back());
  return SpectralProblem(Hamiltonian(h.order(), h.start(), std::move(segs), std::move(tail)), p.alpha(), p.beta());
}

int cmd_resolve(const Options& o, std::ostream& out, std::ostream& err) {
  const std::string fmt = format_of(o, "csv");
  const Loaded l = load(o.file);
  report_warnings(l, err);
  const int order = l.problem->hamiltonian().order();
  const auto rows = numeric_rows(o.h);
  std::vector<double> xs;
  std::vector<Vector> hs;
  for (const auto& r : rows) {
    const bool complex_cols = static_cast<int>(r.size()) == 1 + 2 * order;
    if (!complex_cols && static_cast<int>(r.size()) != 1 + order) {
      throw Error(ErrorKind::InvalidInput, o.h + ": expected x and " + std::to_string(order) + " values (or re/im pairs) per line");
    }
    if (!xs.empty() && !(r[0] > xs.back())) throw Error(ErrorKind::InvalidInput, o.h + ": x must increase");
    Vector v(order);
    for (int i = 0; i < order; ++i) v(i) = complex_cols ? cplx(r[1 + 2 * i], r[2 + 2 * i]) : cplx(r[1 + i], 0.0);
    xs.push_back(r[0]);
    hs.push_back(v);
  }
  const cplx z = parse_complex(o.z.at(0));
  const std::vector<double> at = o.x.empty() ? xs : o.x;
  std::vector<Vector> gs;
  if (!xs.empty()) {
    const SpectralProblem p = refined(*l.problem, xs);
    VectorFunction f = [xs, hs, order](double x) -> Vector {
      if (x < xs.front() || x > xs.back()) return Vector::Zero(order);
      auto it = std::upper_bound(xs.begin(), xs.end(), x);
      if (it == xs.end()) return hs.back();
      const std::size_t i = static_cast<std::size_t>(it - xs.begin());
      const double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
      return (1.0 - w) * hs[i - 1] + w * hs[i];
    };
    const VectorFunction g = apply_resolvent(p, z, f);
    for (double x : at) gs.push_back(g(x));
  } else {
    for (std::size_t i = 0; i < at.size(); ++i) gs.push_back(Vector::Zero(order));
  }
  std::string data;
  if (fmt == "csv") {
    std::vector<std::string> head{"x"};
    for (int i = 0; i < order; ++i) {
      head.push_back("g_" + std::to_string(i) + "_re");
      head.push_back("g_" + std::to_string(i) + "_im");
    }
    data = csv_line(head);
    for (std::size_t k = 0; k < at.size(); ++k) {
      std::vector<std::string> cells{format_double(at[k])};
      for (int i = 0; i < order; ++i) {
        cells.push_back(format_double(gs[k](i).real()));
        cells.push_back(format_double(gs[k](i).imag()));
      }
      data += csv_line(cells);
    }
  } else {
    json j = json::array();
    for (std::size_t k = 0; k < at.size(); ++k) {
      json v = json::array();
      for (int i = 0; i < order; ++i) v.push_back(cplx_json(gs[k](i)));
      j.push_back({{"x", at[k]}, {"g", v}});
    }
    data = json{{"z", cplx_json(z)}, {"values", j}}.dump(2) + "\n";
  }
  emit(o, data, out);
  return 0;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Overflow:
    case ErrorKind::NoConvergence:
    case ErrorKind::AtEigenvalue:
    case ErrorKind::DichotomyFailure:
    case ErrorKind::NotDefinite:
    case ErrorKind::WindowTooSmall:
      return 2;
    default:
      return 1;
  }
}

std::complex<double> parse_complex(const std::string& raw) {
  std::string s;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  auto num = [&](const std::string& t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size() || used == 0) throw Error(ErrorKind::InvalidInput, "not a complex number '" + raw + "'");
    return v;
  };
  if (auto comma = s.find(','); comma != std::string::npos) {
    if (comma == 0 || comma + 1 == s.size()) throw Error(ErrorKind::InvalidInput, "not a complex number '" + raw + "'");
    return {num(s.substr(0, comma)), num(s.substr(comma + 1))};
  }
  if (s.empty()) throw Error(ErrorKind::InvalidInput, "empty complex number");
  if (s.back() != 'i' && s.back() != 'j') return {num(s), 0.0};
  s.pop_back();
  // Split at the last sign that is not an exponent sign.
  std::size_t split = std::string::npos;
  for (std::size_t k = s.size(); k-- > 1;) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  if (split == std::string::npos) return {0.0, num(s)};
  return {num(s.substr(0, split)), num(s.substr(split))};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral computations for canonical systems and quantum graphs", "cansys"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  Options o;

  auto add = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("file", o.file, "graph or system file")->required();
    return s;
  };
  auto out_opts = [&](CLI::App* s) {
    s->add_option("--out", o.out, "write data to this file instead of standard output");
    s->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  };
  CLI::App* validate = add("validate", "parse and validate a file");
  CLI::App* compile_cmd = add("compile", "compile a graph into one canonical system");
  out_opts(compile_cmd);
  CLI::App* spectrum = add("spectrum", "eigenvalues, multiplicities and point masses in a window");
  spectrum->add_option("--window", o.window, "t_min t_max")->expected(2)->required();
  spectrum->add_option("--tol", o.tol, "acceptance tolerance of a root");
  out_opts(spectrum);
  CLI::App* mfunc = add("mfunction", "Weyl m-function at points of the upper half plane");
  mfunc->add_option("--points", o.points, "file with one 're im' pair per line");
  mfunc->add_option("--z", o.z, "spectral parameter, 're,im' or 'a+bi' (repeatable)");
  out_opts(mfunc);
  CLI::App* measure = add("measure", "Herglotz data A, B and the point masses in a window");
  measure->add_option("--window", o.window, "t_min t_max")->expected(2)->required();
  measure->add_option("--tol", o.tol, "admissible uncertainty of B");
  out_opts(measure);
  CLI::App* green_cmd = add("green", "Green kernel on a grid of (x, y)");
  green_cmd->add_option("--x", o.x, "x values")->required();
  green_cmd->add_option("--y", o.y, "y values")->required();
  green_cmd->add_option("--z", o.z, "spectral parameter")->required()->expected(1);
  out_opts(green_cmd);
  CLI::App* resolve = add("resolve", "resolvent applied to sampled data");
  resolve->add_option("--h", o.h, "file with x and the components of h per line")->required();
  resolve->add_option("--z", o.z, "spectral parameter")->required()->expected(1);
  resolve->add_option("--x", o.x, "output points (default: the sample points)");
  out_opts(resolve);
  CLI::App* schr = add("schr2cs", "convert a Schrodinger graph into a canonical graph file");
  out_opts(schr);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (validate->parsed()) return cmd_validate(o, out, err);
    if (compile_cmd->parsed()) return cmd_compile(o, out, err);
    if (spectrum->parsed()) return cmd_spectrum(o, out, err);
    if (mfunc->parsed()) return cmd_mfunction(o, out, err);
    if (measure->parsed()) return cmd_measure(o, out, err);
    if (green_cmd->parsed()) return cmd_green(o, out, err);
    if (resolve->parsed()) return cmd_resolve(o, out, err);
    if (schr->parsed()) return cmd_schr2cs(o, out, err);
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << " " << e.detail() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace cansys::cli
