#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cansys/cli.hpp"
#include "cansys/io.hpp"
#include "oracles.hpp"

using namespace cansys;

namespace {

std::string sample(const char* name) { return std::string(CANSYS_SAMPLES) + "/" + name; }

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "cansys");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("cansys_test_" + name);
  std::ofstream(path) << content;
  return path.string();
}

}  // namespace

TEST_CASE("complex arguments") {
  CHECK(cli::parse_complex("1,2") == cplx(1.0, 2.0));
  CHECK(cli::parse_complex("i") == cplx(0.0, 1.0));
  CHECK(cli::parse_complex("-i") == cplx(0.0, -1.0));
  CHECK(cli::parse_complex("0.5-2.5i") == cplx(0.5, -2.5));
  CHECK(cli::parse_complex("1e-3+1e2j") == cplx(1e-3, 1e2));
  CHECK(cli::parse_complex("-3") == cplx(-3.0, 0.0));
  CHECK_THROWS_AS(cli::parse_complex("abc"), Error);
  CHECK_THROWS_AS(cli::parse_complex("1,"), Error);
}

TEST_CASE("spectrum of the model interval") {
  const Run r = run({"spectrum", sample("interval.json"), "--window", "-1", "10"});
  REQUIRE(r.code == 0);
  const auto rows = csv(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"t", "multiplicity", "rho_0_0"});
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(std::stod(rows[k + 1][0]) - k * M_PI) < 1e-9);
    CHECK(rows[k + 1][1] == "1");
    CHECK(std::abs(std::stod(rows[k + 1][2]) - 1.0) < 1e-8);
  }
  const Run j = run({"spectrum", sample("interval.json"), "--window", "-1", "10", "--format", "json"});
  REQUIRE(j.code == 0);
  CHECK(io::json::parse(j.out)["eigen"].size() == 4);
}

TEST_CASE("m-function table") {
  const Run r = run({"mfunction", sample("interval.json"), "--z", "i", "--z", "3.141592653589793,0"});
  REQUIRE(r.code == 0);
  const auto rows = csv(r.out);
  REQUIRE(rows.size() == 3);
  CHECK(std::abs(std::stod(rows[1][3])) < 1e-12);
  CHECK(std::abs(std::stod(rows[1][4]) - 1.31303528549933) < 1e-8);
  CHECK(rows[2][2] == "AtEigenvalue");
  CHECK(r.err.find("AtEigenvalue") != std::string::npos);

  const std::string empty = temp_file("empty_points.txt", "");
  const Run e = run({"mfunction", sample("interval.json"), "--points", empty});
  CHECK(e.code == 0);
  CHECK(csv(e.out).size() == 1);

  const std::string pts = temp_file("points.txt", "# re im\n0 1\n0.5, 2\n\n-1 0.25\n");
  const Run p = run({"mfunction", sample("interval.json"), "--points", pts});
  REQUIRE(p.code == 0);
  const auto prow = csv(p.out);
  REQUIRE(prow.size() == 4);
  const cplx z(0.5, 2.0);
  const cplx m = oracle::minus_cot(z);
  CHECK(std::abs(cplx(std::stod(prow[2][3]), std::stod(prow[2][4])) - m) < 1e-10);
}

TEST_CASE("validate reports") {
  const Run ok = run({"validate", sample("star3.json")});
  CHECK(ok.code == 0);
  CHECK(ok.out.rfind("OK: 3 edges, 4 vertices, compiled order 12\n", 0) == 0);
  const Run sys = run({"validate", sample("interval.json")});
  CHECK(sys.code == 0);
  CHECK(sys.out.find("definite: yes") != std::string::npos);

  const Run nsa = run({"validate", sample("not_selfadjoint.json")});
  CHECK(nsa.code == 1);
  CHECK(nsa.err.find("NotSelfAdjoint at vertex 'a'") != std::string::npos);
  const Run dis = run({"validate", sample("disconnected.json")});
  CHECK(dis.code == 1);
  CHECK(dis.err.find("graph not connected") != std::string::npos);

  CHECK(run({"validate", sample("missing.json")}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"spectrum", sample("interval.json")}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("numerical failures exit with 2") {
  const Run r = run({"green", sample("interval.json"), "--x", "0.3", "--y", "0.5", "--z", "3.141592653589793,1e-14"});
  CHECK(r.code == 2);
  CHECK(r.err.find("AtEigenvalue") != std::string::npos);
  CHECK(run({"green", sample("interval.json"), "--x", "0.3", "--y", "0.5", "--z", "2"}).code == 1);
  CHECK(cli::exit_code(ErrorKind::NoConvergence) == 2);
  CHECK(cli::exit_code(ErrorKind::InvalidGraph) == 1);
}

TEST_CASE("green kernel grid") {
  const Run r = run({"green", sample("interval.json"), "--x", "0.2", "0.8", "--y", "0.5", "--z", "0.3+1i"});
  REQUIRE(r.code == 0);
  const auto rows = csv(r.out);
  REQUIRE(rows.size() == 3);
  const io::Document d = io::load_document(sample("interval.json"));
  const Matrix g = green(*d.system, cplx(0.3, 1.0), 0.8, 0.5);
  CHECK(std::abs(cplx(std::stod(rows[2][2]), std::stod(rows[2][3])) - g(0, 0)) < 1e-14);
  CHECK(std::abs(cplx(std::stod(rows[2][8]), std::stod(rows[2][9])) - g(1, 1)) < 1e-14);
}

TEST_CASE("resolve sampled data") {
  // h(x) = (1 + x, 2 - x) is linear, so the interpolated input is exact.
  std::string text;
  for (int i = 0; i <= 10; ++i) {
    const double x = 0.1 * i;
    text += io::format_double(x) + " " + io::format_double(1.0 + x) + " " + io::format_double(2.0 - x) + "\n";
  }
  const std::string h = temp_file("h.txt", text);
  const Run r = run({"resolve", sample("interval.json"), "--h", h, "--z", "0.5,0.7", "--x", "0.25", "0.9"});
  REQUIRE(r.code == 0);
  const auto rows = csv(r.out);
  REQUIRE(rows.size() == 3);
  const io::Document d = io::load_document(sample("interval.json"));
  const VectorFunction g = apply_resolvent(*d.system, cplx(0.5, 0.7), [](double x) {
    Vector v(2);
    v << 1.0 + x, 2.0 - x;
    return v;
  });
  for (int k = 0; k < 2; ++k) {
    const Vector expect = g(k == 0 ? 0.25 : 0.9);
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(cplx(std::stod(rows[k + 1][1 + 2 * i]), std::stod(rows[k + 1][2 + 2 * i])) - expect(i)) < 1e-10);
    }
  }
  const std::string bad = temp_file("h_bad.txt", "0 1 2\n0 1 2\n");
  CHECK(run({"resolve", sample("interval.json"), "--h", bad, "--z", "i"}).code == 1);
}

TEST_CASE("compile output and schr2cs") {
  const std::string out = (std::filesystem::temp_directory_path() / "cansys_test_compiled.json").string();
  const Run r = run({"compile", sample("star3.json"), "--out", out});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  // Re-ingest the compiled system as a bare system file.
  const Run a = run({"spectrum", out, "--window", "0.5", "45"});
  const Run b = run({"spectrum", sample("star3.json"), "--window", "0.5", "45"});
  REQUIRE(a.code == 0);
  const auto ra = csv(a.out), rb = csv(b.out);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 1; i < ra.size(); ++i) {
    CHECK(std::abs(std::stod(ra[i][0]) - std::stod(rb[i][0])) <= 1e-10);
    CHECK(ra[i][1] == rb[i][1]);
  }
  CHECK(run({"compile", sample("interval.json")}).code == 1);

  const Run s = run({"schr2cs", sample("star3.json")});
  REQUIRE(s.code == 0);
  const io::Document cs = io::parse_document_text(s.out);
  CHECK(cs.kind == io::Document::Kind::Graph);
  CHECK(run({"schr2cs", sample("canonical_path.json")}).code == 1);
}

TEST_CASE("output is deterministic and independent of the thread count") {
  const std::vector<std::string> args{"mfunction", sample("canonical_path.json"), "--z", "i", "--z", "1+0.5i",
                                      "--z", "-2+2i", "--z", "4+0.1i", "--format", "json"};
  setenv("CANSYS_THREADS", "1", 1);
  const Run one = run(args);
  setenv("CANSYS_THREADS", "3", 1);
  const Run three = run(args);
  unsetenv("CANSYS_THREADS");
  REQUIRE(one.code == 0);
  CHECK(one.out == three.out);
  CHECK(run({"compile", sample("canonical_path.json")}).out == run({"compile", sample("canonical_path.json")}).out);
}
