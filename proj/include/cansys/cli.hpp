#pragma once

#include <complex>
#include <iosfwd>
#include <string>

#include "cansys/error.hpp"

namespace cansys::cli {

/// Runs the `cansys` command line. Data goes to `out` (or --out), progress
/// and diagnostics to `err`. Returns 0 (ok), 1 (input error) or 2
/// (numerical failure).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int exit_code(ErrorKind kind);

/// "re,im", "a+bi", "bi" or "a". Throws InvalidInput.
std::complex<double> parse_complex(const std::string& s);

}  // namespace cansys::cli
