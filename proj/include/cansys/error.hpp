#pragma once

#include <stdexcept>
#include <string>

namespace cansys {

enum class ErrorKind {
  RankDeficient,
  NotSelfAdjoint,
  Overflow,
  OutOfDomain,
  BadDomain,
  NoConvergence,
  AtEigenvalue,
  RealZ,
  DichotomyFailure,
  NotDefinite,
  WindowTooSmall,
  HasHalfLine,
  IndefiniteTail,
  InvalidGraph,
  InvalidInput,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries one of the kinds above so the
// command-line front end can map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace cansys
