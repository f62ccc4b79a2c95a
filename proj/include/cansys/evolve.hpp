#pragma once

#include <memory>

#include "cansys/hamiltonian.hpp"

namespace cansys {

/// Transfer matrix Phi with u(s0 + delta) = Phi u(s0) for solutions of
/// u' = z J H u on a segment (local coordinates).
Matrix segment_transfer(const Segment& seg, cplx z, double s0, double delta);
inline Matrix segment_transfer(const Segment& seg, cplx z, double delta) {
  return segment_transfer(seg, z, 0.0, delta);
}

/// Initial value W(a, z) = (-J alpha*, alpha*).
Matrix initial_value(const BoundaryCondition& alpha);

/// Fundamental solution W = (u v) of J W' = -z H W with W(a) = (-J alpha*, alpha*),
/// stored at the breakpoints of the finite part.
class FundamentalSolution {
 public:
  FundamentalSolution(std::shared_ptr<const Hamiltonian> h, const BoundaryCondition& alpha, cplx z);
  FundamentalSolution(const Hamiltonian& h, const BoundaryCondition& alpha, cplx z)
      : FundamentalSolution(std::make_shared<const Hamiltonian>(h), alpha, z) {}

  cplx z() const { return z_; }
  const Hamiltonian& hamiltonian() const { return *h_; }
  const std::vector<Matrix>& values() const { return values_; }
  int n() const { return h_->n(); }

  /// W(x, z), also on the tail. Throws OutOfDomain.
  Matrix at(double x) const;
  Matrix u(double x) const { return at(x).leftCols(n()); }
  Matrix v(double x) const { return at(x).rightCols(n()); }
  /// W at the end of the finite part.
  const Matrix& at_end() const { return values_.back(); }

 private:
  std::shared_ptr<const Hamiltonian> h_;
  cplx z_;
  std::vector<Matrix> values_;
};

inline FundamentalSolution fundamental_solution(const Hamiltonian& h, const BoundaryCondition& alpha, cplx z) {
  return FundamentalSolution(h, alpha, z);
}

inline Matrix evaluate_solution(const FundamentalSolution& f, double x) { return f.at(x); }

/// Product of all finite segment transfers, W(b) = Phi W(a).
Matrix total_transfer(const Hamiltonian& h, cplx z);

/// Number of Gauss-Legendre panels that keeps |z| ||H|| per panel moderate.
int oscillation_panels(const Segment& seg, double zabs);

/// Integral of F(x)* H(x) G(x) over [c, d].
Matrix weighted_gram(const FundamentalSolution& f, const FundamentalSolution& g, double c, double d);

/// The same integral from the Lagrange identity; requires conj(z) != w.
Matrix lagrange_gram(const FundamentalSolution& f, const FundamentalSolution& g, double c, double d);

}  // namespace cansys
