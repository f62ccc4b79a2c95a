#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "cansys/error.hpp"

namespace cansys {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

namespace tol {
inline constexpr double structural = 1e-10;
inline constexpr double rank = 1e-10;
}  // namespace tol

/// The symplectic matrix J = [[0, -I], [I, 0]] of order 2n.
Matrix symplectic(int order);

/// N = diag(-I, I) of order 2n; reflects the first solution component.
Matrix reflection(int order);

/// Row-normalized boundary matrix alpha in C^{n x 2n}.
///
/// Invariants: alpha alpha* = I and alpha J alpha* = 0.
class BoundaryCondition {
 public:
  BoundaryCondition() = default;

  /// Normalizes `raw` by (raw raw*)^{-1/2} raw.
  /// Throws RankDeficient or NotSelfAdjoint.
  static BoundaryCondition from_raw(const Matrix& raw, double tolerance = tol::structural);

  const Matrix& matrix() const { return m_; }
  int n() const { return static_cast<int>(m_.rows()); }
  int order() const { return static_cast<int>(m_.cols()); }
  Matrix block1() const { return m_.leftCols(n()); }
  Matrix block2() const { return m_.rightCols(n()); }

 private:
  Matrix m_;
};

inline BoundaryCondition validate_boundary(const Matrix& raw, double tolerance = tol::structural) {
  return BoundaryCondition::from_raw(raw, tolerance);
}

/// Matrix exponential (Pade scaling and squaring). Throws Overflow.
Matrix mat_exp(const Matrix& m);

/// Orthonormal basis of the numerical kernel: right singular vectors with
/// singular value below tol * scale, where scale defaults to sigma_max.
std::vector<Vector> kernel_basis(const Matrix& m, double tol, double scale = 0.0);

/// Same basis packed as columns.
Matrix kernel_matrix(const Matrix& m, double tol, double scale = 0.0);

/// Hermitian inverse square root of a positive definite matrix.
Matrix inverse_sqrt_psd(const Matrix& m);

/// Smallest eigenvalue of the Hermitian part.
double min_eigenvalue_hermitian(const Matrix& m);

/// Smallest and largest singular values.
std::pair<double, double> singular_range(const Matrix& m);

/// Index permutation stored as compiled -> concatenated positions, turned
/// into the matrix P with P e_i = e_{perm[i]}.
Matrix permutation_matrix(const std::vector<int>& perm);

/// True if `perm` is a bijection of {0, ..., size-1}.
bool is_permutation(const std::vector<int>& perm);

}  // namespace cansys
