#include "cansys/algebra.hpp"

#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

namespace cansys {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NotSelfAdjoint: return "NotSelfAdjoint";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::BadDomain: return "BadDomain";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::AtEigenvalue: return "AtEigenvalue";
    case ErrorKind::RealZ: return "RealZ";
    case ErrorKind::DichotomyFailure: return "DichotomyFailure";
    case ErrorKind::NotDefinite: return "NotDefinite";
    case ErrorKind::WindowTooSmall: return "WindowTooSmall";
    case ErrorKind::HasHalfLine: return "HasHalfLine";
    case ErrorKind::IndefiniteTail: return "IndefiniteTail";
    case ErrorKind::InvalidGraph: return "InvalidGraph";
    case ErrorKind::InvalidInput: return "InvalidInput";
  }
  return "Error";
}

Matrix symplectic(int order) {
  const int n = order / 2;
  Matrix j = Matrix::Zero(order, order);
  j.block(0, n, n, n) = -Matrix::Identity(n, n);
  j.block(n, 0, n, n) = Matrix::Identity(n, n);
  return j;
}

Matrix reflection(int order) {
  const int n = order / 2;
  Matrix r = Matrix::Identity(order, order);
  r.topLeftCorner(n, n) *= -1.0;
  return r;
}

BoundaryCondition BoundaryCondition::from_raw(const Matrix& raw, double tolerance) {
  if (raw.cols() != 2 * raw.rows() || raw.rows() == 0) {
    throw Error(ErrorKind::InvalidInput, "boundary matrix must be n x 2n");
  }
  if (!raw.allFinite()) throw Error(ErrorKind::InvalidInput, "boundary matrix has non-finite entries");
  const auto [smin, smax] = singular_range(raw);
  if (smax == 0.0 || smin < tol::rank * smax) {
    throw Error(ErrorKind::RankDeficient, "boundary matrix does not have full row rank");
  }
  const Matrix j = symplectic(static_cast<int>(raw.cols()));
  const double scale = smax * smax;
  if ((raw * j * raw.adjoint()).norm() > tolerance * scale) {
    throw Error(ErrorKind::NotSelfAdjoint, "raw J raw* does not vanish");
  }
  BoundaryCondition bc;
  bc.m_ = inverse_sqrt_psd(raw * raw.adjoint()) * raw;
  return bc;
}

Matrix mat_exp(const Matrix& m) {
  if (!m.allFinite()) throw Error(ErrorKind::InvalidInput, "mat_exp of non-finite matrix");
  // exp(M) has norm at most e^{||M||}; beyond ~700 it can leave double range.
  const double bound = m.cwiseAbs().colwise().sum().maxCoeff();
  Matrix e = m.exp();
  if (!e.allFinite()) {
    throw Error(ErrorKind::Overflow, "matrix exponential overflow (norm " + std::to_string(bound) + ")");
  }
  return e;
}

std::vector<Vector> kernel_basis(const Matrix& m, double tol, double scale) {
  const Matrix k = kernel_matrix(m, tol, scale);
  std::vector<Vector> out;
  for (int c = 0; c < k.cols(); ++c) out.push_back(k.col(c));
  return out;
}

Matrix kernel_matrix(const Matrix& m, double tol, double scale) {
  const int q = static_cast<int>(m.cols());
  if (m.rows() == 0) return Matrix::Identity(q, q);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = scale > 0.0 ? scale : (s.size() > 0 ? s(0) : 0.0);
  const Matrix& v = svd.matrixV();
  std::vector<int> cols;
  for (int i = 0; i < q; ++i) {
    const double si = i < s.size() ? s(i) : 0.0;
    if (smax == 0.0 || si < tol * smax) cols.push_back(i);
  }
  Matrix out(q, static_cast<int>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<int>(c)) = v.col(cols[c]);
  return out;
}

Matrix inverse_sqrt_psd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0) throw Error(ErrorKind::RankDeficient, "matrix is not positive definite");
  return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
}

double min_eigenvalue_hermitian(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

std::pair<double, double> singular_range(const Matrix& m) {
  if (m.size() == 0) return {0.0, 0.0};
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  return {s(s.size() - 1), s(0)};
}

Matrix permutation_matrix(const std::vector<int>& perm) {
  const int d = static_cast<int>(perm.size());
  Matrix p = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) p(perm[i], i) = 1.0;
  return p;
}

bool is_permutation(const std::vector<int>& perm) {
  std::vector<bool> seen(perm.size(), false);
  for (int p : perm) {
    if (p < 0 || p >= static_cast<int>(perm.size()) || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

}  // namespace cansys
