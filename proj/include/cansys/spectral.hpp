#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cansys/evolve.hpp"

namespace cansys {

/// Vector valued function of x, used for resolvent inputs and outputs.
using VectorFunction = std::function<Vector(double)>;

/// Canonical system with a boundary condition at the left end and either a
/// boundary condition at the right end (regular) or a tail.
class SpectralProblem {
 public:
  SpectralProblem(Hamiltonian h, BoundaryCondition alpha, std::optional<BoundaryCondition> beta = std::nullopt);

  const Hamiltonian& hamiltonian() const { return *h_; }
  std::shared_ptr<const Hamiltonian> hamiltonian_ptr() const { return h_; }
  const BoundaryCondition& alpha() const { return alpha_; }
  const std::optional<BoundaryCondition>& beta() const { return beta_; }
  int n() const { return h_->n(); }
  bool is_regular() const { return !h_->has_tail(); }
  /// True for regular problems and for a projection tail.
  bool has_discrete_reduction() const;
  /// Regular problem on the finite part equivalent to this one.
  SpectralProblem regular_reduction() const;

  /// beta, or the tail annihilator Gamma(z) whose kernel is the decaying
  /// solution space at the end of the finite part.
  Matrix right_condition(cplx z) const;

 private:
  std::shared_ptr<const Hamiltonian> h_;
  BoundaryCondition alpha_;
  std::optional<BoundaryCondition> beta_;
};

/// Rows annihilating the L^2 solutions of the constant-coefficient tail at
/// its start. Throws RealZ or DichotomyFailure.
Matrix tail_annihilator(const Tail& tail, cplx z);

/// m(z) = -(Gamma u(b,z))^{-1} Gamma v(b,z). Throws AtEigenvalue.
Matrix m_function(const SpectralProblem& p, cplx z);
Matrix m_regular(const Hamiltonian& h, const BoundaryCondition& alpha, const BoundaryCondition& beta, cplx z);
Matrix m_halfline(const Hamiltonian& h, const BoundaryCondition& alpha, cplx z);

class MFunction {
 public:
  explicit MFunction(SpectralProblem p) : p_(std::move(p)) {}
  Matrix operator()(cplx z) const { return m_function(p_, z); }
  const SpectralProblem& problem() const { return p_; }

 private:
  SpectralProblem p_;
};

/// Green kernel G(x, y, z) for non-real z with cached u and f_m solutions.
class GreenKernel {
 public:
  GreenKernel(const SpectralProblem& p, cplx z);

  cplx z() const { return z_; }
  Matrix operator()(double x, double y) const;
  Matrix u(double x, bool conjugate_z = false) const;
  Matrix f_m(double x, bool conjugate_z = false) const;
  const Matrix& m(bool conjugate_z = false) const { return conjugate_z ? m_bar_ : m_; }

 private:
  cplx z_;
  FundamentalSolution w_, w_bar_;
  Matrix m_, m_bar_;
};

inline Matrix green(const SpectralProblem& p, cplx z, double x, double y) { return GreenKernel(p, z)(x, y); }

/// g = (S - z)^{-1} h with h supported on the finite part.
class Resolvent {
 public:
  Resolvent(const SpectralProblem& p, cplx z, VectorFunction h);
  Vector operator()(double x) const;

 private:
  Matrix partial_integral(std::size_t seg, double s0, double s1) const;

  GreenKernel g_;
  std::shared_ptr<const Hamiltonian> h_;
  VectorFunction f_;
  // Knots subdivide each segment; cum_[k] integrates from start() to knot k.
  struct Knot {
    std::size_t seg;
    double local;
  };
  std::vector<Knot> knots_;
  std::vector<Matrix> cum_;
};

inline VectorFunction apply_resolvent(const SpectralProblem& p, cplx z, VectorFunction h) {
  auto r = std::make_shared<Resolvent>(p, z, std::move(h));
  return [r](double x) { return (*r)(x); };
}

struct EigenOptions {
  int points = 0;                 // 0 selects the density heuristic
  double accept_tol = 1e-9;       // relative sigma_min at an accepted root
  double multiplicity_tol = 1e-7; // relative cut for the kernel dimension
  int golden_iterations = 200;
};

struct Eigenpair {
  double t = 0.0;
  int multiplicity = 0;
  Matrix coefficients;  // n x M, columns c_jk
  Matrix weight;        // rho({t}) = sum c c*
  double residual = 0.0;
};

struct SpectralDecomposition {
  double t_min = 0.0, t_max = 0.0;
  int grid_points = 0;
  std::vector<Eigenpair> eigen;
  std::vector<std::string> warnings;
};

/// Eigenvalues in (t_min, t_max) with Gram-orthonormalized kernel data.
/// Throws NotDefinite; MissedRootRisk is reported in `warnings`.
SpectralDecomposition eigenvalues(const SpectralProblem& p, double t_min, double t_max,
                                  const EigenOptions& opts = {});

/// Eigenfunction u(x, t_j) c_jk.
Vector eigenfunction(const SpectralProblem& p, const Eigenpair& e, int k, double x);

/// (U h)(t) = integral of u(x, t)* H h over the finite part.
Vector transform_U(const SpectralProblem& p, const VectorFunction& h, double t);

struct HerglotzData {
  Matrix A, B;
  Matrix B_window;          // Im m(i) minus the in-window sum only
  Matrix tail_estimate;     // extrapolated sum beyond the window
  double truncation_bound = 0.0;
  std::vector<std::pair<double, Matrix>> atoms;
  double t_min = 0.0, t_max = 0.0;
};

/// A, B and the discrete measure. Throws WindowTooSmall when the tail
/// uncertainty exceeds `tol`.
HerglotzData herglotz_decompose(const MFunction& m, const SpectralDecomposition& d, double tol = 1e-3);

/// (1/pi) times the integral of Im m(t + i y) over (t1, t2).
Matrix stieltjes_inversion(const MFunction& m, double t1, double t2, double y, double tol = 1e-10);

/// Weighted inner product of two vector functions over [a, b].
cplx weighted_inner(const Hamiltonian& h, const VectorFunction& f, const VectorFunction& g, double a, double b);

}  // namespace cansys
