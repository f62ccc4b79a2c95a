#include "cansys/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cansys/quadrature.hpp"

namespace cansys {

namespace {

constexpr cplx I(0.0, 1.0);

Matrix sign_function(const Matrix& m) {
  Matrix s = m;
  const int d = static_cast<int>(m.rows());
  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<Matrix> lu(s);
    const Matrix inv = lu.inverse();
    // Determinant scaling speeds up the early iterations.
    const double mu = std::pow(std::abs(lu.determinant()), -1.0 / d);
    const double scale = (std::isfinite(mu) && mu > 0.0 && it < 6) ? mu : 1.0;
    Matrix next = 0.5 * (scale * s + inv / scale);
    if (!next.allFinite()) break;
    const double diff = (next - s).norm();
    s = std::move(next);
    if (diff <= 1e-14 * s.norm()) return s;
  }
  throw Error(ErrorKind::DichotomyFailure, "sign iteration for the tail did not converge");
}

Matrix permuted_columns(const Matrix& cat, const std::vector<int>& perm) {
  Matrix out(cat.rows(), cat.cols());
  for (int m = 0; m < static_cast<int>(perm.size()); ++m) out.col(m) = cat.col(perm[m]);
  return out;
}

Matrix m_from(const Matrix& gamma, const Matrix& w_end, int n) {
  const Matrix gu = gamma * w_end.leftCols(n);
  const Matrix gv = gamma * w_end.rightCols(n);
  const double smin = singular_range(gu).first;
  const double scale = (gamma * w_end).norm();
  if (!(smin >= 1e-12 * scale) || scale == 0.0) {
    throw Error(ErrorKind::AtEigenvalue, "right condition applied to u(b, z) is singular");
  }
  return -gu.fullPivLu().solve(gv);
}

}  // namespace

SpectralProblem::SpectralProblem(Hamiltonian h, BoundaryCondition alpha, std::optional<BoundaryCondition> beta)
    : h_(std::make_shared<const Hamiltonian>(std::move(h))), alpha_(std::move(alpha)), beta_(std::move(beta)) {
  if (alpha_.order() != h_->order()) throw Error(ErrorKind::InvalidInput, "alpha order mismatch");
  if (h_->has_tail() && beta_) throw Error(ErrorKind::InvalidInput, "a problem with a tail takes no beta");
  if (!h_->has_tail()) {
    if (!beta_) throw Error(ErrorKind::InvalidInput, "regular problem needs beta");
    if (beta_->order() != h_->order()) throw Error(ErrorKind::InvalidInput, "beta order mismatch");
    if (!(h_->end() > h_->start())) throw Error(ErrorKind::InvalidInput, "regular problem needs positive length");
  }
}

bool SpectralProblem::has_discrete_reduction() const {
  return is_regular() || std::holds_alternative<ProjectionTail>(h_->tail()->kind);
}

SpectralProblem SpectralProblem::regular_reduction() const {
  if (is_regular()) return *this;
  const auto* proj = std::get_if<ProjectionTail>(&h_->tail()->kind);
  if (!proj) throw Error(ErrorKind::InvalidInput, "only projection tails reduce to regular problems");
  return SpectralProblem(Hamiltonian(h_->order(), h_->start(), h_->segments()), alpha_, proj->beta);
}

Matrix SpectralProblem::right_condition(cplx z) const {
  if (beta_) return beta_->matrix();
  return tail_annihilator(*h_->tail(), z);
}

Matrix tail_annihilator(const Tail& tail, cplx z) {
  if (auto p = std::get_if<ProjectionTail>(&tail.kind)) {
    // L^2 solutions on the tail are exactly those with P u = 0 at its start.
    const Matrix proj = p->projection();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (proj + proj.adjoint()));
    const int n = p->beta.n();
    return es.eigenvectors().rightCols(n).adjoint();
  }
  if (z.imag() == 0.0) throw Error(ErrorKind::RealZ, "half-line m-function needs non-real z");
  if (auto d = std::get_if<DefiniteConstantTail>(&tail.kind)) {
    const int order = static_cast<int>(d->value.rows()), n = order / 2;
    const Matrix gen = z * symplectic(order) * d->value;
    const Matrix s = sign_function(gen);
    const Matrix stable = 0.5 * (Matrix::Identity(order, order) - s);
    const double dim = stable.trace().real();
    if (std::abs(dim - n) > 1e-6) {
      throw Error(ErrorKind::DichotomyFailure, "tail spectrum does not split n/n");
    }
    const Matrix gamma_adj = kernel_matrix(stable.adjoint(), 1e-8);
    if (gamma_adj.cols() != n) throw Error(ErrorKind::DichotomyFailure, "decaying subspace has wrong dimension");
    return gamma_adj.adjoint();
  }
  if (auto sch = std::get_if<SchrodingerTail>(&tail.kind)) {
    cplx omega = std::sqrt(z - sch->potential);
    if (omega.imag() < 0.0) omega = -omega;
    if (omega.imag() <= 0.0) throw Error(ErrorKind::DichotomyFailure, "no decaying Schrodinger solution");
    const Real2& t = sch->t_start;
    // Canonical image T^{-1} (i omega, 1) of the decaying (y', y).
    const cplx y1 = I * omega, y2 = 1.0;
    const cplx d1 = t(1, 1) * y1 - t(0, 1) * y2;
    const cplx d2 = -t(1, 0) * y1 + t(0, 0) * y2;
    Matrix gamma(1, 2);
    gamma << d2, -d1;
    return gamma / gamma.norm();
  }
  const auto& comp = std::get<CompositeTail>(tail.kind);
  int rows = 0, cols = 0;
  std::vector<Matrix> parts;
  for (const auto& b : comp.blocks) {
    parts.push_back(tail_annihilator(b, z));
    rows += static_cast<int>(parts.back().rows());
    cols += static_cast<int>(parts.back().cols());
  }
  Matrix cat = Matrix::Zero(rows, cols);
  int r = 0, c = 0;
  for (const auto& m : parts) {
    cat.block(r, c, m.rows(), m.cols()) = m;
    r += static_cast<int>(m.rows());
    c += static_cast<int>(m.cols());
  }
  return permuted_columns(cat, comp.perm);
}

Matrix m_function(const SpectralProblem& p, cplx z) {
  const Matrix w_end = total_transfer(p.hamiltonian(), z) * initial_value(p.alpha());
  return m_from(p.right_condition(z), w_end, p.n());
}

Matrix m_regular(const Hamiltonian& h, const BoundaryCondition& alpha, const BoundaryCondition& beta, cplx z) {
  if (h.has_tail()) throw Error(ErrorKind::InvalidInput, "m_regular needs a Hamiltonian without tail");
  return m_function(SpectralProblem(h, alpha, beta), z);
}

Matrix m_halfline(const Hamiltonian& h, const BoundaryCondition& alpha, cplx z) {
  if (!h.has_tail()) throw Error(ErrorKind::InvalidInput, "m_halfline needs a tail");
  if (z.imag() == 0.0) throw Error(ErrorKind::RealZ, "half-line m-function needs non-real z");
  return m_function(SpectralProblem(h, alpha), z);
}

GreenKernel::GreenKernel(const SpectralProblem& p, cplx z)
    : z_(z),
      w_(p.hamiltonian_ptr(), p.alpha(), z),
      w_bar_(p.hamiltonian_ptr(), p.alpha(), std::conj(z)) {
  if (z.imag() == 0.0) throw Error(ErrorKind::RealZ, "Green kernel needs non-real z");
  m_ = m_from(p.right_condition(z), w_.at_end(), p.n());
  m_bar_ = m_from(p.right_condition(std::conj(z)), w_bar_.at_end(), p.n());
}

Matrix GreenKernel::u(double x, bool conjugate_z) const {
  return (conjugate_z ? w_bar_ : w_).u(x);
}

Matrix GreenKernel::f_m(double x, bool conjugate_z) const {
  const FundamentalSolution& w = conjugate_z ? w_bar_ : w_;
  const Matrix wx = w.at(x);
  const int n = w.n();
  return wx.rightCols(n) + wx.leftCols(n) * m(conjugate_z);
}

Matrix GreenKernel::operator()(double x, double y) const {
  if (x <= y) return u(x) * f_m(y, true).adjoint();
  return f_m(x) * u(y, true).adjoint();
}

Resolvent::Resolvent(const SpectralProblem& p, cplx z, VectorFunction h)
    : g_(p, z), h_(p.hamiltonian_ptr()), f_(std::move(h)) {
  const int n = h_->n();
  const auto& segs = h_->segments();
  cum_.push_back(Matrix::Zero(n, 2));
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const int pieces = std::max(4, oscillation_panels(segs[i], std::abs(z)));
    const double step = segs[i].length / pieces;
    for (int k = 0; k < pieces; ++k) {
      knots_.push_back({i, k * step});
      const double s1 = k + 1 == pieces ? segs[i].length : (k + 1) * step;
      cum_.push_back(cum_.back() + partial_integral(i, k * step, s1));
    }
  }
}

// Columns: integral of u(y, conj z)* H h and of f_m(y, conj z)* H h over
// [s0, s1] in local coordinates of segment `seg`.
Matrix Resolvent::partial_integral(std::size_t seg, double s0, double s1) const {
  const double x0 = h_->breakpoints()[seg];
  const Segment& sg = h_->segments()[seg];
  const int n = h_->n();
  auto integrand = [&](double t) -> Matrix {
    const double x = x0 + t;
    const Vector hh = sg.value(t) * f_(x);
    Matrix out(n, 2);
    out.col(0) = g_.u(x, true).adjoint() * hh;
    out.col(1) = g_.f_m(x, true).adjoint() * hh;
    return out;
  };
  return integrate(integrand, s0, s1);
}

Vector Resolvent::operator()(double x) const {
  const Matrix& total = cum_.back();
  Matrix acc_left = total;
  const auto [idx, local] = h_->locate(x);
  if (idx < h_->segments().size()) {
    // Last knot at or before x.
    auto it = std::upper_bound(knots_.begin(), knots_.end(), Knot{idx, local}, [](const Knot& a, const Knot& b) {
      return a.seg < b.seg || (a.seg == b.seg && a.local < b.local);
    });
    const std::size_t k = static_cast<std::size_t>(it - knots_.begin()) - 1;
    acc_left = cum_[k];
    if (local > knots_[k].local) acc_left += partial_integral(idx, knots_[k].local, local);
  }
  const Matrix acc_right = total - acc_left;
  return g_.f_m(x) * acc_left.col(0) + g_.u(x) * acc_right.col(1);
}

SpectralDecomposition eigenvalues(const SpectralProblem& problem, double t_min, double t_max,
                                  const EigenOptions& opts) {
  if (!(t_max > t_min)) throw Error(ErrorKind::InvalidInput, "empty eigenvalue window");
  const SpectralProblem p = problem.regular_reduction();
  const Hamiltonian& h = p.hamiltonian();
  if (!is_definite(h)) throw Error(ErrorKind::NotDefinite, "coefficient is not definite on the interval");
  const int n = p.n();
  const Matrix w0 = initial_value(p.alpha());
  const Matrix beta = p.beta()->matrix();

  // sigma_min of beta u(b, t) relative to the size of u(b, t).
  auto u_end = [&](double t) -> Matrix { return (total_transfer(h, t) * w0).leftCols(n); };
  auto sigma = [&](double t) -> double {
    const Matrix u = u_end(t);
    return singular_range(beta * u).first / singular_range(u).second;
  };

  SpectralDecomposition out;
  out.t_min = t_min;
  out.t_max = t_max;
  const double density = std::max(h.trace_integral() / M_PI, 1e-12);
  const int needed = static_cast<int>(std::ceil(40.0 * (t_max - t_min) * density));
  int points = opts.points > 0 ? opts.points : std::max(1000, needed);
  if (points < needed) {
    out.warnings.push_back("MissedRootRisk: grid of " + std::to_string(points) +
                           " points is coarser than the oscillation estimate of " + std::to_string(needed));
  }
  out.grid_points = points;

  std::vector<double> ts(points + 1), ss(points + 1);
  for (int i = 0; i <= points; ++i) {
    ts[i] = t_min + (t_max - t_min) * i / points;
    ss[i] = sigma(ts[i]);
  }

  auto golden = [&](double a, double b) -> std::pair<double, double> {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = sigma(c), fd = sigma(d);
    for (int it = 0; it < opts.golden_iterations; ++it) {
      if (b - a <= 4e-16 * std::max(1.0, std::abs(a) + std::abs(b))) break;
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - g * (b - a);
        fc = sigma(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + g * (b - a);
        fd = sigma(d);
      }
    }
    const double t = 0.5 * (a + b);
    return {t, sigma(t)};
  };

  std::vector<std::pair<double, double>> roots;
  for (int i = 0; i <= points; ++i) {
    const bool left_ok = i == 0 || ss[i] <= ss[i - 1];
    const bool right_ok = i == points || ss[i] <= ss[i + 1];
    if (!(left_ok && right_ok)) continue;
    const double a = ts[std::max(0, i - 1)], b = ts[std::min(points, i + 1)];
    // Finer look inside the bracket to separate close minima.
    constexpr int sub = 16;
    std::vector<double> st(sub + 1), sv(sub + 1);
    for (int j = 0; j <= sub; ++j) {
      st[j] = a + (b - a) * j / sub;
      sv[j] = sigma(st[j]);
    }
    for (int j = 0; j <= sub; ++j) {
      if ((j > 0 && sv[j] > sv[j - 1]) || (j < sub && sv[j] > sv[j + 1])) continue;
      auto [t, s] = golden(st[std::max(0, j - 1)], st[std::min(sub, j + 1)]);
      if (s < opts.accept_tol && t > t_min && t < t_max) roots.emplace_back(t, s);
    }
  }
  std::sort(roots.begin(), roots.end());
  std::vector<std::pair<double, double>> unique;
  for (const auto& r : roots) {
    if (!unique.empty() && std::abs(r.first - unique.back().first) <= 1e-9 * std::max(1.0, std::abs(r.first))) {
      if (r.second < unique.back().second) unique.back() = r;
      continue;
    }
    unique.push_back(r);
  }

  const double step = (t_max - t_min) / points;
  for (std::size_t k = 0; k < unique.size(); ++k) {
    const auto [t, s] = unique[k];
    if (k > 0 && t - unique[k - 1].first < 2.0 * step) {
      out.warnings.push_back("MissedRootRisk: eigenvalues closer than two grid steps near " + std::to_string(t));
    }
    Eigenpair e;
    e.t = t;
    e.residual = s;
    const Matrix u = u_end(t);
    const Matrix kernel = kernel_matrix(beta * u, opts.multiplicity_tol, singular_range(u).second);
    e.multiplicity = static_cast<int>(kernel.cols());
    if (e.multiplicity == 0) continue;
    const FundamentalSolution f(p.hamiltonian_ptr(), p.alpha(), t);
    const Matrix gram_u = weighted_gram(f, f, h.start(), h.end()).topLeftCorner(n, n);
    const Matrix gk = kernel.adjoint() * gram_u * kernel;
    e.coefficients = kernel * inverse_sqrt_psd(gk);
    e.weight = e.coefficients * e.coefficients.adjoint();
    out.eigen.push_back(std::move(e));
  }
  return out;
}

Vector eigenfunction(const SpectralProblem& problem, const Eigenpair& e, int k, double x) {
  const SpectralProblem p = problem.regular_reduction();
  const FundamentalSolution f(p.hamiltonian_ptr(), p.alpha(), e.t);
  return f.u(x) * e.coefficients.col(k);
}

Vector transform_U(const SpectralProblem& problem, const VectorFunction& hfun, double t) {
  const Hamiltonian& h = problem.hamiltonian();
  const FundamentalSolution f(problem.hamiltonian_ptr(), problem.alpha(), t);
  const int n = h.n();
  Vector total = Vector::Zero(n);
  for (std::size_t i = 0; i < h.segments().size(); ++i) {
    const Segment& seg = h.segments()[i];
    const double x0 = h.breakpoints()[i];
    auto integrand = [&](double s) -> Matrix {
      const Matrix u = (segment_transfer(seg, t, 0.0, s) * f.values()[i]).leftCols(n);
      return u.adjoint() * seg.value(s) * hfun(x0 + s);
    };
    QuadratureOptions o;
    o.panels = oscillation_panels(seg, std::abs(t));
    total += integrate(integrand, 0.0, seg.length, o);
  }
  return total;
}

namespace {

struct SideTail {
  Matrix tail;
  double bound = 0.0;
};

// Extrapolates the sum of rho_j / (1 + t_j^2) beyond the outermost eigenvalue
// from the mean mass density over the outer tenth of the found spectrum.
SideTail side_tail(const std::vector<std::pair<double, Matrix>>& atoms, int n) {
  SideTail out{Matrix::Zero(n, n), 0.0};
  if (atoms.empty()) return out;
  const double edge = atoms.back().first;
  auto density_over = [&](double lo, double hi, double& spacing, int& count) -> Matrix {
    Matrix mass = Matrix::Zero(n, n);
    double first = 0.0, last = 0.0;
    count = 0;
    for (const auto& [t, rho] : atoms) {
      if (t < lo || t > hi) continue;
      if (count == 0) first = t;
      last = t;
      mass += rho;
      ++count;
    }
    spacing = count > 1 ? (last - first) / (count - 1) : 0.0;
    return count > 1 ? Matrix(mass / (count * spacing)) : Matrix::Zero(n, n);
  };
  double s1 = 0.0, s2 = 0.0;
  int c1 = 0, c2 = 0;
  double lo1 = 0.9 * edge;
  Matrix lam1 = density_over(lo1, edge, s1, c1);
  if (c1 < 3 && atoms.size() >= 3) {
    lo1 = atoms[atoms.size() - 3].first;
    lam1 = density_over(lo1, edge, s1, c1);
  }
  if (c1 < 2) {
    Matrix partial = Matrix::Zero(n, n);
    for (const auto& [t, rho] : atoms) partial += rho / (1.0 + t * t);
    out.bound = partial.norm();
    return out;
  }
  const double start = edge + 0.5 * s1;
  const double weight = 0.5 * M_PI - std::atan(start);
  out.tail = lam1 * weight;
  const Matrix lam2 = density_over(0.8 * edge, lo1 - 1e-12 * std::abs(lo1), s2, c2);
  const double midpoint_err = lam1.norm() * s1 * s1 / (12.0 * start * start * start);
  if (c2 >= 2) {
    out.bound = ((lam1 - lam2) * weight).norm() + midpoint_err;
  } else {
    out.bound = 10.0 * midpoint_err + 0.1 * out.tail.norm();
  }
  return out;
}

}  // namespace

HerglotzData herglotz_decompose(const MFunction& m, const SpectralDecomposition& d, double tol) {
  const Matrix mi = m(I);
  const int n = static_cast<int>(mi.rows());
  HerglotzData out;
  out.t_min = d.t_min;
  out.t_max = d.t_max;
  out.A = 0.5 * (mi + mi.adjoint());
  const Matrix im = (mi - mi.adjoint()) / (2.0 * I);
  Matrix sum = Matrix::Zero(n, n);
  std::vector<std::pair<double, Matrix>> pos, neg;
  for (const auto& e : d.eigen) {
    out.atoms.emplace_back(e.t, e.weight);
    sum += e.weight / (1.0 + e.t * e.t);
    if (e.t > 0) pos.emplace_back(e.t, e.weight);
    if (e.t < 0) neg.emplace_back(-e.t, e.weight);
  }
  std::reverse(neg.begin(), neg.end());
  const SideTail tp = side_tail(pos, n), tn = side_tail(neg, n);
  out.B_window = im - sum;
  out.tail_estimate = tp.tail + tn.tail;
  out.B = out.B_window - out.tail_estimate;
  out.truncation_bound = tp.bound + tn.bound;
  if (out.truncation_bound > tol) {
    throw Error(ErrorKind::WindowTooSmall,
                "tail uncertainty " + std::to_string(out.truncation_bound) + " exceeds tolerance");
  }
  return out;
}

Matrix stieltjes_inversion(const MFunction& m, double t1, double t2, double y, double tol) {
  if (!(y > 0.0)) throw Error(ErrorKind::InvalidInput, "Stieltjes inversion needs y > 0");
  auto f = [&](double t) -> Matrix {
    const Matrix mz = m(cplx(t, y));
    return (mz - mz.adjoint()) / (2.0 * I);
  };
  const Matrix probe = f(t1);
  if (t2 <= t1) return Matrix::Zero(probe.rows(), probe.cols());

  using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
  using gl = boost::math::quadrature::gauss<double, 7>;
  const auto& kx = gk::abscissa();
  const auto& kw = gk::weights();
  const auto& gx = gl::abscissa();
  const auto& gw = gl::weights();

  std::function<Matrix(double, double, double, int)> rec = [&](double a, double b, double eps, int depth) -> Matrix {
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    std::vector<Matrix> plus(kx.size()), minus(kx.size());
    Matrix kr = Matrix::Zero(probe.rows(), probe.cols());
    for (std::size_t i = 0; i < kx.size(); ++i) {
      plus[i] = f(mid + half * kx[i]);
      if (kx[i] == 0.0) {
        minus[i] = plus[i];
        kr += kw[i] * plus[i];
      } else {
        minus[i] = f(mid - half * kx[i]);
        kr += kw[i] * (plus[i] + minus[i]);
      }
    }
    Matrix gr = Matrix::Zero(probe.rows(), probe.cols());
    for (std::size_t j = 0; j < gx.size(); ++j) {
      std::size_t i = 0;
      while (std::abs(kx[i] - gx[j]) > 1e-14) ++i;
      gr += gx[j] == 0.0 ? Matrix(gw[j] * plus[i]) : Matrix(gw[j] * (plus[i] + minus[i]));
    }
    double mag = 0.0;
    for (std::size_t i = 0; i < kx.size(); ++i) mag += kw[i] * (plus[i].norm() + (kx[i] == 0.0 ? 0.0 : minus[i].norm()));
    kr *= half;
    gr *= half;
    // Mixed criterion: the evaluation of m near a pole carries relative noise.
    const double floor = std::max(tol, 50.0 * std::numeric_limits<double>::epsilon()) * half * mag;
    if ((kr - gr).norm() <= std::max(eps, floor) || depth >= 40) return kr;
    return rec(a, mid, 0.5 * eps, depth + 1) + rec(mid, b, 0.5 * eps, depth + 1);
  };
  return rec(t1, t2, tol * M_PI, 0) / M_PI;
}

cplx weighted_inner(const Hamiltonian& h, const VectorFunction& f, const VectorFunction& g, double a, double b) {
  cplx total = 0.0;
  const auto& br = h.breakpoints();
  for (std::size_t i = 0; i < h.segments().size(); ++i) {
    const double lo = std::max(a, br[i]), hi = std::min(b, br[i + 1]);
    if (!(hi > lo)) continue;
    const Segment& seg = h.segments()[i];
    auto integrand = [&](double x) -> Matrix {
      return Matrix::Constant(1, 1, f(x).dot(seg.value(x - br[i]) * g(x)));
    };
    QuadratureOptions o;
    o.panels = std::max(1, static_cast<int>(std::ceil(4.0 * (hi - lo))));
    total += integrate(integrand, lo, hi, o)(0, 0);
  }
  if (b > h.end() && h.has_tail()) {
    const double lo = std::max(a, h.end());
    const Tail& t = *h.tail();
    auto integrand = [&](double x) -> Matrix {
      return Matrix::Constant(1, 1, f(x).dot(t.value(x - h.end()) * g(x)));
    };
    QuadratureOptions o;
    o.panels = std::max(1, static_cast<int>(std::ceil(4.0 * (b - lo))));
    total += integrate(integrand, lo, b, o)(0, 0);
  }
  return total;
}

}  // namespace cansys
