#include "cansys/evolve.hpp"

#include <algorithm>
#include <cmath>

#include "cansys/quadrature.hpp"

namespace cansys {

namespace {

Complex2 inverse_unimodular(const Real2& t) {
  Complex2 inv;
  inv << t(1, 1), -t(0, 1), -t(1, 0), t(0, 0);
  return inv;
}

Matrix composite_transfer(const Composite& comp, cplx z, double s0, double delta) {
  const int d = static_cast<int>(comp.perm.size());
  Matrix cat = Matrix::Zero(d, d);
  int off = 0;
  for (const auto& b : comp.blocks) {
    const int m = b.order();
    cat.block(off, off, m, m) = segment_transfer(b, z, s0, delta);
    off += m;
  }
  Matrix out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = cat(comp.perm[i], comp.perm[j]);
  return out;
}

}  // namespace

Matrix segment_transfer(const Segment& seg, cplx z, double s0, double delta) {
  if (delta < 0.0) throw Error(ErrorKind::InvalidInput, "negative transfer step");
  const int order = seg.order();
  if (delta == 0.0) return Matrix::Identity(order, order);
  if (auto c = std::get_if<ConstantMatrix>(&seg.kind)) {
    return mat_exp(z * delta * symplectic(order) * c->value);
  }
  if (auto p = std::get_if<SchrodingerPiece>(&seg.kind)) {
    const double sa = p->source_position(s0), sb = p->source_position(s0 + delta);
    const Complex2 step = schrodinger_step(z - p->potential, sb - sa);
    Complex2 phi = inverse_unimodular(p->transfer_at_source(sb)) * step * p->transfer_at_source(sa).cast<cplx>();
    if (p->reflected) {
      phi(0, 1) = -phi(0, 1);
      phi(1, 0) = -phi(1, 0);
    }
    return Matrix(phi);
  }
  return composite_transfer(std::get<Composite>(seg.kind), z, s0, delta);
}

Matrix initial_value(const BoundaryCondition& alpha) {
  const int order = alpha.order(), n = alpha.n();
  Matrix w(order, order);
  const Matrix astar = alpha.matrix().adjoint();
  w.leftCols(n) = -symplectic(order) * astar;
  w.rightCols(n) = astar;
  return w;
}

FundamentalSolution::FundamentalSolution(std::shared_ptr<const Hamiltonian> h,
                                         const BoundaryCondition& alpha, cplx z)
    : h_(std::move(h)), z_(z) {
  if (alpha.order() != h_->order()) throw Error(ErrorKind::InvalidInput, "boundary condition order mismatch");
  values_.reserve(h_->segments().size() + 1);
  values_.push_back(initial_value(alpha));
  for (const auto& seg : h_->segments()) {
    values_.push_back(segment_transfer(seg, z, seg.length) * values_.back());
  }
}

Matrix FundamentalSolution::at(double x) const {
  auto [idx, local] = h_->locate(x);
  if (idx == h_->segments().size()) {
    if (local == 0.0) return values_.back();
    return segment_transfer(h_->tail()->piece(0.0, local), z_, 0.0, local) * values_.back();
  }
  return segment_transfer(h_->segments()[idx], z_, 0.0, local) * values_[idx];
}

Matrix total_transfer(const Hamiltonian& h, cplx z) {
  Matrix phi = Matrix::Identity(h.order(), h.order());
  for (const auto& seg : h.segments()) phi = segment_transfer(seg, z, seg.length) * phi;
  return phi;
}

int oscillation_panels(const Segment& seg, double zabs) {
  double hnorm = 0.0;
  for (double s : {0.0, 0.5 * seg.length, seg.length}) hnorm = std::max(hnorm, seg.value(s).norm());
  const double phase = zabs * hnorm * seg.length;
  return std::clamp(static_cast<int>(std::ceil(phase / 4.0)), 1, 4096);
}

Matrix weighted_gram(const FundamentalSolution& f, const FundamentalSolution& g, double c, double d) {
  const Hamiltonian& h = f.hamiltonian();
  const int order = h.order();
  if (d < c) throw Error(ErrorKind::BadDomain, "interval reversed");
  if (c < h.start() || d > h.end() + 1e-14 * std::max(1.0, std::abs(d))) {
    throw Error(ErrorKind::BadDomain, "weighted_gram interval must lie in the finite part");
  }
  Matrix total = Matrix::Zero(order, order);
  const auto& br = h.breakpoints();
  const double zabs = std::max(std::abs(f.z()), std::abs(g.z()));
  for (std::size_t i = 0; i < h.segments().size(); ++i) {
    const double lo = std::max(c, br[i]), hi = std::min(d, br[i + 1]);
    if (!(hi > lo)) continue;
    const Segment& seg = h.segments()[i];
    const double s0 = lo - br[i];
    const Matrix wf = f.values()[i], wg = g.values()[i];
    auto integrand = [&](double s) -> Matrix {
      const Matrix a = segment_transfer(seg, f.z(), 0.0, s) * wf;
      const Matrix b = segment_transfer(seg, g.z(), 0.0, s) * wg;
      return a.adjoint() * seg.value(s) * b;
    };
    QuadratureOptions opts;
    opts.panels = oscillation_panels(seg, zabs);
    total += integrate(integrand, s0, hi - br[i], opts);
  }
  return total;
}

Matrix lagrange_gram(const FundamentalSolution& f, const FundamentalSolution& g, double c, double d) {
  const cplx denom = std::conj(f.z()) - g.z();
  if (denom == 0.0) throw Error(ErrorKind::InvalidInput, "Lagrange identity needs conj(z) != w");
  const Matrix j = symplectic(f.hamiltonian().order());
  const Matrix fd = f.at(d), gd = g.at(d), fc = f.at(c), gc = g.at(c);
  return (fd.adjoint() * j * gd - fc.adjoint() * j * gc) / denom;
}

}  // namespace cansys
