#include "cansys/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

#include "cansys/quadrature.hpp"

namespace cansys {

namespace {

// cos(omega d) and sin(omega d)/omega as power series in w = omega^2 d^2.
template <typename T>
void cos_sinc_series(T w, double d, T& c, T& s) {
  T term_c = 1.0, term_s = 1.0;
  c = 0.0;
  s = 0.0;
  for (int k = 0; k < 8; ++k) {
    c += term_c;
    s += term_s;
    term_c *= -w / static_cast<double>((2 * k + 1) * (2 * k + 2));
    term_s *= -w / static_cast<double>((2 * k + 2) * (2 * k + 3));
  }
  s *= d;
}

Matrix block_diagonal(const std::vector<Matrix>& blocks) {
  int total = 0;
  for (const auto& b : blocks) total += static_cast<int>(b.rows());
  Matrix out = Matrix::Zero(total, total);
  int off = 0;
  for (const auto& b : blocks) {
    const int d = static_cast<int>(b.rows());
    out.block(off, off, d, d) = b;
    off += d;
  }
  return out;
}

Matrix permute_back(const Matrix& cat, const std::vector<int>& perm) {
  const int d = static_cast<int>(perm.size());
  Matrix out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = cat(perm[i], perm[j]);
  return out;
}

constexpr double kLengthEps = 1e-14;

}  // namespace

Complex2 schrodinger_step(cplx omega2, double delta) {
  const cplx w = omega2 * delta * delta;
  cplx c, s;
  if (std::abs(w) < 1e-6) {
    cos_sinc_series(w, delta, c, s);
  } else {
    const cplx omega = std::sqrt(omega2);
    c = std::cos(omega * delta);
    s = std::sin(omega * delta) / omega;
  }
  Complex2 m;
  m << c, -omega2 * s, s, c;
  return m;
}

Real2 schrodinger_step_real(double potential, double delta) {
  const double w = -potential * delta * delta;
  double c, s;
  if (std::abs(w) < 1e-6) {
    cos_sinc_series(w, delta, c, s);
  } else if (potential > 0.0) {
    const double k = std::sqrt(potential);
    c = std::cosh(k * delta);
    s = std::sinh(k * delta) / k;
  } else {
    const double k = std::sqrt(-potential);
    c = std::cos(k * delta);
    s = std::sin(k * delta) / k;
  }
  Real2 m;
  m << c, potential * s, s, c;
  return m;
}

Real2 SchrodingerPiece::transfer_at_source(double so) const {
  return schrodinger_step_real(potential, so) * t_start;
}

Segment Segment::constant(double length, Matrix value) {
  return Segment{length, ConstantMatrix{std::move(value)}};
}

Segment Segment::schrodinger(double length, double potential, const Real2& t_start) {
  return Segment{length, SchrodingerPiece{potential, t_start, length, 1.0, false}};
}

Segment Segment::composite(double length, std::vector<int> perm, std::vector<Segment> blocks) {
  int total = 0;
  for (const auto& b : blocks) total += b.order();
  if (total != static_cast<int>(perm.size()) || !is_permutation(perm)) {
    throw Error(ErrorKind::InvalidInput, "composite permutation does not match block orders");
  }
  // The block flows only decouple when J itself splits along the blocks.
  std::vector<Matrix> js;
  for (const auto& b : blocks) js.push_back(symplectic(b.order()));
  if ((permute_back(block_diagonal(js), perm) - symplectic(total)).norm() != 0.0) {
    throw Error(ErrorKind::InvalidInput, "composite permutation does not preserve J");
  }
  return Segment{length, Composite{std::move(perm), std::move(blocks)}};
}

int Segment::order() const {
  if (auto c = std::get_if<ConstantMatrix>(&kind)) return static_cast<int>(c->value.rows());
  if (std::holds_alternative<SchrodingerPiece>(kind)) return 2;
  return static_cast<int>(std::get<Composite>(kind).perm.size());
}

bool Segment::is_constant() const { return std::holds_alternative<ConstantMatrix>(kind); }

Matrix Segment::value(double s) const {
  if (auto c = std::get_if<ConstantMatrix>(&kind)) return c->value;
  if (auto p = std::get_if<SchrodingerPiece>(&kind)) {
    const Real2 t = p->transfer_at_source(p->source_position(s));
    const double pp = t(1, 0), qq = t(1, 1);
    const double off = p->reflected ? -pp * qq : pp * qq;
    Matrix h(2, 2);
    h << pp * pp, off, off, qq * qq;
    return p->scale * h;
  }
  const auto& comp = std::get<Composite>(kind);
  std::vector<Matrix> vals;
  for (const auto& b : comp.blocks) vals.push_back(b.value(s));
  return permute_back(block_diagonal(vals), comp.perm);
}

Segment Segment::slice(double s0, double s1) const {
  if (auto c = std::get_if<ConstantMatrix>(&kind)) return constant(s1 - s0, c->value);
  if (auto p = std::get_if<SchrodingerPiece>(&kind)) {
    const double a = p->source_position(s0), b = p->source_position(s1);
    const double lo = std::min(a, b), hi = std::max(a, b);
    SchrodingerPiece q = *p;
    q.t_start = p->transfer_at_source(lo);
    q.source_length = hi - lo;
    return Segment{s1 - s0, q};
  }
  const auto& comp = std::get<Composite>(kind);
  std::vector<Segment> blocks;
  for (const auto& b : comp.blocks) blocks.push_back(b.slice(s0, s1));
  return Segment{s1 - s0, Composite{comp.perm, std::move(blocks)}};
}

Segment Segment::transformed(double scale, bool reflect) const {
  if (auto c = std::get_if<ConstantMatrix>(&kind)) {
    Matrix v = c->value;
    if (reflect) {
      const Matrix nn = reflection(static_cast<int>(v.rows()));
      v = nn * v * nn;
    }
    return constant(length / scale, scale * v);
  }
  if (auto p = std::get_if<SchrodingerPiece>(&kind)) {
    SchrodingerPiece q = *p;
    q.scale *= scale;
    q.reflected = (p->reflected != reflect);
    return Segment{length / scale, q};
  }
  throw Error(ErrorKind::BadDomain, "composite segments cannot be rescaled");
}

Matrix ProjectionTail::projection() const {
  return beta.matrix().adjoint() * beta.matrix();
}

int Tail::order() const {
  if (auto p = std::get_if<ProjectionTail>(&kind)) return p->beta.order();
  if (auto d = std::get_if<DefiniteConstantTail>(&kind)) return static_cast<int>(d->value.rows());
  if (std::holds_alternative<SchrodingerTail>(kind)) return 2;
  return static_cast<int>(std::get<CompositeTail>(kind).perm.size());
}

Matrix Tail::value(double s) const {
  if (auto p = std::get_if<ProjectionTail>(&kind)) return p->weight * p->projection();
  if (auto d = std::get_if<DefiniteConstantTail>(&kind)) return d->value;
  if (std::holds_alternative<SchrodingerTail>(kind)) return piece(s, 1.0).value(0.0);
  const auto& comp = std::get<CompositeTail>(kind);
  std::vector<Matrix> vals;
  for (const auto& b : comp.blocks) vals.push_back(b.value(s));
  return permute_back(block_diagonal(vals), comp.perm);
}

Segment Tail::piece(double s0, double length) const {
  if (auto p = std::get_if<ProjectionTail>(&kind)) return Segment::constant(length, p->weight * p->projection());
  if (auto d = std::get_if<DefiniteConstantTail>(&kind)) return Segment::constant(length, d->value);
  if (auto sch = std::get_if<SchrodingerTail>(&kind)) {
    return Segment::schrodinger(length, sch->potential,
                                schrodinger_step_real(sch->potential, s0) * sch->t_start);
  }
  const auto& comp = std::get<CompositeTail>(kind);
  std::vector<Segment> blocks;
  for (const auto& b : comp.blocks) blocks.push_back(b.piece(s0, length));
  return Segment{length, Composite{comp.perm, std::move(blocks)}};
}

Tail Tail::advanced(double s) const {
  if (auto sch = std::get_if<SchrodingerTail>(&kind)) {
    return Tail{SchrodingerTail{sch->potential, schrodinger_step_real(sch->potential, s) * sch->t_start}};
  }
  if (auto comp = std::get_if<CompositeTail>(&kind)) {
    CompositeTail out{comp->perm, {}};
    for (const auto& b : comp->blocks) out.blocks.push_back(b.advanced(s));
    return Tail{std::move(out)};
  }
  return *this;
}

Hamiltonian::Hamiltonian(int order, double start, std::vector<Segment> segments,
                         std::optional<Tail> tail)
    : order_(order), start_(start), segments_(std::move(segments)), tail_(std::move(tail)) {
  if (order <= 0 || order % 2 != 0) throw Error(ErrorKind::InvalidInput, "order must be even and positive");
  breaks_.push_back(start);
  for (const auto& s : segments_) {
    if (s.order() != order) throw Error(ErrorKind::InvalidInput, "segment order mismatch");
    if (!(s.length > 0.0)) throw Error(ErrorKind::InvalidInput, "segment length must be positive");
    breaks_.push_back(breaks_.back() + s.length);
  }
  if (tail_ && tail_->order() != order) throw Error(ErrorKind::InvalidInput, "tail order mismatch");
  if (segments_.empty() && !tail_) throw Error(ErrorKind::InvalidInput, "empty Hamiltonian");
}

std::pair<std::size_t, double> Hamiltonian::locate(double x) const {
  const double tol = kLengthEps * std::max(1.0, std::abs(x));
  if (x < start_ - tol || !std::isfinite(x)) throw Error(ErrorKind::OutOfDomain, "x before domain start");
  if (x >= end()) {
    if (tail_) return {segments_.size(), x - end()};
    if (x > end() + tol) throw Error(ErrorKind::OutOfDomain, "x beyond domain end");
    if (segments_.empty()) throw Error(ErrorKind::OutOfDomain, "empty finite part");
    return {segments_.size() - 1, segments_.back().length};
  }
  if (x <= start_) return {0, 0.0};
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
  const std::size_t idx = static_cast<std::size_t>(it - breaks_.begin()) - 1;
  return {idx, x - breaks_[idx]};
}

Matrix Hamiltonian::evaluate(double x) const {
  auto [idx, local] = locate(x);
  if (idx == segments_.size()) return tail_->value(local);
  return segments_[idx].value(local);
}

std::vector<Segment> Hamiltonian::slice(double a, double b) const {
  if (a < start_ - kLengthEps * std::max(1.0, std::abs(a)) || b < a) {
    throw Error(ErrorKind::BadDomain, "slice outside domain");
  }
  if (!tail_ && b > end() + kLengthEps * std::max(1.0, std::abs(b))) {
    throw Error(ErrorKind::BadDomain, "slice beyond domain end");
  }
  std::vector<Segment> out;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const double lo = std::max(a, breaks_[i]), hi = std::min(b, breaks_[i + 1]);
    if (hi - lo > kLengthEps * std::max(1.0, std::abs(hi))) {
      out.push_back(segments_[i].slice(lo - breaks_[i], hi - breaks_[i]));
    }
  }
  if (tail_ && b > end()) {
    const double lo = std::max(a, end());
    if (b - lo > kLengthEps * std::max(1.0, std::abs(b))) out.push_back(tail_->piece(lo - end(), b - lo));
  }
  return out;
}

Tail Hamiltonian::tail_from(double x) const {
  if (!tail_) throw Error(ErrorKind::BadDomain, "no tail");
  if (x < end()) throw Error(ErrorKind::BadDomain, "tail restart before finite end");
  return tail_->advanced(x - end());
}

double Hamiltonian::trace_integral() const {
  double total = 0.0;
  for (const auto& s : segments_) {
    if (auto c = std::get_if<ConstantMatrix>(&s.kind)) {
      total += c->value.trace().real() * s.length;
    } else {
      const int panels = std::max(1, static_cast<int>(std::ceil(s.length)));
      total += integrate_fixed([&](double x) { return Matrix::Constant(1, 1, s.value(x).trace()); }, 0.0,
                               s.length, 20, panels)(0, 0)
                   .real();
    }
  }
  return total;
}

Hamiltonian reflect_and_scale(const Hamiltonian& h, double r, Side side) {
  if (!(r > 0.0)) throw Error(ErrorKind::BadDomain, "half length must be positive");
  const double eps = 1e-12 * std::max(1.0, r);
  if (std::abs(h.start() + r) > eps) throw Error(ErrorKind::BadDomain, "edge domain must start at -r");
  if (!h.has_tail() && std::abs(h.end() - r) > eps) throw Error(ErrorKind::BadDomain, "edge domain must end at r");
  if (h.has_tail() && r != 1.0) throw Error(ErrorKind::BadDomain, "half lines use r = 1");
  std::vector<Segment> out;
  if (side == Side::Left) {
    auto pieces = h.slice(-r, 0.0);
    for (auto it = pieces.rbegin(); it != pieces.rend(); ++it) out.push_back(it->transformed(r, true));
    return Hamiltonian(h.order(), 0.0, std::move(out));
  }
  if (!h.has_tail()) {
    for (const auto& s : h.slice(0.0, r)) out.push_back(s.transformed(r, false));
    return Hamiltonian(h.order(), 0.0, std::move(out));
  }
  const double fin = std::max(0.0, h.end());
  if (fin > 0.0) out = h.slice(0.0, fin);
  return Hamiltonian(h.order(), 0.0, std::move(out), h.tail_from(fin));
}

Matrix theta_projection(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Matrix p(2, 2);
  p << c * c, s * c, s * c, s * s;
  return p;
}

namespace {

// Rank-one real direction of a 2x2 PSD sample: returns false when the rank
// exceeds one or the direction is not real up to phase; weight 0 for zero.
bool rank_one_direction(const Matrix& h, double& theta, double& weight) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
  const double lmax = es.eigenvalues()(1), lmin = es.eigenvalues()(0);
  if (lmax <= 1e-14) {
    weight = 0.0;
    return true;
  }
  if (lmin > 1e-10 * lmax) return false;
  Vector v = es.eigenvectors().col(1);
  const int k = std::abs(v(0)) >= std::abs(v(1)) ? 0 : 1;
  v *= std::conj(v(k)) / std::abs(v(k));
  if (std::abs(v(0).imag()) + std::abs(v(1).imag()) > 1e-8) return false;
  theta = std::atan2(v(1).real(), v(0).real());
  if (theta < 0) theta += M_PI;
  if (theta >= M_PI) theta -= M_PI;
  weight = lmax;
  return true;
}

std::vector<Matrix> samples_of(const Segment& s) {
  if (s.is_constant()) return {s.value(0.0)};
  std::vector<Matrix> out;
  for (int i = 0; i < 16; ++i) out.push_back(s.value(s.length * (i + 0.5) / 16.0));
  return out;
}

}  // namespace

std::optional<ThetaLine> detect_theta_form(const Hamiltonian& h) {
  if (h.order() != 2) return std::nullopt;
  std::vector<Segment> pieces = h.segments();
  if (h.has_tail()) pieces.push_back(h.tail()->piece(0.0, 1.0));
  ThetaLine line;
  bool have_theta = false;
  for (const auto& seg : pieces) {
    if (std::holds_alternative<Composite>(seg.kind)) return std::nullopt;
    double total = 0.0;
    const auto samples = samples_of(seg);
    for (const auto& m : samples) {
      double th = 0.0, w = 0.0;
      if (!rank_one_direction(m, th, w)) return std::nullopt;
      if (w == 0.0) continue;
      if (!have_theta) {
        line.theta = th;
        have_theta = true;
      } else if (std::abs(std::sin(th - line.theta)) > 1e-8) {
        return std::nullopt;
      }
      total += w;
    }
    line.weights.push_back(total / samples.size());
  }
  return line;
}

Matrix integrated(const Hamiltonian& h, double a, double b) {
  Matrix total = Matrix::Zero(h.order(), h.order());
  for (const auto& s : h.slice(a, b)) {
    if (auto c = std::get_if<ConstantMatrix>(&s.kind)) {
      total += c->value * s.length;
    } else {
      const int panels = std::max(1, static_cast<int>(std::ceil(s.length)));
      total += integrate_fixed([&](double x) { return s.value(x); }, 0.0, s.length, 40, panels);
    }
  }
  return total;
}

bool is_definite(const Hamiltonian& h, double rel_tol) {
  Matrix m = Matrix::Zero(h.order(), h.order());
  if (h.end() > h.start()) m += integrated(h, h.start(), h.end());
  if (h.has_tail()) m += integrated(Hamiltonian(h.order(), 0.0, {h.tail()->piece(0.0, 1.0)}), 0.0, 1.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  return lmax > 0.0 && es.eigenvalues().minCoeff() > rel_tol * lmax;
}

}  // namespace cansys
