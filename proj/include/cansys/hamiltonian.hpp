#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "cansys/algebra.hpp"

namespace cansys {

using Real2 = Eigen::Matrix2d;
using Complex2 = Eigen::Matrix2cd;

/// Transfer of -y'' + V y = z y over a step of length `delta` in the
/// coordinates (y', y); `omega2` = z - V. Exact closed form, with a Taylor
/// series near omega = 0.
Complex2 schrodinger_step(cplx omega2, double delta);

/// Zero-energy version for real potentials.
Real2 schrodinger_step_real(double potential, double delta);

/// Constant coefficient block.
struct ConstantMatrix {
  Matrix value;
};

/// Piece of the coefficient induced by a Schrodinger edge with constant
/// potential. The source piece has length `source_length` and zero-energy
/// transfer `t_start` at its left end. The piece may be viewed through a
/// rescaling by `scale` and a reflection; local coordinate s in
/// [0, source_length / scale] maps to the source position
/// scale*s (or source_length - scale*s when reflected).
struct SchrodingerPiece {
  double potential = 0.0;
  Real2 t_start = Real2::Identity();
  double source_length = 0.0;
  double scale = 1.0;
  bool reflected = false;

  /// Zero-energy transfer T at the source offset `so` from the piece start.
  Real2 transfer_at_source(double so) const;
  double source_position(double s) const { return reflected ? source_length - scale * s : scale * s; }
};

struct Segment;

/// Block-diagonal coefficient after an index permutation: entry (m, m') of
/// the value is entry (perm[m], perm[m']) of the direct sum of the blocks.
struct Composite {
  std::vector<int> perm;
  std::vector<Segment> blocks;
};

struct Segment {
  double length = 0.0;
  std::variant<ConstantMatrix, SchrodingerPiece, Composite> kind;

  static Segment constant(double length, Matrix value);
  static Segment schrodinger(double length, double potential, const Real2& t_start);
  static Segment composite(double length, std::vector<int> perm, std::vector<Segment> blocks);

  int order() const;
  /// Coefficient at local position s in [0, length].
  Matrix value(double s) const;
  /// Sub-piece over local [s0, s1].
  Segment slice(double s0, double s1) const;
  /// Rescaled view: x -> scale * value(scale * x) or the reflected
  /// scale * N value(length - scale * x) N.
  Segment transformed(double scale, bool reflect) const;
  bool is_constant() const;
};

struct Tail;

/// Constant tail weight * beta* beta; realizes the boundary condition beta.
struct ProjectionTail {
  BoundaryCondition beta;
  double weight = 1.0;

  Matrix projection() const;
};

/// Constant definite tail.
struct DefiniteConstantTail {
  Matrix value;
};

/// Schrodinger half line with constant potential beyond the tail start.
struct SchrodingerTail {
  double potential = 0.0;
  Real2 t_start = Real2::Identity();
};

struct CompositeTail {
  std::vector<int> perm;
  std::vector<Tail> blocks;
};

struct Tail {
  std::variant<ProjectionTail, DefiniteConstantTail, SchrodingerTail, CompositeTail> kind;

  int order() const;
  Matrix value(double s) const;
  /// Finite piece of the tail over offsets [s0, s0 + length].
  Segment piece(double s0, double length) const;
  /// Tail restarted at offset s.
  Tail advanced(double s) const;
};

/// Segmented coefficient H >= 0 on [start, end) with an optional tail on
/// [end, infinity).
class Hamiltonian {
 public:
  Hamiltonian() = default;
  Hamiltonian(int order, double start, std::vector<Segment> segments,
              std::optional<Tail> tail = std::nullopt);

  int order() const { return order_; }
  int n() const { return order_ / 2; }
  double start() const { return start_; }
  double end() const { return breaks_.back(); }
  const std::vector<Segment>& segments() const { return segments_; }
  const std::optional<Tail>& tail() const { return tail_; }
  bool has_tail() const { return tail_.has_value(); }
  /// Breakpoints start = x_0 < ... < x_m = end.
  const std::vector<double>& breakpoints() const { return breaks_; }

  /// Segment index containing x (segments().size() for the tail) and the
  /// local offset.
  std::pair<std::size_t, double> locate(double x) const;

  /// Pointwise coefficient. Throws OutOfDomain.
  Matrix evaluate(double x) const;

  /// Segment list covering [a, b], cut out of the finite part and the tail.
  std::vector<Segment> slice(double a, double b) const;

  /// Tail restarted at x >= end().
  Tail tail_from(double x) const;

  /// Integral of tr H over the finite part.
  double trace_integral() const;

 private:
  int order_ = 0;
  double start_ = 0.0;
  std::vector<Segment> segments_;
  std::optional<Tail> tail_;
  std::vector<double> breaks_;
};

enum class Side { Left, Right };

/// Piece of an edge coefficient on (-r, r) (or (-1, inf)) moved to (0, 1)
/// (or (0, inf)): Left gives r N H(-r x) N, Right gives r H(r x).
Hamiltonian reflect_and_scale(const Hamiltonian& h, double r, Side side);

/// Rank one coefficient h(x) P_theta with a fixed direction.
struct ThetaLine {
  double theta = 0.0;
  std::vector<double> weights;  // per segment, then one entry for the tail
};

Matrix theta_projection(double theta);

/// Detects an order-2 coefficient of the form h(x) P_theta, tail included.
std::optional<ThetaLine> detect_theta_form(const Hamiltonian& h);

/// Integral of H over [a, b] inside the finite part.
Matrix integrated(const Hamiltonian& h, double a, double b);

/// No nonzero v with H v = 0 a.e.; the tail counts when present.
bool is_definite(const Hamiltonian& h, double rel_tol = 1e-10);

}  // namespace cansys
