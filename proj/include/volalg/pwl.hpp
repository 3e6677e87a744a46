#ifndef VOLALG_PWL_HPP
#define VOLALG_PWL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace volalg {

using Vec = std::vector<double>;

/// One affine piece of a min-of-affine function: x -> grad.x + intercept.
///
/// In LP form (maximize z subject to z + a_i.x <= b_i) the piece stores
/// a_i = -grad and b_i = intercept, so the stored gradient is exactly the
/// subgradient the piece contributes where it is active.
struct AffinePiece {
  Vec grad;
  double intercept = 0.0;

  double value_at(std::span<const double> x) const;
};

/// Tie rule for picking one subgradient when several pieces are active.
enum class TieRule { kLowestIndex, kSeededRandom };

struct PwlEval {
  double value = 0.0;
  std::vector<std::size_t> active;  // ascending piece indices
};

/// Concave piecewise-linear function f(x) = min_i (grad_i.x + intercept_i).
///
/// Immutable after construction; all member operations are const and safe to
/// call concurrently.
class PwlFunction {
 public:
  /// active_tol is the base tolerance for declaring a piece active; the
  /// effective band at a point scales as active_tol * (1 + |value|).
  explicit PwlFunction(std::vector<AffinePiece> pieces,
                       double active_tol = 1e-9);

  /// Reads the text fixture format: first line "dim n", then one piece per
  /// line as "g1 g2 ... gn b" (whitespace-separated decimals).
  static PwlFunction from_file(const std::string& path);

  /// Writes the same text format, with round-trip-exact number formatting.
  void save(const std::string& path) const;

  std::size_t dim() const { return dim_; }
  std::size_t piece_count() const { return pieces_.size(); }
  const AffinePiece& piece(std::size_t i) const { return pieces_[i]; }
  const std::vector<AffinePiece>& pieces() const { return pieces_; }
  double active_tol() const { return active_tol_; }

  /// Minimum over pieces plus the set of active pieces at x.
  PwlEval eval(std::span<const double> x) const;

  /// A subgradient at x: the gradient of one active piece, chosen by rule.
  /// Deterministic for kLowestIndex and for kSeededRandom with a fixed seed.
  Vec subgradient(std::span<const double> x,
                  TieRule rule = TieRule::kLowestIndex,
                  std::uint64_t seed = 0) const;

 private:
  std::vector<AffinePiece> pieces_;
  std::size_t dim_;
  double active_tol_;
};

/// Monte-Carlo estimate of the optimal dual weights over the active pieces:
/// lambda_i proportional to the volume between active face i and the
/// hyperplane z = f(x_bar) - epsilon.
struct DualEstimate {
  std::vector<std::size_t> pieces;  // pieces that received mass, ascending
  Vec lambda;                       // parallel to `pieces`; >= 0, sums to 1
  double epsilon = 0.0;
  double radius = 0.0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
};

/// Estimates Theorem-style dual weights at x_bar by sampling the box
/// [x_bar - radius, x_bar + radius]^n intersected with the affine slice
/// x_bar + span{g_i - g_first : i active}. The slice restriction quotients
/// out directions in which the active bundle is translation invariant (the
/// bundle polyhedron is an unbounded prism along them, so the full-space
/// volume ratio is not defined); when the active gradients span R^n the
/// slice is the whole box. Each sample x with min over active pieces above
/// z_bar = f(x_bar) - epsilon adds column mass (value - z_bar) to the lowest
/// active piece at x. Deterministic per seed.
///
/// Throws EmptyEstimateError if no sample collects mass, InputError on bad
/// parameters.
DualEstimate mc_dual_estimate(const PwlFunction& f,
                              std::span<const double> x_bar, double epsilon,
                              double radius, std::int64_t samples,
                              std::uint64_t seed);

struct DirectionResult {
  Vec x_dir;             // convex combination of active-piece gradients
  double z_residual = 0.0;  // 1 - sum(lambda); 0 up to rounding
};

/// Combines active-piece gradients with the dual weights. The estimate's
/// pieces must be contained in `active`; zero x_dir certifies optimality.
DirectionResult improvement_direction(const PwlFunction& f,
                                      const DualEstimate& estimate,
                                      std::span<const std::size_t> active);

/// True iff ||x_dir||_2 <= tol.
bool optimality_check(std::span<const double> x_dir, double tol);

struct ExactMax2d {
  Vec argmax;
  double max_value = 0.0;
};

/// Exact maximizer for 2-D functions, used as an independent test oracle.
/// Enumerates the vertices where piece planes meet (triples of pieces; a
/// flat optimum edge is still found through its endpoint vertices) after
/// checking every direction u with g_i.u >= 0 for all pieces: any such u
/// means the maximum is unbounded or attained only on an unbounded flat
/// ridge, reported as UnboundedError rather than as a ridge point.
///
/// With self_check true the result is validated against 10^6 random probe
/// points before returning.
ExactMax2d pwl_exact_max_2d(const PwlFunction& f, bool self_check = false,
                            std::uint64_t probe_seed = 12345);

}  // namespace volalg

#endif  // VOLALG_PWL_HPP
