#include "volalg/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "format_util.hpp"
#include "volalg/errors.hpp"
#include "volalg/rng.hpp"

namespace volalg {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

void check_point(const PwlFunction& f, std::span<const double> x) {
  if (x.size() != f.dim()) {
    throw InputError("point has dimension " + std::to_string(x.size()) +
                     ", function expects " + std::to_string(f.dim()));
  }
  if (!all_finite(x)) throw InputError("point has non-finite entries");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace

double AffinePiece::value_at(std::span<const double> x) const {
  return dot(grad, x) + intercept;
}

PwlFunction::PwlFunction(std::vector<AffinePiece> pieces, double active_tol)
    : pieces_(std::move(pieces)), active_tol_(active_tol) {
  if (pieces_.empty()) throw InputError("a PWL function needs >= 1 piece");
  if (active_tol_ < 0.0) throw InputError("active_tol must be >= 0");
  dim_ = pieces_.front().grad.size();
  if (dim_ == 0) throw InputError("piece gradients must be non-empty");
  for (const auto& p : pieces_) {
    if (p.grad.size() != dim_) {
      throw InputError("pieces disagree on dimension");
    }
    if (!all_finite(p.grad) || !std::isfinite(p.intercept)) {
      throw InputError("piece coefficients must be finite");
    }
  }
}

PwlFunction PwlFunction::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open PWL fixture: " + path);
  std::string word;
  std::size_t n = 0;
  if (!(in >> word) || word != "dim" || !(in >> n) || n == 0) {
    throw ParseError("fixture must start with 'dim n': " + path);
  }
  std::vector<AffinePiece> pieces;
  double v = 0.0;
  while (in >> v) {
    AffinePiece p;
    p.grad.reserve(n);
    p.grad.push_back(v);
    for (std::size_t i = 1; i < n; ++i) {
      if (!(in >> v)) {
        throw ParseError("truncated piece line " +
                         std::to_string(pieces.size() + 1) + " in " + path);
      }
      p.grad.push_back(v);
    }
    if (!(in >> p.intercept)) {
      throw ParseError("piece line " + std::to_string(pieces.size() + 1) +
                       " is missing its intercept in " + path);
    }
    pieces.push_back(std::move(p));
  }
  if (!in.eof()) throw ParseError("malformed number in " + path);
  if (pieces.empty()) throw ParseError("fixture has no pieces: " + path);
  return PwlFunction(std::move(pieces));
}

void PwlFunction::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write PWL fixture: " + path);
  out << "dim " << dim_ << "\n";
  for (const auto& p : pieces_) {
    for (double g : p.grad) out << detail::format_g17(g) << ' ';
    out << detail::format_g17(p.intercept) << "\n";
  }
}

PwlEval PwlFunction::eval(std::span<const double> x) const {
  check_point(*this, x);
  PwlEval result;
  result.value = std::numeric_limits<double>::infinity();
  std::vector<double> values(pieces_.size());
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    values[i] = pieces_[i].value_at(x);
    result.value = std::min(result.value, values[i]);
  }
  const double tol = active_tol_ * (1.0 + std::abs(result.value));
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (values[i] <= result.value + tol) result.active.push_back(i);
  }
  return result;
}

Vec PwlFunction::subgradient(std::span<const double> x, TieRule rule,
                             std::uint64_t seed) const {
  const PwlEval at = eval(x);
  std::size_t pick = at.active.front();
  if (rule == TieRule::kSeededRandom && at.active.size() > 1) {
    Rng rng(seed);
    pick = at.active[rng.below(at.active.size())];
  }
  return pieces_[pick].grad;
}

namespace {

// Orthonormal basis of span{g_i - g_first : i active}, by modified
// Gram-Schmidt. Directions shorter than a relative tolerance are dropped.
std::vector<Vec> active_difference_basis(const PwlFunction& f,
                                         std::span<const std::size_t> active) {
  std::vector<Vec> basis;
  const Vec& g0 = f.piece(active.front()).grad;
  for (std::size_t idx = 1; idx < active.size(); ++idx) {
    Vec d(f.dim());
    const Vec& gi = f.piece(active[idx]).grad;
    for (std::size_t j = 0; j < f.dim(); ++j) d[j] = gi[j] - g0[j];
    const double original = norm2(d);
    for (const Vec& q : basis) {
      const double c = dot(d, q);
      for (std::size_t j = 0; j < d.size(); ++j) d[j] -= c * q[j];
    }
    const double residual = norm2(d);
    if (residual > 1e-9 * (1.0 + original)) {
      for (double& e : d) e /= residual;
      basis.push_back(std::move(d));
    }
    if (basis.size() == f.dim()) break;
  }
  return basis;
}

}  // namespace

DualEstimate mc_dual_estimate(const PwlFunction& f,
                              std::span<const double> x_bar, double epsilon,
                              double radius, std::int64_t samples,
                              std::uint64_t seed) {
  check_point(f, x_bar);
  if (!(epsilon > 0.0)) throw InputError("epsilon must be > 0");
  if (!(radius > 0.0)) throw InputError("radius must be > 0");
  if (samples < 1) throw InputError("samples must be >= 1");

  const std::size_t n = f.dim();
  const PwlEval at = f.eval(x_bar);
  const double z_bar = at.value - epsilon;

  DualEstimate result;
  result.epsilon = epsilon;
  result.radius = radius;
  result.samples = samples;
  result.seed = seed;

  // Identical active gradients make the slice zero-dimensional: the whole
  // column above x_bar belongs to the lowest active piece.
  const std::vector<Vec> basis = active_difference_basis(f, at.active);
  const std::size_t k = basis.size();
  if (k == 0) {
    result.pieces = {at.active.front()};
    result.lambda = {1.0};
    return result;
  }

  std::vector<double> gamma(f.piece_count(), 0.0);
  Rng rng(seed);
  Vec x(n);
  // Slice coordinates reach every box point at distance <= r * sqrt(n).
  const double t_half = radius * std::sqrt(static_cast<double>(n));
  Vec t(k);
  for (std::int64_t s = 0; s < samples; ++s) {
    if (k == n) {
      for (std::size_t j = 0; j < n; ++j) {
        x[j] = x_bar[j] + rng.uniform(-radius, radius);
      }
    } else {
      for (std::size_t i = 0; i < k; ++i) t[i] = rng.uniform(-t_half, t_half);
      bool inside = true;
      for (std::size_t j = 0; j < n; ++j) {
        double off = 0.0;
        for (std::size_t i = 0; i < k; ++i) off += basis[i][j] * t[i];
        if (std::abs(off) > radius) {
          inside = false;
          break;
        }
        x[j] = x_bar[j] + off;
      }
      if (!inside) continue;
    }
    // Column mass under the bundle of pieces active at x_bar.
    double value = std::numeric_limits<double>::infinity();
    std::size_t arg = at.active.front();
    for (std::size_t idx : at.active) {
      const double v = f.piece(idx).value_at(x);
      if (v < value) {
        value = v;
        arg = idx;
      }
    }
    if (value > z_bar) gamma[arg] += value - z_bar;
  }

  double total = 0.0;
  for (double g : gamma) total += g;
  if (total <= 0.0) {
    throw EmptyEstimateError(
        "no sample collected mass above the lowered hyperplane");
  }
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (gamma[i] > 0.0) {
      result.pieces.push_back(i);
      result.lambda.push_back(gamma[i] / total);
    }
  }
  return result;
}

bool optimality_check(std::span<const double> x_dir, double tol) {
  if (tol < 0.0) throw InputError("tol must be >= 0");
  return norm2(x_dir) <= tol;
}

DirectionResult improvement_direction(const PwlFunction& f,
                                      const DualEstimate& estimate,
                                      std::span<const std::size_t> active) {
  for (std::size_t p : estimate.pieces) {
    if (std::find(active.begin(), active.end(), p) == active.end()) {
      throw InputError("dual estimate references piece " + std::to_string(p) +
                       " which is not active at the reference point");
    }
  }
  DirectionResult result;
  result.x_dir.assign(f.dim(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < estimate.pieces.size(); ++k) {
    const double w = estimate.lambda[k];
    total += w;
    const Vec& g = f.piece(estimate.pieces[k]).grad;
    for (std::size_t j = 0; j < f.dim(); ++j) result.x_dir[j] += w * g[j];
  }
  result.z_residual = 1.0 - total;
  return result;
}

namespace {

Vec solve2x2(double a11, double a12, double a21, double a22, double r1,
             double r2, bool& ok) {
  const double det = a11 * a22 - a12 * a21;
  const double scale = std::max({std::abs(a11), std::abs(a12), std::abs(a21),
                                 std::abs(a22), 1e-300});
  ok = std::abs(det) > 1e-12 * scale * scale;
  if (!ok) return {};
  return {(r1 * a22 - r2 * a12) / det, (a11 * r2 - a21 * r1) / det};
}

}  // namespace

ExactMax2d pwl_exact_max_2d(const PwlFunction& f, bool self_check,
                            std::uint64_t probe_seed) {
  if (f.dim() != 2) throw InputError("pwl_exact_max_2d requires dim == 2");
  const std::size_t m = f.piece_count();

  // Ridge / unboundedness screen: any direction u with g_i.u >= 0 for every
  // piece lets the superlevel sets recede without bound. Extreme rays of
  // that cone are perpendicular to some gradient, so checking the rotated
  // gradients covers every case except the all-zero one.
  bool any_nonzero = false;
  for (std::size_t i = 0; i < m; ++i) {
    const Vec& g = f.piece(i).grad;
    const double gnorm = norm2(g);
    if (gnorm <= 1e-15) continue;
    any_nonzero = true;
    for (int sign : {+1, -1}) {
      const double ux = sign * -g[1] / gnorm;
      const double uy = sign * g[0] / gnorm;
      bool admissible = true;
      bool strict = false;
      for (std::size_t j = 0; j < m; ++j) {
        const Vec& gj = f.piece(j).grad;
        const double d = gj[0] * ux + gj[1] * uy;
        const double tol = 1e-12 * (1.0 + norm2(gj));
        if (d < -tol) {
          admissible = false;
          break;
        }
        if (d > tol) strict = true;
      }
      if (admissible) {
        std::ostringstream msg;
        msg << "objective is " << (strict ? "unbounded above" : "flat")
            << " along direction (" << ux << ", " << uy << ")"
            << (strict ? "" : "; maximum attained only on an unbounded ridge");
        throw UnboundedError(msg.str());
      }
    }
  }
  if (!any_nonzero) {
    throw UnboundedError(
        "all pieces are constant; every point attains the maximum");
  }

  // Vertex candidates: points where three piece planes meet.
  Vec best_x;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec& gi = f.piece(i).grad;
    const double bi = f.piece(i).intercept;
    for (std::size_t j = i + 1; j < m; ++j) {
      const Vec& gj = f.piece(j).grad;
      for (std::size_t k = j + 1; k < m; ++k) {
        const Vec& gk = f.piece(k).grad;
        bool ok = false;
        Vec x = solve2x2(gi[0] - gj[0], gi[1] - gj[1], gi[0] - gk[0],
                         gi[1] - gk[1], f.piece(j).intercept - bi,
                         f.piece(k).intercept - bi, ok);
        if (!ok || !all_finite(x)) continue;
        const double v = f.eval(x).value;
        if (v > best_value) {
          best_value = v;
          best_x = std::move(x);
        }
      }
    }
  }
  if (best_x.empty()) {
    throw UnboundedError("no finite vertex candidate dominates");
  }

  if (self_check) {
    Rng rng(probe_seed);
    double extent = 1.0;
    for (double c : best_x) extent = std::max(extent, std::abs(c));
    const double half = 4.0 * (1.0 + extent);
    const double slack = 1e-9 * (1.0 + std::abs(best_value));
    for (int probe = 0; probe < 1000000; ++probe) {
      const Vec x = {best_x[0] + rng.uniform(-half, half),
                     best_x[1] + rng.uniform(-half, half)};
      if (f.eval(x).value > best_value + slack) {
        throw std::logic_error("exact-max self check failed: probe beats"
                               " enumerated optimum");
      }
    }
  }
  return {std::move(best_x), best_value};
}

}  // namespace volalg
