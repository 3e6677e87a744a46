#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "volalg/errors.hpp"
#include "volalg/pwl.hpp"
#include "volalg/rng.hpp"

using namespace volalg;

namespace {

const char* kFourPieceFixture = "fixtures/pwl_fourpiece_2d.txt";

// The four-piece demo function, built inline so fixture-independent tests
// do not touch the filesystem: min{2x-y+2, -2/3 x-y+2, x+y+10, -x+y+10}.
PwlFunction four_piece() {
  return PwlFunction({{{2.0, -1.0}, 2.0},
                      {{-2.0 / 3.0, -1.0}, 2.0},
                      {{1.0, 1.0}, 10.0},
                      {{-1.0, 1.0}, 10.0}});
}

PwlFunction random_function(Rng& rng) {
  const std::size_t dim = 1 + rng.below(4);
  const std::size_t m = 1 + rng.below(6);
  std::vector<AffinePiece> pieces(m);
  for (auto& p : pieces) {
    p.grad.resize(dim);
    for (double& g : p.grad) g = rng.uniform(-3.0, 3.0);
    p.intercept = rng.uniform(-5.0, 5.0);
  }
  return PwlFunction(std::move(pieces));
}

Vec random_point(Rng& rng, std::size_t dim, double half = 5.0) {
  Vec x(dim);
  for (double& v : x) v = rng.uniform(-half, half);
  return x;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

}  // namespace

TEST_SUITE_BEGIN("pwl");

TEST_CASE("eval on the four-piece function") {
  const PwlFunction f = four_piece();

  SUBCASE("kink between the first two pieces") {
    const PwlEval at = f.eval(Vec{0.0, 2.0});
    CHECK(at.value == 0.0);
    CHECK(at.active == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("origin: every piece equals its intercept") {
    const PwlEval at = f.eval(Vec{0.0, 0.0});
    CHECK(at.value == 2.0);
    CHECK(at.active == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("four-way junction") {
    // Independent check: all four pieces evaluate to 6 at (0, -4).
    const Vec x{0.0, -4.0};
    for (std::size_t i = 0; i < f.piece_count(); ++i) {
      CHECK(f.piece(i).value_at(x) == 6.0);
    }
    const PwlEval at = f.eval(x);
    CHECK(at.value == 6.0);
    CHECK(at.active == std::vector<std::size_t>{0, 1, 2, 3});
  }
}

TEST_CASE("eval input errors") {
  const PwlFunction f = four_piece();
  CHECK_THROWS_AS(f.eval(Vec{1.0}), InputError);
  CHECK_THROWS_AS(f.eval(Vec{0.0, std::nan("")}), InputError);
  CHECK_THROWS_AS(PwlFunction({}), InputError);
  CHECK_THROWS_AS(
      PwlFunction({{{1.0, 2.0}, 0.0}, {{1.0}, 0.0}}), InputError);
}

TEST_CASE("subgradient selection") {
  const PwlFunction f = four_piece();

  SUBCASE("lowest index at the kink") {
    CHECK(f.subgradient(Vec{0.0, 2.0}) == Vec{2.0, -1.0});
  }
  SUBCASE("single active piece away from kinks") {
    // Direct evaluation: piece 1 is the unique minimum at (5, 0).
    const Vec x{5.0, 0.0};
    const PwlEval at = f.eval(x);
    CHECK(at.active == std::vector<std::size_t>{1});
    CHECK(at.value == doctest::Approx(-2.0 / 3.0 * 5.0 + 2.0));
    CHECK(f.subgradient(x) == f.piece(1).grad);
  }
  SUBCASE("single-piece function returns its gradient everywhere") {
    const PwlFunction g({{{0.5, -1.5}, 3.0}});
    CHECK(g.subgradient(Vec{7.0, -2.0}) == Vec{0.5, -1.5});
  }
  SUBCASE("seeded-random is deterministic and picks an active piece") {
    const Vec x{0.0, 2.0};
    const Vec a = f.subgradient(x, TieRule::kSeededRandom, 99);
    const Vec b = f.subgradient(x, TieRule::kSeededRandom, 99);
    CHECK(a == b);
    CHECK((a == f.piece(0).grad || a == f.piece(1).grad));
  }
}

TEST_CASE("exact 2-D maximizer") {
  SUBCASE("four-piece function attains 6 at (0, -4)") {
    const ExactMax2d best = pwl_exact_max_2d(four_piece(), true);
    CHECK(best.max_value == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(best.argmax[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(best.argmax[1] == doctest::Approx(-4.0).epsilon(1e-12));
  }
  SUBCASE("symmetric pyramid peaks at the origin") {
    const PwlFunction f({{{-1.0, 0.0}, 1.0},
                         {{1.0, 0.0}, 1.0},
                         {{0.0, -1.0}, 1.0},
                         {{0.0, 1.0}, 1.0}});
    const ExactMax2d best = pwl_exact_max_2d(f, true);
    CHECK(best.max_value == doctest::Approx(1.0));
    CHECK(std::abs(best.argmax[0]) < 1e-12);
    CHECK(std::abs(best.argmax[1]) < 1e-12);
  }
  SUBCASE("flat unbounded ridge is reported, not returned") {
    const PwlFunction f({{{1.0, 0.0}, 0.0}, {{-1.0, 0.0}, 0.0}});
    CHECK_THROWS_AS(pwl_exact_max_2d(f), UnboundedError);
  }
  SUBCASE("genuinely unbounded objective") {
    const PwlFunction f({{{1.0, 0.2}, 0.0}, {{0.5, 0.1}, 3.0}});
    CHECK_THROWS_AS(pwl_exact_max_2d(f), UnboundedError);
  }
  SUBCASE("wrong dimension") {
    const PwlFunction f({{{1.0}, 0.0}});
    CHECK_THROWS_AS(pwl_exact_max_2d(f), InputError);
  }
}

TEST_CASE("Monte-Carlo dual estimate") {
  const PwlFunction f = four_piece();

  SUBCASE("demo point reproduces the 1:3 areas") {
    const DualEstimate est =
        mc_dual_estimate(f, Vec{0.0, 2.0}, 2.0, 4.0, 1000000, 42);
    REQUIRE(est.pieces == std::vector<std::size_t>{0, 1});
    CHECK(std::abs(est.lambda[0] - 0.25) <= 0.01);
    CHECK(std::abs(est.lambda[1] - 0.75) <= 0.01);
  }
  SUBCASE("single piece gets all mass") {
    const PwlFunction g({{{0.5, -1.5}, 3.0}});
    const DualEstimate est =
        mc_dual_estimate(g, Vec{1.0, 1.0}, 0.5, 2.0, 1000, 1);
    CHECK(est.pieces == std::vector<std::size_t>{0});
    CHECK(est.lambda == Vec{1.0});
  }
  SUBCASE("mirror symmetry gives equal weights") {
    const PwlFunction g({{{1.0, -1.0}, 2.0}, {{-1.0, -1.0}, 2.0}});
    const DualEstimate est =
        mc_dual_estimate(g, Vec{0.0, 2.0}, 1.0, 2.0, 1000000, 7);
    REQUIRE(est.lambda.size() == 2);
    CHECK(std::abs(est.lambda[0] - 0.5) <= 0.01);
    CHECK(std::abs(est.lambda[1] - 0.5) <= 0.01);
  }
  SUBCASE("deterministic per seed") {
    const auto a = mc_dual_estimate(f, Vec{0.0, 2.0}, 2.0, 4.0, 10000, 5);
    const auto b = mc_dual_estimate(f, Vec{0.0, 2.0}, 2.0, 4.0, 10000, 5);
    CHECK(a.lambda == b.lambda);
    CHECK(a.pieces == b.pieces);
  }
  SUBCASE("vanishing superlevel set raises an empty estimate") {
    CHECK_THROWS_AS(
        mc_dual_estimate(f, Vec{0.0, 2.0}, 1e-300, 1e3, 10, 3),
        EmptyEstimateError);
  }
  SUBCASE("parameter validation") {
    CHECK_THROWS_AS(mc_dual_estimate(f, Vec{0.0, 2.0}, 0.0, 1.0, 10, 1),
                    InputError);
    CHECK_THROWS_AS(mc_dual_estimate(f, Vec{0.0, 2.0}, 1.0, -1.0, 10, 1),
                    InputError);
    CHECK_THROWS_AS(mc_dual_estimate(f, Vec{0.0, 2.0}, 1.0, 1.0, 0, 1),
                    InputError);
  }
}

TEST_CASE("improvement direction and optimality") {
  const PwlFunction f = four_piece();

  SUBCASE("quarter/three-quarter weights give steepest ascent") {
    DualEstimate est;
    est.pieces = {0, 1};
    est.lambda = {0.25, 0.75};
    const std::vector<std::size_t> active{0, 1};
    const DirectionResult dir = improvement_direction(f, est, active);
    CHECK(std::abs(dir.x_dir[0]) < 1e-12);
    CHECK(dir.x_dir[1] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(std::abs(dir.z_residual) < 1e-12);
    CHECK_FALSE(optimality_check(dir.x_dir, 1e-9));
  }
  SUBCASE("identity combination") {
    DualEstimate est;
    est.pieces = {2};
    est.lambda = {1.0};
    const std::vector<std::size_t> active{2};
    CHECK(improvement_direction(f, est, active).x_dir == f.piece(2).grad);
  }
  SUBCASE("weights on inactive pieces are rejected") {
    DualEstimate est;
    est.pieces = {0, 2};
    est.lambda = {0.5, 0.5};
    const std::vector<std::size_t> active{0, 1};
    CHECK_THROWS_AS(improvement_direction(f, est, active), InputError);
  }
  SUBCASE("direction vanishes at the enumerated optimum") {
    const ExactMax2d best = pwl_exact_max_2d(f);
    const PwlEval at = f.eval(best.argmax);
    const DualEstimate est =
        mc_dual_estimate(f, best.argmax, 2.0, 4.0, 1000000, 11);
    const DirectionResult dir = improvement_direction(f, est, at.active);
    CHECK(norm2(dir.x_dir) <= 0.02);
    CHECK(optimality_check(dir.x_dir, 0.05));
  }
  SUBCASE("zero vector is optimal, a unit one is not") {
    CHECK(optimality_check(Vec{0.0, 0.0}, 1e-9));
    CHECK_FALSE(optimality_check(Vec{0.0, -1.0}, 1e-9));
  }
}

TEST_CASE("fixture file round trip and errors") {
  const PwlFunction f = PwlFunction::from_file(kFourPieceFixture);
  REQUIRE(f.dim() == 2);
  REQUIRE(f.piece_count() == 4);
  CHECK(f.piece(1).grad[0] == -2.0 / 3.0);  // 17-digit text is bit exact
  CHECK(f.eval(Vec{0.0, 2.0}).value == 0.0);

  const auto tmp = std::filesystem::temp_directory_path() /
                   "volalg_pwl_roundtrip.txt";
  f.save(tmp.string());
  const PwlFunction g = PwlFunction::from_file(tmp.string());
  REQUIRE(g.piece_count() == f.piece_count());
  for (std::size_t i = 0; i < f.piece_count(); ++i) {
    CHECK(g.piece(i).grad == f.piece(i).grad);
    CHECK(g.piece(i).intercept == f.piece(i).intercept);
  }
  std::filesystem::remove(tmp);

  const auto bad = std::filesystem::temp_directory_path() /
                   "volalg_pwl_bad.txt";
  {
    std::ofstream out(bad);
    out << "dim 2\n1 2\n";  // missing intercept
  }
  CHECK_THROWS_AS(PwlFunction::from_file(bad.string()), ParseError);
  {
    std::ofstream out(bad);
    out << "2\n1 2 3\n";  // missing the dim keyword
  }
  CHECK_THROWS_AS(PwlFunction::from_file(bad.string()), ParseError);
  std::filesystem::remove(bad);
  CHECK_THROWS_AS(PwlFunction::from_file("fixtures/does_not_exist.txt"),
                  ParseError);
}

TEST_CASE("evaluation equals an independent minimum loop") {
  Rng rng(2024);
  for (int trial = 0; trial < 10000; ++trial) {
    const PwlFunction f = random_function(rng);
    const Vec x = random_point(rng, f.dim());
    double expect = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < f.piece_count(); ++i) {
      double dot = 0.0;  // same accumulation order as the library contract
      for (std::size_t j = 0; j < f.dim(); ++j) dot += f.piece(i).grad[j] * x[j];
      expect = std::min(expect, dot + f.piece(i).intercept);
    }
    REQUIRE(f.eval(x).value == expect);
  }
}

TEST_CASE("concavity and supergradient inequality") {
  Rng rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const PwlFunction f = random_function(rng);
    const Vec x = random_point(rng, f.dim());
    const Vec y = random_point(rng, f.dim());
    const double theta = rng.uniform();
    Vec mid(f.dim());
    for (std::size_t j = 0; j < f.dim(); ++j) {
      mid[j] = theta * x[j] + (1.0 - theta) * y[j];
    }
    const double fx = f.eval(x).value;
    const double fy = f.eval(y).value;
    REQUIRE(f.eval(mid).value >= theta * fx + (1.0 - theta) * fy - 1e-12);

    const Vec g = f.subgradient(x);
    double linear = fx;
    for (std::size_t j = 0; j < f.dim(); ++j) linear += g[j] * (y[j] - x[j]);
    REQUIRE(fy <= linear + 1e-12);
  }
}

TEST_CASE("dual estimates stay on the simplex") {
  Rng rng(31);
  int kept = 0;
  while (kept < 200) {
    const PwlFunction f = random_function(rng);
    const Vec x = random_point(rng, f.dim(), 2.0);
    DualEstimate est;
    try {
      est = mc_dual_estimate(f, x, rng.uniform(0.1, 2.0),
                             rng.uniform(0.5, 3.0), 2000, rng.next_u64());
    } catch (const EmptyEstimateError&) {
      continue;
    }
    ++kept;
    double total = 0.0;
    for (double l : est.lambda) {
      REQUIRE(l >= 0.0);
      total += l;
    }
    REQUIRE(std::abs(total - 1.0) <= 1e-12);
    // Mass may only sit on pieces active at the reference point.
    const PwlEval at = f.eval(x);
    for (std::size_t p : est.pieces) {
      REQUIRE(std::find(at.active.begin(), at.active.end(), p) !=
              at.active.end());
    }
  }
}

TEST_SUITE_END();
