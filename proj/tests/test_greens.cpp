#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <numbers>

#include "core/banded_lapack.hpp"
#include "core/discrete_operator.hpp"
#include "core/greens_kernel.hpp"
#include "core/tube_grid.hpp"

using namespace gapflow;

namespace {
constexpr double kPi = std::numbers::pi;

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                   double fm, double fb, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double flm = f(0.5 * (a + m)), frm = f(0.5 * (m + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, 0.5 * eps, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, 0.5 * eps, depth - 1);
}

// Independent K0 oracle: adaptive Simpson of the integral representation.
double k0_quadrature(double r) {
  const double S = std::acosh(745.0 / r);
  const auto f = [r](double s) { return std::exp(-r * std::cosh(s)); };
  return simpson_rec(f, 0.0, S, f(0.0), f(0.5 * S), f(S), 1e-13 * std::exp(-r), 42);
}
}  // namespace

TEST_CASE("bessel K0 against the quadrature oracle and pinned value") {
  CHECK(bessel_k0(1.0) == doctest::Approx(0.421024438240708).epsilon(1e-11));
  for (double r : {0.01, 0.05, 0.3, 1.0, 1.9, 2.0, 2.1, 3.7, 8.0, 14.0, 20.0})
    CHECK(bessel_k0(r) == doctest::Approx(k0_quadrature(r)).epsilon(1e-10));
  CHECK(bessel_k0(1.0) > bessel_k0(2.0));
  CHECK(bessel_k0(2.0) > bessel_k0(5.0));
  CHECK_THROWS_AS(bessel_k0(0.0), error);
  CHECK_THROWS_AS(bessel_k0(-1.0), error);
}

TEST_CASE("K0 satisfies the two-regime bound with a modest constant") {
  // c (1 + |log r|) on (0, 1]; c e^{-r} on [1, inf)
  for (int i = 0; i <= 100; ++i) {
    const double r = 1e-3 * std::pow(1e3, i / 100.0);
    CHECK(bessel_k0(r) <= 1.0 * (1.0 + std::abs(std::log(r))));
  }
  for (int i = 0; i <= 100; ++i) {
    const double r = 1.0 + 24.0 * i / 100.0;
    CHECK(bessel_k0(r) <= 1.2 * std::exp(-r));
  }
}

TEST_CASE("tube kernel: symmetry, periodicity, positivity, tail control") {
  const TubePoint x{0.4, 0.3}, y{-1.1, 0.85};
  const GreensEval e = tube_green(x, y, 1e-12);
  CHECK(e.value > 0.0);
  CHECK(e.tail_bound <= 1e-12);
  CHECK(e.images_used >= 1);
  CHECK(tube_green(y, x, 1e-12).value == doctest::Approx(e.value).epsilon(1e-14));
  const GreensEval shifted = tube_green(x, TubePoint{-1.1, 1.85}, 1e-12);
  CHECK(shifted.value == doctest::Approx(e.value).epsilon(1e-13));

  // truncation honesty: adding further images moves the value below the bound
  const GreensEval loose = tube_green(x, y, 1e-9);
  const GreensEval tight = tube_green(x, y, 1e-15);
  CHECK(std::abs(loose.value - tight.value) <= loose.tail_bound + 1e-15);
  CHECK(std::abs(loose.value - tight.value) < 1e-8);
  CHECK(tight.images_used >= loose.images_used);

  CHECK_THROWS_AS(tube_green(x, x, 1e-12), error);  // on-diagonal singularity
}

TEST_CASE("tube kernel matches discrete resolvent columns") {
  const auto grid = std::make_shared<TubeGrid>(-10.0, 10.0, 200, 10);
  const DiscreteOperator lap = build_laplacian(grid);
  const BandLU lu(lap.stencil, lap.bandwidth, -1.0);  // factors L + 1

  const int src_rank = lap.map->rank_of_line(100);  // x = 0
  REQUIRE(src_rank >= 0);
  const int src_j = 5;                               // y = 0.5
  Vec e = Vec::Zero(lap.dim);
  e[lap.map->index(src_rank, src_j)] = 1.0;
  const Vec col = lu.solve(e);

  for (double tx : {0.5, 1.0, 2.0, 3.0}) {
    for (int tj : {5, 8}) {
      const int trank = lap.map->rank_of_line(100 + static_cast<int>(tx / grid->hx));
      const double disc =
          2.0 * kPi * col[lap.map->index(trank, tj)] / (grid->hx * grid->hy);
      const double cont =
          tube_green(TubePoint{0.0, 0.5}, TubePoint{tx, grid->y(tj)}, 1e-12).value;
      CHECK(disc == doctest::Approx(cont).epsilon(0.03));
    }
  }
}

TEST_CASE("difference kernel: reflection on the same side, full kernel across") {
  const TubePoint x{1.2, 0.3}, y{0.7, 0.9};
  const double same = decoupled_green_diff(x, y, 1e-12);
  CHECK(same == doctest::Approx(tube_green(TubePoint{-1.2, 0.3}, y, 1e-12).value)
                    .epsilon(1e-13));
  CHECK(same > 0.0);
  // 0 <= G_dec <= G pointwise
  CHECK(same <= tube_green(x, y, 1e-12).value + 1e-13);

  const TubePoint z{-0.8, 0.15};
  const double cross = decoupled_green_diff(x, z, 1e-12);
  CHECK(cross == doctest::Approx(tube_green(x, z, 1e-12).value).epsilon(1e-13));

  // mirrored side pair uses the same reflection
  const double neg = decoupled_green_diff(TubePoint{-1.2, 0.3}, TubePoint{-0.7, 0.9}, 1e-12);
  CHECK(neg == doctest::Approx(same).epsilon(1e-12));

  CHECK_THROWS_AS(decoupled_green_diff(TubePoint{0.0, 0.2}, y, 1e-12), error);

  // far from the cut the difference kernel is K0(x1 + y1)-dominated
  for (double s : {2.0, 3.0, 4.5}) {
    const double v = decoupled_green_diff(TubePoint{s, 0.1}, TubePoint{s, 0.6}, 1e-12);
    CHECK(v <= 3.0 * bessel_k0(2.0 * s));
  }
}

TEST_CASE("difference kernel matches the discrete cut resolvent difference") {
  const auto grid = std::make_shared<TubeGrid>(-10.0, 10.0, 200, 10);
  const DiscreteOperator lap = build_laplacian(grid);
  const DiscreteOperator cut = insert_dirichlet_cut(lap, 0.0);
  const BandLU lu_full(lap.stencil, lap.bandwidth, -1.0);
  const BandLU lu_cut(cut.stencil, cut.bandwidth, -1.0);

  const auto col_at = [&](const BandLU& lu, const GridMap& map, int line, int j) {
    const int rank = map.rank_of_line(line);
    REQUIRE(rank >= 0);
    Vec e = Vec::Zero(map.dim());
    e[map.index(rank, j)] = 1.0;
    return lu.solve(e);
  };
  // source at x = 1.0, y = 0.5 (line 110); targets on the same side
  const Vec cf = col_at(lu_full, *lap.map, 110, 5);
  const Vec cc = col_at(lu_cut, *cut.map, 110, 5);
  for (double tx : {2.0, 3.0}) {
    const int line = 100 + static_cast<int>(tx / grid->hx);
    const double vf = cf[lap.map->index(lap.map->rank_of_line(line), 8)];
    const double vc = cc[cut.map->index(cut.map->rank_of_line(line), 8)];
    const double disc = 2.0 * kPi * (vf - vc) / (grid->hx * grid->hy);
    const double cont =
        decoupled_green_diff(TubePoint{1.0, 0.5}, TubePoint{tx, 0.8}, 1e-12);
    CHECK(disc == doctest::Approx(cont).epsilon(0.05));
  }
}

TEST_CASE("reflected image sum symmetry and decay") {
  CHECK(reflected_image_sum(2.0, 0.3) ==
        doctest::Approx(reflected_image_sum(2.0, 0.7)).epsilon(1e-12));
  CHECK(reflected_image_sum(2.0, 0.0) > reflected_image_sum(3.0, 0.0));
  CHECK(reflected_image_sum(4.0, 0.25) > 0.0);
}

TEST_CASE("hilbert-schmidt norm: finite, restricted-region bound, shell decay") {
  HsQuadrature spec;
  spec.level = 1;
  spec.s_max = 12.0;
  const HsNormResult full = kernel_hs_norm(0.1, spec);
  CHECK(full.converged);
  CHECK(std::isfinite(full.value));
  CHECK(full.value > 0.0);
  CHECK(full.value == doctest::Approx(2.0 * std::sqrt(full.integral)).epsilon(1e-12));

  HsQuadrature away = spec;
  away.s_min = 1.0;
  const HsNormResult restricted = kernel_hs_norm(0.1, away);
  CHECK(restricted.value < full.value);

  // shell contributions for s in [k, k+1] decay like the closed-form
  // k^2 e^{-2k} summand (unnormalized kernel carries the (2 pi)^2 factor)
  double prev_shell = 0.0;
  for (int k = 3; k <= 6; ++k) {
    HsQuadrature shell_spec = spec;
    shell_spec.level = 2;
    shell_spec.s_min = k;
    shell_spec.s_max = k + 1.0;
    const double shell = 4.0 * kernel_hs_norm(0.1, shell_spec).integral;
    CHECK(shell <= 4.0 * kPi * kPi * 1.25 * k * k * std::exp(-2.0 * k));
    if (k > 3) CHECK(shell < prev_shell);
    prev_shell = shell;
  }
}

TEST_CASE("gauss-legendre nodes integrate low-degree polynomials exactly") {
  for (int n : {2, 5, 16}) {
    const auto nodes = gauss_legendre01(n);
    REQUIRE(static_cast<int>(nodes.size()) == n);
    double w = 0.0, x2 = 0.0;
    for (const auto& [x, wt] : nodes) {
      w += wt;
      x2 += wt * x * x;
    }
    CHECK(w == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(x2 == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  }
}
