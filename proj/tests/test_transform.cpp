#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "core/discrete_operator.hpp"
#include "core/eigensolve.hpp"
#include "core/transform_family.hpp"
#include "core/tube_grid.hpp"

using namespace gapflow;

TEST_CASE("diffeomorphism: ramp shape, derivative bounds, flat regions") {
  for (double t : {0.12, -0.3, 0.5}) {
    const Diffeomorphism phi = build_phi(t, 0.8);
    CHECK(phi.eval(phi.flat_left) == doctest::Approx(phi.flat_left).epsilon(1e-14));
    CHECK(phi.eval(phi.flat_left - 2.0) ==
          doctest::Approx(phi.flat_left - 2.0).epsilon(1e-14));
    CHECK(phi.eval(phi.flat_right + 1.0) ==
          doctest::Approx(phi.flat_right + 1.0 + t).epsilon(1e-13));
    CHECK(phi.deriv(phi.flat_left - 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(phi.second(phi.flat_right + 0.5) == doctest::Approx(0.0));
    // strict monotonicity and the derivative envelope
    double prev = phi.eval(-3.0);
    for (int i = 1; i <= 120; ++i) {
      const double x = -3.0 + 6.0 * i / 120.0;
      const double v = phi.eval(x);
      CHECK(v > prev);
      prev = v;
      CHECK(phi.deriv(x) >= 1.0 - std::abs(t) - 1e-12);
      CHECK(phi.deriv(x) <= 1.0 + std::abs(t) + 1e-12);
    }
    // finite-difference consistency of the tabled derivatives
    const double h = 1e-5;
    for (double x : {0.2, 0.5, 0.9}) {
      const double fd = (phi.eval(x + h) - phi.eval(x - h)) / (2.0 * h);
      CHECK(phi.deriv(x) == doctest::Approx(fd).epsilon(1e-5));
      const double fd2 = (phi.deriv(x + h) - phi.deriv(x - h)) / (2.0 * h);
      CHECK(phi.second(x) == doctest::Approx(fd2).epsilon(1e-4));
    }
  }
  CHECK_THROWS_AS(build_phi(0.6, 1.0), error);   // |t| > 1/2
  CHECK_THROWS_AS(build_phi(0.2, 0.0), error);   // empty mollifier
  CHECK_THROWS_AS(build_phi(0.2, 1.5), error);   // width > 1
}

TEST_CASE("reversed dislocation matches the family at zero and slides right") {
  const DislocationFamily fam = make_preset_family("mathieu", 1.0, 0, 0.1, 0, 0);
  for (double x : {-1.3, -0.2, 0.4, 2.7})
    CHECK(reversed_dislocation(fam, 0.0, x, 0.2) ==
          doctest::Approx(fam.value(0.0, x, 0.2)).epsilon(1e-15));
  CHECK(reversed_dislocation(fam, 0.3, 1.0, 0.0) ==
        doctest::Approx(fam.v1(0.7, 0.0)).epsilon(1e-15));
  CHECK(reversed_dislocation(fam, 0.3, -1.0, 0.0) ==
        doctest::Approx(fam.v2(-1.0, 0.0)).epsilon(1e-15));
}

TEST_CASE("transformed operator at t = 0 is the untransformed assembly") {
  const auto grid = std::make_shared<TubeGrid>(-4.0, 4.0, 80, 4);
  const DislocationFamily fam = make_preset_family("mathieu", 1.0, 0, 0, 0, 0);
  const DiscreteOperator c0 = assemble_transformed_operator(0.0, fam, grid);
  const DiscreteOperator h0 = assemble_hamiltonian(grid, fam, 0.0);
  CHECK((c0.stencil - h0.stencil).norm() == 0.0);
}

TEST_CASE("transform coefficients differ from the laplacian only on the ramp") {
  const auto grid = std::make_shared<TubeGrid>(-6.0, 6.0, 120, 4);
  const DislocationFamily free_fam = make_preset_family("free", 0, 0, 0, 0, 0);
  const double t = 0.25;
  const Diffeomorphism phi = build_phi(t, 1.0);
  const DiscreteOperator ct = assemble_transformed_operator(t, free_fam, grid);
  const DiscreteOperator lap = build_laplacian(grid);
  const SpMat diff = ct.stencil - lap.stencil;
  // rows whose line lies in the flat regions are untouched
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SpMat::InnerIterator it(diff, k); it; ++it) {
      if (std::abs(it.value()) < 1e-14) continue;
      const double x = lap.map->x_of(static_cast<int>(it.row()));
      const bool inside = x > phi.flat_left - grid->hx - 1e-12 &&
                          x < phi.flat_right + grid->hx + 1e-12;
      CHECK(inside);
    }
}

TEST_CASE("the two realizations have equal window spectra on exact grid shifts") {
  const DislocationFamily fam = make_preset_family("mathieu", 1.0, 0, 0, 0, 0);
  const auto grid = std::make_shared<TubeGrid>(-6.0, 6.0, 240, 4);  // hx = 0.05
  // pick a window around the middle of the low spectrum
  const DiscreteOperator h0 = assemble_hamiltonian(grid, fam, 0.0);
  const DenseResult d = dense_spectrum(h0, false);
  const double lo = d.values[4] - 0.3, hi = d.values[12] + 0.3;

  for (double t : {0.0, 0.1, 0.25}) {
    const EquivalenceReport r = equivalence_check(t, fam, lo, hi, grid);
    CHECK(r.counts_match);
    CHECK(r.count_h == r.count_c);
    CHECK(r.count_h > 0);
    CHECK(r.max_abs_diff <= 5e-3);  // coarse grid; the acceptance gate is finer
    REQUIRE(r.values_h.size() == static_cast<std::size_t>(r.count_h));
  }
  // off-grid t violates the precondition
  CHECK_THROWS_AS(equivalence_check(0.513, fam, lo, hi, grid), error);
  CHECK_THROWS_AS(equivalence_check(0.7, fam, lo, hi, grid), error);
}

TEST_CASE("composition L1 bound: exactness on the step family") {
  const auto grid = std::make_shared<TubeGrid>(-8.0, 8.0, 320, 4);
  const DiscreteOperator lap = build_laplacian(grid);
  const DislocationFamily step = make_preset_family("step", 1.0, 0, 0, 0, 0);
  const Vec w = sample_dislocation(*lap.map, step, 0.0);

  for (double t : {0.05, 0.2, 0.4})
    for (double width : {0.5, 1.0}) {
      const BvReport r = bv_translation_bound(*grid, w, build_phi(t, width));
      CHECK(r.holds);
      CHECK(r.lhs <= r.rhs + 1e-12);
      CHECK(r.alpha_inf == doctest::Approx(t).epsilon(1e-10));
      CHECK(r.tv > 0.0);
    }

  // smooth family obeys the same bound
  const DislocationFamily mat = make_preset_family("mathieu", 1.0, 0, 0, 0, 0);
  const Vec wm = sample_dislocation(*lap.map, mat, 0.0);
  const BvReport rm = bv_translation_bound(*grid, wm, build_phi(0.3, 1.0));
  CHECK(rm.holds);
}

TEST_CASE("translation modulus stays below the total variation times t") {
  const auto grid = std::make_shared<TubeGrid>(-8.0, 8.0, 320, 4);
  const DiscreteOperator lap = build_laplacian(grid);
  const DislocationFamily step = make_preset_family("step", 1.0, 0, 0, 0, 0);
  const Vec w = sample_dislocation(*lap.map, step, 0.0);
  const TranslationProbe p = translation_lipschitz_probe(*grid, w, {0.4, 0.2, 0.1, 0.05});
  CHECK(p.holds);
  CHECK(p.max_ratio <= p.tv * (1.0 + p.slack));
  REQUIRE(p.ratios.size() == 4);
  for (double r : p.ratios) CHECK(r > 0.0);

  // a constant field translates to itself: every ratio is zero
  const Vec c = Vec::Constant(lap.dim, 3.0);
  const TranslationProbe pc = translation_lipschitz_probe(*grid, c, {0.2, 0.1});
  CHECK(pc.holds);
  CHECK(pc.max_ratio == doctest::Approx(0.0));
  CHECK(pc.tv == doctest::Approx(0.0));

  CHECK_THROWS_AS(translation_lipschitz_probe(*grid, w, {-0.1}), error);
}

TEST_CASE("branch difference quotients from synthetic sweeps") {
  // linear branch lambda(t) = 5 + 0.75 t: quotients equal the slope
  EigBranch linear;
  linear.E = 5.0;
  for (int i = 0; i <= 10; ++i) {
    const double t = 0.1 * i;
    linear.t_grid.push_back(t);
    linear.counts.push_back(0);
    linear.samples.push_back({t, 5.0 + 0.75 * t, 1});
  }
  const BranchFit lf = branch_lipschitz_fit(linear);
  CHECK(lf.max_difference_quotient == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(lf.lipschitz_constant == doctest::Approx(0.75).epsilon(1e-12));

  // constant branch: zero quotient
  EigBranch flat = linear;
  for (auto& s : flat.samples) s.eigenvalue = 4.2;
  const BranchFit ff = branch_lipschitz_fit(flat);
  CHECK(ff.max_difference_quotient == doctest::Approx(0.0));

  // steps with an empty window are skipped, not treated as jumps
  EigBranch gappy = linear;
  gappy.samples.erase(gappy.samples.begin() + 5);  // t = 0.5 empty
  const BranchFit gf = branch_lipschitz_fit(gappy);
  CHECK(gf.max_difference_quotient == doctest::Approx(0.75).epsilon(1e-12));

  // fewer than four populated samples is an error
  EigBranch tiny;
  tiny.E = 1.0;
  tiny.t_grid = {0.0, 0.1};
  tiny.counts = {0, 0};
  tiny.samples.push_back({0.0, 1.0, 1});
  tiny.samples.push_back({0.1, 1.1, 1});
  CHECK_THROWS_AS(branch_lipschitz_fit(tiny), error);
}
