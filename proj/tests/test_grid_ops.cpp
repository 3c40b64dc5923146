#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "core/banded_lapack.hpp"
#include "core/discrete_operator.hpp"
#include "core/tube_grid.hpp"

using namespace gapflow;

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<double> dense_values(const DiscreteOperator& op) {
  return dense_sym_eigen(op.densify(4000), false).values;
}
}  // namespace

TEST_CASE("grid geometry and parameter validation") {
  const TubeGrid g(-2.0, 3.0, 50, 8);
  CHECK(g.hx == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(g.hy == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(g.ny * g.hy == doctest::Approx(1.0).epsilon(1e-15));  // unit circumference
  CHECK(g.n_lines() == 49);
  CHECK(g.n_nodes() == 49 * 8);
  CHECK(g.x(0) == doctest::Approx(-2.0));
  CHECK(g.x(50) == doctest::Approx(3.0));
  CHECK(g.y(3) == doctest::Approx(0.375));

  CHECK_THROWS_AS(TubeGrid(-1.0, 1.0, 10, 3), error);   // circle too coarse
  CHECK_THROWS_AS(TubeGrid(1.0, -1.0, 10, 8), error);   // empty interval
  CHECK_THROWS_AS(TubeGrid(-1.0, 1.0, 1, 8), error);    // no interior line
}

TEST_CASE("preset families evaluate their documented formulas") {
  const DislocationFamily mat = make_preset_family("mathieu", 0.75, 0, 0.2, 0, 0);
  CHECK(mat.v1(0.2, 0.9) == doctest::Approx(1.5));  // 2q at the phase point
  CHECK(mat.value(0.0, 0.7, 0.1) == doctest::Approx(1.5 * std::cos(2 * kPi * 0.5)));
  // dislocated side samples v2(x + t, y)
  CHECK(mat.value(0.3, -0.1, 0.0) == doctest::Approx(mat.v2(0.2, 0.0)));
  CHECK(mat.value(0.3, 0.0, 0.0) == doctest::Approx(mat.v1(0.0, 0.0)));  // x >= 0 side

  const DislocationFamily prod = make_preset_family("product", 0.5, 0.25, 0, 0, 0);
  CHECK(prod.v1(0.3, 0.4) ==
        doctest::Approx(std::cos(2 * kPi * 0.3) + 0.25 * std::cos(2 * kPi * 0.4)));
  CHECK_FALSE(prod.v1.y_independent);

  const DislocationFamily half = make_preset_family("halfspace", 1.0, 0, 0, 0, 30.0);
  CHECK(half.v1(5.0, 0.7) == doctest::Approx(0.0));
  CHECK(half.v2(0.0, 0.7) == doctest::Approx(2.0 - 30.0));

  const DislocationFamily st = make_preset_family("step", 1.0, 0, 0, 0, 0);
  CHECK(st.v1(0.25, 0.0) == doctest::Approx(2.0));
  CHECK(st.v1(0.75, 0.0) == doctest::Approx(0.0));
  CHECK(st.v1(1.25, 0.0) == doctest::Approx(2.0));  // 1-periodic

  const DislocationFamily qp = make_preset_family("quasiperiodic", 2.0, 0, 0, 0.5, 0);
  CHECK(qp.v1(1.3, 0.0) ==
        doctest::Approx(2.0 * (std::cos(1.3) + 0.5 * std::cos(kPi * 1.3))));

  CHECK_THROWS_AS(make_preset_family("nosuch", 1, 0, 0, 0, 0), error);
}

TEST_CASE("assembled operators are exactly symmetric with bandwidth ny") {
  const auto grid = std::make_shared<TubeGrid>(-3.0, 3.0, 60, 6);
  const DislocationFamily fam = make_preset_family("product", 1.0, 0.5, 0.1, 0, 0);
  const DiscreteOperator op = assemble_hamiltonian(grid, fam, 0.3);
  const SpMat diff = SpMat(op.stencil.transpose()) - op.stencil;
  CHECK(diff.norm() == 0.0);
  CHECK(op.bandwidth == grid->ny);
  CHECK(op.dim == grid->n_nodes());
}

TEST_CASE("constant potential shifts every eigenvalue by the constant") {
  const auto grid = std::make_shared<TubeGrid>(-1.5, 1.5, 24, 4);
  const DiscreteOperator lap = build_laplacian(grid);
  Vec c = Vec::Constant(lap.dim, 2.75);
  const DiscreteOperator shifted = assemble_with_potential(grid, c);
  const auto v0 = dense_values(lap);
  const auto v1 = dense_values(shifted);
  REQUIRE(v0.size() == v1.size());
  for (std::size_t i = 0; i < v0.size(); ++i)
    CHECK(v1[i] - v0[i] == doctest::Approx(2.75).epsilon(1e-11));
}

TEST_CASE("free family assembly is the bare laplacian") {
  const auto grid = std::make_shared<TubeGrid>(-2.0, 2.0, 30, 4);
  const DiscreteOperator lap = build_laplacian(grid);
  const DiscreteOperator h = assemble_hamiltonian(grid, make_preset_family("free", 0, 0, 0, 0, 0), 1.7);
  const SpMat diff = h.stencil - lap.stencil;
  CHECK(diff.norm() == 0.0);
  CHECK(h.lowrank.empty());
  CHECK(h.cut_lines.empty());
}

TEST_CASE("rank-one update on an invariant direction shifts only its eigenvalue") {
  const auto grid = std::make_shared<TubeGrid>(-1.0, 1.0, 16, 4);
  const DiscreteOperator lap = build_laplacian(grid);
  const DenseEig base = dense_sym_eigen(lap.densify(1000), true);
  LowRankTerm term;
  term.u = base.vectors.col(0);  // normalized lowest eigenvector
  term.c = 3.5;
  const DiscreteOperator bumped = wrap_matrix(lap.stencil, {term});
  const auto vals = dense_values(bumped);
  // the lowest eigenvalue moves by exactly c (it stays separated from the rest)
  std::vector<double> expect = base.values;
  expect[0] += 3.5;
  std::sort(expect.begin(), expect.end());
  REQUIRE(vals.size() == expect.size());
  for (std::size_t i = 0; i < vals.size(); ++i)
    CHECK(vals[i] == doctest::Approx(expect[i]).epsilon(1e-10));
}

TEST_CASE("dirichlet cuts only raise ordered eigenvalues") {
  const auto grid = std::make_shared<TubeGrid>(-2.0, 2.0, 40, 4);
  const DislocationFamily fam = make_preset_family("mathieu", 0.5, 0, 0, 0, 0);
  // W >= 0 via a constant lift of the mathieu cell; min-max needs form order only
  const DiscreteOperator h = assemble_hamiltonian(grid, fam, 0.0);
  const DiscreteOperator h_cut = insert_dirichlet_cut(h, 0.0);
  const DiscreteOperator h_cut2 = insert_dirichlet_cut(h_cut, 1.0);

  // compare on the common index set: pad cut spectra conceptually by leaving
  // counts equal through densify on the same dim is impossible; instead use
  // the variational order on the first dim(h_cut2) eigenvalues
  const auto v = dense_values(h);
  const auto vc = dense_values(h_cut);
  const auto vc2 = dense_values(h_cut2);
  for (std::size_t k = 0; k < vc2.size(); ++k) {
    CHECK(v[k] <= vc[k] + 1e-11);
    CHECK(vc[k] <= vc2[k] + 1e-11);
  }
  // cutting is idempotent at an already-cut location
  const DiscreteOperator again = insert_dirichlet_cut(h_cut, 0.0);
  CHECK(again.dim == h_cut.dim);
  CHECK((again.stencil - h_cut.stencil).norm() == 0.0);
}

TEST_CASE("right-translation covariance is exact on the grid") {
  // spectra over (-n - t, -t) with medium v2(. + t) match spectra over (-n, 0)
  const double t = 0.5, n = 4.0, hx = 0.1;
  const int ny = 4;
  const DislocationFamily fam = make_preset_family("mathieu", 1.0, 0, 0.15, 0, 0);

  const auto left = std::make_shared<TubeGrid>(-n - t, -t, static_cast<int>(n / hx), ny);
  const auto base = std::make_shared<TubeGrid>(-n, 0.0, static_cast<int>(n / hx), ny);
  const DiscreteOperator lap_l = build_laplacian(left);
  const DiscreteOperator lap_b = build_laplacian(base);

  Vec vl(lap_l.dim), vb(lap_b.dim);
  for (int i = 0; i < vl.size(); ++i)
    vl[i] = fam.v2(lap_l.map->x_of(i) + t, left->y(lap_l.map->y_of(i)));
  for (int i = 0; i < vb.size(); ++i)
    vb[i] = fam.v2(lap_b.map->x_of(i), base->y(lap_b.map->y_of(i)));

  const auto sl = dense_values(assemble_with_potential(left, vl));
  const auto sb = dense_values(assemble_with_potential(base, vb));
  REQUIRE(sl.size() == sb.size());
  for (std::size_t i = 0; i < sl.size(); ++i)
    CHECK(sl[i] == doctest::Approx(sb[i]).epsilon(1e-12));
}

TEST_CASE("gridded potential loads with bilinear interpolation and periodic y") {
  const std::string path = "tmp_gridded_potential.csv";
  {
    std::ofstream out(path);
    out << "x,y,value\n";
    for (double x : {0.0, 1.0, 2.0})
      for (double y : {0.0, 0.5})
        out << x << "," << y << "," << (x + (y == 0.5 ? 10.0 : 0.0)) << "\n";
  }
  const PotentialSampler s = load_gridded_sampler(path);
  CHECK(s(1.0, 0.0) == doctest::Approx(1.0));
  CHECK(s(1.0, 0.5) == doctest::Approx(11.0));
  CHECK(s(0.5, 0.0) == doctest::Approx(0.5));          // linear in x is exact
  CHECK(s(1.0, 0.25) == doctest::Approx(6.0));         // midway between y rows
  CHECK(s(1.0, 0.75) == doctest::Approx(6.0));         // wraps around the circle
  CHECK(s(1.0, 1.25) == doctest::Approx(6.0));         // evaluation is 1-periodic
  CHECK_THROWS_AS(s(2.5, 0.0), error);                 // outside the x-range
  CHECK_THROWS_AS(load_gridded_sampler("no_such_file.csv"), error);
  std::remove(path.c_str());
}
