#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "core/banded_lapack.hpp"
#include "core/discrete_operator.hpp"
#include "core/eigensolve.hpp"
#include "core/tube_grid.hpp"

using namespace gapflow;

namespace {
constexpr double kPi = std::numbers::pi;

SpMat from_triplets(int n, const std::vector<Eigen::Triplet<double>>& t) {
  SpMat a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

// Random symmetric band matrix with the given half-bandwidth.
SpMat random_band(int n, int kd, rng_engine& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i)
    for (int d = 0; d <= kd && i + d < n; ++d) {
      const double v = u(rng);
      t.emplace_back(i, i + d, v);
      if (d > 0) t.emplace_back(i + d, i, v);
    }
  return from_triplets(n, t);
}
}  // namespace

TEST_CASE("dense spectrum on closed-form instances") {
  const DiscreteOperator two = wrap_matrix(
      from_triplets(2, {{0, 0, 2.0}, {1, 1, 2.0}, {0, 1, -1.0}, {1, 0, -1.0}}));
  const DenseResult r = dense_spectrum(two, false);
  REQUIRE(r.values.size() == 2);
  CHECK(r.values[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.values[1] == doctest::Approx(3.0).epsilon(1e-14));

  std::vector<Eigen::Triplet<double>> t;
  const double diag[5] = {4.0, -1.0, 0.5, 7.0, 2.0};
  for (int i = 0; i < 5; ++i) t.emplace_back(i, i, diag[i]);
  const DenseResult d = dense_spectrum(wrap_matrix(from_triplets(5, t)), false);
  std::vector<double> expect(diag, diag + 5);
  std::sort(expect.begin(), expect.end());
  for (int i = 0; i < 5; ++i) CHECK(d.values[i] == doctest::Approx(expect[i]));
}

TEST_CASE("free-tube dense spectrum matches the discrete product modes") {
  const auto grid = std::make_shared<TubeGrid>(0.0, 3.0, 30, 4);
  const DiscreteOperator lap = build_laplacian(grid);
  const DenseResult r = dense_spectrum(lap, true);

  // discrete Dirichlet chain x discrete circle: exact eigenvalues
  std::vector<double> expect;
  const double L = 3.0;
  for (int m = 1; m <= grid->nx - 1; ++m)
    for (int k = 0; k < grid->ny; ++k) {
      const double ex = 4.0 / (grid->hx * grid->hx) *
                        std::pow(std::sin(kPi * m * grid->hx / (2.0 * L)), 2);
      const double ey =
          4.0 / (grid->hy * grid->hy) * std::pow(std::sin(kPi * k / grid->ny), 2);
      expect.push_back(ex + ey);
    }
  std::sort(expect.begin(), expect.end());
  REQUIRE(r.values.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i)
    CHECK(r.values[i] == doctest::Approx(expect[i]).epsilon(1e-11));
  CHECK(r.max_residual <= 1e-10 * r.norm_bound);
}

TEST_CASE("dense solver refuses dimensions over the cap") {
  rng_engine rng = make_rng(7, 0);
  const DiscreteOperator op = wrap_matrix(random_band(150, 3, rng));
  CHECK_THROWS_AS(dense_spectrum(op, false, 100), error);
}

TEST_CASE("inertia counts agree with dense counts, including low-rank terms") {
  rng_engine rng = make_rng(11, 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int inst = 0; inst < 6; ++inst) {
    const int n = 60 + 40 * inst;
    const int kd = 1 + inst;
    std::vector<LowRankTerm> lr;
    if (inst % 2 == 1) {
      LowRankTerm term;
      term.u = Vec::NullaryExpr(n, [&](Eigen::Index) { return u(rng); });
      term.c = 2.0 * u(rng);
      lr.push_back(term);
    }
    const DiscreteOperator op = wrap_matrix(random_band(n, kd, rng), lr);
    const DenseResult d = dense_spectrum(op, false);
    for (int p = 0; p < 8; ++p) {
      const int j = 1 + static_cast<int>((n - 2) * (p + 0.5) / 8.0);
      if (d.values[j] - d.values[j - 1] < 1e-9) continue;
      const double E = 0.5 * (d.values[j - 1] + d.values[j]);
      const InertiaReport rep = inertia_count(op, E);
      CHECK(rep.n_below == j);
      CHECK(rep.lowrank_border == !lr.empty());
    }
    // outside the spectrum
    CHECK(inertia_count(op, d.values.front() - 1.0).n_below == 0);
    CHECK(inertia_count(op, d.values.back() + 1.0).n_below == n);
  }
}

TEST_CASE("band signature sweep agrees with tridiagonal Sturm and dense counts") {
  rng_engine rng = make_rng(13, 2);
  std::uniform_real_distribution<double> shift(-3.0, 6.0);
  for (int inst = 0; inst < 8; ++inst) {
    const int n = 40 + 30 * inst;
    const int kd = 1 + (inst % 5);
    const SpMat a = random_band(n, kd, rng);
    const SymBand band = SymBand::from_sparse(a, kd);
    const Tridiag tri = band_to_tridiag(band);
    const DenseResult d = dense_spectrum(wrap_matrix(a), false);
    for (int p = 0; p < 6; ++p) {
      const double s = shift(rng);
      const long dense_count =
          std::lower_bound(d.values.begin(), d.values.end(), s) - d.values.begin();
      CHECK(band_count_below(band, s, 1e-11).n_below == dense_count);
      CHECK(tridiag_count_below_sturm(tri, s) == dense_count);
      CHECK(tridiag_count_below(tri, s, 1e-11).n_below == dense_count);
    }
  }
}

TEST_CASE("band LU solves to working precision") {
  rng_engine rng = make_rng(17, 3);
  const int n = 200, kd = 4;
  const SpMat a = random_band(n, kd, rng);
  const BandLU lu(a, kd, 0.25);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec b = Vec::NullaryExpr(n, [&](Eigen::Index) { return u(rng); });
  const Vec x = lu.solve(b);
  const Vec residual = Mat(a) * x - 0.25 * x - b;
  CHECK(residual.norm() <= 1e-9 * b.norm() * 100);
}

TEST_CASE("window spectrum is certified, ordered, orthonormal, and complete") {
  const auto grid = std::make_shared<TubeGrid>(-4.0, 4.0, 120, 6);
  const DislocationFamily fam = make_preset_family("mathieu", 1.0, 0, 0, 0, 0);
  const DiscreteOperator op = assemble_hamiltonian(grid, fam, 0.3);
  const DenseResult d = dense_spectrum(op, false);

  const double lo = d.values[10] - 1e-7, hi = d.values[25] + 1e-7;
  const WindowResult w = window_spectrum(op, lo, hi);
  REQUIRE(w.values.size() == 16);
  CHECK(std::is_sorted(w.values.begin(), w.values.end()));
  for (std::size_t i = 0; i < w.values.size(); ++i) {
    CHECK(w.values[i] == doctest::Approx(d.values[10 + i]).epsilon(1e-10));
    CHECK(w.residuals[i] <= 1e-9 * w.norm_bound);
    CHECK(w.values[i] >= lo);
    CHECK(w.values[i] < hi);
  }
  const Mat gram = w.vectors.transpose() * w.vectors;
  CHECK((gram - Mat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(w.inertia_hi - w.inertia_lo == static_cast<long>(w.values.size()));

  // empty window
  const double gap_lo = 0.5 * (d.values[30] + d.values[31]);
  const WindowResult empty = window_spectrum(op, gap_lo, gap_lo + 1e-12);
  CHECK(empty.values.empty());
}

TEST_CASE("lowest eigenpairs match the dense head") {
  const auto grid = std::make_shared<TubeGrid>(-3.0, 3.0, 80, 6);
  const DislocationFamily fam = make_preset_family("product", 0.8, 0.4, 0, 0, 0);
  const DiscreteOperator op = assemble_hamiltonian(grid, fam, 1.1);
  const DenseResult d = dense_spectrum(op, false);
  const WindowResult w = lowest_eigenpairs(op, 12);
  REQUIRE(w.values.size() >= 12);
  for (int i = 0; i < 12; ++i)
    CHECK(w.values[i] == doctest::Approx(d.values[i]).epsilon(1e-10));
}

TEST_CASE("a dirichlet cut splits the spectrum into the union of the blocks") {
  const int ny = 4;
  const double hx = 0.1;
  const DislocationFamily fam = make_preset_family("mathieu", 0.7, 0, 0.2, 0, 0);
  const auto whole = std::make_shared<TubeGrid>(-2.0, 2.0, 40, ny);
  const auto left = std::make_shared<TubeGrid>(-2.0, 0.0, 20, ny);
  const auto right = std::make_shared<TubeGrid>(0.0, 2.0, 20, ny);
  (void)hx;

  const DiscreteOperator cut =
      insert_dirichlet_cut(assemble_hamiltonian(whole, fam, 0.0), 0.0);
  std::vector<double> expect;
  for (const auto& g : {left, right}) {
    const auto vals = dense_spectrum(assemble_hamiltonian(g, fam, 0.0), false).values;
    expect.insert(expect.end(), vals.begin(), vals.end());
  }
  std::sort(expect.begin(), expect.end());
  const auto got = dense_spectrum(cut, false).values;
  REQUIRE(got.size() == expect.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-11));
}
