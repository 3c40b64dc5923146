#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "core/banded_lapack.hpp"
#include "core/discrete_operator.hpp"
#include "core/eigensolve.hpp"
#include "core/gap_engine.hpp"
#include "core/surface_ids.hpp"
#include "core/tube_grid.hpp"

using namespace gapflow;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("torus geometry: cyclic adjacency survives the folded ordering") {
  const TorusGeometry g = torus_geometry(1.5, 4);
  CHECK(g.nx == 12);
  CHECK(g.ny == 12);
  CHECK(g.h == doctest::Approx(0.25));
  // indices form a bijection
  std::vector<int> seen(g.nx * g.ny, 0);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const int idx = g.index(i, j);
      REQUIRE(idx >= 0);
      REQUIRE(idx < g.nx * g.ny);
      ++seen[idx];
    }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));

  CHECK_THROWS_AS(torus_geometry(1.2, 4), error);  // 2n not an integer
  CHECK_THROWS_AS(torus_geometry(0.0, 4), error);
  CHECK_THROWS_AS(torus_geometry(1.0, 1), error);  // resolution too coarse
}

TEST_CASE("free torus spectrum equals the separable cosine modes") {
  const double n = 1.0;
  const int res = 5;  // odd resolution exercises the offset y-samples
  const DislocationFamily fr = make_preset_family("free", 0, 0, 0, 0, 0);
  const DiscreteOperator op = assemble_torus_hamiltonian(n, 0.0, fr, res);
  const int N = static_cast<int>(2 * n * res);
  REQUIRE(op.dim == N * N);

  std::vector<double> expect;
  const double h = 1.0 / res;
  for (int p = 0; p < N; ++p)
    for (int q = 0; q < N; ++q)
      expect.push_back(4.0 / (h * h) *
                       (std::pow(std::sin(kPi * p / N), 2) +
                        std::pow(std::sin(kPi * q / N), 2)));
  std::sort(expect.begin(), expect.end());
  const auto got = dense_spectrum(op, false).values;
  REQUIRE(got.size() == expect.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-10));
}

TEST_CASE("y-independent torus potentials tensorize against the ring modes") {
  const double n = 1.5;
  const int res = 4;
  const int N = static_cast<int>(2 * n * res);
  const double h = 1.0 / res;
  const DislocationFamily fam = make_preset_family("mathieu", 0.8, 0, 0.3, 0, 0);
  const DiscreteOperator op = assemble_torus_hamiltonian(n, 0.0, fam, res);

  // 1-d periodic x-operator with the same samples
  Mat ring = Mat::Zero(N, N);
  const TorusGeometry g = torus_geometry(n, res);
  for (int i = 0; i < N; ++i) {
    ring(i, i) = 2.0 / (h * h) + fam.value(0.0, g.x(i), 0.0);
    const int nxt = (i + 1) % N;
    ring(i, nxt) -= 1.0 / (h * h);
    ring(nxt, i) -= 1.0 / (h * h);
  }
  const auto xvals = dense_sym_eigen(ring, false).values;
  std::vector<double> expect;
  for (double lx : xvals)
    for (int q = 0; q < N; ++q)
      expect.push_back(lx + 4.0 / (h * h) * std::pow(std::sin(kPi * q / N), 2));
  std::sort(expect.begin(), expect.end());
  const auto got = dense_spectrum(op, false).values;
  REQUIRE(got.size() == expect.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-9));
}

TEST_CASE("fibered window counts equal direct torus counts") {
  const DislocationFamily fam = make_preset_family("mathieu", 1.0, 0, 0, 0, 0);
  for (double n : {1.0, 1.5, 2.0}) {
    for (int res : {4, 6}) {
      const double h = 1.0 / res;
      for (double t : {0.0, 2.0 * h, 7.0 * h}) {
        const DiscreteOperator direct = assemble_torus_hamiltonian(n, t, fam, res);
        const auto dvals = dense_spectrum(direct, false).values;
        for (const auto& [a, b] :
             {std::pair{5.0, 12.0}, std::pair{-1.0, 30.0}, std::pair{8.0, 11.0}}) {
          const long dcount = std::count_if(dvals.begin(), dvals.end(),
                                            [&](double v) { return v >= a && v < b; });
          CHECK(torus_window_count(fam, t, n, res, a, b) == dcount);
        }
      }
    }
  }
  // t must sit on the torus grid
  CHECK_THROWS_AS(torus_window_count(fam, 0.013, 1.0, 4, 0.0, 1.0), error);
}

TEST_CASE("ids scaling run: bookkeeping, trend fields, certificates") {
  const DislocationFamily fam = make_preset_family("mathieu", 1.0, 0, 0, 0, 0);
  const auto gaps = locate_gap(fam);
  REQUIRE(!gaps.empty());
  GapInterval g = gaps.front();
  for (const auto& cand : gaps)
    if (cand.hi - cand.lo > g.hi - g.lo) g = cand;
  const GapSpec spec = make_gap_spec(0.5 * (g.lo + g.hi), g);

  IdsOptions opts;
  opts.resolution = 8;
  opts.verified_gap = g;
  opts.certify = true;
  const double a = spec.window_lo(), b = spec.window_hi();
  const IdsRun run = ids_scaling_run(fam, 0.25, a, b, {2.0, 3.0}, opts);

  REQUIRE(run.run.counts.size() == 2);
  REQUIRE(run.count_per_n.size() == 2);
  REQUIRE(run.count_per_nlogn.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const double n = run.run.n_list[i];
    CHECK(run.count_per_n[i] ==
          doctest::Approx(run.run.counts[i] / n).epsilon(1e-12));
    CHECK(run.count_per_nlogn[i] ==
          doctest::Approx(run.run.counts[i] / (n * std::log(n))).epsilon(1e-12));
  }
  CHECK(run.nondecreasing == (run.run.counts[1] >= run.run.counts[0]));
  REQUIRE(run.certificates.size() == 2);
  for (const IdsCertificate& c : run.certificates) {
    CHECK(c.attempted);
    if (c.certified) {
      CHECK(c.rayleigh >= a);
      CHECK(c.rayleigh < b);
    }
  }

  // precondition violations are config errors
  IdsOptions bad = opts;
  CHECK_THROWS_AS(ids_scaling_run(fam, 0.25, b, a, {2.0, 3.0}, bad), error);
  CHECK_THROWS_AS(ids_scaling_run(fam, 0.25, a, b, {3.0, 2.0}, bad), error);
  CHECK_THROWS_AS(ids_scaling_run(fam, 0.25, a, b, {1.0, 2.0}, bad), error);
  CHECK_THROWS_AS(ids_scaling_run(fam, 0.25, a, b, {}, bad), error);
  bad.verified_gap = GapInterval{a + 0.1, b};  // window pokes outside
  CHECK_THROWS_AS(ids_scaling_run(fam, 0.25, a, b, {2.0, 3.0}, bad), error);
}
