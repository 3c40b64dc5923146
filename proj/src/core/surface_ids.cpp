#include "core/surface_ids.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "core/common.hpp"

namespace gapflow {

namespace {

// Folded cycle ordering: 0, 2, 4, ..., 5, 3, 1. Nodes adjacent on the cycle
// land within index distance 2, including the wrap pair.
int fold(int i, int npts) { return i < (npts + 1) / 2 ? 2 * i : 2 * (npts - 1 - i) + 1; }

double wrap01(double y) {
  const double f = y - std::floor(y);
  return f >= 1.0 ? 0.0 : f;
}

long cell_count(double n) {
  const double two_n = 2.0 * n;
  const long ncell = std::lround(two_n);
  require(ncell >= 1 && std::abs(two_n - static_cast<double>(ncell)) <= 1e-9, errc::config,
          strf("torus half-size %.17g must make 2n a positive integer so the unit y-period "
               "fits the circumference",
               n));
  return ncell;
}

void check_snapped(double t, double h) {
  const double steps = t / h;
  require(std::abs(steps - std::round(steps)) <= 1e-9 * std::max(1.0, std::abs(steps)),
          errc::invalid_argument,
          strf("dislocation parameter %.17g must be a multiple of the grid step %.17g on the "
               "torus",
               t, h));
}

// One y-translation-eigenvalue block of the torus operator, living on a
// single y-cell (res nodes) times all x-lines. The translation by one cell
// acts as omega = exp(2 pi i m / (2n)); eigenvectors with that quasi-period
// satisfy u(y + cell) = omega u(y), which turns the cell-boundary hop into a
// phase. m = 0 and m = n (omega = +-1) stay real; other fibers are Hermitian
// and are realized over the reals by interleaving (re, im) per node, which
// exactly doubles every eigenvalue.
DiscreteOperator build_fiber(const DislocationFamily& family, double t, double n, int resolution,
                             long m_index, bool& doubled) {
  const long ncell = cell_count(n);
  require(resolution >= 2, errc::config,
          strf("resolution %d too coarse to resolve the unit y-period", resolution));
  const double h = 1.0 / resolution;
  check_snapped(t, h);
  const int nx_lines = static_cast<int>(ncell) * resolution;
  const int res = resolution;
  const double inv_h2 = 1.0 / (h * h);
  const double theta =
      2.0 * std::numbers::pi * static_cast<double>(m_index) / static_cast<double>(ncell);
  doubled = !(m_index == 0 || 2 * m_index == ncell);
  const double wr = -std::cos(theta) * inv_h2;  // cell-boundary hop, real part
  const double wi = -std::sin(theta) * inv_h2;

  const int nodes = nx_lines * res;
  const int dim = doubled ? 2 * nodes : nodes;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(nodes) * (doubled ? 12 : 6));
  const auto node = [&](int i, int j) { return fold(i, nx_lines) * res + j; };
  // Directed entry value a + ib at (p, q); the loop below visits both
  // directions of every edge with conjugate phases, so symmetry is automatic.
  const auto put = [&](int p, int q, double a, double b) {
    if (!doubled) {
      trips.emplace_back(p, q, a);
      return;
    }
    trips.emplace_back(2 * p, 2 * q, a);
    trips.emplace_back(2 * p + 1, 2 * q + 1, a);
    if (b != 0.0) {
      trips.emplace_back(2 * p, 2 * q + 1, -b);
      trips.emplace_back(2 * p + 1, 2 * q, b);
    }
  };

  for (int i = 0; i < nx_lines; ++i) {
    const double x = -n + i * h;
    for (int j = 0; j < res; ++j) {
      const int p = node(i, j);
      // Sample y at the torus' own nodes of the first cell so the fiber
      // matrices reproduce the periodized matrix exactly.
      const double y = wrap01(-n + j * h);
      put(p, p, 4.0 * inv_h2 + family.value(t, x, y), 0.0);
      put(p, node((i + 1) % nx_lines, j), -inv_h2, 0.0);
      put(p, node((i + nx_lines - 1) % nx_lines, j), -inv_h2, 0.0);
      if (j + 1 < res) put(p, node(i, j + 1), -inv_h2, 0.0);
      if (j > 0) put(p, node(i, j - 1), -inv_h2, 0.0);
      if (j == res - 1) put(p, node(i, 0), wr, wi);        // u(res) = omega u(0)
      if (j == 0) put(p, node(i, res - 1), wr, -wi);       // conjugate direction
    }
  }
  SpMat a(dim, dim);
  a.setFromTriplets(trips.begin(), trips.end());
  return wrap_matrix(a);
}

long fibered_count(const DislocationFamily& family, double t, double n, int resolution,
                   double alpha, double beta, int threads) {
  const long ncell = cell_count(n);
  const long m_top = ncell / 2;
  std::vector<long> partial(static_cast<std::size_t>(m_top) + 1, 0);
  parallel_for(partial.size(), threads, [&](std::size_t mi) {
    const long m = static_cast<long>(mi);
    bool doubled = false;
    const DiscreteOperator fiber = build_fiber(family, t, n, resolution, m, doubled);
    const InertiaEngine engine(fiber);
    long c = engine.count_window(alpha, beta);
    if (doubled) {
      require(c % 2 == 0, errc::numeric, "doubled fiber returned an odd window count");
      c /= 2;
    }
    const long weight = (m == 0 || 2 * m == ncell) ? 1 : 2;
    partial[mi] = weight * c;
  });
  long total = 0;
  for (long c : partial) total += c;
  return total;
}

// Least squares y = slope x + intercept over the trailing k points.
void tail_fit(const std::vector<double>& xs, const std::vector<long>& ys, std::size_t k,
              double& slope, double& intercept) {
  const std::size_t nn = xs.size();
  k = std::min(k, nn);
  if (k < 2) {
    slope = 0.0;
    intercept = k == 1 ? static_cast<double>(ys[nn - 1]) : 0.0;
    return;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = nn - k; i < nn; ++i) {
    const double x = xs[i], y = static_cast<double>(ys[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double kk = static_cast<double>(k);
  const double denom = kk * sxx - sx * sx;
  slope = denom != 0.0 ? (kk * sxy - sx * sy) / denom : 0.0;
  intercept = (sy - slope * sx) / kk;
}

}  // namespace

int TorusGeometry::index(int i, int j) const { return fold(i, nx) * ny + fold(j, ny); }

TorusGeometry torus_geometry(double n, int resolution) {
  const long ncell = cell_count(n);
  require(resolution >= 2, errc::config,
          strf("resolution %d too coarse to resolve the unit y-period", resolution));
  TorusGeometry g;
  g.n = n;
  g.resolution = resolution;
  g.nx = static_cast<int>(ncell) * resolution;
  g.ny = g.nx;
  g.h = 1.0 / resolution;
  return g;
}

DiscreteOperator assemble_torus_hamiltonian(double n, double t, const DislocationFamily& family,
                                            int resolution) {
  const TorusGeometry g = torus_geometry(n, resolution);
  check_snapped(t, g.h);
  const double inv_h2 = 1.0 / (g.h * g.h);
  DiscreteOperator op;
  op.dim = g.nx * g.ny;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(op.dim) * 5);
  int bw = 0;
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.ny; ++j) {
      const int row = g.index(i, j);
      // Wrapping y into [0,1) makes the sampled potential exactly
      // cell-periodic on the grid, matching the continuum operator.
      trips.emplace_back(row, row, 4.0 * inv_h2 + family.value(t, g.x(i), wrap01(g.y(j))));
      const int nb[4] = {g.index((i + 1) % g.nx, j), g.index((i + g.nx - 1) % g.nx, j),
                         g.index(i, (j + 1) % g.ny), g.index(i, (j + g.ny - 1) % g.ny)};
      for (int col : nb) {
        trips.emplace_back(row, col, -inv_h2);
        bw = std::max(bw, std::abs(row - col));
      }
    }
  }
  op.stencil.resize(op.dim, op.dim);
  op.stencil.setFromTriplets(trips.begin(), trips.end());
  op.bandwidth = bw;
  return op;
}

long torus_window_count(const DislocationFamily& family, double t, double n, int resolution,
                        double alpha, double beta) {
  require(beta > alpha, errc::invalid_argument, "empty counting window");
  return fibered_count(family, t, n, resolution, alpha, beta, 1);
}

IdsRun ids_scaling_run(const DislocationFamily& family, double t, double alpha, double beta,
                       const std::vector<double>& n_list, const IdsOptions& options) {
  require(!n_list.empty(), errc::invalid_argument, "n_list is empty");
  require(beta > alpha, errc::invalid_argument, "empty counting window");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    require(n_list[i] > 1.0, errc::config,
            strf("half-size %.17g too small for the n log n diagnostic", n_list[i]));
    if (i > 0)
      require(n_list[i] > n_list[i - 1], errc::invalid_argument,
              "n_list must be strictly increasing");
  }
  require(options.verified_gap.lo < alpha && beta < options.verified_gap.hi, errc::config,
          strf("window [%.17g, %.17g] must sit inside the verified gap (%.17g, %.17g)", alpha,
               beta, options.verified_gap.lo, options.verified_gap.hi));
  const int threads = resolve_threads(options.threads);

  IdsRun out;
  out.run.n_list = n_list;
  out.run.t = t;
  out.run.alpha = alpha;
  out.run.beta = beta;
  out.run.counts.resize(n_list.size(), 0);
  for (std::size_t i = 0; i < n_list.size(); ++i)
    out.run.counts[i] = fibered_count(family, t, n_list[i], options.resolution, alpha, beta,
                                      threads);

  out.count_per_n.resize(n_list.size());
  out.count_per_nlogn.resize(n_list.size());
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const double n = n_list[i];
    const double c = static_cast<double>(out.run.counts[i]);
    out.count_per_n[i] = c / n;
    out.count_per_nlogn[i] = c / (n * std::log(n));
  }
  out.nondecreasing = true;
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (out.run.counts[i] < out.run.counts[i - 1]) out.nondecreasing = false;
  tail_fit(n_list, out.run.counts, 3, out.slope_top3, out.intercept_top3);
  double dummy = 0.0;
  tail_fit(n_list, out.run.counts, n_list.size(), out.slope_full, dummy);

  if (options.certify) {
    out.certificates.reserve(n_list.size());
    for (double n : n_list) {
      IdsCertificate cert;
      cert.n = n;
      cert.attempted = true;
      try {
        bool doubled = false;
        const DiscreteOperator fiber =
            build_fiber(family, t, n, options.resolution, 0, doubled);
        const WindowResult w = window_spectrum(fiber, alpha, beta, options.window);
        if (!w.values.empty()) {
          cert.rayleigh = w.values.front();
          cert.residual = w.residuals.front();
          cert.certified = true;
        }
      } catch (const error&) {
        cert.certified = false;  // reported, never fatal
      }
      out.certificates.push_back(cert);
    }
  }
  return out;
}

}  // namespace gapflow
