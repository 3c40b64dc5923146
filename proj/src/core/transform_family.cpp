#include "core/transform_family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gapflow {

// Fine-grid tables of the mollified ramp on [-eta, 1 + eta], step 1/nu with
// integer nu so that the unit shift J(x) - J(x - 1) is an exact index offset.
struct PhiTable {
  double eta = 1.0;        // bump half-support, snapped up to a grid multiple
  double eta_raw = 1.0;    // requested width (bump vanishes beyond this)
  double step = 0.0;
  double x0 = 0.0;         // left table edge (= -eta)
  double bump_scale = 0.0; // normalization of the bump kernel
  std::vector<double> ramp;  // R(x) = int (J - J(.-1)); phi = x + t R
  std::vector<double> gain;  // G(x) = J(x) - J(x-1) in [0, 1]; phi' = 1 + t G

  double bump(double x) const {
    double u = x / eta_raw;
    if (std::abs(u) >= 1.0) return 0.0;
    return bump_scale * std::exp(-1.0 / (1.0 - u * u));
  }
  double interp(const std::vector<double>& tab, double x) const {
    double s = (x - x0) / step;
    if (s <= 0.0) return tab.front();
    if (s >= static_cast<double>(tab.size() - 1)) return tab.back();
    int k = static_cast<int>(s);
    double f = s - k;
    return tab[static_cast<std::size_t>(k)] * (1.0 - f) +
           tab[static_cast<std::size_t>(k) + 1] * f;
  }
};

namespace {

std::shared_ptr<const PhiTable> build_table(double width) {
  constexpr int nu = 8192;  // table steps per unit length
  auto tab = std::make_shared<PhiTable>();
  tab->eta_raw = width;
  tab->step = 1.0 / nu;
  int eta_steps = static_cast<int>(std::ceil(width * nu - 1e-9));
  tab->eta = eta_steps * tab->step;
  tab->x0 = -tab->eta;
  const int K = nu + 2 * eta_steps;  // table covers [-eta, 1 + eta]

  // Bump values; trapezoid normalization is spectrally accurate for a bump.
  std::vector<double> j(static_cast<std::size_t>(K) + 1, 0.0);
  tab->bump_scale = 1.0;
  double total = 0.0;
  for (int k = 0; k <= K; ++k) {
    j[static_cast<std::size_t>(k)] = tab->bump(tab->x0 + k * tab->step);
    double w = (k == 0 || k == K) ? 0.5 : 1.0;
    total += w * j[static_cast<std::size_t>(k)];
  }
  total *= tab->step;
  tab->bump_scale = 1.0 / total;
  for (auto& v : j) v /= total;

  // CDF of the bump, pinned to [0, 1] exactly at the support edges.
  std::vector<double> J(static_cast<std::size_t>(K) + 1, 0.0);
  for (int k = 1; k <= K; ++k) {
    J[static_cast<std::size_t>(k)] = J[static_cast<std::size_t>(k) - 1] +
        0.5 * tab->step * (j[static_cast<std::size_t>(k) - 1] + j[static_cast<std::size_t>(k)]);
  }
  double Jend = J[static_cast<std::size_t>(2 * eta_steps)];  // x = +eta
  require(Jend > 0.5, errc::internal, "mollifier table degenerated");
  for (auto& v : J) v = std::clamp(v / Jend, 0.0, 1.0);

  tab->gain.assign(static_cast<std::size_t>(K) + 1, 0.0);
  for (int k = 0; k <= K; ++k) {
    double lo = (k >= nu) ? J[static_cast<std::size_t>(k - nu)] : 0.0;
    tab->gain[static_cast<std::size_t>(k)] =
        std::clamp(J[static_cast<std::size_t>(k)] - lo, 0.0, 1.0);
  }

  tab->ramp.assign(static_cast<std::size_t>(K) + 1, 0.0);
  for (int k = 1; k <= K; ++k) {
    tab->ramp[static_cast<std::size_t>(k)] = tab->ramp[static_cast<std::size_t>(k) - 1] +
        0.5 * tab->step *
            (tab->gain[static_cast<std::size_t>(k) - 1] + tab->gain[static_cast<std::size_t>(k)]);
  }
  double Rend = tab->ramp.back();  // exact value 1: unit area between shifted CDFs
  require(std::abs(Rend - 1.0) < 1e-6, errc::internal, "mollified ramp failed to close");
  for (auto& v : tab->ramp) v = std::clamp(v / Rend, 0.0, 1.0);
  return tab;
}

}  // namespace

double Diffeomorphism::eval(double x) const {
  if (x <= flat_left) return x;
  if (x >= flat_right) return x + t;
  return x + t * table_->interp(table_->ramp, x);
}

double Diffeomorphism::deriv(double x) const {
  if (x <= flat_left || x >= flat_right) return 1.0;
  return 1.0 + t * table_->interp(table_->gain, x);
}

double Diffeomorphism::second(double x) const {
  return t * (table_->bump(x) - table_->bump(x - 1.0));
}

Diffeomorphism build_phi(double t, double width) {
  require(std::abs(t) <= 0.5, errc::domain,
          strf("shift %.6g outside the diffeomorphism range [-1/2, 1/2]", t));
  require(width > 0.0 && width <= 1.0, errc::invalid_argument,
          strf("mollifier width %.6g outside (0, 1]", width));
  Diffeomorphism phi;
  phi.t = t;
  phi.width = width;
  phi.table_ = build_table(width);
  phi.flat_left = -phi.table_->eta;
  phi.flat_right = 1.0 + phi.table_->eta;
  return phi;
}

double reversed_dislocation(const DislocationFamily& family, double t, double x, double y) {
  return x < 0.0 ? family.v2(x, y) : family.v1(x - t, y);
}

DiscreteOperator assemble_transformed_operator(double t, const DislocationFamily& family,
                                               const std::shared_ptr<const TubeGrid>& grid,
                                               double width) {
  Diffeomorphism phi = build_phi(t, width);
  const TubeGrid& g = *grid;
  const int nl = g.n_lines();
  const int ny = g.ny;
  const double ay = 1.0 / (g.hy * g.hy);
  const double ax = 1.0 / (g.hx * g.hx);

  GridMap map;
  map.grid = grid;
  for (int line = 1; line < g.nx; ++line) map.active_lines.push_back(line);

  // Per-line coefficient fields. a lives on x-edges (midpoints), m on lines.
  std::vector<double> a(static_cast<std::size_t>(nl) + 1, 1.0);
  std::vector<double> m(static_cast<std::size_t>(nl), 0.0);
  std::vector<double> zero(static_cast<std::size_t>(nl), 0.0);
  for (int r = 0; r <= nl; ++r) {
    double xm = g.x_min + (r + 0.5) * g.hx;  // midpoint left of line r+1
    double dp = phi.deriv(xm);
    a[static_cast<std::size_t>(r)] = 1.0 / (dp * dp);
  }
  for (int r = 0; r < nl; ++r) {
    double x = g.x(map.active_lines[static_cast<std::size_t>(r)]);
    double dp = phi.deriv(x);
    double ds = phi.second(x);
    m[static_cast<std::size_t>(r)] = ds / (dp * dp * dp);
    zero[static_cast<std::size_t>(r)] = ds * ds / (4.0 * dp * dp * dp * dp);
  }

  DiscreteOperator op;
  op.dim = map.dim();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(op.dim) * 5);
  for (int r = 0; r < nl; ++r) {
    double x = g.x(map.active_lines[static_cast<std::size_t>(r)]);
    double al = a[static_cast<std::size_t>(r)];
    double ar = a[static_cast<std::size_t>(r) + 1];
    for (int j = 0; j < ny; ++j) {
      int idx = map.index(r, j);
      double diag = (al + ar) * ax + 2.0 * ay + zero[static_cast<std::size_t>(r)] +
                    reversed_dislocation(family, t, phi.eval(x), g.y(j));
      trip.emplace_back(idx, idx, diag);
      if (r > 0) {
        double b = (m[static_cast<std::size_t>(r)] - m[static_cast<std::size_t>(r) - 1]) /
                   (4.0 * g.hx);
        trip.emplace_back(idx, map.index(r - 1, j), -al * ax + b);
      }
      if (r + 1 < nl) {
        double b = (m[static_cast<std::size_t>(r) + 1] - m[static_cast<std::size_t>(r)]) /
                   (4.0 * g.hx);
        trip.emplace_back(idx, map.index(r + 1, j), -ar * ax + b);
      }
      trip.emplace_back(idx, map.index(r, (j + ny - 1) % ny), -ay);
      trip.emplace_back(idx, map.index(r, (j + 1) % ny), -ay);
    }
  }
  op.stencil.resize(op.dim, op.dim);
  op.stencil.setFromTriplets(trip.begin(), trip.end());
  op.stencil.makeCompressed();
  op.bandwidth = ny;
  op.map = std::move(map);
  return op;
}

EquivalenceReport equivalence_check(double t, const DislocationFamily& family, double lo,
                                    double hi, const std::shared_ptr<const TubeGrid>& grid,
                                    double width, const WindowOptions& opts) {
  require(hi > lo, errc::invalid_argument, "empty comparison window");
  double snapped = std::round(t / grid->hx) * grid->hx;
  require(std::abs(t - snapped) <= 1e-9, errc::invalid_argument,
          strf("shift %.9g is not a multiple of hx=%.9g; the translated side would "
               "sample its discontinuity off-grid", t, grid->hx));

  GridMap map;
  map.grid = grid;
  for (int line = 1; line < grid->nx; ++line) map.active_lines.push_back(line);
  Vec pot(map.dim());
  for (int r = 0; r < static_cast<int>(map.active_lines.size()); ++r) {
    double x = grid->x(map.active_lines[static_cast<std::size_t>(r)]);
    for (int j = 0; j < grid->ny; ++j) {
      pot(map.index(r, j)) = reversed_dislocation(family, t, x, grid->y(j));
    }
  }
  DiscreteOperator h = assemble_with_potential(grid, pot);
  DiscreteOperator c = assemble_transformed_operator(t, family, grid, width);

  EquivalenceReport rep;
  rep.t = t;
  WindowResult wh = window_spectrum(h, lo, hi, opts);
  WindowResult wc = window_spectrum(c, lo, hi, opts);
  rep.count_h = wh.inertia_hi - wh.inertia_lo;
  rep.count_c = wc.inertia_hi - wc.inertia_lo;
  rep.values_h.assign(wh.values.data(), wh.values.data() + wh.values.size());
  rep.values_c.assign(wc.values.data(), wc.values.data() + wc.values.size());
  std::sort(rep.values_h.begin(), rep.values_h.end());
  std::sort(rep.values_c.begin(), rep.values_c.end());
  rep.counts_match = rep.count_h == rep.count_c;
  std::size_t pairs = std::min(rep.values_h.size(), rep.values_c.size());
  for (std::size_t i = 0; i < pairs; ++i) {
    rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(rep.values_h[i] - rep.values_c[i]));
  }
  return rep;
}

namespace {

// L1 distance between two x-profiles of gridded data, both read through
// piecewise-linear interpolation along x (clamped at the ends), integrated
// with a refined midpoint rule. `warp` maps the quadrature point to where the
// second copy is read.
template <typename Warp>
double l1_warp_distance(const TubeGrid& g, const Vec& w, Warp warp) {
  const int nl = g.n_lines();
  const int ny = g.ny;
  const double x_lo = g.x(1);
  auto read = [&](double x, int j) {
    double s = std::clamp((x - x_lo) / g.hx, 0.0, static_cast<double>(nl - 1));
    int r = std::min(static_cast<int>(s), nl - 2);
    if (nl == 1) return w(j);
    double f = s - r;
    return w(r * ny + j) * (1.0 - f) + w((r + 1) * ny + j) * f;
  };
  constexpr int sub = 32;
  double total = 0.0;
  for (int r = 0; r + 1 < nl || (nl == 1 && r == 0); ++r) {
    if (nl == 1) break;
    for (int q = 0; q < sub; ++q) {
      double x = x_lo + (r + (q + 0.5) / sub) * g.hx;
      for (int j = 0; j < ny; ++j) {
        total += std::abs(read(warp(x), j) - read(x, j)) * (g.hx / sub) * g.hy;
      }
    }
  }
  return total;
}

double x_total_variation(const TubeGrid& g, const Vec& w) {
  const int nl = g.n_lines();
  const int ny = g.ny;
  double tv = 0.0;
  for (int r = 0; r + 1 < nl; ++r) {
    for (int j = 0; j < ny; ++j) tv += std::abs(w((r + 1) * ny + j) - w(r * ny + j)) * g.hy;
  }
  return tv;
}

}  // namespace

BvReport bv_translation_bound(const TubeGrid& grid, const Vec& w, const Diffeomorphism& phi,
                              double slack) {
  require(w.size() == static_cast<Eigen::Index>(grid.n_nodes()), errc::invalid_argument,
          "gridded function does not match the grid");
  double dmax = 0.0;
  for (int k = 0; k <= 4096; ++k) {
    double x = phi.flat_left + (phi.flat_right - phi.flat_left) * k / 4096.0;
    dmax = std::max(dmax, std::abs(phi.deriv(x) - 1.0));
  }
  require(dmax <= 0.5 + 1e-12, errc::domain,
          strf("sup |phi' - 1| = %.6g exceeds 1/2; the L1 bound needs a gentle warp", dmax));

  BvReport rep;
  rep.slack = slack;
  rep.tv = x_total_variation(grid, w);
  for (int k = 0; k <= 4096; ++k) {
    double x = grid.x_min + (grid.x_max - grid.x_min) * k / 4096.0;
    rep.alpha_inf = std::max(rep.alpha_inf, std::abs(phi.eval(x) - x));
  }
  rep.lhs = l1_warp_distance(grid, w, [&](double x) { return phi.eval(x); });
  rep.rhs = 2.0 * rep.tv * rep.alpha_inf * slack;
  rep.holds = rep.lhs <= rep.rhs + 1e-12;
  return rep;
}

TranslationProbe translation_lipschitz_probe(const TubeGrid& grid, const Vec& f,
                                             const std::vector<double>& t_list,
                                             double slack) {
  require(f.size() == static_cast<Eigen::Index>(grid.n_nodes()), errc::invalid_argument,
          "gridded function does not match the grid");
  TranslationProbe probe;
  probe.slack = slack;
  probe.t_list = t_list;
  probe.tv = x_total_variation(grid, f);
  probe.holds = true;
  for (double t : t_list) {
    require(t > 0.0, errc::invalid_argument, "translation probe shifts must be positive");
    double lhs = l1_warp_distance(grid, f, [&](double x) { return x - t; });
    double ratio = lhs / t;
    probe.ratios.push_back(ratio);
    probe.max_ratio = std::max(probe.max_ratio, ratio);
    if (ratio > probe.tv * (1.0 + slack)) probe.holds = false;
  }
  return probe;
}

BranchFit branch_lipschitz_fit(const EigBranch& branch) {
  require(branch.samples.size() >= 4, errc::invalid_argument,
          "branch fit needs at least 4 samples");
  BranchFit fit;
  fit.branch = branch;

  // Regroup the flat sample list by parameter value.
  std::vector<double> ts;
  std::vector<std::vector<double>> levels;
  for (const auto& s : branch.samples) {
    if (ts.empty() || s.t > ts.back() + 1e-15) {
      ts.push_back(s.t);
      levels.emplace_back();
    }
    require(std::abs(s.t - ts.back()) <= 1e-15, errc::invalid_argument,
            "branch samples must be sorted by parameter");
    for (int c = 0; c < s.multiplicity; ++c) levels.back().push_back(s.eigenvalue);
  }

  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const auto& la = levels[k];
    const auto& lb = levels[k + 1];
    double dt = ts[k + 1] - ts[k];
    if (la.empty() || lb.empty() || dt <= 0.0) continue;  // branch left the window
    for (std::size_t i = 0; i < la.size(); ++i) {
      std::size_t jbest = 0;
      for (std::size_t j = 1; j < lb.size(); ++j) {
        if (std::abs(lb[j] - la[i]) < std::abs(lb[jbest] - la[i])) jbest = j;
      }
      double quot = std::abs(lb[jbest] - la[i]) / dt;
      fit.max_difference_quotient = std::max(fit.max_difference_quotient, quot);
      // Mutual nearest: does la[i] win the reverse match from lb[jbest]?
      std::size_t iback = 0;
      for (std::size_t ii = 1; ii < la.size(); ++ii) {
        if (std::abs(la[ii] - lb[jbest]) < std::abs(la[iback] - lb[jbest])) iback = ii;
      }
      if (iback == i) fit.lipschitz_constant = std::max(fit.lipschitz_constant, quot);
    }
  }
  return fit;
}

}  // namespace gapflow
