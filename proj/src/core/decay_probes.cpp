#include "core/decay_probes.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/banded_lapack.hpp"
#include "core/eigensolve.hpp"
#include "core/gap_engine.hpp"

namespace gapflow {

namespace {

constexpr int kDenseCap = 6000;

// Least-squares line through (x_i, y_i); returns {intercept, slope, rms}.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double rms = std::numeric_limits<double>::infinity();
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  const std::size_t n = x.size();
  if (n < 2) return f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double det = n * sxx - sx * sx;
  if (det <= 0) return f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.rms = std::sqrt(ss / static_cast<double>(n));
  return f;
}

// Dense inverse of op + shift, via LDLT on the materialized matrix.
Mat dense_shifted_inverse(const DiscreteOperator& op, double shift) {
  Mat a = op.densify(kDenseCap);
  for (int i = 0; i < op.dim; ++i) a(i, i) += shift;
  Eigen::LDLT<Mat> ldlt(a);
  require(ldlt.info() == Eigen::Success, errc::numeric, "shifted operator is singular");
  return ldlt.solve(Mat::Identity(op.dim, op.dim));
}

// Node indices of the sub operator inside the super operator's ordering.
// Requires the sub grid to be the same object shape with a subset of lines.
std::vector<int> embedding_indices(const GridMap& sub, const GridMap& super) {
  require(sub.grid && super.grid, errc::invalid_argument, "operators need grid maps");
  require(sub.grid->nx == super.grid->nx && sub.grid->ny == super.grid->ny &&
              std::abs(sub.grid->x_min - super.grid->x_min) <= 1e-12 &&
              std::abs(sub.grid->x_max - super.grid->x_max) <= 1e-12,
          errc::domain, "operators live on different grids");
  const int ny = sub.ny();
  std::vector<int> idx(sub.dim());
  for (std::size_t r = 0; r < sub.active_lines.size(); ++r) {
    int super_rank = super.rank_of_line(sub.active_lines[r]);
    require(super_rank >= 0, errc::domain,
            "cut operator keeps a line the reference operator lacks");
    for (int j = 0; j < ny; ++j) {
      idx[static_cast<int>(r) * ny + j] = super.index(super_rank, j);
    }
  }
  return idx;
}

}  // namespace

DecayFit decay_fit(const Vec& u, const GridMap& map, double interface_x) {
  LocalizationProfile prof = localization_profile(u, map, interface_x);
  DecayFit fit;
  // Linear regime: past the shoulder (tail clearly below 1) and above the
  // double-precision floor of the squared-mass sums.
  std::vector<double> ks, logs;
  for (std::size_t i = 0; i < prof.m.size(); ++i) {
    double t = prof.tail[i];
    if (t > 0.9) continue;
    if (t < 1e-11) break;
    if (ks.empty()) fit.k_lo = static_cast<int>(prof.m[i]);
    fit.k_hi = static_cast<int>(prof.m[i]);
    ks.push_back(prof.m[i]);
    logs.push_back(std::log(t));
  }
  if (ks.size() < 3) return fit;  // not enough decade span to call it a fit
  LineFit line = fit_line(ks, logs);
  fit.C = std::exp(line.intercept);
  fit.gamma = -line.slope;
  fit.fit_residual = line.rms;
  fit.accepted = fit.gamma > 0.0;
  return fit;
}

double resolvent_hs_diff(const DiscreteOperator& op, double cut_x, double r) {
  require(r >= 1.0, errc::invalid_argument, "resolvent shift r must be >= 1");
  require(op.map.has_value(), errc::invalid_argument, "operator needs a grid map");
  DiscreteOperator cut = insert_dirichlet_cut(op, cut_x);
  Mat inv_full = dense_shifted_inverse(op, r);
  Mat inv_cut = dense_shifted_inverse(cut, r);
  std::vector<int> idx = embedding_indices(*cut.map, *op.map);
  for (int j = 0; j < cut.dim; ++j) {
    for (int i = 0; i < cut.dim; ++i) {
      inv_full(idx[i], idx[j]) -= inv_cut(i, j);
    }
  }
  return inv_full.norm();
}

GapCountReport gap_count_probe(const std::vector<PotentialSampler>& ensemble, double a,
                               double b, double half_len, double hx, int ny,
                               double cut_x) {
  require(b > a, errc::invalid_argument, "count window is empty");
  require(half_len > 0 && hx > 0 && ny >= 4, errc::config, "bad probe grid");
  int nx = static_cast<int>(std::llround(2.0 * half_len / hx));
  require(nx >= 4, errc::config, "probe box too small");
  auto grid = std::make_shared<const TubeGrid>(-half_len, half_len, nx, ny);

  GridMap map;
  map.grid = grid;
  map.active_lines.resize(grid->n_lines());
  std::iota(map.active_lines.begin(), map.active_lines.end(), 1);

  GapCountReport rep;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const PotentialSampler& w = ensemble[i];
    Vec pot(map.dim());
    for (std::size_t rr = 0; rr < map.active_lines.size(); ++rr) {
      double x = grid->x(map.active_lines[rr]);
      for (int j = 0; j < ny; ++j) {
        pot[static_cast<int>(rr) * ny + j] = w(x, grid->y(j));
      }
    }
    DiscreteOperator op = assemble_with_potential(grid, pot);
    InertiaEngine eng(op);
    if (eng.count_window(a, b) != 0) {
      rep.counts.push_back(-1);
      rep.skipped.push_back(static_cast<int>(i));
      continue;
    }
    DiscreteOperator cut = insert_dirichlet_cut(op, cut_x);
    InertiaEngine engc(cut);
    long c = engc.count_window(a, b);
    rep.counts.push_back(c);
    rep.max_count = std::max(rep.max_count, c);
  }
  return rep;
}

SpectralShiftReport spectral_shift_probe(const DiscreteOperator& op_t,
                                         const DiscreteOperator& op_s, double E) {
  require(op_t.map.has_value() && op_s.map.has_value(), errc::invalid_argument,
          "operators need grid maps");
  // Structural form order: S must be T with additional Dirichlet lines.
  std::vector<int> idx = embedding_indices(*op_s.map, *op_t.map);

  DenseResult dt = dense_spectrum(op_t, false, kDenseCap);
  DenseResult ds = dense_spectrum(op_s, false, kDenseCap);

  SpectralShiftReport rep;
  rep.dist = std::numeric_limits<double>::infinity();
  for (double v : dt.values) {
    rep.dist = std::min(rep.dist, std::abs(v - E));
    if (v < E) ++rep.count_t;
  }
  for (double v : ds.values) {
    if (v < E) ++rep.count_s;
  }
  require(rep.dist > 1e-10 * std::max(1.0, dt.norm_bound), errc::domain,
          "probe energy sits on the spectrum of the reference operator");

  double lam_min = dt.values.empty() ? 0.0 : dt.values.front();
  rep.shift = std::max(0.0, 1.0 - lam_min);

  Mat inv_t = dense_shifted_inverse(op_t, rep.shift);
  Mat inv_s = dense_shifted_inverse(op_s, rep.shift);
  for (int j = 0; j < op_s.dim; ++j) {
    for (int i = 0; i < op_s.dim; ++i) {
      inv_t(idx[i], idx[j]) -= inv_s(i, j);
    }
  }
  rep.hs_norm = inv_t.norm();
  rep.rhs = static_cast<double>(rep.count_t) - rep.hs_norm * rep.hs_norm / (rep.dist * rep.dist);
  rep.holds = static_cast<double>(rep.count_s) >= rep.rhs - 1e-9;
  return rep;
}

std::vector<CombesThomasProbe> combes_thomas_probe(const DiscreteOperator& op,
                                                   double lambda,
                                                   const std::vector<int>& k_list,
                                                   double center) {
  require(op.map.has_value(), errc::invalid_argument, "operator needs a grid map");
  require(op.lowrank.empty(), errc::invalid_argument,
          "off-diagonal decay probe expects a plain stencil operator");
  {
    InertiaEngine eng(op);
    double d = 1e-8 * std::max(1.0, eng.norm_bound());
    require(eng.count_window(lambda - d, lambda + d) == 0, errc::domain,
            "probe energy is numerically on the spectrum");
  }
  BandLU lu(op.stencil, op.bandwidth, lambda);
  const GridMap& map = *op.map;
  const int ny = map.ny();
  const int nlines = static_cast<int>(map.active_lines.size());

  std::vector<CombesThomasProbe> out;
  std::vector<double> fit_k, fit_log;
  for (int k : k_list) {
    require(k > 0, errc::invalid_argument, "probe scales must be positive");
    // 0/1 masks per line: inner = |x| <= k, outer = |x| > 2k.
    std::vector<char> inner(nlines), outer(nlines);
    bool has_inner = false, has_outer = false;
    for (int r = 0; r < nlines; ++r) {
      double d = std::abs(map.grid->x(map.active_lines[r]) - center);
      inner[r] = d <= k + 1e-9;
      outer[r] = d > 2.0 * k + 1e-9;
      has_inner = has_inner || inner[r];
      has_outer = has_outer || outer[r];
    }
    auto mask = [&](Vec& v, const std::vector<char>& m) {
      for (int r = 0; r < nlines; ++r) {
        if (!m[r]) v.segment(r * ny, ny).setZero();
      }
    };
    double norm = 0.0;
    if (has_inner && has_outer) {
      // Power iteration on B = M_k R M_out R M_k (symmetric PSD); the top
      // eigenvalue is the squared block norm.
      rng_engine rng = make_rng(0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(k));
      std::normal_distribution<double> gauss(0.0, 1.0);
      Vec v(op.dim);
      for (int i = 0; i < op.dim; ++i) v[i] = gauss(rng);
      mask(v, inner);
      double nv = v.norm();
      require(nv > 0, errc::internal, "empty start vector");
      v /= nv;
      double prev = 0.0;
      for (int it = 0; it < 300; ++it) {
        Vec w = lu.solve(v);
        mask(w, outer);
        w = lu.solve(w);
        mask(w, inner);
        double nw = w.norm();
        if (nw == 0.0) {
          prev = 0.0;
          break;
        }
        v = w / nw;
        if (it > 2 && std::abs(nw - prev) <= 1e-12 * std::max(1.0, nw)) {
          prev = nw;
          break;
        }
        prev = nw;
      }
      norm = std::sqrt(prev);
    }
    CombesThomasProbe p;
    p.lambda = lambda;
    p.k = k;
    p.measured_norm = norm;
    out.push_back(p);
    if (norm > 1e-14) {
      fit_k.push_back(static_cast<double>(k));
      fit_log.push_back(std::log(norm));
    }
  }
  LineFit line = fit_line(fit_k, fit_log);
  double eps0 = fit_k.size() >= 2 ? -line.slope : 0.0;
  for (auto& p : out) p.eps0 = eps0;
  return out;
}

}  // namespace gapflow
