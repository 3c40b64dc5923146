#include "core/gap_engine.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace gapflow {

namespace {

constexpr double kSnapTol = 1e-9;

long snapped_steps(double len, double hx, const char* what) {
  long k = std::llround(len / hx);
  require(std::abs(k * hx - len) <= kSnapTol * std::max(1.0, std::abs(len)), errc::config,
          strf("%s = %.17g is not a multiple of the grid step %.17g", what, len, hx));
  return k;
}

GridMap full_map(const std::shared_ptr<const TubeGrid>& grid) {
  GridMap m;
  m.grid = grid;
  m.active_lines.resize(grid->n_lines());
  std::iota(m.active_lines.begin(), m.active_lines.end(), 1);
  return m;
}

Vec sample_nodes(const GridMap& map, const std::function<double(double, double)>& f) {
  Vec v(map.dim());
  const int ny = map.ny();
  for (std::size_t r = 0; r < map.active_lines.size(); ++r) {
    double x = map.grid->x(map.active_lines[r]);
    for (int j = 0; j < ny; ++j) v[static_cast<int>(r) * ny + j] = f(x, map.grid->y(j));
  }
  return v;
}

// Orthonormal basis of the selected eigenvector columns.
Mat orthonormal_columns(const Mat& vectors, const std::vector<int>& cols) {
  Mat v(vectors.rows(), cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) v.col(k) = vectors.col(cols[k]);
  Eigen::HouseholderQR<Mat> qr(v);
  Mat q = qr.householderQ() * Mat::Identity(v.rows(), v.cols());
  return q;
}

}  // namespace

double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  double a = std::exp(-1.0 / u);
  double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

double CutoffProfile::chi_plus(double x) const { return smooth_step(4.0 * (x / n - 0.5)); }
double CutoffProfile::chi_minus(double x) const { return chi_plus(-x); }
double CutoffProfile::phi(double x) const {
  return 1.0 - smooth_step(4.0 * (std::abs(x) / n - 0.25));
}
double CutoffProfile::psi(double x) const { return 1.0 - phi(x); }
double CutoffProfile::psi_plus(double x) const { return x >= 0.0 ? psi(x) : 0.0; }
double CutoffProfile::psi_minus(double x) const { return x <= 0.0 ? psi(x) : 0.0; }

GapSpec make_gap_spec(double E, const GapInterval& gap) {
  require(gap.hi > gap.lo, errc::invalid_argument, "gap interval is empty");
  require(E > gap.lo && E < gap.hi, errc::invalid_argument,
          strf("target energy %.17g lies outside the gap (%.17g, %.17g)", E, gap.lo, gap.hi));
  double dist = std::min(E - gap.lo, gap.hi - E);
  GapSpec s;
  s.a0 = gap.lo;
  s.b0 = gap.hi;
  s.E = E;
  s.alpha = 0.5 * dist;
  s.beta = std::min(2.0 * s.alpha / 3.0, dist / 3.0);
  return s;
}

// ---------------------------------------------------------------------------
// Spectral location

namespace {

// Merge possibly-overlapping intervals into a disjoint ascending list.
std::vector<std::pair<double, double>> merge_intervals(
    std::vector<std::pair<double, double>> iv) {
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<double, double>> out;
  for (const auto& b : iv) {
    if (!out.empty() && b.first <= out.back().second + 1e-12) {
      out.back().second = std::max(out.back().second, b.second);
    } else {
      out.push_back(b);
    }
  }
  return out;
}

struct CountingBox {
  std::shared_ptr<const TubeGrid> grid;
  GridMap map;
  DiscreteOperator op;
  double half = 0.0;
};

CountingBox make_counting_box(const PotentialSampler& v, double half, double hx, int ny) {
  CountingBox box;
  int nx = static_cast<int>(std::llround(2.0 * half / hx));
  box.grid = std::make_shared<const TubeGrid>(-half, half, nx, ny);
  box.map = full_map(box.grid);
  Vec pot = sample_nodes(box.map, [&v](double x, double y) { return v(x, y); });
  box.op = assemble_with_potential(box.grid, pot);
  box.half = half;
  return box;
}

// Counting-based location: an energy cell is spectrum-free when doubling the
// box does not increase the local eigenvalue count (bulk states multiply with
// volume, boundary states do not), and whatever states do live there cling to
// the artificial Dirichlet walls.
BandStructure counted_spectrum(const PotentialSampler& v, const GapSearchPolicy& policy) {
  double xh = policy.x_half;
  if (v.x_lo > -1e290 || v.x_hi < 1e290) {
    xh = std::min(xh, 0.5 * std::min(-v.x_lo, v.x_hi));
  }
  require(xh >= 2.0, errc::domain,
          "potential validity range is too small for counting-based spectral location");
  double half = std::max<long>(1, std::llround(xh / policy.hx)) * policy.hx;

  CountingBox small = make_counting_box(v, half, policy.hx, policy.ny);
  CountingBox big = make_counting_box(v, 2.0 * half, policy.hx, policy.ny);
  InertiaEngine eng_small(small.op);
  InertiaEngine eng_big(big.op);

  const int m = std::max(200, policy.scan_points);
  const double step = (policy.hi - policy.lo) / m;
  const double w = policy.density_halfwidth;

  std::vector<char> gaplike(m + 1, 0);
  for (int j = 0; j <= m; ++j) {
    double e = policy.lo + j * step;
    long da = eng_small.count_window(e - w, e + w);
    long db = eng_big.count_window(e - w, e + w);
    gaplike[j] = (db - da <= 1) && (db <= policy.max_window_states);
  }

  // Candidate gaps = maximal gap-like runs; reject any whose resident states
  // are not wall-localized on the big box.
  for (int j = 0; j <= m;) {
    if (!gaplike[j]) {
      ++j;
      continue;
    }
    int j0 = j;
    while (j < m && gaplike[j + 1]) ++j;
    double ga = policy.lo + j0 * step;
    double gb = policy.lo + j * step;
    bool ok = gb > ga;
    if (ok) {
      long resid = eng_big.count_window(ga, gb);
      if (resid > policy.max_window_states) {
        ok = false;
      } else if (resid > 0) {
        WindowOptions wo;
        wo.max_pairs = 2 * policy.max_window_states;
        WindowResult ws = window_spectrum(big.op, ga, gb, wo);
        double lb = -big.half, rb = big.half;
        for (int c = 0; c < ws.vectors.cols() && ok; ++c) {
          Vec u = ws.vectors.col(c);
          double wall = x_mass_fraction(u, big.map, lb, lb + policy.edge_margin) +
                        x_mass_fraction(u, big.map, rb - policy.edge_margin, rb);
          if (wall < policy.edge_mass) ok = false;
        }
      }
    }
    if (!ok) {
      for (int q = j0; q <= j; ++q) gaplike[q] = 0;
    }
    ++j;
  }

  // Bands = maximal non-gap-like runs, widened by the probe halfwidth.
  BandStructure s;
  std::vector<std::pair<double, double>> bands;
  for (int j = 0; j <= m;) {
    if (gaplike[j]) {
      ++j;
      continue;
    }
    int j0 = j;
    while (j < m && !gaplike[j + 1]) ++j;
    double lo = std::max(policy.lo, policy.lo + j0 * step - w);
    double hi = std::min(policy.hi, policy.lo + j * step + w);
    bands.push_back({lo, hi});
    ++j;
  }
  s.bands = merge_intervals(std::move(bands));
  return s;
}

}  // namespace

BandStructure crystal_spectrum(const PotentialSampler& v, const GapSearchPolicy& policy) {
  require(policy.hi > policy.lo, errc::config, "spectral search range is empty");
  require(policy.hx > 0.0, errc::config, "spectral search needs a positive grid step");
  require(policy.ny >= 4, errc::config, "spectral search needs ny >= 4");
  if (v.y_independent && v.x_period > 0.0) {
    double reps = std::round(1.0 / v.x_period);
    if (reps >= 1.0 && std::abs(reps * v.x_period - 1.0) <= 1e-9) {
      PotentialSampler vc = v;
      auto profile = [vc](double x) { return vc(x, 0.0); };
      return tube_bands(profile, policy.hx, policy.ny, 1.0 / policy.ny, policy.lo, policy.hi);
    }
  }
  return counted_spectrum(v, policy);
}

std::vector<GapInterval> locate_gap(const DislocationFamily& family,
                                    const GapSearchPolicy& policy) {
  BandStructure b1 = crystal_spectrum(family.v1, policy);
  BandStructure b2 = crystal_spectrum(family.v2, policy);
  std::vector<std::pair<double, double>> all = b1.bands;
  all.insert(all.end(), b2.bands.begin(), b2.bands.end());
  auto merged = merge_intervals(std::move(all));

  // Only interior holes count: below the lowest located band there is nothing
  // to bind to, and above the highest one nothing is certified.
  std::vector<GapInterval> gaps;
  for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
    double lo = merged[i].second;
    double hi = merged[i + 1].first;
    if (hi - lo >= policy.min_gap) gaps.push_back({lo, hi});
  }
  return gaps;
}

// ---------------------------------------------------------------------------
// Edge corrections

HalfEdgeResult realize_half_edge(EdgeSide side, double n, const DislocationFamily& family,
                                 const GapSpec& gap, double hx, int ny,
                                 const HalfEdgeOptions& opts) {
  require(hx > 0.0 && ny >= 4, errc::config, "half-edge solve needs hx > 0 and ny >= 4");
  require(n >= 8.0 - kSnapTol, errc::config,
          "edge scale n must be at least 8 so the cutoff clears the interface zone");
  require(opts.far_pad >= 2.0, errc::config, "far_pad must be at least 2");
  require(gap.beta > 0.0, errc::invalid_argument, "gap spec has no width");
  long nsteps = snapped_steps(n, hx, "edge scale n");
  long far0 = std::llround(opts.far_pad / hx);

  const PotentialSampler& pot = (side == EdgeSide::plus) ? family.v1 : family.v2;
  // Window top gets a hair of padding so states numerically at the edge are
  // swept into the correction (they get pushed clear); the bottom stays exact
  // because a state just below it must stay out (it would be pushed inside).
  const double wlo = gap.window_lo();
  const double whi = gap.window_hi() + 1e-7 * gap.beta;

  for (int j = 0; j <= opts.max_edge_retries; ++j) {
    double far = (far0 + j) * hx;
    double x_min = (side == EdgeSide::plus) ? -far : -static_cast<double>(nsteps) * hx;
    double x_max = (side == EdgeSide::plus) ? static_cast<double>(nsteps) * hx : far;
    require(pot.x_lo <= x_min && pot.x_hi >= x_max, errc::domain,
            "potential validity range does not cover the half-edge truncation");
    int nx = static_cast<int>(std::llround((x_max - x_min) / hx));
    auto grid = std::make_shared<const TubeGrid>(x_min, x_max, nx, ny);
    GridMap map = full_map(grid);
    Vec vv = sample_nodes(map, [&pot](double x, double y) { return pot(x, y); });
    DiscreteOperator op = assemble_with_potential(grid, vv);

    WindowOptions wo;
    wo.seed = opts.seed + static_cast<std::uint64_t>(j);
    wo.residual_tol = 1e-12;
    WindowResult ws = window_spectrum(op, wlo, whi, wo);

    double mid = 0.5 * (x_min + x_max);
    std::vector<int> genuine;
    int artifacts = 0;
    bool ambiguous = false;
    for (int c = 0; c < ws.vectors.cols(); ++c) {
      Vec u = ws.vectors.col(c);
      double phys = (side == EdgeSide::plus) ? x_mass_fraction(u, map, mid, x_max)
                                             : x_mass_fraction(u, map, x_min, mid);
      if (phys >= opts.loc_fraction) {
        genuine.push_back(c);
      } else if (1.0 - phys >= opts.loc_fraction) {
        ++artifacts;
      } else {
        ambiguous = true;
        break;
      }
    }
    if (ambiguous) continue;  // move the artificial wall one step and retry

    HalfEdgeResult res;
    res.side = side;
    res.n = nsteps * hx;
    res.map = map;
    res.values = ws.values;
    res.vectors = ws.vectors;
    res.genuine = genuine;
    res.artifacts = artifacts;
    res.retries = j;
    res.window_lo = wlo;
    res.window_hi = whi;
    res.norm_bound = ws.norm_bound;
    return res;
  }
  fail(errc::numeric,
       strf("half-edge states would not separate from the artificial wall after %d retries",
            opts.max_edge_retries + 1));
}

CorrectionTerm build_correction(EdgeSide side, double n, const DislocationFamily& family,
                                const GapSpec& gap, double hx, int ny,
                                const HalfEdgeOptions& opts) {
  HalfEdgeResult h = realize_half_edge(side, n, family, gap, hx, ny, opts);
  int j_all = static_cast<int>(h.values.size());
  int j_gen = static_cast<int>(h.genuine.size());
  require(j_gen <= opts.rank_cap, errc::capacity,
          strf("%d edge states in the energy window at scale n=%g; "
               "anomalous for a spectral-gap window",
               j_gen, h.n));

  // Pushing every window state up by 4*beta must leave the window empty:
  // the operator commutes with its own spectral projector, so on the
  // truncation this is exact up to eigensolve accuracy.
  const PotentialSampler& pot = (side == EdgeSide::plus) ? family.v1 : family.v2;
  Vec vv = sample_nodes(h.map, [&pot](double x, double y) { return pot(x, y); });
  DiscreteOperator cleared = assemble_with_potential(h.map.grid, vv);
  for (int c = 0; c < j_all; ++c) {
    cleared.lowrank.push_back({h.vectors.col(c), 4.0 * gap.beta});
  }
  {
    InertiaEngine eng(cleared);
    double margin = 1e-4 * gap.beta;
    long leftover = eng.count_window(gap.window_lo() + margin, gap.window_hi() - margin);
    require(leftover == 0, errc::numeric,
            strf("window clearing failed on the half-edge truncation: %ld states left "
                 "in (%.17g, %.17g)",
                 leftover, gap.window_lo() + margin, gap.window_hi() - margin));
  }

  CutoffProfile cut{h.n};
  CorrectionTerm term;
  term.side = side;
  term.n = h.n;
  term.hx = hx;
  term.ny = ny;
  term.rank = j_gen;
  term.strength = 4.0 * gap.beta;
  term.artifacts = h.artifacts;
  term.retries = h.retries;
  for (int c : h.genuine) term.eigenvalues.push_back(h.values[c]);

  if (j_gen == 0) {
    term.x_first = 0.0;
    term.blocks = Mat(0, 0);
    term.cut_projection_error = 0.0;
    return term;
  }

  Mat v = orthonormal_columns(h.vectors, h.genuine);

  // chi-masked copies; the mask is y-independent, so scale whole lines.
  auto chi_at = [&](double x) {
    return side == EdgeSide::plus ? cut.chi_plus(x) : cut.chi_minus(x);
  };
  Mat cv = v;
  std::vector<int> kept;  // line ranks with a nonvanishing mask
  for (std::size_t r = 0; r < h.map.active_lines.size(); ++r) {
    double c = chi_at(h.map.grid->x(h.map.active_lines[r]));
    cv.middleRows(static_cast<int>(r) * ny, ny) *= c;
    if (c > 0.0) kept.push_back(static_cast<int>(r));
  }
  require(!kept.empty(), errc::internal, "cutoff support missed the half-edge grid");
  for (std::size_t i = 1; i < kept.size(); ++i) {
    require(kept[i] == kept[i - 1] + 1, errc::internal, "cutoff support is not contiguous");
  }

  // || chi P chi - P ||: both ranges live in span{v, chi v}.
  {
    Mat w(v.rows(), 2 * j_gen);
    w.leftCols(j_gen) = v;
    w.rightCols(j_gen) = cv;
    Eigen::HouseholderQR<Mat> qr(w);
    Mat q = qr.householderQ() * Mat::Identity(w.rows(), w.cols());
    Mat a = q.transpose() * v;
    Mat b = q.transpose() * cv;
    Mat s = b * b.transpose() - a * a.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(s);
    term.cut_projection_error = es.eigenvalues().cwiseAbs().maxCoeff();
  }

  term.x_first = h.map.grid->x(h.map.active_lines[kept.front()]);
  term.blocks = Mat(static_cast<int>(kept.size()) * ny, j_gen);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    term.blocks.middleRows(static_cast<int>(i) * ny, ny) = cv.middleRows(kept[i] * ny, ny);
  }
  return term;
}

std::vector<LowRankTerm> CorrectionTerm::materialize(const GridMap& box,
                                                     double translate) const {
  if (rank == 0) return {};
  require(box.grid != nullptr, errc::invalid_argument, "box has no grid");
  require(box.ny() == ny, errc::invalid_argument, "correction and box disagree on ny");
  require(std::abs(box.grid->hx - hx) <= 1e-12 * hx, errc::invalid_argument,
          "correction and box disagree on the grid step");
  int lines = stored_lines();
  std::vector<int> ranks(lines);
  for (int i = 0; i < lines; ++i) {
    double xt = x_first + i * hx + translate;
    int line = static_cast<int>(std::llround((xt - box.grid->x_min) / hx));
    require(line >= 1 && line < box.grid->nx &&
                std::abs(box.grid->x(line) - xt) <= kSnapTol,
            errc::invalid_argument, "correction support does not land on box grid lines");
    int r = box.rank_of_line(line);
    require(r >= 0, errc::invalid_argument, "correction support crosses a Dirichlet cut");
    ranks[i] = r;
  }
  std::vector<LowRankTerm> out;
  out.reserve(rank);
  for (int k = 0; k < rank; ++k) {
    Vec u = Vec::Zero(box.dim());
    for (int i = 0; i < lines; ++i) {
      for (int j = 0; j < ny; ++j) u[box.index(ranks[i], j)] = blocks(i * ny + j, k);
    }
    out.push_back({std::move(u), strength});
  }
  return out;
}

DiscreteOperator assemble_approximant(double n, double t, const DislocationFamily& family,
                                      const GapSpec& gap, double hx, int ny,
                                      const CorrectionTerm& plus,
                                      const CorrectionTerm& minus) {
  require(plus.side == EdgeSide::plus && minus.side == EdgeSide::minus,
          errc::invalid_argument, "corrections passed on the wrong sides");
  require(std::abs(plus.n - n) <= kSnapTol && std::abs(minus.n - n) <= kSnapTol,
          errc::invalid_argument, "corrections were built at a different edge scale");
  require(t >= 0.0, errc::invalid_argument, "dislocation parameter must be nonnegative");
  require(n >= 8.0 - kSnapTol, errc::config, "box scale n must be at least 8");
  long ns = snapped_steps(n, hx, "box scale n");
  long ts = snapped_steps(t, hx, "dislocation parameter t");
  (void)gap;

  int nx = static_cast<int>(2 * ns + ts);
  auto grid = std::make_shared<const TubeGrid>(-(ns + ts) * hx, ns * hx, nx, ny);
  DiscreteOperator op = assemble_hamiltonian(grid, family, ts * hx);
  auto lp = plus.materialize(*op.map, 0.0);
  auto lm = minus.materialize(*op.map, -ts * hx);
  op.lowrank.insert(op.lowrank.end(), lp.begin(), lp.end());
  op.lowrank.insert(op.lowrank.end(), lm.begin(), lm.end());
  return op;
}

long interface_state_count(double t, const DislocationFamily& family, double E, double hx,
                           int ny) {
  long ts = snapped_steps(t, hx, "segment length t");
  require(ts >= 2, errc::invalid_argument, "segment needs at least one interior line");
  // The inserted-material block (-t, 0) with the sliding medium is unitarily
  // a fixed-medium segment (0, t): translate x by t.
  auto grid = std::make_shared<const TubeGrid>(0.0, ts * hx, static_cast<int>(ts), ny);
  GridMap map = full_map(grid);
  Vec pot = sample_nodes(map, [&family](double x, double y) { return family.v2(x, y); });
  DiscreteOperator op = assemble_with_potential(grid, pot);
  return inertia_count(op, E).n_below;
}

DecouplingReport decoupling_report(double n, double t, const DislocationFamily& family,
                                   const GapSpec& gap, double hx, int ny,
                                   const CorrectionTerm& plus, const CorrectionTerm& minus) {
  long ns = snapped_steps(n, hx, "box scale n");
  long ts = snapped_steps(t, hx, "dislocation parameter t");
  DecouplingReport rep;
  rep.n = ns * hx;
  rep.t = ts * hx;
  rep.E = gap.E;
  rep.c0 = ny;

  DiscreteOperator full_t = assemble_approximant(n, t, family, gap, hx, ny, plus, minus);
  rep.n_full_t = inertia_count(full_t, gap.E).n_below;

  DiscreteOperator full_0 = assemble_approximant(n, 0.0, family, gap, hx, ny, plus, minus);
  rep.n_full_0 = inertia_count(full_0, gap.E).n_below;

  DiscreteOperator dec_t = insert_dirichlet_cut(full_t, 0.0);
  if (ts > 0) dec_t = insert_dirichlet_cut(dec_t, -rep.t);
  rep.n_dec_t = inertia_count(dec_t, gap.E).n_below;

  DiscreteOperator dec_0 = insert_dirichlet_cut(full_0, 0.0);
  rep.n_dec_0 = inertia_count(dec_0, gap.E).n_below;

  // Block 1: (-n-t, -t) carries the sliding medium and the translated minus
  // correction; on the snapped grid it is an index shift of its t=0 self.
  {
    auto grid = std::make_shared<const TubeGrid>(-(ns + ts) * hx, -ts * hx,
                                                 static_cast<int>(2 * ns), ny);
    DiscreteOperator h1 = assemble_hamiltonian(grid, family, rep.t);
    auto lr = minus.materialize(*h1.map, -rep.t);
    h1.lowrank.insert(h1.lowrank.end(), lr.begin(), lr.end());
    rep.n_block1 = inertia_count(h1, gap.E).n_below;
  }
  // Block 2: the inserted segment (-t, 0), no corrections reach it.
  if (ts >= 2) {
    auto grid = std::make_shared<const TubeGrid>(-ts * hx, 0.0, static_cast<int>(ts), ny);
    DiscreteOperator h2 = assemble_hamiltonian(grid, family, rep.t);
    rep.n_block2 = inertia_count(h2, gap.E).n_below;
  } else {
    rep.n_block2 = 0;  // no interior lines
  }
  // Block 3: (0, n) with the fixed medium and the plus correction; does not
  // depend on t at all.
  {
    auto grid =
        std::make_shared<const TubeGrid>(0.0, ns * hx, static_cast<int>(2 * ns), ny);
    DiscreteOperator h3 = assemble_hamiltonian(grid, family, rep.t);
    auto lr = plus.materialize(*h3.map, 0.0);
    h3.lowrank.insert(h3.lowrank.end(), lr.begin(), lr.end());
    rep.n_block3 = inertia_count(h3, gap.E).n_below;
  }

  rep.blocks_sum_to_dec = rep.n_block1 + rep.n_block2 + rep.n_block3 == rep.n_dec_t;
  rep.translation_identity = rep.n_block1 + rep.n_block3 == rep.n_dec_0;
  rep.full_ge_dec = rep.n_full_t >= rep.n_dec_t;
  rep.sandwich_at_zero =
      rep.n_full_0 >= rep.n_dec_0 && rep.n_dec_0 >= rep.n_full_0 - rep.c0;
  rep.chain = rep.n_full_t >= rep.n_full_0 - rep.c0 + rep.n_block2;
  return rep;
}

// ---------------------------------------------------------------------------
// Dislocation sweep

namespace {

// Bracket family for crossing refinement: domain and corrections frozen at
// the right bracket end, only the potential slides. At t = t_right it equals
// the marching approximant exactly; in between it is analytic in t whenever
// the media are, so eigenvalue counts change only at actual crossings.
struct FrozenFamily {
  std::shared_ptr<const TubeGrid> grid;
  GridMap map;
  const DislocationFamily* family = nullptr;
  std::vector<LowRankTerm> lowrank;

  DiscreteOperator at(double t) const {
    Vec pot = sample_nodes(map, [this, t](double x, double y) {
      return family->value(t, x, y);
    });
    DiscreteOperator op = assemble_with_potential(map.grid, pot);
    op.lowrank = lowrank;
    return op;
  }

  long count_below(double t, double e) const { return inertia_count(at(t), e).n_below; }
};

FrozenFamily make_frozen(double n, double t_right, const DislocationFamily& family,
                         double hx, int ny, const CorrectionTerm& plus,
                         const CorrectionTerm& minus) {
  long ns = std::llround(n / hx);
  long ts = std::llround(t_right / hx);
  FrozenFamily f;
  int nx = static_cast<int>(2 * ns + ts);
  f.grid = std::make_shared<const TubeGrid>(-(ns + ts) * hx, ns * hx, nx, ny);
  f.map = full_map(f.grid);
  f.family = &family;
  f.lowrank = plus.materialize(f.map, 0.0);
  auto lm = minus.materialize(f.map, -ts * hx);
  f.lowrank.insert(f.lowrank.end(), lm.begin(), lm.end());
  return f;
}

// Window eigenvalues of the frozen family at tau, nearest first; widens the
// window geometrically if the first attempt comes back empty.
std::pair<double, double> nearest_window_value(const FrozenFamily& f, double tau, double e,
                                               double beta, std::uint64_t seed) {
  DiscreteOperator op = f.at(tau);
  double w = 1e-3 * beta;
  for (int tries = 0; tries < 6; ++tries) {
    WindowOptions wo;
    wo.seed = seed;
    wo.residual_tol = 1e-12;
    WindowResult ws = window_spectrum(op, e - w, e + w, wo);
    if (!ws.values.empty()) {
      double best = ws.values.front();
      for (double v : ws.values) {
        if (std::abs(v - e) < std::abs(best - e)) best = v;
      }
      return {best, std::abs(best - e)};
    }
    w *= 10.0;
    if (w > 4.0 * beta) break;
  }
  fail(errc::numeric, strf("no eigenvalue found near E=%.17g at crossing t=%.17g", e, tau));
}

}  // namespace

EigBranch sweep_dislocation(const GapSpec& gap, const DislocationFamily& family, double n,
                            double t_max, double hx, int ny, const SweepOptions& opts) {
  require(t_max >= 0.0, errc::invalid_argument, "t_max must be nonnegative");
  long K = snapped_steps(t_max, hx, "sweep range t_max");
  CorrectionTerm cp = build_correction(EdgeSide::plus, n, family, gap, hx, ny, opts.edge);
  CorrectionTerm cm = build_correction(EdgeSide::minus, n, family, gap, hx, ny, opts.edge);

  EigBranch br;
  br.E = gap.E;
  br.t_grid.resize(K + 1);
  br.counts.assign(K + 1, 0);
  const double wlo = std::max(gap.a0, gap.window_lo());
  const double whi = std::min(gap.b0, gap.window_hi());

  std::vector<std::vector<BranchSample>> samples(K + 1);
  std::vector<long> counts(K + 1, 0);
  int threads = resolve_threads(opts.threads);
  parallel_for(static_cast<std::size_t>(K + 1), threads, [&](std::size_t k) {
    double t = static_cast<double>(k) * hx;
    DiscreteOperator op = assemble_approximant(n, t, family, gap, hx, ny, cp, cm);
    InertiaEngine eng(op);
    counts[k] = eng.count_below(gap.E).n_below;
    if (eng.count_window(wlo, whi) > 0) {
      WindowOptions wo;
      wo.seed = opts.edge.seed + 1000 + k;
      wo.residual_tol = 1e-12;
      WindowResult ws = window_spectrum(op, wlo, whi, wo);
      double rmax = 0.0;
      for (double r : ws.residuals) rmax = std::max(rmax, r);
      double tol = std::max(1e-8, 10.0 * rmax);
      std::size_t i = 0;
      while (i < ws.values.size()) {
        std::size_t i0 = i;
        double acc = 0.0;
        while (i < ws.values.size() &&
               (i == i0 || ws.values[i] - ws.values[i - 1] <= tol)) {
          acc += ws.values[i];
          ++i;
        }
        BranchSample s;
        s.t = t;
        s.eigenvalue = acc / static_cast<double>(i - i0);
        s.multiplicity = static_cast<int>(i - i0);
        samples[k].push_back(s);
      }
    }
  });
  for (long k = 0; k <= K; ++k) {
    br.t_grid[k] = static_cast<double>(k) * hx;
    br.counts[k] = counts[k];
    br.samples.insert(br.samples.end(), samples[k].begin(), samples[k].end());
  }

  // A state already sitting at E at t = 0 counts as a crossing at 0.
  for (const BranchSample& s : samples[0]) {
    if (std::abs(s.eigenvalue - gap.E) <= opts.refine_tol) {
      br.crossings.push_back({0.0, s.eigenvalue, std::abs(s.eigenvalue - gap.E),
                              s.multiplicity});
      br.crossing_params.push_back(0.0);
      break;
    }
  }

  // Count jumps, refined inside the bracket's frozen family. The marching
  // counts themselves are not comparable across t (the domain grows), so
  // every bracket gets one frozen count at its left end; the right end
  // coincides with the marching operator, whose count we already have.
  for (long k = 0; k < K; ++k) {
    double ta = static_cast<double>(k) * hx;
    double tb = static_cast<double>(k + 1) * hx;
    FrozenFamily froz = make_frozen(n, tb, family, hx, ny, cp, cm);
    long na = froz.count_below(ta, gap.E);
    long nb = counts[k + 1];
    if (nb == na) continue;

    long jump = nb - na;
    double lo = ta, hi = tb;
    long nlo = na;
    while (hi - lo > 1e-11) {
      double mid = 0.5 * (lo + hi);
      long nm = froz.count_below(mid, gap.E);
      if (nm != nlo) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    double tau = 0.5 * (lo + hi);
    auto [lam, resid] =
        nearest_window_value(froz, tau, gap.E, gap.beta, opts.edge.seed + 7777 + k);
    br.crossings.push_back({tau, lam, resid, jump});
    br.crossing_params.push_back(tau);
  }
  return br;
}

LocalizationProfile localization_profile(const Vec& u, const GridMap& map,
                                         double interface_x) {
  require(u.size() == map.dim(), errc::invalid_argument, "vector does not match the grid");
  double total = u.squaredNorm();
  require(total > 0.0, errc::invalid_argument, "cannot profile the zero vector");
  double dmax = 0.0;
  for (int line : map.active_lines) {
    dmax = std::max(dmax, std::abs(map.grid->x(line) - interface_x));
  }
  int mmax = static_cast<int>(std::ceil(dmax));
  LocalizationProfile prof;
  prof.m0 = std::numeric_limits<double>::infinity();
  const int ny = map.ny();
  for (int m = 0; m <= mmax; ++m) {
    double out = 0.0;
    for (std::size_t r = 0; r < map.active_lines.size(); ++r) {
      if (std::abs(map.grid->x(map.active_lines[r]) - interface_x) <= m) continue;
      out += u.segment(static_cast<int>(r) * ny, ny).squaredNorm();
    }
    double tail = std::sqrt(out / total);
    prof.m.push_back(m);
    prof.tail.push_back(tail);
    if (std::isinf(prof.m0) && tail <= 0.25) prof.m0 = m;
  }
  return prof;
}

double x_mass_fraction(const Vec& u, const GridMap& map, double x_lo, double x_hi) {
  require(u.size() == map.dim(), errc::invalid_argument, "vector does not match the grid");
  double total = u.squaredNorm();
  if (total <= 0.0) return 0.0;
  double in = 0.0;
  const int ny = map.ny();
  for (std::size_t r = 0; r < map.active_lines.size(); ++r) {
    double x = map.grid->x(map.active_lines[r]);
    if (x >= x_lo - kSnapTol && x <= x_hi + kSnapTol) {
      in += u.segment(static_cast<int>(r) * ny, ny).squaredNorm();
    }
  }
  return in / total;
}

}  // namespace gapflow
