#include "core/eigensolve.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gapflow {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_band_capacity(const DiscreteOperator& op) {
  double bytes = 8.0 * (op.bandwidth + 1.0) * op.dim;
  require(bytes <= 3.2e9, errc::capacity,
          strf("band reduction needs %.2g bytes (dim %d, bandwidth %d); over capacity",
               bytes, op.dim, op.bandwidth));
}

// Inertia of a small symmetric matrix: (n_neg, n_zero) with a relative tie
// tolerance.
std::pair<int, int> small_sym_inertia(const Mat& s) {
  DenseEig eig = dense_sym_eigen(s, false);
  double scale = 0.0;
  for (double v : eig.values) scale = std::max(scale, std::abs(v));
  double tol = scale * 1e-12;
  int neg = 0, zero = 0;
  for (double v : eig.values) {
    if (v < -tol) {
      ++neg;
    } else if (v <= tol) {
      ++zero;
    }
  }
  return {neg, zero};
}

}  // namespace

InertiaEngine::InertiaEngine(const DiscreteOperator& op) : op_(op) {
  check_band_capacity(op);
  band_ = SymBand::from_sparse(op.stencil, op.bandwidth);
  scale_ = op.norm_bound();
  pivot_tol_ = 10.0 * kEps * std::max(scale_, 1.0);
}

long InertiaEngine::count_at(double energy, bool& near_singular, double& min_pivot) const {
  TridiagInertia base = band_count_below(band_, energy, pivot_tol_);
  near_singular = base.near_singular;
  min_pivot = base.min_abs_pivot;
  long total = base.n_below;
  // Live low-rank terms engage the bordered signature identity
  //   n_-(A - E + U C U^T) = n_-(A - E) + n_-(-C^{-1} - U^T (A-E)^{-1} U) - n_-(-C^{-1}).
  std::vector<const LowRankTerm*> live;
  for (const auto& lr : op_.lowrank) {
    if (lr.c != 0.0) live.push_back(&lr);
  }
  if (!live.empty()) {
    const int k = static_cast<int>(live.size());
    BandLU lu(op_.stencil, op_.bandwidth, energy);  // throws on exact singularity
    Mat w(op_.dim, k);
    for (int c = 0; c < k; ++c) w.col(c) = lu.solve(live[static_cast<std::size_t>(c)]->u);
    Mat s(k, k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j <= i; ++j) {
        double v = -live[static_cast<std::size_t>(i)]->u.dot(w.col(j));
        s(i, j) = v;
        s(j, i) = v;
      }
      s(i, i) -= 1.0 / live[static_cast<std::size_t>(i)]->c;
    }
    auto [s_neg, s_zero] = small_sym_inertia(s);
    if (s_zero > 0) near_singular = true;
    int c_pos = 0;
    for (const auto* lr : live) c_pos += lr->c > 0 ? 1 : 0;
    total += s_neg - c_pos;
  }
  return total;
}

InertiaReport InertiaEngine::count_below(double energy) const {
  InertiaReport rep;
  rep.energy = energy;
  rep.lowrank_border = std::any_of(op_.lowrank.begin(), op_.lowrank.end(),
                                   [](const LowRankTerm& lr) { return lr.c != 0.0; });
  double delta = pivot_tol_;
  double e = energy;
  for (int attempt = 0; attempt < 4; ++attempt) {
    bool near_singular = false;
    double min_pivot = 0.0;
    bool solve_failed = false;
    long n = 0;
    try {
      n = count_at(e, near_singular, min_pivot);
    } catch (const error& err) {
      if (err.code() != errc::numeric) throw;
      solve_failed = true;
    }
    if (!solve_failed) {
      rep.min_abs_pivot = min_pivot;
      if (!near_singular || attempt == 3) {
        rep.n_below = n;
        rep.energy_used = e;
        rep.perturbed = rep.perturbed || near_singular;
        return rep;
      }
    }
    require(attempt < 3, errc::numeric,
            strf("inertia count: probe %.17g keeps hitting the spectrum", energy));
    // Probe sits on (or hugs) an eigenvalue: nudge down, escalating.
    rep.perturbed = true;
    e = energy - delta;
    delta *= 10.0;
  }
  fail(errc::internal, "inertia count: unreachable");
}

long InertiaEngine::count_window(double lo, double hi) const {
  require(lo < hi, errc::invalid_argument, "count_window: lo must be below hi");
  return count_below(hi).n_below - count_below(lo).n_below;
}

InertiaReport inertia_count(const DiscreteOperator& op, double energy) {
  return InertiaEngine(op).count_below(energy);
}

DenseResult dense_spectrum(const DiscreteOperator& op, bool want_vectors, int cap) {
  Mat a = op.densify(cap);
  DenseEig eig = dense_sym_eigen(a, want_vectors);
  DenseResult out;
  out.values = std::move(eig.values);
  out.norm_bound = op.norm_bound();
  if (want_vectors) {
    out.vectors = std::move(eig.vectors);
    // Residual invariant, spot-checked on a spread of columns.
    int m = static_cast<int>(out.values.size());
    int stride = std::max(1, m / 8);
    for (int i = 0; i < m; i += stride) {
      Vec r = a.selfadjointView<Eigen::Lower>() * out.vectors.col(i) -
              out.values[static_cast<std::size_t>(i)] * out.vectors.col(i);
      out.max_residual = std::max(out.max_residual, r.norm());
    }
    require(out.max_residual <= 1e-10 * std::max(out.norm_bound, 1.0), errc::numeric,
            strf("dense spectrum residual %.3g exceeds tolerance", out.max_residual));
  }
  return out;
}

namespace {

// Shift-invert application (A + sum c_k u_k u_k^T - sigma)^{-1} via Woodbury
// around a banded LU of A - sigma.
class ShiftInvert {
 public:
  ShiftInvert(const DiscreteOperator& op, double sigma)
      : lu_(op.stencil, op.bandwidth, sigma) {
    std::vector<const LowRankTerm*> live;
    for (const auto& lr : op.lowrank) {
      if (lr.c != 0.0) live.push_back(&lr);
    }
    const int k = static_cast<int>(live.size());
    if (k > 0) {
      u_.resize(lu_.n(), k);
      w_.resize(lu_.n(), k);
      Mat cap(k, k);
      for (int c = 0; c < k; ++c) {
        u_.col(c) = live[static_cast<std::size_t>(c)]->u;
        w_.col(c) = lu_.solve(u_.col(c));
      }
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) cap(i, j) = u_.col(i).dot(w_.col(j));
        cap(i, i) += 1.0 / live[static_cast<std::size_t>(i)]->c;
      }
      cap_lu_ = Eigen::FullPivLU<Mat>(cap);
      require(cap_lu_->isInvertible(), errc::numeric,
              "shift hits an eigenvalue of the low-rank-updated operator");
    }
  }

  Vec apply(const Vec& v) const {
    Vec y = lu_.solve(v);
    if (u_.cols() > 0) y -= w_ * cap_lu_->solve(u_.transpose() * y);
    return y;
  }

 private:
  BandLU lu_;
  Mat u_, w_;
  std::optional<Eigen::FullPivLU<Mat>> cap_lu_;
};

struct SmallTridiagEig {
  std::vector<double> theta;
  Mat s;  // columns are eigenvectors
};

SmallTridiagEig small_tridiag_eig(const std::vector<double>& alpha,
                                  const std::vector<double>& beta) {
  SmallTridiagEig out;
  int m = static_cast<int>(alpha.size());
  out.theta = alpha;
  std::vector<double> e(beta.begin(), beta.end());
  e.resize(m > 0 ? static_cast<std::size_t>(m - 1) : 0, 0.0);
  out.s.resize(m, m);
  lapack_int info = LAPACKE_dstev(LAPACK_COL_MAJOR, 'V', m, out.theta.data(),
                                  e.empty() ? nullptr : e.data(), out.s.data(), std::max(m, 1));
  require(info == 0, errc::numeric, strf("dstev failed with info=%d", static_cast<int>(info)));
  return out;
}

struct KrylovHarvest {
  std::vector<double> lambdas;
  Mat vectors;
};

// One Lanczos pass with full reorthogonalization against both the active
// basis and previously locked vectors. Returns eigenpair candidates of the
// original operator whose shifted-inverse Ritz bound met conv_tol_lambda.
KrylovHarvest lanczos_pass(const ShiftInvert& si, double sigma, int dim, int max_m,
                           double conv_tol_lambda, const Mat& locked, rng_engine& rng) {
  const int budget = std::max(1, std::min(max_m, dim - static_cast<int>(locked.cols())));
  Mat v(dim, budget);
  std::vector<double> alpha, beta;
  alpha.reserve(static_cast<std::size_t>(budget));
  beta.reserve(static_cast<std::size_t>(budget));
  auto orth_against = [&](Vec& w, int cols) {
    for (int pass = 0; pass < 2; ++pass) {
      if (locked.cols() > 0) w -= locked * (locked.transpose() * w);
      if (cols > 0) w -= v.leftCols(cols) * (v.leftCols(cols).transpose() * w);
    }
  };

  std::normal_distribution<double> gauss;
  Vec w(dim);
  for (int i = 0; i < dim; ++i) w(i) = gauss(rng);
  orth_against(w, 0);
  double nw = w.norm();
  require(nw > 1e-300, errc::numeric, "lanczos: degenerate start vector");
  v.col(0) = w / nw;

  int m = 0;
  double bound_beta = 0.0;  // beta_m paired with the final basis
  while (m < budget) {
    w = si.apply(v.col(m));
    double a = v.col(m).dot(w);
    alpha.push_back(a);
    w -= a * v.col(m);
    if (m > 0 && beta[static_cast<std::size_t>(m - 1)] != 0.0) {
      w -= beta[static_cast<std::size_t>(m - 1)] * v.col(m - 1);
    }
    orth_against(w, m + 1);
    double b = w.norm();
    ++m;
    bound_beta = b;
    if (m >= budget) break;
    if (b < 1e-13) {
      // Invariant subspace exhausted; top up with a fresh direction.
      for (int i = 0; i < dim; ++i) w(i) = gauss(rng);
      orth_against(w, m);
      b = w.norm();
      bound_beta = 0.0;
      if (b < 1e-13) break;
      beta.push_back(0.0);
      v.col(m) = w / b;
      continue;
    }
    beta.push_back(b);
    v.col(m) = w / b;
    if (m >= 8 && m % 4 == 0) {
      // Basis saturation probe: harvest once nearly all Ritz values settle.
      std::vector<double> beta_mm1(beta.begin(), beta.begin() + (m - 1));
      SmallTridiagEig st = small_tridiag_eig(alpha, beta_mm1);
      int converged = 0;
      for (int i = 0; i < m; ++i) {
        double th = st.theta[static_cast<std::size_t>(i)];
        if (th == 0.0) continue;
        if (std::abs(b * st.s(m - 1, i)) / (th * th) <= conv_tol_lambda) ++converged;
      }
      if (converged >= m - 2) break;
    }
  }

  KrylovHarvest out;
  const int mm = static_cast<int>(alpha.size());
  if (mm == 0) return out;
  std::vector<double> beta_trim(beta.begin(),
                                beta.begin() + std::min<std::ptrdiff_t>(beta.size(), mm - 1));
  SmallTridiagEig st = small_tridiag_eig(alpha, beta_trim);
  std::vector<int> keep;
  for (int i = 0; i < mm; ++i) {
    double th = st.theta[static_cast<std::size_t>(i)];
    if (th == 0.0) continue;
    if (std::abs(bound_beta * st.s(mm - 1, i)) / (th * th) <= conv_tol_lambda) keep.push_back(i);
  }
  out.lambdas.reserve(keep.size());
  out.vectors.resize(dim, static_cast<int>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    int i = keep[k];
    out.lambdas.push_back(sigma + 1.0 / st.theta[static_cast<std::size_t>(i)]);
    out.vectors.col(static_cast<int>(k)) = v.leftCols(mm) * st.s.col(i);
    out.vectors.col(static_cast<int>(k)).normalize();
  }
  return out;
}

WindowResult collect_shift_invert(const DiscreteOperator& op, double sigma_request,
                                  long target, double keep_lo, double keep_hi,
                                  const WindowOptions& opts, double norm_bound) {
  WindowResult res;
  res.norm_bound = norm_bound;
  res.sigma = sigma_request;
  double scale = std::max(norm_bound, 1.0);
  double conv_tol = std::max(1e-14 * scale, 0.05 * opts.residual_tol * scale);

  require(target <= opts.max_pairs, errc::capacity,
          strf("window holds %ld eigenvalues, exceeding max_pairs=%d", target, opts.max_pairs));
  if (target == 0) return res;

  double sigma = sigma_request;
  rng_engine rng = make_rng(opts.seed, 0x77);
  Mat locked(op.dim, 0);
  std::vector<double> lambdas;

  int max_m = opts.max_krylov > 0
                  ? opts.max_krylov
                  : std::min<int>(op.dim, std::max<int>(96, static_cast<int>(8 * target) + 48));

  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    std::optional<ShiftInvert> si;
    for (int attempt = 0; attempt < 5 && !si; ++attempt) {
      try {
        si.emplace(op, sigma);
      } catch (const error& err) {
        if (err.code() != errc::numeric) throw;
        sigma += (attempt + 1) * 1e-8 * scale;  // nudge off the exact eigenvalue
      }
    }
    require(si.has_value(), errc::numeric, "shift-invert: could not factor near the window");
    res.sigma = sigma;

    KrylovHarvest h = lanczos_pass(*si, sigma, op.dim, max_m, conv_tol, locked, rng);
    for (std::size_t k = 0; k < h.lambdas.size(); ++k) {
      if (static_cast<long>(lambdas.size()) >= target) break;
      double lam = h.lambdas[k];
      if (!(lam >= keep_lo && lam < keep_hi)) continue;
      Vec cand = h.vectors.col(static_cast<int>(k));
      if (locked.cols() > 0) cand -= locked * (locked.transpose() * cand);
      double nn = cand.norm();
      if (nn < 0.5) continue;  // numerically a duplicate of a locked vector
      cand /= nn;
      Vec r = op.apply(cand) - lam * cand;
      if (r.norm() > opts.residual_tol * scale) continue;
      locked.conservativeResize(Eigen::NoChange, locked.cols() + 1);
      locked.col(locked.cols() - 1) = cand;
      lambdas.push_back(lam);
    }
    if (static_cast<long>(lambdas.size()) >= target) break;
  }

  require(static_cast<long>(lambdas.size()) == target, errc::numeric,
          strf("window solve found %zu of %ld eigenpairs; raise the Krylov budget",
               lambdas.size(), target));

  std::vector<int> order(lambdas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return lambdas[static_cast<std::size_t>(a)] < lambdas[static_cast<std::size_t>(b)];
  });
  res.values.reserve(order.size());
  res.vectors.resize(op.dim, static_cast<int>(order.size()));
  res.residuals.reserve(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    int i = order[k];
    res.values.push_back(lambdas[static_cast<std::size_t>(i)]);
    res.vectors.col(static_cast<int>(k)) = locked.col(i);
    Vec r = op.apply(locked.col(i)) - lambdas[static_cast<std::size_t>(i)] * locked.col(i);
    res.residuals.push_back(r.norm());
  }
  return res;
}

}  // namespace

WindowResult window_spectrum(const DiscreteOperator& op, double lo, double hi,
                             const WindowOptions& opts) {
  require(lo < hi, errc::invalid_argument, "window_spectrum: lo must be below hi");
  InertiaEngine engine(op);
  InertiaReport rlo = engine.count_below(lo);
  InertiaReport rhi = engine.count_below(hi);
  long target = rhi.n_below - rlo.n_below;
  WindowResult res = collect_shift_invert(op, 0.5 * (lo + hi), target, lo, hi, opts,
                                          engine.norm_bound());
  res.inertia_lo = rlo.n_below;
  res.inertia_hi = rhi.n_below;
  return res;
}

WindowResult lowest_eigenpairs(const DiscreteOperator& op, int k, const WindowOptions& opts) {
  require(k >= 1, errc::invalid_argument, "lowest_eigenpairs: k must be >= 1");
  require(k <= op.dim, errc::invalid_argument, "lowest_eigenpairs: k exceeds dimension");
  InertiaEngine engine(op);
  double scale = std::max(engine.norm_bound(), 1.0);

  // Gershgorin lower bound: no eigenvalue sits below lo_edge.
  double lo_bound = std::numeric_limits<double>::infinity();
  {
    std::vector<double> diag(static_cast<std::size_t>(op.dim), 0.0);
    std::vector<double> off(static_cast<std::size_t>(op.dim), 0.0);
    for (int c = 0; c < op.stencil.outerSize(); ++c) {
      for (SpMat::InnerIterator it(op.stencil, c); it; ++it) {
        if (it.row() == it.col()) {
          diag[static_cast<std::size_t>(it.row())] = it.value();
        } else {
          off[static_cast<std::size_t>(it.row())] += std::abs(it.value());
        }
      }
    }
    for (int i = 0; i < op.dim; ++i) {
      lo_bound = std::min(lo_bound, diag[static_cast<std::size_t>(i)] - off[static_cast<std::size_t>(i)]);
    }
    for (const auto& lr : op.lowrank) {
      if (lr.c < 0) lo_bound += lr.c * lr.u.squaredNorm();
    }
  }
  double lo_edge = lo_bound - 1e-9 * scale;

  // Doubling then bisection lands just above the k-th lowest eigenvalue, so
  // the window midpoint shift sits among the wanted eigenvalues.
  double step = 1e-6 * scale;
  double hi = lo_bound + step;
  int guard = 0;
  while (engine.count_below(hi).n_below < k) {
    step *= 2.0;
    hi = lo_bound + step;
    require(++guard < 80, errc::numeric, "lowest_eigenpairs: failed to bracket the spectrum");
  }
  double a = lo_edge, b = hi;
  while (b - a > std::max(1e-12 * scale, 1e-14)) {
    double mid = 0.5 * (a + b);
    if (engine.count_below(mid).n_below >= k) {
      b = mid;
    } else {
      a = mid;
    }
  }
  long target = engine.count_below(b).n_below;  // k, or more on a tied cluster
  WindowOptions o = opts;
  o.max_pairs = std::max(o.max_pairs, static_cast<int>(target));
  WindowResult res =
      collect_shift_invert(op, 0.5 * (lo_edge + b), target, lo_edge, b, o, engine.norm_bound());
  res.inertia_lo = 0;
  res.inertia_hi = target;
  if (static_cast<int>(res.values.size()) > k) {
    res.values.resize(static_cast<std::size_t>(k));
    res.vectors.conservativeResize(Eigen::NoChange, k);
    res.residuals.resize(static_cast<std::size_t>(k));
  }
  return res;
}

}  // namespace gapflow
