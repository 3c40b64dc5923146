#include "core/banded_lapack.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>

namespace gapflow {

SymBand SymBand::from_sparse(const SpMat& a, int kd) {
  SymBand b;
  b.n = static_cast<int>(a.rows());
  b.kd = kd;
  std::size_t ldab = static_cast<std::size_t>(kd) + 1;
  b.ab.assign(ldab * static_cast<std::size_t>(b.n), 0.0);
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SpMat::InnerIterator it(a, k); it; ++it) {
      int i = static_cast<int>(it.row());
      int j = static_cast<int>(it.col());
      if (i < j) continue;  // lower triangle only
      require(i - j <= kd, errc::internal,
              strf("band extraction: entry (%d,%d) outside half-bandwidth %d", i, j, kd));
      b.ab[static_cast<std::size_t>(i - j) + static_cast<std::size_t>(j) * ldab] = it.value();
    }
  }
  return b;
}

void SymBand::shift_diagonal(double s) {
  std::size_t ldab = static_cast<std::size_t>(kd) + 1;
  for (int j = 0; j < n; ++j) ab[static_cast<std::size_t>(j) * ldab] += s;
}

Tridiag band_to_tridiag(const SymBand& band) {
  Tridiag t;
  t.d.assign(static_cast<std::size_t>(band.n), 0.0);
  t.e.assign(band.n > 1 ? static_cast<std::size_t>(band.n - 1) : 0, 0.0);
  if (band.kd == 0) {
    std::size_t ldab = 1;
    for (int j = 0; j < band.n; ++j) t.d[static_cast<std::size_t>(j)] = band.ab[j * ldab];
    return t;
  }
  std::vector<double> ab = band.ab;  // dsbtrd overwrites its input
  double q_dummy = 0.0;
  lapack_int info = LAPACKE_dsbtrd(LAPACK_COL_MAJOR, 'N', 'L', band.n, band.kd,
                                   ab.data(), band.kd + 1, t.d.data(), t.e.data(), &q_dummy, 1);
  require(info == 0, errc::numeric, strf("dsbtrd failed with info=%d", static_cast<int>(info)));
  return t;
}

TridiagInertia tridiag_count_below(const Tridiag& t, double shift, double pivot_tol) {
  // LDL^T with Bunch's tridiagonal pivot rule: at step i take a 1x1 pivot if
  // sigma * |d_i| >= alpha * e_i^2 with sigma the local magnitude scale,
  // otherwise an (unreduced) 2x2 pivot. Only pivot signs are accumulated.
  static const double alpha = (std::sqrt(5.0) - 1.0) / 2.0;
  const int n = static_cast<int>(t.d.size());
  TridiagInertia out;
  out.min_abs_pivot = std::numeric_limits<double>::infinity();

  double carry = 0.0;  // Schur-complement update for the current diagonal
  int i = 0;
  while (i < n) {
    double di = t.d[static_cast<std::size_t>(i)] - shift + carry;
    double ei = i + 1 < n ? t.e[static_cast<std::size_t>(i)] : 0.0;
    double dnext = i + 1 < n ? t.d[static_cast<std::size_t>(i + 1)] - shift : 0.0;
    double sigma = std::max({std::abs(di), std::abs(ei), i + 1 < n ? std::abs(dnext) : 0.0});
    bool one_by_one = i + 1 >= n || sigma * std::abs(di) >= alpha * ei * ei;
    if (one_by_one) {
      out.min_abs_pivot = std::min(out.min_abs_pivot, std::abs(di));
      if (std::abs(di) <= pivot_tol) {
        out.near_singular = true;
        // Continue with a clamped pivot so the count is still usable.
        di = di < 0 ? -pivot_tol : pivot_tol;
      }
      if (di < 0) ++out.n_below;
      carry = i + 1 < n ? -ei * ei / di : 0.0;
      ++i;
    } else {
      double det = di * dnext - ei * ei;
      double scale2 = std::max(sigma * sigma, 1e-300);
      out.min_abs_pivot = std::min(out.min_abs_pivot, std::abs(det) / std::sqrt(scale2));
      if (std::abs(det) <= pivot_tol * sigma) out.near_singular = true;
      if (det < 0) {
        ++out.n_below;  // one negative, one positive eigenvalue
      } else if (di + dnext < 0) {
        out.n_below += 2;
      }
      double enext = i + 2 < n ? t.e[static_cast<std::size_t>(i + 1)] : 0.0;
      carry = i + 2 < n ? -enext * enext * (det != 0.0 ? di / det : 0.0) : 0.0;
      if (det == 0.0) out.near_singular = true;
      i += 2;
    }
  }
  if (!std::isfinite(out.min_abs_pivot)) out.min_abs_pivot = 0.0;
  return out;
}

int tridiag_count_below_sturm(const Tridiag& t, double shift) {
  const int n = static_cast<int>(t.d.size());
  int count = 0;
  double q = 1.0;
  const double tiny = 1e-300;
  for (int i = 0; i < n; ++i) {
    double e2 = i > 0 ? t.e[static_cast<std::size_t>(i - 1)] * t.e[static_cast<std::size_t>(i - 1)] : 0.0;
    q = t.d[static_cast<std::size_t>(i)] - shift - (i > 0 ? e2 / q : 0.0);
    if (q == 0.0) q = tiny;
    if (std::abs(q) < tiny) q = q < 0 ? -tiny : tiny;
    if (q < 0) ++count;
  }
  return count;
}

namespace {

// Fast path: unpivoted band LDL^T signature sweep, O(n kd^2 / 2) multiplies.
// Exact by Sylvester when it completes cleanly; tiny pivots or element
// growth raise near_singular so the caller can fall back or jitter.
TridiagInertia band_count_scalar(const SymBand& band, double shift, double pivot_tol) {
  const int n = band.n;
  const int kd = band.kd;
  const std::size_t ldab = static_cast<std::size_t>(kd) + 1;
  TridiagInertia out;
  out.min_abs_pivot = std::numeric_limits<double>::infinity();
  const double mult_cap = 1e8;
  std::vector<double> w = band.ab;
  for (int j = 0; j < n; ++j) w[static_cast<std::size_t>(j) * ldab] -= shift;
  for (int j = 0; j < n; ++j) {
    double* colj = &w[static_cast<std::size_t>(j) * ldab];
    double d = colj[0];
    if (!std::isfinite(d)) {
      out.near_singular = true;
      out.min_abs_pivot = 0.0;
      return out;
    }
    out.min_abs_pivot = std::min(out.min_abs_pivot, std::abs(d));
    if (std::abs(d) <= pivot_tol) {
      out.near_singular = true;
      d = d < 0.0 ? -pivot_tol : pivot_tol;
      if (d == 0.0) d = pivot_tol;
    }
    if (d < 0.0) ++out.n_below;
    int reach = std::min(kd, n - 1 - j);
    for (int c = 1; c <= reach; ++c) {
      double l = colj[c] / d;
      if (std::abs(l) > mult_cap) out.near_singular = true;
      double* colc = &w[static_cast<std::size_t>(j + c) * ldab];
      for (int r = c; r <= reach; ++r) colc[r - c] -= l * colj[r];
    }
  }
  return out;
}

// Robust path: block Schur recursion over kb-sized blocks, each factored by
// Bunch-Kaufman (dsytrf); signatures accumulate by congruence. Survives the
// interior near-singular leading minors that stall the scalar sweep (only
// every kb-th leading minor must be invertible here).
TridiagInertia band_count_block(const SymBand& band, double shift, double pivot_tol) {
  const int n = band.n;
  const int kb = std::max(band.kd, 1);  // block size; couplings reach one block
  const std::size_t ldab = static_cast<std::size_t>(band.kd) + 1;
  TridiagInertia out;
  out.min_abs_pivot = std::numeric_limits<double>::infinity();

  auto entry = [&](int i, int j) -> double {  // full symmetric access
    if (i < j) std::swap(i, j);
    if (i - j > band.kd) return 0.0;
    return band.ab[static_cast<std::size_t>(i - j) + static_cast<std::size_t>(j) * ldab];
  };

  // Scale recovered from the engine's pivot tolerance convention
  // (pivot_tol = 10 eps max(scale, 1)); element growth past this cap makes
  // the accumulated counts untrustworthy, so it raises the retry flag.
  const double growth_cap = 1e8 * std::max(1.0, pivot_tol / (10.0 * 2.220446049250313e-16));

  Mat s;                        // dsytrf factors of the previous block
  std::vector<lapack_int> piv;  // pivot indices for s
  int prev_m = 0;
  for (int base = 0; base < n; base += kb) {
    const int m = std::min(kb, n - base);
    Mat a(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= i; ++j) {
        a(i, j) = entry(base + i, base + j);
        a(j, i) = a(i, j);
      }
      a(i, i) -= shift;
    }
    if (base > 0) {
      Mat bt = Mat::Zero(prev_m, m);  // B^T, rows local to previous block
      for (int i = 0; i < m; ++i) {
        int gi = base + i;
        for (int j = 0; j < prev_m; ++j) {
          int gj = base - prev_m + j;
          if (gi - gj <= band.kd) bt(j, i) = entry(gi, gj);
        }
      }
      Mat x = bt;
      lapack_int info = LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', prev_m, m, s.data(), prev_m,
                                       piv.data(), x.data(), prev_m);
      require(info == 0, errc::numeric, strf("dsytrs failed with info=%d", static_cast<int>(info)));
      a.noalias() -= bt.transpose() * x;
    }
    if (a.cwiseAbs().maxCoeff() > growth_cap) out.near_singular = true;

    piv.assign(static_cast<std::size_t>(m), 0);
    s = a;
    lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', m, s.data(), m, piv.data());
    require(info >= 0, errc::numeric, strf("dsytrf failed with info=%d", static_cast<int>(info)));
    if (info > 0) {
      // Exactly singular pivot block: flag for a shift retry, nudge the
      // diagonal so the recursion can proceed at all.
      out.near_singular = true;
      out.min_abs_pivot = 0.0;
      s = a;
      double nudge = std::max(pivot_tol, 1e-300);
      for (int i = 0; i < m; ++i) s(i, i) += 2.0 * nudge;
      info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', m, s.data(), m, piv.data());
      require(info == 0, errc::numeric, "singular Schur block persisted after nudge");
    }
    int k = 0;
    while (k < m) {
      if (piv[static_cast<std::size_t>(k)] > 0) {
        double d = s(k, k);
        out.min_abs_pivot = std::min(out.min_abs_pivot, std::abs(d));
        if (std::abs(d) <= pivot_tol) out.near_singular = true;
        if (d < 0.0) ++out.n_below;
        ++k;
      } else {
        double d1 = s(k, k), d2 = s(k + 1, k + 1), e = s(k + 1, k);
        double tr = d1 + d2;
        double det = d1 * d2 - e * e;
        double disc = std::sqrt(std::max(0.25 * (d1 - d2) * (d1 - d2) + e * e, 0.0));
        double l1 = 0.5 * tr + disc, l2 = 0.5 * tr - disc;
        double small = std::min(std::abs(l1), std::abs(l2));
        out.min_abs_pivot = std::min(out.min_abs_pivot, small);
        if (small <= pivot_tol) out.near_singular = true;
        if (det < 0.0) {
          ++out.n_below;  // one eigenvalue of each sign
        } else if (tr < 0.0) {
          out.n_below += 2;
        }
        k += 2;
      }
    }
    prev_m = m;
  }
  return out;
}

}  // namespace

TridiagInertia band_count_below(const SymBand& band, double shift, double pivot_tol) {
  if (band.n == 0) {
    TridiagInertia out;
    out.min_abs_pivot = std::numeric_limits<double>::infinity();
    return out;
  }
  if (band.kd == 0) {
    const std::size_t ldab = 1;
    TridiagInertia out;
    out.min_abs_pivot = std::numeric_limits<double>::infinity();
    for (int j = 0; j < band.n; ++j) {
      double p = band.ab[static_cast<std::size_t>(j) * ldab] - shift;
      out.min_abs_pivot = std::min(out.min_abs_pivot, std::abs(p));
      if (std::abs(p) <= pivot_tol) out.near_singular = true;
      if (p < 0.0) ++out.n_below;
    }
    return out;
  }
  TridiagInertia fast = band_count_scalar(band, shift, pivot_tol);
  if (!fast.near_singular) return fast;
  return band_count_block(band, shift, pivot_tol);
}

std::vector<double> tridiag_eigenvalues(const Tridiag& t) {
  std::vector<double> d = t.d;
  std::vector<double> e = t.e;
  if (d.empty()) return {};
  lapack_int info = LAPACKE_dsterf(static_cast<lapack_int>(d.size()), d.data(),
                                   e.empty() ? nullptr : e.data());
  require(info == 0, errc::numeric, strf("dsterf failed with info=%d", static_cast<int>(info)));
  return d;
}

BandLU::BandLU(const SpMat& a, int kd, double shift) : n_(static_cast<int>(a.rows())), kd_(kd) {
  ldab_ = 3 * kd_ + 1;  // kl = ku = kd plus fill space for partial pivoting
  ab_.assign(static_cast<std::size_t>(ldab_) * static_cast<std::size_t>(n_), 0.0);
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SpMat::InnerIterator it(a, k); it; ++it) {
      int i = static_cast<int>(it.row());
      int j = static_cast<int>(it.col());
      require(std::abs(i - j) <= kd_, errc::internal, "band LU: entry outside bandwidth");
      double v = it.value() - (i == j ? shift : 0.0);
      ab_[static_cast<std::size_t>(2 * kd_ + i - j) + static_cast<std::size_t>(j) * ldab_] = v;
    }
  }
  // Explicit zeros on the diagonal of an all-zero row would be skipped above;
  // the shift must still land on every diagonal entry.
  for (int j = 0; j < n_; ++j) {
    std::size_t pos = static_cast<std::size_t>(2 * kd_) + static_cast<std::size_t>(j) * ldab_;
    bool seen = false;
    for (SpMat::InnerIterator it(a, j); it; ++it) {
      if (it.row() == j) { seen = true; break; }
    }
    if (!seen) ab_[pos] = -shift;
  }
  ipiv_.assign(static_cast<std::size_t>(n_), 0);
  lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n_, n_, kd_, kd_, ab_.data(), ldab_, ipiv_.data());
  if (info > 0) fail(errc::numeric, strf("band LU: exact zero pivot at %d (shift hits an eigenvalue)",
                                         static_cast<int>(info)));
  require(info == 0, errc::numeric, strf("dgbtrf failed with info=%d", static_cast<int>(info)));
}

void BandLU::solve_inplace(Vec& b) const {
  require(static_cast<int>(b.size()) == n_, errc::invalid_argument, "band LU: size mismatch");
  lapack_int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n_, kd_, kd_, 1, ab_.data(), ldab_,
                                   ipiv_.data(), b.data(), n_);
  require(info == 0, errc::numeric, strf("dgbtrs failed with info=%d", static_cast<int>(info)));
}

Vec BandLU::solve(const Vec& b) const {
  Vec x = b;
  solve_inplace(x);
  return x;
}

DenseEig dense_sym_eigen(const Mat& a, bool want_vectors) {
  require(a.rows() == a.cols(), errc::invalid_argument, "dense eigensolve: matrix must be square");
  const int n = static_cast<int>(a.rows());
  DenseEig out;
  out.values.assign(static_cast<std::size_t>(n), 0.0);
  if (n == 0) return out;
  Mat work = a;  // dsyevr reads the lower triangle; copy is destroyed
  lapack_int m = 0;
  std::vector<lapack_int> isuppz(static_cast<std::size_t>(2 * n), 0);
  Mat z;
  if (want_vectors) z.resize(n, n);
  lapack_int info = LAPACKE_dsyevr(
      LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'A', 'L', n, work.data(), n,
      0.0, 0.0, 0, 0, 0.0, &m, out.values.data(), want_vectors ? z.data() : nullptr,
      n, isuppz.data());
  require(info == 0, errc::numeric, strf("dsyevr failed with info=%d", static_cast<int>(info)));
  out.values.resize(static_cast<std::size_t>(m));
  if (want_vectors) out.vectors = z.leftCols(m);
  return out;
}

}  // namespace gapflow
