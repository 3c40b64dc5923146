#pragma once

#include <vector>

#include "core/discrete_operator.hpp"

namespace gapflow {

// Symmetric band matrix, LAPACK lower storage: column-major ab with
// ldab = kd + 1, entry (i, j) for j <= i <= min(n-1, j+kd) at ab[(i-j) + j*ldab].
struct SymBand {
  int n = 0;
  int kd = 0;
  std::vector<double> ab;

  static SymBand from_sparse(const SpMat& a, int kd);
  void shift_diagonal(double s);  // adds s to the diagonal
};

// Orthogonal reduction to symmetric tridiagonal (eigenvalue-preserving).
// Destroys nothing: takes a copy internally.
struct Tridiag {
  std::vector<double> d;
  std::vector<double> e;
};
Tridiag band_to_tridiag(const SymBand& band);

// Signature count for T - shift via LDL^T with Bunch 1x1/2x2 pivoting.
struct TridiagInertia {
  int n_below = 0;          // eigenvalues strictly below the shift
  bool near_singular = false;
  double min_abs_pivot = 0.0;
};
TridiagInertia tridiag_count_below(const Tridiag& t, double shift, double pivot_tol);

// Independent single-pivot Sturm counter with pivot clamping (cross-check
// oracle; flips of clamped pivots correspond to O(ulp) matrix perturbations).
int tridiag_count_below_sturm(const Tridiag& t, double shift);

// Signature count for the band matrix minus shift, via the block Schur
// recursion over kd-sized diagonal blocks: each block is factored with
// Bunch-Kaufman pivoting and its inertia added (congruence additivity over
// Schur complements). Cost O(n * kd^2) per call, no tridiagonalization.
TridiagInertia band_count_below(const SymBand& band, double shift, double pivot_tol);

// All eigenvalues of a symmetric tridiagonal matrix (LAPACK dsterf).
std::vector<double> tridiag_eigenvalues(const Tridiag& t);

// LU of a general band matrix (kl = ku = kd) for repeated solves.
class BandLU {
 public:
  // Factors a - shift * I. Throws errc::numeric on an exactly singular pivot.
  BandLU(const SpMat& a, int kd, double shift);
  void solve_inplace(Vec& b) const;
  Vec solve(const Vec& b) const;
  int n() const { return n_; }

 private:
  int n_ = 0;
  int kd_ = 0;
  int ldab_ = 0;
  std::vector<double> ab_;
  std::vector<int> ipiv_;
};

struct DenseEig {
  std::vector<double> values;
  Mat vectors;  // column k pairs with values[k]; empty when not requested
};
DenseEig dense_sym_eigen(const Mat& a, bool want_vectors);

}  // namespace gapflow
