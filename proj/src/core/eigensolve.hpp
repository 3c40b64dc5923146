#pragma once

// Spectral queries on discrete operators. Three engines, one contract:
//  - InertiaEngine: eigenvalue counts below a probe energy via a block
//    Schur-complement signature sweep, O(dim * bandwidth^2) per probe
//    (low-rank terms enter through a bordered signature identity, never by
//    densifying).
//  - dense_spectrum: full spectrum via LAPACK for moderate dimensions.
//  - window_spectrum / lowest_eigenpairs: shift-invert Krylov with locked
//    deflation; inertia counts certify that no eigenpair in the window was
//    missed.

#include <optional>
#include <vector>

#include "core/banded_lapack.hpp"
#include "core/common.hpp"
#include "core/discrete_operator.hpp"

namespace gapflow {

struct InertiaReport {
  long n_below = 0;       // eigenvalues strictly below energy_used
  double energy = 0.0;    // requested probe
  double energy_used = 0.0;
  bool perturbed = false;  // probe was nudged off a (near-)eigenvalue
  bool lowrank_border = false;
  double min_abs_pivot = 0.0;
};

// Reusable counter: the band is extracted once, each probe runs the block
// signature sweep (plus k banded solves when low-rank terms are present).
class InertiaEngine {
 public:
  explicit InertiaEngine(const DiscreteOperator& op);

  InertiaReport count_below(double energy) const;
  // Count in the half-open window [lo, hi).
  long count_window(double lo, double hi) const;

  double norm_bound() const { return scale_; }

 private:
  long count_at(double energy, bool& near_singular, double& min_pivot) const;

  const DiscreteOperator& op_;
  SymBand band_;
  double scale_ = 1.0;
  double pivot_tol_ = 0.0;
};

InertiaReport inertia_count(const DiscreteOperator& op, double energy);

struct DenseResult {
  std::vector<double> values;  // ascending
  Mat vectors;                 // columns, when requested
  double norm_bound = 0.0;
  double max_residual = 0.0;
};

// Full spectrum through LAPACK; refuses dimensions above cap.
DenseResult dense_spectrum(const DiscreteOperator& op, bool want_vectors, int cap = 6000);

struct WindowOptions {
  int max_pairs = 64;        // refuse windows holding more eigenvalues
  std::uint64_t seed = 20240901;
  double residual_tol = 1e-10;  // relative to the operator norm bound
  int max_krylov = 0;        // 0 = auto from the target count
  int max_restarts = 8;
};

struct WindowResult {
  std::vector<double> values;       // ascending
  Mat vectors;                      // matching columns, unit norm
  std::vector<double> residuals;    // ||A v - lambda v||
  long inertia_lo = 0;
  long inertia_hi = 0;
  double sigma = 0.0;               // shift actually used
  double norm_bound = 0.0;
};

// All eigenpairs in [lo, hi), certified complete against inertia counts.
WindowResult window_spectrum(const DiscreteOperator& op, double lo, double hi,
                             const WindowOptions& opts = {});

// The k lowest eigenpairs: bisects inertia counts to bracket the k-th
// eigenvalue, then solves that window.
WindowResult lowest_eigenpairs(const DiscreteOperator& op, int k,
                               const WindowOptions& opts = {});

}  // namespace gapflow
