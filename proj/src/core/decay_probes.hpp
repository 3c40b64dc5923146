#pragma once

// Quantitative probes behind the counting machinery: exponential localization
// of gap eigenstates, Hilbert-Schmidt smallness of resolvent differences
// across a Dirichlet cut (uniformly in the potential and the shift), the
// cut-operator window-count bound, the spectral-shift inequality, and the
// Combes-Thomas off-diagonal resolvent decay. Each probe is pure and reports
// measured quantities; pass/fail policy lives with the caller.

#include <vector>

#include "core/discrete_operator.hpp"
#include "core/tube_grid.hpp"

namespace gapflow {

// Least-squares exponential fit of the tail mass of a grid vector:
// ||u restricted to |x - interface_x| > k|| ~ C e^{-gamma k} over integer k
// in the linear regime (after the shoulder, above the numerical floor).
// Tails use sharp distance cuts; smooth cutoffs change C, not gamma.
struct DecayFit {
  double C = 0.0;
  double gamma = 0.0;
  double fit_residual = 0.0;  // rms misfit of log tail
  int k_lo = 0;
  int k_hi = 0;
  bool accepted = false;  // gamma > 0 with at least three usable points
};

DecayFit decay_fit(const Vec& u, const GridMap& map, double interface_x = 0.0);

// Frobenius norm of (H + r)^-1 minus the zero-extended (H_cut + r)^-1, the
// cut placed at the grid line nearest cut_x. The matrix of an integral
// operator carries one grid-cell measure per index, so the plain Frobenius
// norm of the difference is already the cell-measure approximation of the
// continuum Hilbert-Schmidt norm.
double resolvent_hs_diff(const DiscreteOperator& op, double cut_x, double r);

// Window counts for the cut operators of an ensemble of potentials on the
// box (-half_len, half_len). Members whose uncut operator fails the window
// precondition (spectrum intrudes into [a, b]) are skipped and reported.
struct GapCountReport {
  long max_count = 0;
  std::vector<long> counts;  // per member; -1 marks a skipped member
  std::vector<int> skipped;
};

GapCountReport gap_count_probe(const std::vector<PotentialSampler>& ensemble, double a,
                               double b, double half_len, double hx, int ny,
                               double cut_x = 0.0);

// Eigenvalue-count stability under a form perturbation:
//   tr E_(-inf,E)(S) >= tr E_(-inf,E)(T) - dist(E, spec T)^-2 ||T^-1 - S^-1||_HS^2,
// with S the cut version of T (extra Dirichlet lines), both shifted
// internally by the same amount so T >= 1, and S^-1 extended by zero on the
// removed lines. Everything is computed densely.
struct SpectralShiftReport {
  long count_t = 0;
  long count_s = 0;
  double shift = 0.0;    // internal shift applied to both operators
  double dist = 0.0;     // dist(E, spec T); invariant under the shift
  double hs_norm = 0.0;  // ||(T+s)^-1 - ext (S+s)^-1||_F
  double rhs = 0.0;      // count_t - hs_norm^2 / dist^2
  bool holds = false;
};

SpectralShiftReport spectral_shift_probe(const DiscreteOperator& op_t,
                                         const DiscreteOperator& op_s, double E);

// Off-diagonal resolvent decay at an energy inside a spectral gap:
// for each k, the operator norm of (1 - chi_2k) (H - lambda)^-1 chi_k with
// sharp nodewise masks |x - center| <= k resp. > 2k, measured by power
// iteration on the compressed block; eps0 is the common fitted decay rate
// (least squares on log norm vs k over the nonvanishing entries).
struct CombesThomasProbe {
  double eps0 = 0.0;
  double lambda = 0.0;
  int k = 0;
  double measured_norm = 0.0;
};

std::vector<CombesThomasProbe> combes_thomas_probe(const DiscreteOperator& op,
                                                   double lambda,
                                                   const std::vector<int>& k_list,
                                                   double center = 0.0);

}  // namespace gapflow
