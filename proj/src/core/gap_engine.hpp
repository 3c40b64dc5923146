#pragma once

// The interface-state machine. Pipeline:
//   1. locate_gap: find energy windows free of essential spectrum for both
//      crystals (band-structure fast path for y-independent 1-periodic
//      potentials, growth-filtered counting for everything else).
//   2. realize_half_edge / build_correction: for each Dirichlet edge of the
//      finite box, compute the edge states the boundary creates inside the
//      window and package a positive low-rank term (strength 4*beta,
//      cut off away from the edge) that pushes them out of the window.
//   3. assemble_approximant: the corrected box operator on (-n-t, n); with
//      both corrections in place the window is clean at t = 0, so anything
//      appearing near E during the dislocation sweep is interface physics.
//   4. sweep_dislocation: march t over the grid, track eigenvalue counts
//      below E, and refine each count jump to a crossing parameter tau with
//      an eigenvalue at E.
// Counting identities (exact on the grid, t snapped): the box operator with
// Dirichlet cuts at x = 0 and x = -t splits into three blocks; the two outer
// blocks are index translates of their t = 0 versions, so
//   N(block1_t) + N(block3) = N(decoupled at t=0),
// and Cauchy interlacing bounds every cut by ny removed lines.

#include <functional>
#include <optional>
#include <vector>

#include "core/discrete_operator.hpp"
#include "core/eigensolve.hpp"
#include "core/floquet.hpp"
#include "core/tube_grid.hpp"

namespace gapflow {

// C-infinity step: exactly 0 for u <= 0, exactly 1 for u >= 1.
double smooth_step(double u);

// Cutoff family at length scale n. chi_plus climbs 0 -> 1 over (n/2, 3n/4);
// chi_minus mirrors it; phi is 1 on |x| < n/4 and supported in |x| < n/2;
// psi = 1 - phi splits into one-sided halves with psi_pm * chi_pm = chi_pm.
struct CutoffProfile {
  double n = 1.0;

  double chi_plus(double x) const;
  double chi_minus(double x) const;
  double phi(double x) const;
  double psi(double x) const;
  double psi_plus(double x) const;
  double psi_minus(double x) const;
};

struct GapInterval {
  double lo = 0.0;
  double hi = 0.0;
};

// Energy-window bookkeeping around a target E inside a located gap (a0, b0):
// alpha is half the distance from E to the located spectrum, beta a third of
// it, so the working window [E-2beta, E+2beta] stays strictly inside the gap.
struct GapSpec {
  double a0 = 0.0;
  double b0 = 0.0;
  double E = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  double window_lo() const { return E - 2.0 * beta; }
  double window_hi() const { return E + 2.0 * beta; }
};

GapSpec make_gap_spec(double E, const GapInterval& gap);

struct GapSearchPolicy {
  double lo = -10.0;       // energy search range
  double hi = 60.0;
  double hx = 0.05;
  int ny = 8;
  double x_half = 16.0;    // generic truncation half-length (doubled internally)
  int scan_points = 2800;  // count probes across [lo, hi]
  double density_halfwidth = 0.2;   // window for the count-growth test
  double min_gap = 0.25;            // discard slivers
  double edge_margin = 2.0;         // boundary-state localization margin
  double edge_mass = 0.9;           // mass fraction defining "boundary-localized"
  int max_window_states = 8;        // candidate windows holding more are rejected
};

// Gaps common to both crystals inside [policy.lo, policy.hi], bounded on both
// sides by located spectrum (the region below everything is not a gap).
std::vector<GapInterval> locate_gap(const DislocationFamily& family,
                                    const GapSearchPolicy& policy = {});

// Single-crystal band structure used by locate_gap; exposed for tests.
// Fast path for y-independent 1-periodic samplers, else counting with the
// two-size growth filter (intervals whose population stops growing with the
// box and whose residents cling to the artificial boundaries).
BandStructure crystal_spectrum(const PotentialSampler& v, const GapSearchPolicy& policy);

enum class EdgeSide { plus, minus };

struct HalfEdgeOptions {
  double far_pad = 8.0;        // artificial-boundary distance beyond the junction
  int max_edge_retries = 16;   // artificial-edge placement sweep
  double loc_fraction = 0.9;   // mass fraction deciding genuine vs artifact
  int rank_cap = 12;           // anomaly guard on the genuine window population
  std::uint64_t seed = 20240901;
};

// One-edge operator on a finite truncation: side plus is the tube
// (-far_pad - j*hx, n) with crystal-1 potential and its physical Dirichlet
// edge at +n; side minus mirrors it with crystal 2 and the edge at -n. The
// window eigenpairs split into genuine edge states (mass near the physical
// edge) and truncation artifacts (mass near the artificial boundary); runs
// with ambiguous states retry with the artificial edge moved by one grid
// step (j above).
struct HalfEdgeResult {
  EdgeSide side = EdgeSide::plus;
  double n = 0.0;
  GridMap map;  // map.grid is the half-edge grid
  std::vector<double> values;  // all window eigenvalues, ascending
  Mat vectors;                 // matching columns on this grid
  std::vector<int> genuine;    // indices of edge states
  int artifacts = 0;
  int retries = 0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  double norm_bound = 0.0;
};

HalfEdgeResult realize_half_edge(EdgeSide side, double n, const DislocationFamily& family,
                                 const GapSpec& gap, double hx, int ny,
                                 const HalfEdgeOptions& opts = {});

// Positive low-rank window-clearing term for one edge: strength 4*beta on
// the span of the cutoff-masked genuine edge states. Stored on the sub-grid
// where the cutoff is nonzero so it can be transplanted into any box whose
// lines contain that region (the minus side is transplanted with an x-shift
// of -t; grid snapping makes that an exact index shift).
struct CorrectionTerm {
  EdgeSide side = EdgeSide::plus;
  double n = 0.0;
  double hx = 0.0;
  int ny = 0;
  int rank = 0;
  double strength = 0.0;            // 4 * beta
  std::vector<double> eigenvalues;  // of the genuine edge states
  double x_first = 0.0;             // x of the first stored line
  Mat blocks;                       // (stored_lines * ny) x rank
  double cut_projection_error = 0.0;  // ||chi P chi - P|| on the half-edge grid
  int artifacts = 0;
  int retries = 0;

  int stored_lines() const { return ny > 0 ? static_cast<int>(blocks.rows()) / ny : 0; }
  // Low-rank terms on the box grid; translate shifts the stored x-positions.
  std::vector<LowRankTerm> materialize(const GridMap& box, double translate) const;
};

CorrectionTerm build_correction(EdgeSide side, double n, const DislocationFamily& family,
                                const GapSpec& gap, double hx, int ny,
                                const HalfEdgeOptions& opts = {});

// Corrected box operator on (-n-t, n) with Dirichlet ends: dislocated
// potential plus both corrections (minus side translated through -t).
// n and t must be snapped to the x-grid; n >= 8 keeps the cutoff regions
// clear of the interface zone [-t, 0].
DiscreteOperator assemble_approximant(double n, double t, const DislocationFamily& family,
                                      const GapSpec& gap, double hx, int ny,
                                      const CorrectionTerm& plus, const CorrectionTerm& minus);

// Count of eigenvalues below E of the Dirichlet segment operator on
// (0, t) x circle with the crystal-2 potential (the inserted-segment block of
// the decoupled box, translated to standard position).
long interface_state_count(double t, const DislocationFamily& family, double E, double hx,
                           int ny);

// All exact counting relations for one (n, t): the corrected box, its
// Dirichlet-decoupled version, and the three blocks.
struct DecouplingReport {
  double n = 0.0, t = 0.0, E = 0.0;
  long n_full_t = 0;   // corrected box at t
  long n_full_0 = 0;   // corrected box at 0
  long n_dec_t = 0;    // box at t with cuts at 0 and -t
  long n_dec_0 = 0;    // box at 0 with cut at 0
  long n_block1 = 0;   // (-n-t, -t), minus correction
  long n_block2 = 0;   // (-t, 0), bare
  long n_block3 = 0;   // (0, n), plus correction
  long c0 = 0;         // interlacing bound for one cut (= ny)
  bool blocks_sum_to_dec = false;      // n1 + n2 + n3 == n_dec_t
  bool translation_identity = false;   // n1 + n3 == n_dec_0
  bool full_ge_dec = false;            // n_full_t >= n_dec_t
  bool sandwich_at_zero = false;       // n_full_0 >= n_dec_0 >= n_full_0 - c0
  bool chain = false;                  // n_full_t >= n_full_0 - c0 + n_block2
};

DecouplingReport decoupling_report(double n, double t, const DislocationFamily& family,
                                   const GapSpec& gap, double hx, int ny,
                                   const CorrectionTerm& plus, const CorrectionTerm& minus);

struct BranchSample {
  double t = 0.0;
  double eigenvalue = 0.0;
  int multiplicity = 1;
};

struct CrossingEvent {
  double tau = 0.0;         // refined crossing parameter
  double eigenvalue = 0.0;  // eigenvalue of the bracket family at tau
  double residual = 0.0;    // |eigenvalue - E|
  long count_jump = 0;      // change of N across the bracket
};

struct EigBranch {
  std::vector<BranchSample> samples;      // window eigenvalues at every grid t
  std::vector<double> crossing_params;    // tau_j, ascending
  std::vector<CrossingEvent> crossings;
  std::vector<double> t_grid;
  std::vector<long> counts;               // N(t) = count below E, aligned with t_grid
  double E = 0.0;
};

struct SweepOptions {
  double refine_tol = 1e-6;  // |eigenvalue - E| at reported crossings
  int threads = 1;
  HalfEdgeOptions edge;
};

// March t over {0, hx, 2hx, ..., t_max}. At each step records N(t) and the
// window eigenvalues of the corrected box. Count jumps are detected inside a
// fixed-grid bracket family (domain and corrections frozen at the right
// bracket end, potential translated continuously), then bisected on t until
// an eigenvalue of that family sits at E within refine_tol. Reported at most
// one crossing per grid bracket (the leftmost), with the total count jump
// attached.
EigBranch sweep_dislocation(const GapSpec& gap, const DislocationFamily& family, double n,
                            double t_max, double hx, int ny, const SweepOptions& opts = {});

// Tail-mass curve of a normalized grid vector around interface_x:
// tail(m) = || u restricted to |x - interface_x| > m ||, for integer m.
// m0 is the first m with tail <= 1/4 (infinity if never reached).
struct LocalizationProfile {
  std::vector<double> m;
  std::vector<double> tail;
  double m0 = 0.0;
};

LocalizationProfile localization_profile(const Vec& u, const GridMap& map,
                                         double interface_x = 0.0);

// Fraction of squared mass carried by lines with x in [x_lo, x_hi].
double x_mass_fraction(const Vec& u, const GridMap& map, double x_lo, double x_hi);

}  // namespace gapflow
