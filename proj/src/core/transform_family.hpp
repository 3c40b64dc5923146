// Coordinate-transform realization of the dislocation family. Instead of
// comparing operators on translated domains, a smooth family of line
// diffeomorphisms phi_t pulls the translation back to a fixed domain, turning
// H_t into a variable-coefficient operator C_t with the same spectrum. The
// payoff: C_t depends on t only through smooth, compactly supported
// coefficient fields, so eigenvalue branches inherit Lipschitz bounds from
// coefficient bounds.
//
// Orientation note: this module slides the right half-tube copy by +t and
// keeps the left half fixed; the gap modules slide the left copy. Both
// interpolate the same pair of crystals and coincide at t = 0; sliding the
// right copy keeps every transformed coefficient free of minus signs.
//
// phi_t is built by mollifying the piecewise-linear ramp
//   x          for x <= 0,
//   (1 + t) x  for 0 <= x <= 1,
//   x + t      for x >= 1
// with a bump kernel of adjustable width. Closed forms used downstream:
//   phi'  = 1 + t (J(x) - J(x - 1)),  J = bump CDF,
//   phi'' = t (j(x) - j(x - 1)),      j = bump kernel.
// Hence |phi' - 1| <= |t| and phi' >= 1/2 for |t| <= 1/2 by construction.

#pragma once

#include <memory>
#include <vector>

#include "core/discrete_operator.hpp"
#include "core/eigensolve.hpp"
#include "core/gap_engine.hpp"

namespace gapflow {

struct PhiTable;  // fine-grid tables of the mollified ramp (internal)

class Diffeomorphism {
 public:
  double t = 0.0;
  double width = 1.0;       // mollifier half-support
  double flat_left = 0.0;   // phi(x) = x exactly for x <= flat_left
  double flat_right = 0.0;  // phi(x) = x + t exactly for x >= flat_right

  double eval(double x) const;    // phi_t(x)
  double deriv(double x) const;   // phi_t'(x), in [1 - |t|, 1 + |t|]
  double second(double x) const;  // phi_t''(x), closed form

 private:
  friend Diffeomorphism build_phi(double t, double width);
  std::shared_ptr<const PhiTable> table_;
};

// pre: |t| <= 1/2 (domain error), width in (0, 1].
Diffeomorphism build_phi(double t, double width = 1.0);

// Right-sliding dislocation value: v2 for x < 0, v1(x - t) for x >= 0.
// Coincides with family.value(0, x, y) at t = 0.
double reversed_dislocation(const DislocationFamily& family, double t, double x, double y);

// Symmetric discretization of the transformed form
//   (1/phi'^2) |d_1 w|^2 + |d_2 w|^2 - (phi''/phi'^3) Re(conj(w) d_1 w)
//   + (phi''^2 / (4 phi'^4)) |w|^2 + V_t(phi_t(x), y) |w|^2.
// Divergence-form x-part with midpoint coefficients, symmetrized first-order
// term on interior x-edges, zeroth-order terms on the diagonal. At t = 0 the
// stencil equals assemble_hamiltonian(grid, family, 0) entry for entry.
DiscreteOperator assemble_transformed_operator(double t, const DislocationFamily& family,
                                               const std::shared_ptr<const TubeGrid>& grid,
                                               double width = 1.0);

struct EquivalenceReport {
  double t = 0.0;
  std::vector<double> values_h;  // window eigenvalues of the translated operator
  std::vector<double> values_c;  // window eigenvalues of the transformed operator
  long count_h = 0;              // window inertia count, translated side
  long count_c = 0;              // window inertia count, transformed side
  double max_abs_diff = 0.0;     // over sorted pairs (first min(count) entries)
  bool counts_match = false;
};

// Spectral comparison of the two realizations inside [lo, hi].
// pre: |t| <= 1/2 and t a multiple of grid->hx (the translated side samples a
// discontinuous potential; off-grid t would add an O(hx) sampling artifact).
EquivalenceReport equivalence_check(double t, const DislocationFamily& family, double lo,
                                    double hi, const std::shared_ptr<const TubeGrid>& grid,
                                    double width = 1.0, const WindowOptions& opts = {});

struct BvReport {
  double lhs = 0.0;        // quadrature value of |W(phi(x), y) - W(x, y)| integrated
  double tv = 0.0;         // discrete total variation of the x-derivative of W
  double alpha_inf = 0.0;  // sup |phi - id|
  double rhs = 0.0;        // 2 * tv * alpha_inf * slack
  double slack = 0.0;
  bool holds = false;
};

// Composition-vs-identity L1 bound for gridded W (piecewise linear in x,
// constant across each cell in y): ||W o phi - W||_1 <= 2 TV(d_1 W) ||alpha||_inf
// with alpha = phi - id. pre: sup |phi' - 1| <= 1/2 (domain error otherwise).
BvReport bv_translation_bound(const TubeGrid& grid, const Vec& w, const Diffeomorphism& phi,
                              double slack = 1.05);

struct TranslationProbe {
  double tv = 0.0;
  std::vector<double> t_list;
  std::vector<double> ratios;  // ||f(. - t e1) - f||_1 / t, aligned with t_list
  double max_ratio = 0.0;
  double slack = 0.0;
  bool holds = false;  // every ratio <= tv * (1 + slack)
};

// Translation-Lipschitz probe: for BV-like gridded f the L1 modulus is at
// most t * TV; for smooth f the ratio tends to TV as t -> 0.
TranslationProbe translation_lipschitz_probe(const TubeGrid& grid, const Vec& f,
                                             const std::vector<double>& t_list,
                                             double slack = 1.05);

struct BranchFit {
  EigBranch branch;
  double lipschitz_constant = 0.0;        // max quotient over mutual nearest pairs
  double max_difference_quotient = 0.0;   // max quotient over all nearest matches
};

// Difference quotients of window eigenvalues between successive sweep
// parameters, eigenvalues paired by nearest value. Steps where the window is
// empty on either side are skipped (the branch left the window there).
BranchFit branch_lipschitz_fit(const EigBranch& branch);

}  // namespace gapflow
