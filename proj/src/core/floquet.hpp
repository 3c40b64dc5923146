#pragma once

// Floquet analysis of 1-periodic potentials on the discretized line.
//
// For a y-independent potential the tube operator splits over transverse
// Fourier modes, so its spectrum is a union of shifted copies of the 1-d
// band structure. That union is the fast, independent spectral-location
// oracle the gap engine and the tests both lean on; the generic (gridded,
// y-dependent) path locates gaps through eigenvalue counts instead.

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "core/common.hpp"

namespace gapflow {

struct BandStructure {
  // Closed intervals, ascending and disjoint.
  std::vector<std::pair<double, double>> bands;
};

// Samples one period of a 1-periodic profile on the step-hx grid starting at
// `phase`; requires hx to divide the period.
std::vector<double> sample_period(const std::function<double(double)>& profile, double hx,
                                  double phase = 0.0);

// Trace of the one-period transfer cocycle at spectral parameter lambda.
// lambda is in the spectrum of the discrete periodic operator iff the trace
// lies in [-2, 2]. Saturates at +-1e150 deep inside gaps.
double floquet_discriminant(const std::vector<double>& v, double hx, double lambda);

// Bands of the 1-d discrete periodic operator inside [lo, hi], located by a
// scan of the discriminant and bisection of each edge.
BandStructure floquet_bands(const std::vector<double>& v, double hx, double lo, double hi,
                            int scan_points);

// Transverse mode offsets of the discrete circle of circumference 1:
// (4/hy^2) sin^2(pi k / ny), ascending, duplicates removed.
std::vector<double> transverse_shifts(int ny, double hy);

// Union of shifted copies of `base`, clipped to [lo, hi].
BandStructure shifted_union(const BandStructure& base, const std::vector<double>& shifts,
                            double lo, double hi);

// Band structure of the tube operator for a y-independent 1-periodic profile,
// restricted to [lo, hi].
BandStructure tube_bands(const std::function<double(double)>& profile, double hx, int ny,
                         double hy, double lo, double hi, double phase = 0.0);

// Eigenvalues of the discrete transverse circle operator with a potential:
// (-second difference on ny cyclic points)/hy^2 + diag(profile samples).
// These replace the bare mode offsets when the potential factors as
// V1(x) + V2(y).
std::vector<double> ring_eigenvalues(const std::function<double(double)>& profile, int ny,
                                     double hy);

bool in_spectrum(const BandStructure& s, double lambda, double tol = 0.0);

// Distance from lambda to the band union (0 inside).
double spectrum_distance(const BandStructure& s, double lambda);

// The open gap containing lambda; endpoints are +-infinity beyond the first
// or last band. Empty when lambda lies in a band.
std::optional<std::pair<double, double>> enclosing_gap(const BandStructure& s, double lambda);

}  // namespace gapflow
