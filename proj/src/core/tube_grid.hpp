#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace gapflow {

// Uniform finite-difference grid on the tube section (x_min, x_max) x (R/Z).
// x carries Dirichlet ends (interior lines i = 1..nx-1), y is cyclic with
// ny >= 4 nodes and hy * ny = 1 exactly.
struct TubeGrid {
  double x_min = 0.0;
  double x_max = 0.0;
  int nx = 0;  // number of x intervals; interior lines are 1..nx-1
  int ny = 0;  // number of y nodes on the circle
  double hx = 0.0;
  double hy = 0.0;

  TubeGrid(double x_min_, double x_max_, int nx_, int ny_);

  int n_lines() const { return nx - 1; }
  int n_nodes() const { return (nx - 1) * ny; }
  double x(int line) const { return x_min + hx * line; }
  double y(int j) const { return hy * j; }
};

// Scalar potential sampler on the tube; 1-periodic in y by contract.
// Analytic samplers are valid on all of R; gridded samplers carry a finite
// x-validity range and evaluate by interpolation.
struct PotentialSampler {
  std::function<double(double, double)> eval;
  bool y_independent = false;
  // Smallest x-period when the sampler is periodic in x (0 = not periodic).
  double x_period = 0.0;
  double x_lo = -1e300;
  double x_hi = 1e300;

  double operator()(double x, double y) const;
};

// Pair of single-sided media: the dislocated potential keeps v1 on x >= 0 and
// slides v2 by t on x < 0, value(t; x, y) = x >= 0 ? v1(x, y) : v2(x + t, y).
struct DislocationFamily {
  std::string name;
  PotentialSampler v1;
  PotentialSampler v2;

  double value(double t, double x, double y) const;
};

// Built-in families. Parameters:
//   free:          v1 = v2 = 0
//   mathieu:       v1 = v2 = 2q cos(2 pi (x - phase))
//   product:       v1 = v2 = 2q cos(2 pi x) + q2 cos(2 pi y)
//   quasiperiodic: v1 = v2 = q [cos(x) + eps cos(pi x)]
//   halfspace:     v1 = 0, v2 = 2q cos(2 pi x) - shift
//   step:          v1 = v2 = 2q square(x), square = 1 on [0,1/2) per unit cell
DislocationFamily make_preset_family(const std::string& preset,
                                     double q, double q2, double phase,
                                     double eps, double shift);

// Gridded sampler from CSV with header "x,y,value", row-major over nodes of a
// uniform grid; bilinear interpolation, y treated 1-periodically. Evaluation
// outside the x-range is a domain error.
PotentialSampler load_gridded_sampler(const std::string& csv_path);

}  // namespace gapflow
