#include "core/greens_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gapflow {

namespace {

// K0(r) <= kExpBoundC * e^(-r) for r >= 1 (the ratio peaks at r = 1).
constexpr double kExpBoundC = 1.2;

// Tail of an image sum past |k| = K (every dropped image is at distance
// >= K >= 1): 2 * C * sum_{j >= K} e^-j.
double image_tail_bound(int K) {
  return 2.0 * kExpBoundC * std::exp(-static_cast<double>(K)) / (1.0 - std::exp(-1.0));
}

// Image sum over circle shifts for axial offset dx and circle offset d2:
// sum_k K0(sqrt(dx^2 + (d2 + k)^2)). Returns the truncation level used.
double image_sum(double dx, double d2, double tol, int* images_used, double* tail_bound) {
  double frac = d2 - std::floor(d2);  // representative offset in [0, 1)
  double rmin2 = dx * dx + std::min(frac, 1.0 - frac) * std::min(frac, 1.0 - frac);
  require(rmin2 > 0.0, errc::domain, "tube kernel evaluated on the diagonal");
  double sum = bessel_k0(std::sqrt(dx * dx + frac * frac));
  int K = 0;
  while (K < 1 || image_tail_bound(K) > tol) {
    ++K;
    double up = frac + static_cast<double>(K);
    double dn = frac - static_cast<double>(K);
    sum += bessel_k0(std::sqrt(dx * dx + up * up));
    sum += bessel_k0(std::sqrt(dx * dx + dn * dn));
    require(K < 800, errc::invalid_argument, "image tolerance unattainably small");
  }
  if (images_used) *images_used = K;
  if (tail_bound) *tail_bound = image_tail_bound(K);
  return sum;
}

double gl_node_poly(int n, double x, double* deriv) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  *deriv = n * (x * p1 - p0) / (x * x - 1.0);
  return p1;
}

}  // namespace

std::vector<std::pair<double, double>> gauss_legendre01(int n) {
  require(n >= 1 && n <= 256, errc::invalid_argument, "quadrature order out of range");
  std::vector<std::pair<double, double>> out(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 64; ++it) {
      double p = gl_node_poly(n, x, &dp);
      double step = p / dp;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    gl_node_poly(n, x, &dp);
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out[i] = {0.5 * (1.0 - x), 0.5 * w};
    out[n - 1 - i] = {0.5 * (1.0 + x), 0.5 * w};
  }
  return out;
}

double bessel_k0(double r) {
  require(r > 0.0, errc::domain, "K0 is defined for r > 0 only");
  if (r <= 2.0) {
    // K0 = -(log(r/2) + euler) I0(r) + sum_k (r^2/4)^k H_k / (k!)^2.
    double q = 0.25 * r * r;
    double term = 1.0;
    double i0 = 1.0;
    double hsum = 0.0;
    double hk = 0.0;
    for (int k = 1; k <= 64; ++k) {
      term *= q / (static_cast<double>(k) * static_cast<double>(k));
      hk += 1.0 / static_cast<double>(k);
      i0 += term;
      hsum += term * hk;
      if (term * (hk + 1.0) < 1e-18 * i0) break;
    }
    constexpr double euler = 0.57721566490153286;
    return -(std::log(0.5 * r) + euler) * i0 + hsum;
  }
  // r > 2: substituting cosh s = 1 + v^2/... reduces the integral
  // representation to sqrt(2) e^-r / sqrt(r) * int_0^inf e^-{v^2}
  // (1 + v^2/(2r))^{-1/2} dv; the integrand is analytic and the Gaussian
  // cutoff makes [0, 6.5] enough for double precision.
  static const std::vector<std::pair<double, double>> gl = gauss_legendre01(64);
  constexpr double vmax = 6.5;
  double sum = 0.0;
  for (const auto& [t, w] : gl) {
    double v = vmax * t;
    sum += w * std::exp(-v * v) / std::sqrt(1.0 + v * v / (2.0 * r));
  }
  sum *= vmax;
  return std::numbers::sqrt2 * std::exp(-r) / std::sqrt(r) * sum;
}

GreensEval tube_green(TubePoint x, TubePoint y, double tol) {
  require(tol > 0.0, errc::invalid_argument, "tolerance must be positive");
  GreensEval ev;
  ev.x = x;
  ev.y = y;
  ev.value = image_sum(x.x1 - y.x1, x.x2 - y.x2, tol, &ev.images_used, &ev.tail_bound);
  return ev;
}

double decoupled_green_diff(TubePoint x, TubePoint y, double tol) {
  require(std::abs(x.x1) > 1e-12 && std::abs(y.x1) > 1e-12, errc::domain,
          "difference kernel is defined off the cut line");
  if (x.x1 * y.x1 > 0.0) {
    TubePoint xs{-x.x1, x.x2};
    return tube_green(xs, y, tol).value;  // same side: reflected image charge
  }
  return tube_green(x, y, tol).value;  // across the cut: decoupled part is zero
}

double reflected_image_sum(double s, double delta, double tol) {
  require(s >= 0.0, errc::invalid_argument, "cut distance must be nonnegative");
  return image_sum(s, delta, tol, nullptr, nullptr);
}

namespace {

// Deterministic pairwise tree sum; the result does not depend on how slots
// were produced (thread count), only on their order.
double tree_sum(std::vector<double> v) {
  if (v.empty()) return 0.0;
  while (v.size() > 1) {
    std::size_t half = (v.size() + 1) / 2;
    for (std::size_t i = 0; 2 * i + 1 < v.size(); ++i) v[i] = v[2 * i] + v[2 * i + 1];
    if (v.size() % 2 == 1) v[half - 1] = v[v.size() - 1];
    v.resize(half);
  }
  return v[0];
}

// int_0^1 g(s, delta)^2 d delta with panels graded toward both circle
// endpoints down to scale ~s (below that the integrand is smooth at scale s).
double circle_integral(double s, double image_tol, int nodes) {
  const std::vector<std::pair<double, double>> gl = gauss_legendre01(nodes);
  double floor_scale = std::max(s * 0.25, 1e-12);
  std::vector<std::pair<double, double>> panels;  // on [0, 1/2], mirrored later
  double hi = 0.5;
  while (hi > floor_scale * 2.0) {
    double lo = std::max(hi * 0.5, 0.0);
    panels.push_back({lo, hi});
    hi = lo;
  }
  panels.push_back({0.0, hi});
  double total = 0.0;
  for (const auto& [lo, hip] : panels) {
    double len = hip - lo;
    if (len <= 0) continue;
    double acc_lo = 0.0, acc_hi = 0.0;
    for (const auto& [t, w] : gl) {
      double d_lo = lo + len * t;                 // panel on [0, 1/2]
      double d_hi = 1.0 - d_lo;                   // mirrored panel on [1/2, 1]
      double g_lo = reflected_image_sum(s, d_lo, image_tol);
      double g_hi = reflected_image_sum(s, d_hi, image_tol);
      acc_lo += w * g_lo * g_lo;
      acc_hi += w * g_hi * g_hi;
    }
    total += len * (acc_lo + acc_hi);
  }
  return total;
}

// I(level) = int_{s_min}^{s_max} s * circle_integral(s) ds over dyadic panels.
double quadrant_integral(const HsQuadrature& spec, int level) {
  int sub = std::max(1, level);         // dyadic panels split into `sub` parts
  int ns = 10 + 2 * level;              // axial nodes per panel
  int nd = 6 + 2 * level;               // circle nodes per panel
  const std::vector<std::pair<double, double>> gl = gauss_legendre01(ns);

  // Panel edges: dyadic from s_max downward, stopping at s_min (or at a
  // floor below which s * log^2 s contributes nothing at double precision).
  double stop = std::max(spec.s_min, 1e-10);
  std::vector<std::pair<double, double>> panels;
  double hi = spec.s_max;
  while (hi > stop * (1.0 + 1e-12)) {
    double lo = std::max(hi * 0.5, stop);
    double step = (hi - lo) / sub;
    for (int i = sub - 1; i >= 0; --i) panels.push_back({lo + i * step, lo + (i + 1) * step});
    hi = lo;
  }

  std::vector<double> partial(panels.size(), 0.0);
  parallel_for(panels.size(), spec.threads, [&](std::size_t p) {
    auto [lo, hip] = panels[p];
    double len = hip - lo;
    double acc = 0.0;
    for (const auto& [t, w] : gl) {
      double s = lo + len * t;
      acc += w * s * circle_integral(s, spec.image_tol, nd);
    }
    partial[p] = len * acc;
  });
  return tree_sum(std::move(partial));
}

// Tail of I past s_max: g(s, delta) <= 4.8 e^{-s/sqrt(2)} from the exp bound
// on every image, so the integrand is below 23.1 s e^{-sqrt(2) s}.
double s_tail_bound(double s_max) {
  double a = std::numbers::sqrt2;
  return 23.1 * std::exp(-a * s_max) * (s_max / a + 1.0 / (a * a));
}

}  // namespace

HsNormResult kernel_hs_norm(double tol, const HsQuadrature& spec) {
  require(tol > 0.0, errc::invalid_argument, "tolerance must be positive");
  require(spec.level >= 1, errc::invalid_argument, "quadrature level must be >= 1");
  require(spec.s_max > spec.s_min && spec.s_min >= 0.0, errc::invalid_argument,
          "bad cut-distance range");

  double fine = quadrant_integral(spec, spec.level);
  double coarse = quadrant_integral(spec, std::max(1, spec.level - 1));

  HsNormResult res;
  res.integral = fine;
  // All four side combinations reduce to the same quadrant integral: the
  // kernel depends only on |x1| + |y1| and the circle offset.
  res.value = 2.0 * std::sqrt(std::max(fine, 0.0));
  double tail = s_tail_bound(spec.s_max);
  double coarse_val = 2.0 * std::sqrt(std::max(coarse, 0.0));
  res.est_error = std::abs(res.value - coarse_val) + tail;
  res.converged = res.est_error <= tol * std::max(res.value, 1e-300);
  return res;
}

}  // namespace gapflow
