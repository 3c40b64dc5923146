#include "core/floquet.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gapflow {

namespace {

constexpr double kHuge = 1e150;
constexpr double kPi = 3.14159265358979323846;

}  // namespace

std::vector<double> sample_period(const std::function<double(double)>& profile, double hx,
                                  double phase) {
  require(hx > 0, errc::invalid_argument, "sample_period: hx must be positive");
  int p = static_cast<int>(std::lround(1.0 / hx));
  require(p >= 2 && std::abs(p * hx - 1.0) <= 1e-9, errc::invalid_argument,
          strf("sample_period: hx=%.17g does not divide the unit period", hx));
  std::vector<double> v(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) v[static_cast<std::size_t>(i)] = profile(phase + i * hx);
  return v;
}

double floquet_discriminant(const std::vector<double>& v, double hx, double lambda) {
  require(!v.empty(), errc::invalid_argument, "floquet_discriminant: empty sample vector");
  // State (u_i, u_{i-1}) advances by [[a_i, -1], [1, 0]] with
  // a_i = 2 + hx^2 (v_i - lambda); accumulate the one-period product.
  double m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0;
  int rescales = 0;
  const double h2 = hx * hx;
  for (double vi : v) {
    double a = 2.0 + h2 * (vi - lambda);
    double n00 = a * m00 - m10;
    double n01 = a * m01 - m11;
    m10 = m00;
    m11 = m01;
    m00 = n00;
    m01 = n01;
    double mx = std::max(std::max(std::abs(m00), std::abs(m01)),
                         std::max(std::abs(m10), std::abs(m11)));
    if (mx > kHuge) {
      m00 /= kHuge;
      m01 /= kHuge;
      m10 /= kHuge;
      m11 /= kHuge;
      ++rescales;
    }
  }
  double tr = m00 + m11;
  if (rescales > 0) return tr >= 0 ? kHuge : -kHuge;
  return tr;
}

BandStructure floquet_bands(const std::vector<double>& v, double hx, double lo, double hi,
                            int scan_points) {
  require(lo < hi, errc::invalid_argument, "floquet_bands: lo must be below hi");
  require(scan_points >= 16, errc::invalid_argument, "floquet_bands: scan too coarse");
  auto outside = [&](double lam) {
    return std::abs(floquet_discriminant(v, hx, lam)) > 2.0;
  };
  auto refine_edge = [&](double a, double b) {
    // One endpoint inside, the other outside; bisect to the band edge.
    bool a_out = outside(a);
    for (int it = 0; it < 80 && b - a > 1e-13 * (1.0 + std::abs(a)); ++it) {
      double mid = 0.5 * (a + b);
      if (outside(mid) == a_out) {
        a = mid;
      } else {
        b = mid;
      }
    }
    return 0.5 * (a + b);
  };

  BandStructure out;
  double step = (hi - lo) / scan_points;
  bool prev_out = outside(lo);
  double band_start = prev_out ? 0.0 : lo;
  double prev_x = lo;
  for (int i = 1; i <= scan_points; ++i) {
    double x = (i == scan_points) ? hi : lo + i * step;
    bool cur_out = outside(x);
    if (cur_out != prev_out) {
      double edge = refine_edge(prev_x, x);
      if (prev_out) {
        band_start = edge;  // entering a band
      } else {
        out.bands.emplace_back(band_start, edge);
      }
      prev_out = cur_out;
    }
    prev_x = x;
  }
  if (!prev_out) out.bands.emplace_back(band_start, hi);
  return out;
}

std::vector<double> transverse_shifts(int ny, double hy) {
  require(ny >= 2 && hy > 0, errc::invalid_argument, "transverse_shifts: bad grid");
  std::vector<double> shifts;
  shifts.reserve(static_cast<std::size_t>(ny));
  for (int k = 0; k < ny; ++k) {
    double s = std::sin(kPi * k / ny);
    shifts.push_back(4.0 / (hy * hy) * s * s);
  }
  std::sort(shifts.begin(), shifts.end());
  shifts.erase(std::unique(shifts.begin(), shifts.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               shifts.end());
  return shifts;
}

BandStructure shifted_union(const BandStructure& base, const std::vector<double>& shifts,
                            double lo, double hi) {
  std::vector<std::pair<double, double>> parts;
  for (double s : shifts) {
    for (const auto& [a, b] : base.bands) {
      double ca = std::max(a + s, lo);
      double cb = std::min(b + s, hi);
      if (ca <= cb) parts.emplace_back(ca, cb);
    }
  }
  std::sort(parts.begin(), parts.end());
  BandStructure out;
  for (const auto& p : parts) {
    if (!out.bands.empty() && p.first <= out.bands.back().second + 1e-9) {
      out.bands.back().second = std::max(out.bands.back().second, p.second);
    } else {
      out.bands.push_back(p);
    }
  }
  return out;
}

BandStructure tube_bands(const std::function<double(double)>& profile, double hx, int ny,
                         double hy, double lo, double hi, double phase) {
  std::vector<double> shifts = transverse_shifts(ny, hy);
  // A copy shifted by s covers [lo, hi] from base values down to lo - s.
  double base_lo = lo - shifts.back();
  double range = hi - base_lo;
  int pts = static_cast<int>(std::clamp(range * 300.0, 2000.0, 200000.0));
  std::vector<double> v = sample_period(profile, hx, phase);
  BandStructure base = floquet_bands(v, hx, base_lo, hi, pts);
  return shifted_union(base, shifts, lo, hi);
}

std::vector<double> ring_eigenvalues(const std::function<double(double)>& profile, int ny,
                                     double hy) {
  require(ny >= 3 && hy > 0, errc::invalid_argument, "ring_eigenvalues: bad grid");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(ny, ny);
  double c = 1.0 / (hy * hy);
  for (int j = 0; j < ny; ++j) {
    a(j, j) = 2.0 * c + profile(j * hy);
    int jn = (j + 1) % ny;
    a(j, jn) -= c;
    a(jn, j) -= c;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + ny);
  return out;
}

bool in_spectrum(const BandStructure& s, double lambda, double tol) {
  for (const auto& [a, b] : s.bands) {
    if (lambda >= a - tol && lambda <= b + tol) return true;
  }
  return false;
}

double spectrum_distance(const BandStructure& s, double lambda) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : s.bands) {
    if (lambda >= a && lambda <= b) return 0.0;
    d = std::min(d, std::min(std::abs(lambda - a), std::abs(lambda - b)));
  }
  return d;
}

std::optional<std::pair<double, double>> enclosing_gap(const BandStructure& s, double lambda) {
  if (in_spectrum(s, lambda)) return std::nullopt;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : s.bands) {
    if (b < lambda) lo = std::max(lo, b);
    if (a > lambda) hi = std::min(hi, a);
  }
  return std::make_pair(lo, hi);
}

}  // namespace gapflow
