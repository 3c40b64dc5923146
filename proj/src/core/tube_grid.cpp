#include "core/tube_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numbers>

namespace gapflow {

TubeGrid::TubeGrid(double x_min_, double x_max_, int nx_, int ny_)
    : x_min(x_min_), x_max(x_max_), nx(nx_), ny(ny_) {
  require(std::isfinite(x_min) && std::isfinite(x_max) && x_max > x_min,
          errc::domain, "tube grid: x_max must exceed x_min");
  require(nx >= 2, errc::domain, "tube grid: nx must be >= 2");
  require(ny >= 4, errc::domain, "tube grid: ny must be >= 4");
  hx = (x_max - x_min) / nx;
  hy = 1.0 / ny;
}

double PotentialSampler::operator()(double x, double y) const {
  if (x < x_lo || x > x_hi) {
    fail(errc::domain, strf("potential sampled at x=%.6g outside validity range [%.6g, %.6g]",
                            x, x_lo, x_hi));
  }
  return eval(x, y);
}

double DislocationFamily::value(double t, double x, double y) const {
  return x >= 0.0 ? v1(x, y) : v2(x + t, y);
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

PotentialSampler analytic(std::function<double(double, double)> f,
                          bool y_independent, double x_period) {
  PotentialSampler s;
  s.eval = std::move(f);
  s.y_independent = y_independent;
  s.x_period = x_period;
  return s;
}

double unit_square_wave(double x) {
  double u = x - std::floor(x);
  return u < 0.5 ? 1.0 : 0.0;
}

}  // namespace

DislocationFamily make_preset_family(const std::string& preset,
                                     double q, double q2, double phase,
                                     double eps, double shift) {
  DislocationFamily fam;
  fam.name = preset;
  if (preset == "free") {
    fam.v1 = analytic([](double, double) { return 0.0; }, true, 1.0);
    fam.v2 = fam.v1;
  } else if (preset == "mathieu") {
    auto f = [q, phase](double x, double) { return 2.0 * q * std::cos(kTwoPi * (x - phase)); };
    fam.v1 = analytic(f, true, 1.0);
    fam.v2 = fam.v1;
  } else if (preset == "product") {
    // Separable medium; the y-part is mean-free so the transverse ground
    // level stays near zero.
    auto f = [q, q2](double x, double y) {
      return 2.0 * q * std::cos(kTwoPi * x) + q2 * std::cos(kTwoPi * y);
    };
    fam.v1 = analytic(f, false, 1.0);
    fam.v2 = fam.v1;
  } else if (preset == "quasiperiodic") {
    // Two incommensurate frequencies (1 and pi); not periodic, so only the
    // generic (counting-based) spectral paths apply.
    auto f = [q, eps](double x, double) {
      return q * (std::cos(x) + eps * std::cos(std::numbers::pi * x));
    };
    fam.v1 = analytic(f, true, 0.0);
    fam.v2 = fam.v1;
  } else if (preset == "halfspace") {
    fam.v1 = analytic([](double, double) { return 0.0; }, true, 1.0);
    fam.v2 = analytic([q, shift](double x, double) { return 2.0 * q * std::cos(kTwoPi * x) - shift; },
                      true, 1.0);
  } else if (preset == "step") {
    auto f = [q](double x, double) { return 2.0 * q * unit_square_wave(x); };
    fam.v1 = analytic(f, true, 1.0);
    fam.v2 = fam.v1;
  } else {
    fail(errc::config, strf("unknown potential preset '%s'", preset.c_str()));
  }
  return fam;
}

namespace {

struct GriddedData {
  double x0 = 0.0, dx = 0.0;
  int nx = 0, ny = 0;  // node counts; y nodes cover one period [0,1)
  double dy = 0.0;
  std::vector<double> values;  // row-major over x, then y

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * ny + j]; }
};

}  // namespace

PotentialSampler load_gridded_sampler(const std::string& csv_path) {
  std::ifstream in(csv_path);
  require(in.good(), errc::io, strf("cannot open potential file '%s'", csv_path.c_str()));
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), errc::io,
          strf("empty potential file '%s'", csv_path.c_str()));
  {
    std::string h = line;
    h.erase(std::remove_if(h.begin(), h.end(), [](char c) { return c == ' ' || c == '\r'; }), h.end());
    require(h == "x,y,value", errc::io,
            strf("potential file '%s': expected header 'x,y,value', got '%s'",
                 csv_path.c_str(), line.c_str()));
  }
  std::vector<double> xs, ys, vs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    double x, y, v;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &v) != 3) {
      fail(errc::io, strf("potential file '%s': malformed row at line %zu", csv_path.c_str(), line_no));
    }
    xs.push_back(x);
    ys.push_back(y);
    vs.push_back(v);
  }
  require(!vs.empty(), errc::io, strf("potential file '%s': no data rows", csv_path.c_str()));

  auto data = std::make_shared<GriddedData>();
  // Row-major: x varies slowest. Count the leading block of equal x to get ny.
  int ny = 0;
  while (ny < static_cast<int>(xs.size()) && xs[ny] == xs[0]) ++ny;
  require(ny >= 2, errc::io, strf("potential file '%s': need >= 2 y-nodes", csv_path.c_str()));
  require(xs.size() % static_cast<std::size_t>(ny) == 0, errc::io,
          strf("potential file '%s': ragged grid", csv_path.c_str()));
  int nx = static_cast<int>(xs.size()) / ny;
  require(nx >= 2, errc::io, strf("potential file '%s': need >= 2 x-nodes", csv_path.c_str()));
  data->nx = nx;
  data->ny = ny;
  data->x0 = xs[0];
  data->dx = (xs.back() - xs.front()) / (nx - 1);
  require(data->dx > 0, errc::io, strf("potential file '%s': x must be increasing", csv_path.c_str()));
  data->dy = ys[1] - ys[0];
  require(data->dy > 0, errc::io, strf("potential file '%s': y must be increasing", csv_path.c_str()));
  // y nodes must tile one period: ny * dy == 1 within rounding.
  require(std::abs(data->dy * ny - 1.0) < 1e-9, errc::io,
          strf("potential file '%s': y nodes must cover one unit period (ny*dy=1)", csv_path.c_str()));
  data->values = std::move(vs);

  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      std::size_t k = static_cast<std::size_t>(i) * ny + j;
      double ex = data->x0 + i * data->dx;
      double ey = ys[0] + j * data->dy;
      if (std::abs(xs[k] - ex) > 1e-9 * std::max(1.0, std::abs(ex)) ||
          std::abs(ys[k] - ey) > 1e-9) {
        fail(errc::io, strf("potential file '%s': nodes are not a uniform row-major grid (row %zu)",
                            csv_path.c_str(), k + 2));
      }
    }
  }

  double y0 = ys[0];
  PotentialSampler s;
  s.y_independent = false;
  s.x_period = 0.0;
  s.x_lo = data->x0;
  s.x_hi = data->x0 + (nx - 1) * data->dx;
  s.eval = [data, y0](double x, double y) {
    double fx = (x - data->x0) / data->dx;
    int i0 = static_cast<int>(std::floor(fx));
    i0 = std::clamp(i0, 0, data->nx - 2);
    double wx = std::clamp(fx - i0, 0.0, 1.0);
    double fy = (y - y0) / data->dy;
    double jw = fy - std::floor(fy / data->ny) * data->ny;  // wrap into [0, ny)
    int j0 = static_cast<int>(std::floor(jw)) % data->ny;
    double wy = jw - std::floor(jw);
    int j1 = (j0 + 1) % data->ny;
    double v00 = data->at(i0, j0), v01 = data->at(i0, j1);
    double v10 = data->at(i0 + 1, j0), v11 = data->at(i0 + 1, j1);
    return (1 - wx) * ((1 - wy) * v00 + wy * v01) + wx * ((1 - wy) * v10 + wy * v11);
  };
  return s;
}

}  // namespace gapflow
