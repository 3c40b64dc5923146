// Exercises the shared library through the public C header only; no core
// headers, so this also proves the exported symbol set is sufficient.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gapflow.h"

namespace {

std::string owned(char* s) {
  std::string copy = s ? s : "";
  gf_string_free(s);
  return copy;
}

struct ConfigGuard {
  gf_config* cfg = nullptr;
  ~ConfigGuard() { gf_config_free(cfg); }
};

struct OperatorGuard {
  gf_operator* op = nullptr;
  ~OperatorGuard() { gf_operator_free(op); }
};

constexpr double kPi = 3.14159265358979323846;

// Free tube on (x_lo, x_hi) with Dirichlet ends: the discrete eigenvalues
// separate into axial sine modes and transverse circle modes.
std::vector<double> free_tube_modes(double x_lo, double x_hi, int nx, int ny) {
  const double hx = (x_hi - x_lo) / nx;
  const double hy = 1.0 / ny;
  std::vector<double> modes;
  for (int m = 1; m < nx; ++m)
    for (int k = 0; k < ny; ++k)
      modes.push_back(4.0 / (hx * hx) * std::pow(std::sin(0.5 * kPi * m / nx), 2) +
                      4.0 / (hy * hy) * std::pow(std::sin(kPi * k / ny), 2));
  std::sort(modes.begin(), modes.end());
  return modes;
}

}  // namespace

TEST_CASE("version string and error channel basics") {
  CHECK(std::string(gf_version()) == "1.0.0");
  CHECK(gf_last_error() != nullptr);
}

TEST_CASE("config lifecycle: parse, get, set, serialize, hash") {
  ConfigGuard g;
  REQUIRE(gf_config_parse_text("", &g.cfg) == GF_OK);
  REQUIRE(g.cfg != nullptr);

  CHECK(owned([&] { char* s = nullptr; gf_config_get(g.cfg, "kind", &s); return s; }()) ==
        "spectrum");
  CHECK(owned([&] { char* s = nullptr; gf_config_get(g.cfg, "gap.energy", &s); return s; }()) ==
        "auto");

  char* out = nullptr;
  REQUIRE(gf_config_serialize(g.cfg, &out) == GF_OK);
  const std::string canon = owned(out);
  CHECK(canon.find("seed = 20240901\n") != std::string::npos);
  CHECK(canon.find("potential.preset = mathieu\n") != std::string::npos);

  REQUIRE(gf_config_hash(g.cfg, &out) == GF_OK);
  const std::string h1 = owned(out);
  CHECK(h1.size() == 16);

  REQUIRE(gf_config_set(g.cfg, "seed", "42") == GF_OK);
  REQUIRE(gf_config_hash(g.cfg, &out) == GF_OK);
  CHECK(owned(out) != h1);

  // canonical text reparses to the same canonical text
  REQUIRE(gf_config_serialize(g.cfg, &out) == GF_OK);
  const std::string canon2 = owned(out);
  ConfigGuard g2;
  REQUIRE(gf_config_parse_text(canon2.c_str(), &g2.cfg) == GF_OK);
  REQUIRE(gf_config_serialize(g2.cfg, &out) == GF_OK);
  CHECK(owned(out) == canon2);
}

TEST_CASE("config failures: enumerated validation errors, unknown keys, nulls") {
  gf_config* cfg = nullptr;
  CHECK(gf_config_parse_text("grid.ny = 3\nthreads = -1\n", &cfg) == GF_CONFIG);
  CHECK(cfg == nullptr);
  const std::string msg = gf_last_error();
  CHECK(msg.find("grid.ny") != std::string::npos);
  CHECK(msg.find("threads") != std::string::npos);

  ConfigGuard g;
  REQUIRE(gf_config_parse_text("", &g.cfg) == GF_OK);
  CHECK(gf_config_set(g.cfg, "grid.nz", "7") == GF_CONFIG);
  CHECK(std::string(gf_last_error()).find("unknown key") != std::string::npos);

  char* out = nullptr;
  CHECK(gf_config_get(g.cfg, "grid.nz", &out) == GF_INVALID_ARGUMENT);
  CHECK(out == nullptr);

  CHECK(gf_config_parse_text(nullptr, &cfg) == GF_INVALID_ARGUMENT);
  CHECK(std::string(gf_last_error()).find("must not be null") != std::string::npos);
  CHECK(gf_config_parse_text("", nullptr) == GF_INVALID_ARGUMENT);
  CHECK(gf_config_parse_file("/nonexistent/gapflow.cfg", &cfg) == GF_IO);

  int64_t dim = 0;
  CHECK(gf_operator_dim(nullptr, &dim) == GF_INVALID_ARGUMENT);
}

TEST_CASE("assembled free tube matches the separable mode oracle") {
  OperatorGuard g;
  const double x_lo = -10.0, x_hi = 10.0;
  const int nx = 200, ny = 8;
  REQUIRE(gf_assemble("free", 0, 0, 0, 0, 0, 0.0, x_lo, x_hi, nx, ny, &g.op) == GF_OK);
  REQUIRE(g.op != nullptr);

  int64_t dim = 0;
  REQUIRE(gf_operator_dim(g.op, &dim) == GF_OK);
  CHECK(dim == static_cast<int64_t>(nx - 1) * ny);

  const std::vector<double> oracle = free_tube_modes(x_lo, x_hi, nx, ny);

  double lowest[5] = {0, 0, 0, 0, 0};
  REQUIRE(gf_lowest_eigenvalues(g.op, lowest, 5) == GF_OK);
  for (int i = 0; i < 5; ++i)
    CHECK(lowest[i] == doctest::Approx(oracle[i]).epsilon(1e-9));

  int64_t count = 0;
  REQUIRE(gf_count_below(g.op, 1.0, &count) == GF_OK);
  int64_t expect = 0;
  for (double v : oracle)
    if (v < 1.0) ++expect;
  CHECK(count == expect);
}

TEST_CASE("window extraction honors capacity and returns certified values") {
  OperatorGuard g;
  REQUIRE(gf_assemble("free", 0, 0, 0, 0, 0, 0.0, -10, 10, 200, 8, &g.op) == GF_OK);
  const std::vector<double> oracle = free_tube_modes(-10, 10, 200, 8);
  const double lo = 0.5, hi = 2.5;
  std::size_t expect = 0;
  for (double v : oracle)
    if (v >= lo && v < hi) ++expect;
  REQUIRE(expect >= 2);

  std::size_t cap = 0;
  CHECK(gf_window_eigenvalues(g.op, lo, hi, nullptr, &cap) == GF_CAPACITY);

  std::vector<double> values(16, 0.0);
  std::size_t n = values.size();
  REQUIRE(gf_window_eigenvalues(g.op, lo, hi, values.data(), &n) == GF_OK);
  REQUIRE(n == expect);
  std::size_t oi = 0;
  while (oracle[oi] < lo) ++oi;
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(values[i] == doctest::Approx(oracle[oi + i]).epsilon(1e-8));
    if (i) CHECK(values[i] >= values[i - 1]);
  }
}

TEST_CASE("assembly failures map to the documented statuses") {
  gf_operator* op = nullptr;
  CHECK(gf_assemble("nope", 0, 0, 0, 0, 0, 0, -5, 5, 100, 8, &op) == GF_CONFIG);
  CHECK(op == nullptr);
  CHECK(std::string(gf_last_error()).find("unknown potential preset") != std::string::npos);
  CHECK(gf_assemble("free", 0, 0, 0, 0, 0, 0, -5, 5, 100, 3, &op) == GF_DOMAIN);
  CHECK(gf_assemble("free", 0, 0, 0, 0, 0, 0, 5, -5, 100, 8, &op) == GF_DOMAIN);
  CHECK(gf_assemble(nullptr, 0, 0, 0, 0, 0, 0, -5, 5, 100, 8, &op) == GF_INVALID_ARGUMENT);
}

TEST_CASE("bessel k0: pinned value, monotone decay, NaN off-domain") {
  CHECK(gf_bessel_k0(1.0) == doctest::Approx(0.421024438240708).epsilon(1e-12));
  CHECK(gf_bessel_k0(0.5) > gf_bessel_k0(1.0));
  CHECK(gf_bessel_k0(1.0) > gf_bessel_k0(2.0));
  CHECK(std::isnan(gf_bessel_k0(0.0)));
  CHECK(std::isnan(gf_bessel_k0(-1.0)));
}

TEST_CASE("gf_run executes a small spectrum experiment end to end") {
  namespace fs = std::filesystem;
  const fs::path out_dir = fs::temp_directory_path() / "gapflow_capi_run";
  fs::remove_all(out_dir);

  ConfigGuard g;
  REQUIRE(gf_config_parse_text("kind = spectrum\n"
                               "potential.preset = free\n"
                               "grid.x_lo = -2\n"
                               "grid.x_hi = 2\n"
                               "grid.nx = 40\n"
                               "grid.ny = 4\n"
                               "spectrum.count = 3\n",
                               &g.cfg) == GF_OK);
  REQUIRE(gf_config_set(g.cfg, "out", out_dir.string().c_str()) == GF_OK);

  int exit_code = -1;
  REQUIRE(gf_run(g.cfg, &exit_code) == GF_OK);
  CHECK(exit_code == 0);
  CHECK(fs::exists(out_dir / "spectrum.csv"));
  CHECK(fs::exists(out_dir / "manifest.json"));

  // manifest records the config hash the library reports
  char* out = nullptr;
  REQUIRE(gf_config_hash(g.cfg, &out) == GF_OK);
  const std::string h = owned(out);
  std::ifstream in(out_dir / "manifest.json");
  const std::string manifest((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  CHECK(manifest.find(h) != std::string::npos);
  fs::remove_all(out_dir);
}
