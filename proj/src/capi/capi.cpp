// C ABI shim over the core library: opaque handles, status codes, and a
// thread-local error message. No exception may cross the C boundary.

#include "gapflow.h"

#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include "core/acceptance.hpp"
#include "core/common.hpp"
#include "core/discrete_operator.hpp"
#include "core/eigensolve.hpp"
#include "core/experiments.hpp"
#include "core/greens_kernel.hpp"
#include "core/run_config.hpp"
#include "core/tube_grid.hpp"

extern "C" {

struct gf_config {
  gapflow::RunConfig cfg;
};

struct gf_operator {
  gapflow::DiscreteOperator op;
};

}  // extern "C"

namespace {

thread_local std::string g_last_error;

gf_status to_status(gapflow::errc c) {
  switch (c) {
    case gapflow::errc::ok: return GF_OK;
    case gapflow::errc::invalid_argument: return GF_INVALID_ARGUMENT;
    case gapflow::errc::domain: return GF_DOMAIN;
    case gapflow::errc::config: return GF_CONFIG;
    case gapflow::errc::capacity: return GF_CAPACITY;
    case gapflow::errc::numeric: return GF_NUMERIC;
    case gapflow::errc::io: return GF_IO;
    case gapflow::errc::internal: return GF_INTERNAL;
  }
  return GF_INTERNAL;
}

gf_status fail_status(gf_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs body inside the exception wall shared by every entry point.
template <typename Fn>
gf_status guarded(Fn&& body) {
  try {
    return body();
  } catch (const gapflow::error& e) {
    return fail_status(to_status(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail_status(GF_INTERNAL, e.what());
  } catch (...) {
    return fail_status(GF_INTERNAL, "unknown failure");
  }
}

char* copy_out(const std::string& s) {
  char* p = new char[s.size() + 1];
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

std::string join_errors(const std::vector<gapflow::ConfigError>& errors) {
  std::string msg;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (i) msg += "; ";
    if (errors[i].line > 0) msg += gapflow::strf("line %d: ", errors[i].line);
    msg += errors[i].message;
  }
  return msg;
}

gf_status need(bool cond, const char* what) {
  if (cond) return GF_OK;
  return fail_status(GF_INVALID_ARGUMENT, gapflow::strf("%s must not be null", what));
}

}  // namespace

extern "C" {

const char* gf_version(void) { return gapflow::kVersion; }

const char* gf_last_error(void) { return g_last_error.c_str(); }

void gf_string_free(char* s) { delete[] s; }

/* ---- run configuration -------------------------------------------------- */

gf_status gf_config_parse_text(const char* text, gf_config** out) {
  if (gf_status s = need(text, "text"); s != GF_OK) return s;
  if (gf_status s = need(out, "out"); s != GF_OK) return s;
  *out = nullptr;
  return guarded([&] {
    gapflow::ParseResult res = gapflow::parse_config_text(text);
    if (!res.ok()) return fail_status(GF_CONFIG, join_errors(res.errors));
    *out = new gf_config{std::move(res.config)};
    return GF_OK;
  });
}

gf_status gf_config_parse_file(const char* path, gf_config** out) {
  if (gf_status s = need(path, "path"); s != GF_OK) return s;
  if (gf_status s = need(out, "out"); s != GF_OK) return s;
  *out = nullptr;
  return guarded([&] {
    *out = new gf_config{gapflow::load_config(path)};
    return GF_OK;
  });
}

gf_status gf_config_set(gf_config* cfg, const char* key, const char* value) {
  if (gf_status s = need(cfg, "cfg"); s != GF_OK) return s;
  if (gf_status s = need(key, "key"); s != GF_OK) return s;
  if (gf_status s = need(value, "value"); s != GF_OK) return s;
  return guarded([&] {
    const auto errors = gapflow::apply_assignment(cfg->cfg, key, value);
    if (!errors.empty()) return fail_status(GF_CONFIG, join_errors(errors));
    return GF_OK;
  });
}

gf_status gf_config_get(const gf_config* cfg, const char* key, char** out) {
  if (gf_status s = need(cfg, "cfg"); s != GF_OK) return s;
  if (gf_status s = need(key, "key"); s != GF_OK) return s;
  if (gf_status s = need(out, "out"); s != GF_OK) return s;
  *out = nullptr;
  return guarded([&] {
    const std::string canon = gapflow::serialize_config(cfg->cfg);
    const std::string prefix = std::string(key) + " = ";
    std::size_t pos = 0;
    while (pos < canon.size()) {
      std::size_t end = canon.find('\n', pos);
      if (end == std::string::npos) end = canon.size();
      const std::string line = canon.substr(pos, end - pos);
      if (line.rfind(prefix, 0) == 0) {
        *out = copy_out(line.substr(prefix.size()));
        return GF_OK;
      }
      pos = end + 1;
    }
    return fail_status(GF_INVALID_ARGUMENT, gapflow::strf("unknown key '%s'", key));
  });
}

gf_status gf_config_serialize(const gf_config* cfg, char** out) {
  if (gf_status s = need(cfg, "cfg"); s != GF_OK) return s;
  if (gf_status s = need(out, "out"); s != GF_OK) return s;
  *out = nullptr;
  return guarded([&] {
    *out = copy_out(gapflow::serialize_config(cfg->cfg));
    return GF_OK;
  });
}

gf_status gf_config_hash(const gf_config* cfg, char** out) {
  if (gf_status s = need(cfg, "cfg"); s != GF_OK) return s;
  if (gf_status s = need(out, "out"); s != GF_OK) return s;
  *out = nullptr;
  return guarded([&] {
    *out = copy_out(gapflow::config_hash(cfg->cfg));
    return GF_OK;
  });
}

void gf_config_free(gf_config* cfg) { delete cfg; }

gf_status gf_run(const gf_config* cfg, int* exit_code) {
  if (gf_status s = need(cfg, "cfg"); s != GF_OK) return s;
  if (gf_status s = need(exit_code, "exit_code"); s != GF_OK) return s;
  return guarded([&] {
    const gapflow::RunResult res = gapflow::run_experiment(cfg->cfg);
    *exit_code = res.exit_code;
    return GF_OK;
  });
}

gf_status gf_verify(const int* criteria, size_t n, int threads, int verbose,
                    int* all_passed) {
  if (gf_status s = need(all_passed, "all_passed"); s != GF_OK) return s;
  if (n > 0) {
    if (gf_status s = need(criteria, "criteria"); s != GF_OK) return s;
  }
  return guarded([&] {
    const std::vector<int> list(criteria, criteria + n);
    const gapflow::AcceptanceReport rep =
        gapflow::run_acceptance(list, threads, verbose ? &std::cout : nullptr);
    *all_passed = rep.all_passed ? 1 : 0;
    return GF_OK;
  });
}

/* ---- operators ----------------------------------------------------------- */

gf_status gf_assemble(const char* preset, double q, double q2, double phase,
                      double eps, double shift, double t, double x_lo, double x_hi,
                      int nx, int ny, gf_operator** out) {
  if (gf_status s = need(preset, "preset"); s != GF_OK) return s;
  if (gf_status s = need(out, "out"); s != GF_OK) return s;
  *out = nullptr;
  return guarded([&] {
    const auto grid = std::make_shared<gapflow::TubeGrid>(x_lo, x_hi, nx, ny);
    const gapflow::DislocationFamily fam =
        gapflow::make_preset_family(preset, q, q2, phase, eps, shift);
    const double snapped = std::round(t / grid->hx) * grid->hx;
    *out = new gf_operator{gapflow::assemble_hamiltonian(grid, fam, snapped)};
    return GF_OK;
  });
}

void gf_operator_free(gf_operator* op) { delete op; }

gf_status gf_operator_dim(const gf_operator* op, int64_t* dim) {
  if (gf_status s = need(op, "op"); s != GF_OK) return s;
  if (gf_status s = need(dim, "dim"); s != GF_OK) return s;
  *dim = op->op.dim;
  return GF_OK;
}

gf_status gf_count_below(const gf_operator* op, double energy, int64_t* count) {
  if (gf_status s = need(op, "op"); s != GF_OK) return s;
  if (gf_status s = need(count, "count"); s != GF_OK) return s;
  return guarded([&] {
    *count = gapflow::inertia_count(op->op, energy).n_below;
    return GF_OK;
  });
}

gf_status gf_window_eigenvalues(const gf_operator* op, double lo, double hi,
                                double* values, size_t* n_inout) {
  if (gf_status s = need(op, "op"); s != GF_OK) return s;
  if (gf_status s = need(n_inout, "n_inout"); s != GF_OK) return s;
  if (*n_inout > 0) {
    if (gf_status s = need(values, "values"); s != GF_OK) return s;
  }
  return guarded([&] {
    gapflow::WindowOptions opts;
    opts.max_pairs = std::max<std::size_t>(*n_inout, 1);
    const gapflow::WindowResult w = gapflow::window_spectrum(op->op, lo, hi, opts);
    if (w.values.size() > *n_inout)
      return fail_status(GF_CAPACITY,
                         gapflow::strf("window holds %zu eigenvalues, capacity %zu",
                                       w.values.size(), *n_inout));
    for (std::size_t i = 0; i < w.values.size(); ++i) values[i] = w.values[i];
    *n_inout = w.values.size();
    return GF_OK;
  });
}

gf_status gf_lowest_eigenvalues(const gf_operator* op, double* values, size_t n) {
  if (gf_status s = need(op, "op"); s != GF_OK) return s;
  if (n == 0) return GF_OK;
  if (gf_status s = need(values, "values"); s != GF_OK) return s;
  return guarded([&] {
    const gapflow::WindowResult w =
        gapflow::lowest_eigenpairs(op->op, static_cast<int>(n));
    gapflow::require(w.values.size() >= n, gapflow::errc::numeric,
                     "solver returned fewer eigenvalues than requested");
    for (std::size_t i = 0; i < n; ++i) values[i] = w.values[i];
    return GF_OK;
  });
}

/* ---- kernels -------------------------------------------------------------- */

double gf_bessel_k0(double r) {
  try {
    return gapflow::bessel_k0(r);
  } catch (...) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // extern "C"
