// Declarative run configuration: a flat key = value text format with dotted
// section prefixes (documented in README.md). Parsing collects every
// validation error instead of stopping at the first, rejects unknown keys
// with a nearest-key suggestion, and round-trips: parse(serialize(c)) == c
// for any validated config. The canonical serialization also feeds the
// config hash recorded in run manifests.

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace gapflow {

enum class RunKind { spectrum, sweep, decay, decoupling, greens, transform, ids, verify };

const char* kind_name(RunKind kind);

constexpr double kAuto = std::numeric_limits<double>::quiet_NaN();  // "pick from the gap"

struct RunConfig {
  RunKind kind = RunKind::spectrum;
  int threads = 0;  // 0 = GAPFLOW_THREADS, then 1
  std::uint64_t seed = 20240901;
  std::string out_dir = "gapflow_out";

  // grid.*  (tube section (x_lo, x_hi) x circle; nx intervals, ny nodes)
  double x_lo = -20.0;
  double x_hi = 20.0;
  int nx = 800;
  int ny = 16;

  // potential.*  (preset parameters; a gridded file overrides the preset)
  std::string preset = "mathieu";
  double q = 1.0;
  double q2 = 0.0;
  double phase = 0.0;
  double eps = 0.3;
  double shift = 0.0;
  std::string potential_file;   // CSV sampler for both media
  std::string potential_file2;  // optional second medium

  // gap.*  (NaN = choose automatically from the located band structure)
  double gap_energy = kAuto;
  double gap_lo = kAuto;
  double gap_hi = kAuto;

  // spectrum.*
  double spectrum_t = 0.0;
  int spectrum_count = 10;

  // sweep.*
  double sweep_t_max = 8.0;
  double sweep_n = 20.0;  // box half-length (snapped to the grid inside)
  double refine_tol = 1e-6;

  // decay.*
  double decay_t = 3.0;
  std::vector<int> ct_k_list = {2, 4, 8, 16};

  // decoupling.*
  std::vector<double> dec_n_list = {20.0, 40.0, 80.0};
  std::vector<double> dec_t_list = {1.0, 2.0, 3.0};

  // greens.*  (kernel dump around a fixed source point + HS-norm quadrature)
  double greens_source_x = 0.25;
  double greens_source_y = 0.5;
  int greens_points = 24;
  double greens_extent = 3.0;
  double hs_tol = 0.02;
  int hs_level = 2;

  // transform.*
  std::vector<double> transform_t_list = {0.0, 0.1, 0.25};
  double transform_width = 1.0;

  // ids.*  (NaN window = the gap-spec working window)
  double ids_t = 0.0;
  std::vector<double> ids_n_list = {4.0, 8.0, 16.0};
  int ids_resolution = 16;
  double ids_alpha = kAuto;
  double ids_beta = kAuto;
  bool ids_certify = true;

  // verify.*  (empty = all criteria)
  std::vector<int> verify_criteria;
};


struct ConfigError {
  int line = 0;  // 0 when not attached to a specific line
  std::string message;
};

struct ParseResult {
  RunConfig config;
  std::vector<ConfigError> errors;
  bool ok() const { return errors.empty(); }
};

// Collects every syntax and validation error; the config is meaningful only
// when ok().
ParseResult parse_config_text(const std::string& text);

// Applies a single key = value assignment on top of an existing config and
// re-validates; returns every resulting error (empty on success). Backs the
// CLI flag overrides.
std::vector<ConfigError> apply_assignment(RunConfig& config, const std::string& key,
                                          const std::string& value);

// Throwing wrapper: every collected error joined into one config error.
RunConfig parse_config(const std::string& text);

RunConfig load_config(const std::string& path);  // io error when unreadable

// Canonical form: every key, sorted sections, 17-significant-digit floats.
// Config equality is canonical-serialization equality (the auto markers are
// NaN, so field-wise comparison would reject identical configs).
std::string serialize_config(const RunConfig& config);

// FNV-1a 64 over the canonical serialization, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace gapflow
