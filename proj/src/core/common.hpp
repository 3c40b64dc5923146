#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

// Conventions used throughout the core:
//  * Grid functions live in plain (unweighted) ell^2; matrices are ordinary
//    symmetric matrices whose eigenvalues are energies. Continuum L^p or
//    Hilbert-Schmidt quantities carry their cell-measure factors explicitly
//    at the point where they are reported.
//  * All randomness flows through seeded engines so runs are reproducible.

namespace gapflow {

enum class errc {
  ok = 0,
  invalid_argument,
  domain,
  config,
  capacity,
  numeric,
  io,
  internal,
};

const char* errc_name(errc c);

inline constexpr const char* kVersion = "1.0.0";

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] void fail(errc code, const std::string& msg);

void require(bool cond, errc code, const std::string& msg);

// printf-style helper; output is locale-independent.
std::string strf(const char* fmt, ...);

// Shortest float form that round-trips a double (17 significant digits).
std::string fmt_g17(double v);

using rng_engine = std::mt19937_64;

// Deterministic map phase -> engine; distinct phases give independent streams.
rng_engine make_rng(std::uint64_t seed, std::uint64_t phase);

// Runs fn(i) for i in [0, n). Results must be written to per-index slots so
// the outcome is independent of the worker count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// Thread count resolution: explicit argument > GAPFLOW_THREADS > 1.
int resolve_threads(int requested);

}  // namespace gapflow
