#include "core/common.hpp"

#include <algorithm>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace gapflow {

const char* errc_name(errc c) {
  switch (c) {
    case errc::ok: return "ok";
    case errc::invalid_argument: return "invalid_argument";
    case errc::domain: return "domain";
    case errc::config: return "config";
    case errc::capacity: return "capacity";
    case errc::numeric: return "numeric";
    case errc::io: return "io";
    case errc::internal: return "internal";
  }
  return "unknown";
}

void fail(errc code, const std::string& msg) { throw error(code, msg); }

void require(bool cond, errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

std::string strf(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  va_list copy;
  va_copy(copy, args);
  int n = std::vsnprintf(nullptr, 0, fmt, copy);
  va_end(copy);
  std::string out(n > 0 ? static_cast<std::size_t>(n) : 0, '\0');
  if (n > 0) std::vsnprintf(out.data(), out.size() + 1, fmt, args);
  va_end(args);
  return out;
}

std::string fmt_g17(double v) { return strf("%.17g", v); }

rng_engine make_rng(std::uint64_t seed, std::uint64_t phase) {
  // splitmix-style scramble keeps streams for nearby (seed, phase) unrelated.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (phase + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z ^= z >> 31;
  return rng_engine(z);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  int nt = resolve_threads(threads);
  if (nt <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  nt = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(nt), n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nt));
  std::exception_ptr first_error;
  std::mutex err_mutex;
  for (int w = 0; w < nt; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = static_cast<std::size_t>(w); i < n; i += static_cast<std::size_t>(nt)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GAPFLOW_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0 && v < 1024) return static_cast<int>(v);
  }
  return 1;
}

}  // namespace gapflow
