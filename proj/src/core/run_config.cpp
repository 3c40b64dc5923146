#include "core/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/common.hpp"

namespace gapflow {

namespace {

constexpr const char* kKindNames[] = {"spectrum", "sweep",     "decay",     "decoupling",
                                      "greens",   "transform", "ids",       "verify"};

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_double(const std::string& v, double& out) {
  if (v == "auto") {
    out = kAuto;
    return true;
  }
  const char* c = v.c_str();
  char* end = nullptr;
  out = std::strtod(c, &end);
  return end != c && *end == '\0';
}

bool parse_int(const std::string& v, int& out) {
  const char* c = v.c_str();
  char* end = nullptr;
  const long r = std::strtol(c, &end, 10);
  if (end == c || *end != '\0' || r < -2147483647L || r > 2147483647L) return false;
  out = static_cast<int>(r);
  return true;
}

bool parse_u64(const std::string& v, std::uint64_t& out) {
  if (v.empty() || v[0] == '-') return false;
  const char* c = v.c_str();
  char* end = nullptr;
  out = std::strtoull(c, &end, 10);
  return end != c && *end == '\0';
}

bool parse_bool(const std::string& v, bool& out) {
  if (v == "true" || v == "1" || v == "yes") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0" || v == "no") {
    out = false;
    return true;
  }
  return false;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : v) {
    if (ch == ',') {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  const std::string last = trim(cur);
  if (!last.empty() || !parts.empty()) {
    if (!(parts.empty() && last.empty())) parts.push_back(last);
  }
  if (parts.size() == 1 && parts[0].empty()) parts.clear();
  return parts;
}

bool parse_dlist(const std::string& v, std::vector<double>& out) {
  std::vector<double> tmp;
  for (const std::string& p : split_list(v)) {
    double d = 0.0;
    if (p == "auto" || !parse_double(p, d)) return false;
    tmp.push_back(d);
  }
  out = std::move(tmp);
  return true;
}

bool parse_ilist(const std::string& v, std::vector<int>& out) {
  std::vector<int> tmp;
  for (const std::string& p : split_list(v)) {
    int d = 0;
    if (!parse_int(p, d)) return false;
    tmp.push_back(d);
  }
  out = std::move(tmp);
  return true;
}

int levenshtein(const std::string& a, const std::string& b) {
  std::vector<int> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    int prev = row[0];
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int cur = row[j];
      const int sub = prev + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
      prev = cur;
    }
  }
  return row[b.size()];
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "kind",
      "threads",
      "seed",
      "out",
      "grid.x_lo",
      "grid.x_hi",
      "grid.nx",
      "grid.ny",
      "potential.preset",
      "potential.q",
      "potential.q2",
      "potential.phase",
      "potential.eps",
      "potential.shift",
      "potential.file",
      "potential.file2",
      "gap.energy",
      "gap.lo",
      "gap.hi",
      "spectrum.t",
      "spectrum.count",
      "sweep.t_max",
      "sweep.n",
      "sweep.refine_tol",
      "decay.t",
      "decay.k_list",
      "decoupling.n_list",
      "decoupling.t_list",
      "greens.source_x",
      "greens.source_y",
      "greens.points",
      "greens.extent",
      "greens.hs_tol",
      "greens.hs_level",
      "transform.t_list",
      "transform.width",
      "ids.t",
      "ids.n_list",
      "ids.resolution",
      "ids.alpha",
      "ids.beta",
      "ids.certify",
      "verify.criteria",
  };
  return keys;
}

struct Ctx {
  RunConfig* cfg;
  std::vector<ConfigError>* errors;
  int line;
  const std::string* key;
  const std::string* value;
};

void push_err(const Ctx& c, const std::string& m) { c.errors->push_back({c.line, m}); }

void bad_value(const Ctx& c, const char* want) {
  push_err(c, strf("key %s: cannot parse '%s' as %s", c.key->c_str(), c.value->c_str(), want));
}

void set_dbl(const Ctx& c, double& field) {
  double v = 0.0;
  if (parse_double(*c.value, v))
    field = v;
  else
    bad_value(c, "a real number");
}

void set_int(const Ctx& c, int& field) {
  int v = 0;
  if (parse_int(*c.value, v))
    field = v;
  else
    bad_value(c, "an integer");
}

void set_u64(const Ctx& c, std::uint64_t& field) {
  std::uint64_t v = 0;
  if (parse_u64(*c.value, v))
    field = v;
  else
    bad_value(c, "a nonnegative integer");
}

void set_bool(const Ctx& c, bool& field) {
  bool v = false;
  if (parse_bool(*c.value, v))
    field = v;
  else
    bad_value(c, "true or false");
}

void set_dlist(const Ctx& c, std::vector<double>& field) {
  std::vector<double> v;
  if (parse_dlist(*c.value, v))
    field = std::move(v);
  else
    bad_value(c, "a comma-separated list of real numbers");
}

void set_ilist(const Ctx& c, std::vector<int>& field) {
  std::vector<int> v;
  if (parse_ilist(*c.value, v))
    field = std::move(v);
  else
    bad_value(c, "a comma-separated list of integers");
}

// Returns false only for unknown keys.
bool set_key(const Ctx& c, const std::string& key) {
  RunConfig& g = *c.cfg;
  if (key == "kind") {
    for (std::size_t i = 0; i < 8; ++i)
      if (*c.value == kKindNames[i]) {
        g.kind = static_cast<RunKind>(i);
        return true;
      }
    push_err(c, strf("key kind: '%s' is not an experiment kind (spectrum, sweep, decay, "
                     "decoupling, greens, transform, ids, verify)",
                     c.value->c_str()));
    return true;
  }
  if (key == "threads") {
    set_int(c, g.threads);
    return true;
  }
  if (key == "seed") {
    set_u64(c, g.seed);
    return true;
  }
  if (key == "out") {
    g.out_dir = *c.value;
    return true;
  }
  if (key == "grid.x_lo") {
    set_dbl(c, g.x_lo);
    return true;
  }
  if (key == "grid.x_hi") {
    set_dbl(c, g.x_hi);
    return true;
  }
  if (key == "grid.nx") {
    set_int(c, g.nx);
    return true;
  }
  if (key == "grid.ny") {
    set_int(c, g.ny);
    return true;
  }
  if (key == "potential.preset") {
    g.preset = *c.value;
    return true;
  }
  if (key == "potential.q") {
    set_dbl(c, g.q);
    return true;
  }
  if (key == "potential.q2") {
    set_dbl(c, g.q2);
    return true;
  }
  if (key == "potential.phase") {
    set_dbl(c, g.phase);
    return true;
  }
  if (key == "potential.eps") {
    set_dbl(c, g.eps);
    return true;
  }
  if (key == "potential.shift") {
    set_dbl(c, g.shift);
    return true;
  }
  if (key == "potential.file") {
    g.potential_file = *c.value;
    return true;
  }
  if (key == "potential.file2") {
    g.potential_file2 = *c.value;
    return true;
  }
  if (key == "gap.energy") {
    set_dbl(c, g.gap_energy);
    return true;
  }
  if (key == "gap.lo") {
    set_dbl(c, g.gap_lo);
    return true;
  }
  if (key == "gap.hi") {
    set_dbl(c, g.gap_hi);
    return true;
  }
  if (key == "spectrum.t") {
    set_dbl(c, g.spectrum_t);
    return true;
  }
  if (key == "spectrum.count") {
    set_int(c, g.spectrum_count);
    return true;
  }
  if (key == "sweep.t_max") {
    set_dbl(c, g.sweep_t_max);
    return true;
  }
  if (key == "sweep.n") {
    set_dbl(c, g.sweep_n);
    return true;
  }
  if (key == "sweep.refine_tol") {
    set_dbl(c, g.refine_tol);
    return true;
  }
  if (key == "decay.t") {
    set_dbl(c, g.decay_t);
    return true;
  }
  if (key == "decay.k_list") {
    set_ilist(c, g.ct_k_list);
    return true;
  }
  if (key == "decoupling.n_list") {
    set_dlist(c, g.dec_n_list);
    return true;
  }
  if (key == "decoupling.t_list") {
    set_dlist(c, g.dec_t_list);
    return true;
  }
  if (key == "greens.source_x") {
    set_dbl(c, g.greens_source_x);
    return true;
  }
  if (key == "greens.source_y") {
    set_dbl(c, g.greens_source_y);
    return true;
  }
  if (key == "greens.points") {
    set_int(c, g.greens_points);
    return true;
  }
  if (key == "greens.extent") {
    set_dbl(c, g.greens_extent);
    return true;
  }
  if (key == "greens.hs_tol") {
    set_dbl(c, g.hs_tol);
    return true;
  }
  if (key == "greens.hs_level") {
    set_int(c, g.hs_level);
    return true;
  }
  if (key == "transform.t_list") {
    set_dlist(c, g.transform_t_list);
    return true;
  }
  if (key == "transform.width") {
    set_dbl(c, g.transform_width);
    return true;
  }
  if (key == "ids.t") {
    set_dbl(c, g.ids_t);
    return true;
  }
  if (key == "ids.n_list") {
    set_dlist(c, g.ids_n_list);
    return true;
  }
  if (key == "ids.resolution") {
    set_int(c, g.ids_resolution);
    return true;
  }
  if (key == "ids.alpha") {
    set_dbl(c, g.ids_alpha);
    return true;
  }
  if (key == "ids.beta") {
    set_dbl(c, g.ids_beta);
    return true;
  }
  if (key == "ids.certify") {
    set_bool(c, g.ids_certify);
    return true;
  }
  if (key == "verify.criteria") {
    set_ilist(c, g.verify_criteria);
    return true;
  }
  return false;
}

bool finite(double v) { return std::isfinite(v); }
bool is_auto(double v) { return std::isnan(v); }

void check(std::vector<ConfigError>& errors, bool cond, const std::string& msg) {
  if (!cond) errors.push_back({0, msg});
}

void validate(const RunConfig& g, std::vector<ConfigError>& errors) {
  check(errors, g.threads >= 0, "threads must be >= 0 (0 = GAPFLOW_THREADS or 1)");
  check(errors, !g.out_dir.empty(), "out must name a directory");
  check(errors, finite(g.x_lo) && finite(g.x_hi) && g.x_hi > g.x_lo,
        "grid.x_hi must exceed grid.x_lo");
  check(errors, g.nx >= 2, "grid.nx must be >= 2 intervals");
  check(errors, g.ny >= 4, "grid.ny must be >= 4 circle nodes");

  static const char* presets[] = {"free", "mathieu", "product", "quasiperiodic", "halfspace",
                                  "step"};
  if (g.potential_file.empty()) {
    bool known = false;
    for (const char* p : presets) known = known || g.preset == p;
    check(errors, known,
          strf("potential.preset '%s' is not one of free, mathieu, product, quasiperiodic, "
               "halfspace, step",
               g.preset.c_str()));
  }
  for (double v : {g.q, g.q2, g.phase, g.eps, g.shift})
    check(errors, finite(v), "potential parameters must be finite");
  for (const std::string& f : {g.potential_file, g.potential_file2})
    if (!f.empty())
      check(errors, std::filesystem::exists(f), strf("potential file '%s' not found", f.c_str()));
  check(errors, g.potential_file2.empty() || !g.potential_file.empty(),
        "potential.file2 needs potential.file");

  check(errors, is_auto(g.gap_lo) == is_auto(g.gap_hi),
        "gap.lo and gap.hi must be given together (or both auto)");
  if (!is_auto(g.gap_lo) && !is_auto(g.gap_hi))
    check(errors, g.gap_hi > g.gap_lo, "gap.hi must exceed gap.lo");
  if (!is_auto(g.gap_energy)) {
    check(errors, finite(g.gap_energy), "gap.energy must be finite or auto");
    if (!is_auto(g.gap_lo) && !is_auto(g.gap_hi) && g.gap_hi > g.gap_lo)
      check(errors, g.gap_lo < g.gap_energy && g.gap_energy < g.gap_hi,
            "gap.energy must lie inside (gap.lo, gap.hi)");
  }

  check(errors, finite(g.spectrum_t), "spectrum.t must be finite");
  check(errors, g.spectrum_count >= 1 && g.spectrum_count <= 64,
        "spectrum.count must be in [1, 64]");

  check(errors, finite(g.sweep_t_max) && g.sweep_t_max > 0, "sweep.t_max must be positive");
  check(errors, finite(g.sweep_n) && g.sweep_n >= 8, "sweep.n must be >= 8");
  check(errors, finite(g.refine_tol) && g.refine_tol > 0 && g.refine_tol <= 1e-2,
        "sweep.refine_tol must be in (0, 1e-2]");

  check(errors, finite(g.decay_t) && g.decay_t >= 0, "decay.t must be >= 0");
  check(errors, !g.ct_k_list.empty(), "decay.k_list must not be empty");
  for (std::size_t i = 0; i < g.ct_k_list.size(); ++i) {
    check(errors, g.ct_k_list[i] >= 1, "decay.k_list entries must be >= 1");
    if (i > 0)
      check(errors, g.ct_k_list[i] > g.ct_k_list[i - 1],
            "decay.k_list must be strictly increasing");
  }

  check(errors, !g.dec_n_list.empty(), "decoupling.n_list must not be empty");
  for (double n : g.dec_n_list)
    check(errors, finite(n) && n >= 8, "decoupling.n_list entries must be >= 8");
  check(errors, !g.dec_t_list.empty(), "decoupling.t_list must not be empty");
  for (double t : g.dec_t_list)
    check(errors, finite(t) && t >= 0, "decoupling.t_list entries must be >= 0");

  check(errors, finite(g.greens_source_x) && finite(g.greens_source_y), "greens source must be finite");
  check(errors, g.greens_points >= 2, "greens.points must be >= 2");
  check(errors, finite(g.greens_extent) && g.greens_extent > 0,
        "greens.extent must be positive");
  check(errors, finite(g.hs_tol) && g.hs_tol > 0 && g.hs_tol <= 1.0,
        "greens.hs_tol must be in (0, 1]");
  check(errors, g.hs_level >= 1 && g.hs_level <= 6, "greens.hs_level must be in [1, 6]");

  check(errors, !g.transform_t_list.empty(), "transform.t_list must not be empty");
  for (double t : g.transform_t_list)
    check(errors, finite(t) && std::abs(t) <= 0.5,
          "transform.t_list entries must satisfy |t| <= 1/2");
  check(errors, finite(g.transform_width) && g.transform_width > 0 && g.transform_width <= 1.0,
        "transform.width must be in (0, 1]");

  check(errors, finite(g.ids_t) && g.ids_t >= 0, "ids.t must be >= 0");
  check(errors, !g.ids_n_list.empty(), "ids.n_list must not be empty");
  for (std::size_t i = 0; i < g.ids_n_list.size(); ++i) {
    check(errors, finite(g.ids_n_list[i]) && g.ids_n_list[i] > 1,
          "ids.n_list entries must be > 1");
    if (i > 0)
      check(errors, g.ids_n_list[i] > g.ids_n_list[i - 1],
            "ids.n_list must be strictly increasing");
  }
  check(errors, g.ids_resolution >= 2, "ids.resolution must be >= 2");
  check(errors, is_auto(g.ids_alpha) == is_auto(g.ids_beta),
        "ids.alpha and ids.beta must be given together (or both auto)");
  if (!is_auto(g.ids_alpha) && !is_auto(g.ids_beta))
    check(errors, g.ids_beta > g.ids_alpha, "ids.beta must exceed ids.alpha");

  for (int cidx : g.verify_criteria)
    check(errors, cidx >= 1 && cidx <= 10, "verify.criteria entries must be in [1, 10]");
}

std::string fmt_auto(double v) { return std::isnan(v) ? std::string("auto") : fmt_g17(v); }

std::string join_d(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt_g17(v[i]);
  }
  return s;
}

std::string join_i(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace

const char* kind_name(RunKind kind) { return kKindNames[static_cast<int>(kind)]; }

ParseResult parse_config_text(const std::string& text) {
  ParseResult res;
  std::vector<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
      res.errors.push_back({line, strf("expected 'key = value', got '%s'", s.c_str())});
      continue;
    }
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) {
      res.errors.push_back({line, "missing key before '='"});
      continue;
    }
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      res.errors.push_back({line, strf("duplicate key '%s'", key.c_str())});
      continue;
    }
    seen.push_back(key);
    const Ctx c{&res.config, &res.errors, line, &key, &value};
    if (!set_key(c, key)) {
      int best = 1 << 20;
      std::string guess;
      for (const std::string& k : known_keys()) {
        const int d = levenshtein(key, k);
        if (d < best) {
          best = d;
          guess = k;
        }
      }
      std::string msg = strf("unknown key '%s'", key.c_str());
      if (best <= std::max<int>(2, static_cast<int>(key.size()) / 3))
        msg += strf(" (did you mean '%s'?)", guess.c_str());
      res.errors.push_back({line, msg});
    }
  }
  validate(res.config, res.errors);
  return res;
}

std::vector<ConfigError> apply_assignment(RunConfig& config, const std::string& key,
                                          const std::string& value) {
  std::vector<ConfigError> errors;
  const std::string k = trim(key), v = trim(value);
  const Ctx c{&config, &errors, 0, &k, &v};
  if (!set_key(c, k)) {
    int best = 1 << 20;
    std::string guess;
    for (const std::string& known : known_keys()) {
      const int d = levenshtein(k, known);
      if (d < best) {
        best = d;
        guess = known;
      }
    }
    std::string msg = strf("unknown key '%s'", k.c_str());
    if (best <= std::max<int>(2, static_cast<int>(k.size()) / 3))
      msg += strf(" (did you mean '%s'?)", guess.c_str());
    errors.push_back({0, msg});
    return errors;
  }
  if (errors.empty()) validate(config, errors);
  return errors;
}

RunConfig parse_config(const std::string& text) {
  ParseResult res = parse_config_text(text);
  if (res.ok()) return res.config;
  std::string joined;
  for (std::size_t i = 0; i < res.errors.size(); ++i) {
    if (i) joined += "; ";
    if (res.errors[i].line > 0) joined += strf("line %d: ", res.errors[i].line);
    joined += res.errors[i].message;
  }
  fail(errc::config, joined);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), errc::io, strf("cannot read config file '%s'", path.c_str()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& g) {
  std::string s;
  const auto kv = [&](const char* k, const std::string& v) {
    s += k;
    s += " = ";
    s += v;
    s += "\n";
  };
  kv("kind", kind_name(g.kind));
  kv("threads", std::to_string(g.threads));
  kv("seed", std::to_string(g.seed));
  kv("out", g.out_dir);
  kv("grid.x_lo", fmt_g17(g.x_lo));
  kv("grid.x_hi", fmt_g17(g.x_hi));
  kv("grid.nx", std::to_string(g.nx));
  kv("grid.ny", std::to_string(g.ny));
  kv("potential.preset", g.preset);
  kv("potential.q", fmt_g17(g.q));
  kv("potential.q2", fmt_g17(g.q2));
  kv("potential.phase", fmt_g17(g.phase));
  kv("potential.eps", fmt_g17(g.eps));
  kv("potential.shift", fmt_g17(g.shift));
  kv("potential.file", g.potential_file);
  kv("potential.file2", g.potential_file2);
  kv("gap.energy", fmt_auto(g.gap_energy));
  kv("gap.lo", fmt_auto(g.gap_lo));
  kv("gap.hi", fmt_auto(g.gap_hi));
  kv("spectrum.t", fmt_g17(g.spectrum_t));
  kv("spectrum.count", std::to_string(g.spectrum_count));
  kv("sweep.t_max", fmt_g17(g.sweep_t_max));
  kv("sweep.n", fmt_g17(g.sweep_n));
  kv("sweep.refine_tol", fmt_g17(g.refine_tol));
  kv("decay.t", fmt_g17(g.decay_t));
  kv("decay.k_list", join_i(g.ct_k_list));
  kv("decoupling.n_list", join_d(g.dec_n_list));
  kv("decoupling.t_list", join_d(g.dec_t_list));
  kv("greens.source_x", fmt_g17(g.greens_source_x));
  kv("greens.source_y", fmt_g17(g.greens_source_y));
  kv("greens.points", std::to_string(g.greens_points));
  kv("greens.extent", fmt_g17(g.greens_extent));
  kv("greens.hs_tol", fmt_g17(g.hs_tol));
  kv("greens.hs_level", std::to_string(g.hs_level));
  kv("transform.t_list", join_d(g.transform_t_list));
  kv("transform.width", fmt_g17(g.transform_width));
  kv("ids.t", fmt_g17(g.ids_t));
  kv("ids.n_list", join_d(g.ids_n_list));
  kv("ids.resolution", std::to_string(g.ids_resolution));
  kv("ids.alpha", fmt_auto(g.ids_alpha));
  kv("ids.beta", fmt_auto(g.ids_beta));
  kv("ids.certify", g.ids_certify ? "true" : "false");
  kv("verify.criteria", join_i(g.verify_criteria));
  return s;
}

std::string config_hash(const RunConfig& g) {
  const std::string s = serialize_config(g);
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return strf("%016llx", static_cast<unsigned long long>(h));
}

}  // namespace gapflow
