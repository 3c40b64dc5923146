// Command-line front end. Links the C API only, so it doubles as a living
// exercise of the public ABI.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gapflow.h"

namespace {

int fail(const char* stage) {
  std::fprintf(stderr, "gapflow: %s: %s\n", stage, gf_last_error());
  return 2;
}

struct ConfigGuard {
  gf_config* cfg = nullptr;
  ~ConfigGuard() { gf_config_free(cfg); }
};

std::string owned(char* s) {
  std::string r = s ? s : "";
  gf_string_free(s);
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gapflow: spectral experiments for dislocated periodic potentials "
               "on the tube"};
  app.require_subcommand(1);
  app.set_version_flag("--version", []() { return std::string(gf_version()); });

  std::string config_path, out_dir;
  int threads = 0;
  std::vector<std::string> overrides;
  std::vector<int> criteria;

  const struct {
    const char* kind;
    const char* help;
  } kinds[] = {
      {"spectrum", "lowest eigenvalues of the dislocated operator"},
      {"sweep", "march the dislocation parameter and log gap crossings"},
      {"decay", "exponential-decay fits and resolvent decay probes"},
      {"decoupling", "counting identities for the decoupled box"},
      {"greens", "free-tube kernel samples and the Hilbert-Schmidt norm"},
      {"transform", "sheared-realization equivalence and translation bounds"},
      {"ids", "torus window counts across sizes"},
  };

  std::vector<std::pair<CLI::App*, std::string>> subs;
  const auto add_common = [&](CLI::App* c, bool config_required) {
    auto* opt = c->add_option("--config", config_path, "run configuration file")
                    ->check(CLI::ExistingFile);
    if (config_required) opt->required();
    c->add_option("--out", out_dir, "output directory (overrides the config)");
    c->add_option("--threads", threads,
                  "worker threads (0 = GAPFLOW_THREADS or serial)");
    c->add_option("--set", overrides, "extra key=value override, repeatable");
  };
  for (const auto& k : kinds) {
    CLI::App* c = app.add_subcommand(k.kind, k.help);
    add_common(c, true);
    subs.emplace_back(c, k.kind);
  }
  CLI::App* verify = app.add_subcommand("verify", "run the acceptance suite");
  add_common(verify, false);
  verify->add_option("--criteria", criteria, "criterion indices 1..10 (default: all)")
      ->check(CLI::Range(1, 10));

  CLI11_PARSE(app, argc, argv);

  std::string kind;
  for (const auto& [cmd, name] : subs)
    if (cmd->parsed()) kind = name;
  const bool is_verify = verify->parsed();

  // Bare verify needs no config: run the suite directly against the library.
  if (is_verify && config_path.empty() && overrides.empty() && out_dir.empty()) {
    int all_passed = 0;
    if (gf_verify(criteria.data(), criteria.size(), threads, 1, &all_passed) != GF_OK)
      return fail("verify");
    std::printf("acceptance: %s\n", all_passed ? "all criteria passed" : "FAILURES");
    return all_passed ? 0 : 1;
  }

  ConfigGuard guard;
  if (config_path.empty()) {
    // verify with overrides but no config file: start from defaults
    if (gf_config_parse_text("", &guard.cfg) != GF_OK) return fail("config");
  } else if (gf_config_parse_file(config_path.c_str(), &guard.cfg) != GF_OK) {
    return fail("config");
  }

  const std::string kind_value = is_verify ? "verify" : kind;
  if (gf_config_set(guard.cfg, "kind", kind_value.c_str()) != GF_OK)
    return fail("config");
  if (!out_dir.empty() && gf_config_set(guard.cfg, "out", out_dir.c_str()) != GF_OK)
    return fail("config");
  if (threads > 0 &&
      gf_config_set(guard.cfg, "threads", std::to_string(threads).c_str()) != GF_OK)
    return fail("config");
  if (is_verify && !criteria.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < criteria.size(); ++i)
      joined += (i ? "," : "") + std::to_string(criteria[i]);
    if (gf_config_set(guard.cfg, "verify.criteria", joined.c_str()) != GF_OK)
      return fail("config");
  }
  for (const std::string& kv : overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "gapflow: --set expects key=value, got '%s'\n", kv.c_str());
      return 2;
    }
    if (gf_config_set(guard.cfg, kv.substr(0, eq).c_str(),
                      kv.substr(eq + 1).c_str()) != GF_OK)
      return fail("config");
  }

  int exit_code = 0;
  if (gf_run(guard.cfg, &exit_code) != GF_OK) return fail(kind_value.c_str());

  char *dir = nullptr, *hash = nullptr;
  if (gf_config_get(guard.cfg, "out", &dir) != GF_OK) return fail("config");
  if (gf_config_hash(guard.cfg, &hash) != GF_OK) return fail("config");
  std::printf("gapflow %s: outputs in %s (config %s)\n", kind_value.c_str(),
              owned(dir).c_str(), owned(hash).c_str());
  return exit_code;
}
