#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cctype>
#include <cmath>
#include <string>

#include "core/common.hpp"
#include "core/run_config.hpp"

using namespace gapflow;

namespace {

bool has_msg(const std::vector<ConfigError>& errors, const std::string& what) {
  for (const ConfigError& e : errors)
    if (e.message.find(what) != std::string::npos) return true;
  return false;
}

int line_of(const std::vector<ConfigError>& errors, const std::string& what) {
  for (const ConfigError& e : errors)
    if (e.message.find(what) != std::string::npos) return e.line;
  return -1;
}

}  // namespace

TEST_CASE("empty text yields the documented defaults") {
  const ParseResult r = parse_config_text("");
  REQUIRE(r.ok());
  CHECK(r.config.kind == RunKind::spectrum);
  CHECK(r.config.threads == 0);
  CHECK(r.config.seed == 20240901);
  CHECK(r.config.out_dir == "gapflow_out");
  CHECK(r.config.nx == 800);
  CHECK(r.config.ny == 16);
  CHECK(r.config.preset == "mathieu");
  CHECK(std::isnan(r.config.gap_energy));
  CHECK(std::isnan(r.config.ids_alpha));
  CHECK(r.config.ids_certify);
  CHECK(r.config.verify_criteria.empty());
  // auto markers serialize symbolically, not as nan
  const std::string s = serialize_config(r.config);
  CHECK(s.find("gap.energy = auto\n") != std::string::npos);
  CHECK(s.find("nan") == std::string::npos);
}

TEST_CASE("parse then serialize is the identity on the canonical form") {
  const std::string text =
      "kind = ids\n"
      "threads = 3\n"
      "seed = 77\n"
      "out = runs/experiment_a\n"
      "grid.x_lo = -12.5\n"
      "grid.x_hi = 12.5\n"
      "grid.nx = 500\n"
      "grid.ny = 8\n"
      "potential.preset = product\n"
      "potential.q = 1.25\n"
      "potential.q2 = -0.5\n"
      "potential.phase = 0.125\n"
      "gap.lo = 8.5\n"
      "gap.hi = 10.75\n"
      "gap.energy = 9.5\n"
      "spectrum.count = 12\n"
      "sweep.t_max = 4.5\n"
      "decay.k_list = 1, 3, 9\n"
      "decoupling.n_list = 10, 20\n"
      "greens.hs_level = 4\n"
      "transform.t_list = -0.25, 0, 0.25\n"
      "transform.width = 0.75\n"
      "ids.n_list = 2, 4, 8\n"
      "ids.resolution = 8\n"
      "ids.certify = no\n"
      "verify.criteria = 1, 10\n";
  const ParseResult r1 = parse_config_text(text);
  REQUIRE_MESSAGE(r1.ok(), (r1.errors.empty() ? "" : r1.errors.front().message));
  CHECK(r1.config.kind == RunKind::ids);
  CHECK(r1.config.q2 == -0.5);
  CHECK(!r1.config.ids_certify);
  CHECK(r1.config.ct_k_list == std::vector<int>{1, 3, 9});
  CHECK(r1.config.verify_criteria == std::vector<int>{1, 10});

  const std::string canon = serialize_config(r1.config);
  const ParseResult r2 = parse_config_text(canon);
  REQUIRE(r2.ok());
  CHECK(serialize_config(r2.config) == canon);
  CHECK(config_hash(r2.config) == config_hash(r1.config));
}

TEST_CASE("comments, blank lines and stray spacing are ignored") {
  const ParseResult r = parse_config_text(
      "# a full-line comment\n"
      "\n"
      "   kind   =   sweep   # trailing comment\n"
      "\t sweep.t_max =\t2.0 \n");
  REQUIRE(r.ok());
  CHECK(r.config.kind == RunKind::sweep);
  CHECK(r.config.sweep_t_max == 2.0);
}

TEST_CASE("syntax errors carry their line numbers") {
  const ParseResult r = parse_config_text(
      "kind = decay\n"
      "what is this\n"
      "= 4\n"
      "kind = ids\n");
  REQUIRE(r.errors.size() == 3);
  CHECK(line_of(r.errors, "expected 'key = value'") == 2);
  CHECK(line_of(r.errors, "missing key before '='") == 3);
  CHECK(line_of(r.errors, "duplicate key 'kind'") == 4);
}

TEST_CASE("unknown keys get a nearest-key suggestion when one is close") {
  const ParseResult near = parse_config_text("potentail.q = 1\n");
  REQUIRE(!near.ok());
  CHECK(has_msg(near.errors, "unknown key 'potentail.q'"));
  CHECK(has_msg(near.errors, "did you mean 'potential.q'?"));

  const ParseResult far = parse_config_text("zzz.qqq = 1\n");
  REQUIRE(!far.ok());
  CHECK(has_msg(far.errors, "unknown key 'zzz.qqq'"));
  CHECK(!has_msg(far.errors, "did you mean"));
}

TEST_CASE("unparseable values name both the key and the expected type") {
  const ParseResult r = parse_config_text(
      "grid.nx = abc\n"
      "ids.certify = maybe\n"
      "decay.k_list = 1, x\n"
      "potential.q = 1..2\n"
      "seed = -1\n");
  CHECK(has_msg(r.errors, "key grid.nx: cannot parse 'abc' as an integer"));
  CHECK(has_msg(r.errors, "key ids.certify: cannot parse 'maybe' as true or false"));
  CHECK(has_msg(r.errors, "as a comma-separated list of integers"));
  CHECK(has_msg(r.errors, "key potential.q: cannot parse '1..2' as a real number"));
  CHECK(has_msg(r.errors, "key seed: cannot parse '-1' as a nonnegative integer"));
}

TEST_CASE("validation collects every failure in one pass") {
  const ParseResult r = parse_config_text(
      "threads = -1\n"
      "grid.ny = 3\n"
      "spectrum.count = 0\n"
      "transform.width = 2\n"
      "verify.criteria = 11\n");
  CHECK(r.errors.size() >= 5);
  CHECK(has_msg(r.errors, "threads must be >= 0"));
  CHECK(has_msg(r.errors, "grid.ny must be >= 4"));
  CHECK(has_msg(r.errors, "spectrum.count must be in [1, 64]"));
  CHECK(has_msg(r.errors, "transform.width must be in (0, 1]"));
  CHECK(has_msg(r.errors, "verify.criteria entries must be in [1, 10]"));
  CHECK(line_of(r.errors, "grid.ny") == 0);  // semantic errors are not line-bound
}

TEST_CASE("paired auto fields must be given together and ordered") {
  CHECK(has_msg(parse_config_text("gap.lo = 2\n").errors,
                "gap.lo and gap.hi must be given together"));
  CHECK(has_msg(parse_config_text("gap.lo = 2\ngap.hi = 5\ngap.energy = 7\n").errors,
                "gap.energy must lie inside"));
  CHECK(has_msg(parse_config_text("ids.alpha = 1\nids.beta = 0.5\n").errors,
                "ids.beta must exceed ids.alpha"));
  REQUIRE(parse_config_text("gap.lo = 2\ngap.hi = 5\n").ok());
}

TEST_CASE("apply_assignment mirrors the parser, including re-validation") {
  RunConfig cfg = parse_config_text("").config;
  CHECK(apply_assignment(cfg, " kind ", " greens ").empty());
  CHECK(cfg.kind == RunKind::greens);

  RunConfig bad = cfg;
  const auto verrs = apply_assignment(bad, "grid.ny", "3");
  REQUIRE(verrs.size() == 1);
  CHECK(verrs[0].message.find("grid.ny must be >= 4") != std::string::npos);

  RunConfig untouched = cfg;
  const auto uerrs = apply_assignment(untouched, "potentail.q", "1");
  REQUIRE(uerrs.size() == 1);
  CHECK(uerrs[0].message.find("did you mean 'potential.q'?") != std::string::npos);
  CHECK(serialize_config(untouched) == serialize_config(cfg));

  // a value parse failure reports only itself, no cascade
  RunConfig half = cfg;
  const auto perrs = apply_assignment(half, "grid.nx", "many");
  REQUIRE(perrs.size() == 1);
  CHECK(perrs[0].message.find("as an integer") != std::string::npos);
}

TEST_CASE("throwing wrapper joins all messages with line prefixes") {
  try {
    parse_config("kind = nope\ngrid.nx = lots\n");
    FAIL("expected a config error");
  } catch (const error& e) {
    CHECK(e.code() == errc::config);
    const std::string msg = e.what();
    CHECK(msg.find("line 1:") != std::string::npos);
    CHECK(msg.find("line 2:") != std::string::npos);
    CHECK(msg.find("; ") != std::string::npos);
  }
}

TEST_CASE("load_config reports unreadable paths as io errors") {
  try {
    load_config("/nonexistent/gapflow.cfg");
    FAIL("expected an io error");
  } catch (const error& e) {
    CHECK(e.code() == errc::io);
    CHECK(std::string(e.what()).find("/nonexistent/gapflow.cfg") != std::string::npos);
  }
}

TEST_CASE("every run kind parses and prints under the same name") {
  for (const char* name : {"spectrum", "sweep", "decay", "decoupling", "greens", "transform",
                           "ids", "verify"}) {
    const ParseResult r = parse_config_text(std::string("kind = ") + name + "\n");
    REQUIRE(r.ok());
    CHECK(kind_name(r.config.kind) == std::string(name));
  }
}

TEST_CASE("config hash: 16 hex digits, stable, sensitive") {
  const RunConfig base = parse_config_text("").config;
  const std::string h = config_hash(base);
  REQUIRE(h.size() == 16);
  for (char c : h) CHECK(std::isxdigit(static_cast<unsigned char>(c)));
  CHECK(config_hash(base) == h);

  RunConfig other = base;
  REQUIRE(apply_assignment(other, "seed", "20240902").empty());
  CHECK(config_hash(other) != h);
}
