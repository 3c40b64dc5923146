#include "core/experiments.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"

#include "core/acceptance.hpp"
#include "core/common.hpp"
#include "core/decay_probes.hpp"
#include "core/discrete_operator.hpp"
#include "core/eigensolve.hpp"
#include "core/greens_kernel.hpp"
#include "core/surface_ids.hpp"
#include "core/transform_family.hpp"

namespace gapflow {

namespace {

using nlohmann::ordered_json;
using steady = std::chrono::steady_clock;

double ms_since(steady::time_point t0) {
  return std::chrono::duration<double, std::milli>(steady::now() - t0).count();
}

double snap(double v, double h) { return std::round(v / h) * h; }

// All artifact writes for one run directory; files are recorded for the
// manifest as they are opened.
struct Emitter {
  std::filesystem::path dir;
  RunResult* result;
  ordered_json wall = ordered_json::object();

  std::ofstream open_csv(const std::string& name, const std::string& header) {
    const std::filesystem::path p = dir / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    require(out.good(), errc::io, strf("cannot write '%s'", p.string().c_str()));
    out << header << "\n";
    result->outputs.push_back(p.string());
    return out;
  }

  void write_json(const std::string& name, const ordered_json& j) {
    const std::filesystem::path p = dir / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    require(out.good(), errc::io, strf("cannot write '%s'", p.string().c_str()));
    out << j.dump(2) << "\n";
    result->outputs.push_back(p.string());
  }
};

void run_spectrum(const RunConfig& g, Emitter& em, int, RunResult& res) {
  const ModelContext ctx = build_context(g, false);
  const DiscreteOperator op = assemble_hamiltonian(ctx.grid, ctx.family, g.spectrum_t);
  WindowOptions wo;
  wo.seed = g.seed;
  const WindowResult w = lowest_eigenpairs(op, g.spectrum_count, wo);
  auto csv = em.open_csv("spectrum.csv", "index,eigenvalue,residual");
  for (std::size_t i = 0; i < w.values.size(); ++i)
    csv << i << "," << fmt_g17(w.values[i]) << "," << fmt_g17(w.residuals[i]) << "\n";
  res.log.push_back(strf("spectrum: %zu lowest eigenvalues at t = %s", w.values.size(),
                         fmt_g17(g.spectrum_t).c_str()));
}

void run_sweep(const RunConfig& g, Emitter& em, int threads, RunResult& res) {
  const ModelContext ctx = build_context(g, true);
  const double hx = ctx.grid->hx;
  const double n = snap(g.sweep_n, hx);
  SweepOptions so;
  so.refine_tol = g.refine_tol;
  so.threads = threads;
  so.edge.seed = g.seed;
  const EigBranch br =
      sweep_dislocation(ctx.spec, ctx.family, n, g.sweep_t_max, hx, ctx.grid->ny, so);

  auto csv = em.open_csv("sweep.csv", "t,count_below_E,eigenvalues_in_gap");
  std::size_t si = 0;
  for (std::size_t i = 0; i < br.t_grid.size(); ++i) {
    std::string evs;
    while (si < br.samples.size() && br.samples[si].t <= br.t_grid[i] + 1e-12) {
      if (std::abs(br.samples[si].t - br.t_grid[i]) <= 1e-12) {
        for (int m = 0; m < br.samples[si].multiplicity; ++m) {
          if (!evs.empty()) evs += ";";
          evs += fmt_g17(br.samples[si].eigenvalue);
        }
      }
      ++si;
    }
    csv << fmt_g17(br.t_grid[i]) << "," << br.counts[i] << "," << evs << "\n";
  }

  ordered_json arr = ordered_json::array();
  for (const CrossingEvent& c : br.crossings)
    arr.push_back({{"tau", c.tau},
                   {"eigenvalue", c.eigenvalue},
                   {"residual", c.residual},
                   {"count_jump", c.count_jump}});
  ordered_json top;
  top["E"] = br.E;
  top["gap_lo"] = ctx.gap.lo;
  top["gap_hi"] = ctx.gap.hi;
  top["n"] = n;
  top["hx"] = hx;
  top["crossings"] = arr;
  em.write_json("crossings.json", top);
  res.log.push_back(strf("sweep: %zu grid steps, %zu crossings inside (%s, %s)",
                         br.t_grid.size(), br.crossings.size(), fmt_g17(ctx.gap.lo).c_str(),
                         fmt_g17(ctx.gap.hi).c_str()));
}

void run_decay(const RunConfig& g, Emitter& em, int, RunResult& res) {
  const ModelContext ctx = build_context(g, true);
  const double t = snap(g.decay_t, ctx.grid->hx);
  const DiscreteOperator op = assemble_hamiltonian(ctx.grid, ctx.family, t);
  WindowOptions wo;
  wo.seed = g.seed;
  const WindowResult w =
      window_spectrum(op, ctx.spec.window_lo(), ctx.spec.window_hi(), wo);
  auto csv = em.open_csv("decay.csv", "index,eigenvalue,gamma,C,fit_residual,accepted");
  for (std::size_t i = 0; i < w.values.size(); ++i) {
    const Vec u = w.vectors.col(static_cast<int>(i));
    const DecayFit f = decay_fit(u, *op.map, 0.0);
    csv << i << "," << fmt_g17(w.values[i]) << "," << fmt_g17(f.gamma) << ","
        << fmt_g17(f.C) << "," << fmt_g17(f.fit_residual) << "," << (f.accepted ? 1 : 0)
        << "\n";
  }

  // Off-diagonal resolvent decay is probed on the un-dislocated operator,
  // whose gap holds no eigenvalue that would pin the resolvent norm.
  const DiscreteOperator op0 = assemble_hamiltonian(ctx.grid, ctx.family, 0.0);
  const std::vector<CombesThomasProbe> cts =
      combes_thomas_probe(op0, ctx.spec.E, g.ct_k_list);
  ordered_json norms = ordered_json::array();
  for (const CombesThomasProbe& p : cts)
    norms.push_back({{"k", p.k}, {"norm", p.measured_norm}});
  ordered_json top;
  top["lambda"] = ctx.spec.E;
  top["eps0"] = cts.empty() ? 0.0 : cts.front().eps0;
  top["norms"] = norms;
  em.write_json("probes.json", ordered_json{{"combes_thomas", top}});
  res.log.push_back(strf("decay: %zu window states fitted at t = %s", w.values.size(),
                         fmt_g17(t).c_str()));
}

void run_decoupling(const RunConfig& g, Emitter& em, int, RunResult& res) {
  const ModelContext ctx = build_context(g, true);
  const double hx = ctx.grid->hx;
  const int ny = ctx.grid->ny;
  HalfEdgeOptions eo;
  eo.seed = g.seed;
  auto csv = em.open_csv("decoupling.csv",
                         "n,t,n_full_t,n_full_0,n_dec_t,n_dec_0,block1,block2,block3,c0,"
                         "blocks_sum_to_dec,translation_identity,full_ge_dec,"
                         "sandwich_at_zero,chain");
  int rows = 0;
  for (double n_raw : g.dec_n_list) {
    const double n = snap(n_raw, hx);
    const CorrectionTerm plus =
        build_correction(EdgeSide::plus, n, ctx.family, ctx.spec, hx, ny, eo);
    const CorrectionTerm minus =
        build_correction(EdgeSide::minus, n, ctx.family, ctx.spec, hx, ny, eo);
    for (double t_raw : g.dec_t_list) {
      const double t = snap(t_raw, hx);
      const DecouplingReport r =
          decoupling_report(n, t, ctx.family, ctx.spec, hx, ny, plus, minus);
      csv << fmt_g17(r.n) << "," << fmt_g17(r.t) << "," << r.n_full_t << "," << r.n_full_0
          << "," << r.n_dec_t << "," << r.n_dec_0 << "," << r.n_block1 << "," << r.n_block2
          << "," << r.n_block3 << "," << r.c0 << "," << r.blocks_sum_to_dec << ","
          << r.translation_identity << "," << r.full_ge_dec << "," << r.sandwich_at_zero
          << "," << r.chain << "\n";
      ++rows;
    }
  }
  res.log.push_back(strf("decoupling: %d (n, t) reports", rows));
}

void run_greens(const RunConfig& g, Emitter& em, int threads, RunResult& res) {
  const double sx = g.greens_source_x;
  const double sy = g.greens_source_y;
  auto csv = em.open_csv("greens.csv", "x1,x2,y1,y2,value");
  const int pts = g.greens_points;
  const double step = 2.0 * g.greens_extent / (pts - 1);
  int rows = 0;
  for (int i = 0; i < pts; ++i) {
    const double ty = sx - g.greens_extent + i * step;
    for (int j = 0; j < pts; ++j) {
      const double tc = (j + 0.5) / pts;
      const double dc = tc - sy - std::round(tc - sy);
      if (std::abs(ty - sx) < 1e-9 && std::abs(dc) < 1e-9) continue;  // kernel diagonal
      const GreensEval ev = tube_green({sx, sy}, {ty, tc});
      csv << fmt_g17(sx) << "," << fmt_g17(sy) << "," << fmt_g17(ty) << "," << fmt_g17(tc)
          << "," << fmt_g17(ev.value) << "\n";
      ++rows;
    }
  }

  HsQuadrature spec;
  spec.level = g.hs_level;
  spec.threads = threads;
  const HsNormResult hs = kernel_hs_norm(g.hs_tol, spec);
  ordered_json top;
  top["value"] = hs.value;
  top["integral"] = hs.integral;
  top["est_error"] = hs.est_error;
  top["converged"] = hs.converged;
  em.write_json("probes.json", ordered_json{{"kernel_hs_norm", top}});
  res.log.push_back(strf("greens: %d kernel samples, HS norm %s", rows,
                         fmt_g17(hs.value).c_str()));
}

void run_transform(const RunConfig& g, Emitter& em, int, RunResult& res) {
  const ModelContext ctx = build_context(g, true);
  const double hx = ctx.grid->hx;
  const double lo = ctx.spec.window_lo();
  const double hi = ctx.spec.window_hi();
  WindowOptions wo;
  wo.seed = g.seed;

  auto csv = em.open_csv("equivalence.csv", "t,lambda_Ht,lambda_Ct,abs_diff");
  ordered_json reps = ordered_json::array();
  double phi_t = 0.0;
  for (double t_raw : g.transform_t_list) {
    double t = snap(t_raw, hx);
    if (std::abs(t) > 0.5) t -= (t > 0 ? hx : -hx);  // snapping may not exceed 1/2
    phi_t = std::max(phi_t, std::abs(t));
    const EquivalenceReport r = equivalence_check(t, ctx.family, lo, hi, ctx.grid,
                                                  g.transform_width, wo);
    const std::size_t pairs = std::min(r.values_h.size(), r.values_c.size());
    for (std::size_t i = 0; i < pairs; ++i)
      csv << fmt_g17(r.t) << "," << fmt_g17(r.values_h[i]) << "," << fmt_g17(r.values_c[i])
          << "," << fmt_g17(std::abs(r.values_h[i] - r.values_c[i])) << "\n";
    reps.push_back({{"t", r.t},
                    {"count_h", r.count_h},
                    {"count_c", r.count_c},
                    {"counts_match", r.counts_match},
                    {"max_abs_diff", r.max_abs_diff}});
  }

  // Translation probes run on the sampled un-dislocated potential.
  const DiscreteOperator lap = build_laplacian(ctx.grid);
  const Vec w = sample_dislocation(*lap.map, ctx.family, 0.0);
  if (phi_t < 1e-12) phi_t = 0.25;
  const Diffeomorphism phi = build_phi(phi_t, g.transform_width);
  const BvReport bv = bv_translation_bound(*ctx.grid, w, phi);
  std::vector<double> ts;
  for (double t : g.transform_t_list)
    if (t > 1e-12) ts.push_back(t);
  if (ts.empty()) ts = {0.1, 0.25};
  const TranslationProbe tp = translation_lipschitz_probe(*ctx.grid, w, ts);

  ordered_json top;
  top["equivalence"] = reps;
  top["bv_translation"] = ordered_json{{"lhs", bv.lhs},       {"tv", bv.tv},
                                       {"alpha_inf", bv.alpha_inf}, {"rhs", bv.rhs},
                                       {"slack", bv.slack},   {"holds", bv.holds}};
  top["translation_lipschitz"] =
      ordered_json{{"tv", tp.tv}, {"max_ratio", tp.max_ratio}, {"slack", tp.slack},
                   {"holds", tp.holds}};
  em.write_json("probes.json", top);
  res.log.push_back(strf("transform: %zu parameters compared in [%s, %s]",
                         g.transform_t_list.size(), fmt_g17(lo).c_str(),
                         fmt_g17(hi).c_str()));
}

void run_ids(const RunConfig& g, Emitter& em, int threads, RunResult& res) {
  const ModelContext ctx = build_context(g, true);
  const double alpha = std::isnan(g.ids_alpha) ? ctx.spec.window_lo() : g.ids_alpha;
  const double beta = std::isnan(g.ids_beta) ? ctx.spec.window_hi() : g.ids_beta;
  IdsOptions io;
  io.resolution = g.ids_resolution;
  io.verified_gap = ctx.gap;
  io.certify = g.ids_certify;
  io.threads = threads;
  io.window.seed = g.seed;
  const double t = snap(g.ids_t, 1.0 / g.ids_resolution);
  const IdsRun run = ids_scaling_run(ctx.family, t, alpha, beta, g.ids_n_list, io);

  auto csv = em.open_csv("ids.csv", "n,count,count_per_n,count_per_nlogn");
  for (std::size_t i = 0; i < run.run.n_list.size(); ++i)
    csv << fmt_g17(run.run.n_list[i]) << "," << run.run.counts[i] << ","
        << fmt_g17(run.count_per_n[i]) << "," << fmt_g17(run.count_per_nlogn[i]) << "\n";

  ordered_json certs = ordered_json::array();
  for (const IdsCertificate& c : run.certificates)
    certs.push_back({{"n", c.n},
                     {"attempted", c.attempted},
                     {"certified", c.certified},
                     {"rayleigh", c.rayleigh},
                     {"residual", c.residual}});
  ordered_json top;
  top["t"] = t;
  top["alpha"] = alpha;
  top["beta"] = beta;
  top["slope_top3"] = run.slope_top3;
  top["intercept_top3"] = run.intercept_top3;
  top["slope_full"] = run.slope_full;
  top["nondecreasing"] = run.nondecreasing;
  top["certificates"] = certs;
  em.write_json("probes.json", ordered_json{{"ids_scaling", top}});
  res.log.push_back(strf("ids: counts over %zu torus sizes at t = %s",
                         g.ids_n_list.size(), fmt_g17(t).c_str()));
}

void run_verify(const RunConfig& g, Emitter& em, int threads, RunResult& res) {
  const AcceptanceReport rep = run_acceptance(g.verify_criteria, threads, &std::cout);
  ordered_json arr = ordered_json::array();
  int passed = 0;
  for (const CriterionResult& c : rep.results) {
    arr.push_back({{"criterion", c.index},
                   {"name", c.name},
                   {"passed", c.passed},
                   {"seconds", c.seconds},
                   {"detail", c.detail}});
    passed += c.passed ? 1 : 0;
  }
  em.write_json("verify.json", ordered_json{{"all_passed", rep.all_passed},
                                            {"results", arr}});
  res.exit_code = rep.all_passed ? 0 : 1;
  res.log.push_back(strf("verify: %d/%zu criteria passed", passed, rep.results.size()));
}

}  // namespace

ModelContext build_context(const RunConfig& g, bool need_gap) {
  ModelContext ctx;
  ctx.grid = std::make_shared<TubeGrid>(g.x_lo, g.x_hi, g.nx, g.ny);
  if (!g.potential_file.empty()) {
    ctx.family.name = "gridded";
    ctx.family.v1 = load_gridded_sampler(g.potential_file);
    ctx.family.v2 =
        g.potential_file2.empty() ? ctx.family.v1 : load_gridded_sampler(g.potential_file2);
  } else {
    ctx.family = make_preset_family(g.preset, g.q, g.q2, g.phase, g.eps, g.shift);
  }
  if (!need_gap) return ctx;

  if (!std::isnan(g.gap_lo)) {
    ctx.gap = GapInterval{g.gap_lo, g.gap_hi};
  } else {
    const std::vector<GapInterval> gaps = locate_gap(ctx.family);
    require(!gaps.empty(), errc::config,
            "no spectral gap located for this potential; give gap.lo and gap.hi explicitly");
    if (!std::isnan(g.gap_energy)) {
      bool found = false;
      for (const GapInterval& gp : gaps)
        if (gp.lo < g.gap_energy && g.gap_energy < gp.hi) {
          ctx.gap = gp;
          found = true;
        }
      require(found, errc::config,
              strf("gap.energy %s lies inside no located gap", fmt_g17(g.gap_energy).c_str()));
    } else {
      ctx.gap = gaps.front();
      for (const GapInterval& gp : gaps)
        if (gp.hi - gp.lo > ctx.gap.hi - ctx.gap.lo) ctx.gap = gp;
    }
  }
  const double E =
      std::isnan(g.gap_energy) ? 0.5 * (ctx.gap.lo + ctx.gap.hi) : g.gap_energy;
  ctx.spec = make_gap_spec(E, ctx.gap);
  return ctx;
}

RunResult run_experiment(const RunConfig& g) {
  const auto t0 = steady::now();
  RunResult res;
  const int threads = resolve_threads(g.threads);
  std::filesystem::create_directories(g.out_dir);
  Emitter em{g.out_dir, &res, ordered_json::object()};

  const auto stage0 = steady::now();
  switch (g.kind) {
    case RunKind::spectrum: run_spectrum(g, em, threads, res); break;
    case RunKind::sweep: run_sweep(g, em, threads, res); break;
    case RunKind::decay: run_decay(g, em, threads, res); break;
    case RunKind::decoupling: run_decoupling(g, em, threads, res); break;
    case RunKind::greens: run_greens(g, em, threads, res); break;
    case RunKind::transform: run_transform(g, em, threads, res); break;
    case RunKind::ids: run_ids(g, em, threads, res); break;
    case RunKind::verify: run_verify(g, em, threads, res); break;
  }
  em.wall[kind_name(g.kind)] = ms_since(stage0);

  ordered_json manifest;
  manifest["kind"] = kind_name(g.kind);
  manifest["version"] = kVersion;
  manifest["config_hash"] = config_hash(g);
  manifest["seed"] = g.seed;
  manifest["threads"] = threads;
  em.wall["total"] = ms_since(t0);
  manifest["wall_ms"] = em.wall;
  ordered_json outs = ordered_json::array();
  for (const std::string& p : res.outputs)
    outs.push_back(std::filesystem::path(p).filename().string());
  manifest["outputs"] = outs;
  em.write_json("manifest.json", manifest);
  return res;
}

}  // namespace gapflow
