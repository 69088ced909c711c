#include "mobflow/cli.hpp"

#include "mobflow/diagnostics.hpp"
#include "mobflow/elliptic.hpp"
#include "mobflow/io.hpp"
#include "mobflow/jko.hpp"
#include "mobflow/plot.hpp"
#include "mobflow/reference.hpp"
#include "mobflow/transport.hpp"

#include <fftw3.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#ifndef MOBFLOW_VERSION
#define MOBFLOW_VERSION "unknown"
#endif

namespace mobflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  RunOutcome outcome;
  /// Scalars reported in sweep summaries.
  json summary = json::object();
};

struct StageFailure {
  int code;
  std::string stage;
  std::string message;
};

json versions() {
  return {{"mobflow", MOBFLOW_VERSION}, {"fftw", std::string(fftw_version)}, {"compiler", __VERSION__},
          {"cxx_standard", __cplusplus}};
}

json base_manifest(const RunSpec &spec) {
  json m;
  m["command"] = to_string(spec.command);
  m["spec"] = spec_json(spec);
  m["config"] = spec.source;
  m["versions"] = versions();
  const RegimeLabel r = classify_regime(spec.model);
  m["regime"] = {{"label", to_string(r.regime)}, {"critical_p", r.critical_p}};
  json caveats = json::array();
  caveats.push_back("box domain with piecewise smooth boundary");
  if (spec.domain.dim == 1)
    caveats.push_back("one space dimension");
  if (spec.model.dim != spec.domain.dim)
    caveats.push_back("regime classified with dim " + std::to_string(spec.model.dim) + " on a " +
                      std::to_string(spec.domain.dim) + "D grid");
  m["caveats"] = caveats;
  return m;
}

void finish_manifest(json &m, const RunOutcome &o, double seconds) {
  m["wall_time_s"] = seconds;
  m["status"] = {{"exit_code", o.exit_code}, {"stage", o.stage}, {"message", o.message}};
}

DiagnosticThresholds thresholds() { return {}; }

DistanceOptions distance_options(const RunSpec &spec) {
  DistanceOptions o;
  o.nt = spec.disc.nt;
  o.max_iter = spec.solver.max_iter;
  o.tol = spec.solver.tol;
  o.step_ratio = spec.solver.step_ratio;
  o.mom_scale = spec.solver.mom_scale;
  return o;
}

std::pair<DensityField, DensityField> initial_pair(const RunSpec &spec) {
  const Grid g = spec.domain.grid();
  DensityField u0 = make_density(spec.initial, g, spec.seed);
  DensityField v0 = spec.v_init == "steady" ? solve_elliptic(1.0, 1.0, u0) : DensityField(g, spec.v_value);
  return {std::move(u0), std::move(v0)};
}

void plot_or_note(const std::vector<PlotSeries> &series, const fs::path &path, const PlotOptions &opts,
                  json &notes) {
  try {
    emit_plot(series, path, opts);
  } catch (const InvalidArgument &e) {
    notes.push_back(path.filename().string() + ": " + e.what());
  }
}

void snapshot_plots(const fs::path &dir, const DiagnosticsReport &rep, json &notes) {
  PlotSeries energy{"energy", {}, {}}, mass{"mass", {}, {}}, un{"|u|_{p+1-alpha}", {}, {}}, vh{"|v|_H1", {}, {}};
  for (const StepRow &r : rep.table) {
    energy.x.push_back(r.t);
    energy.y.push_back(r.energy);
    mass.x.push_back(r.t);
    mass.y.push_back(r.mass);
    un.x.push_back(r.t);
    un.y.push_back(r.u_norm);
    vh.x.push_back(r.t);
    vh.y.push_back(r.v_h1);
  }
  plot_or_note({energy}, dir / "energy.svg", {"Free energy", "t", "E(u, v)", false}, notes);
  plot_or_note({mass}, dir / "mass.svg", {"Mass", "t", "mass of u", false}, notes);
  plot_or_note({un, vh}, dir / "norms.svg", {"Norms", "t", "norm", false}, notes);
}

json report_summary(const DiagnosticsReport &rep) {
  json j;
  j["steps"] = rep.table.empty() ? 0 : rep.table.size() - 1;
  j["final_energy"] = rep.table.empty() ? 0.0 : rep.table.back().energy;
  j["worst_energy_increase"] = rep.energy.worst_increase;
  j["mass_error"] = rep.conservation.mass_error;
  j["min_u"] = rep.conservation.min_u;
  j["max_u_residual"] = rep.residuals.max_u;
  j["max_v_residual"] = rep.residuals.max_v;
  j["c1"] = rep.c1;
  j["c4"] = rep.c4;
  j["u_norm_bounded"] = rep.apriori.u_norm_bounded;
  return j;
}

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path);
  out << text;
  if (!out)
    throw IoError("cannot write " + path.string());
}

/// Evaluates the checks on finished snapshots and writes everything; the
/// return value is the diagnostic outcome.
RunOutcome finish_snapshots(const RunSpec &spec, const fs::path &dir, const Snapshots &s, json manifest,
                            std::optional<StageFailure> failure, bool gate_v_residual, json &summary,
                            std::chrono::steady_clock::time_point start) {
  RunOutcome o;
  o.dir = dir;
  DistanceOptions dopt = distance_options(spec);
  DiagnosticsReport rep;
  json notes = json::array();
  bool have_report = false;
  if (s.size() > 0) {
    try {
      rep = diagnose(s, thresholds(), s.size() > spec.solver.equicontinuity_pairs ? spec.solver.equicontinuity_pairs : 0,
                     dopt);
      have_report = true;
    } catch (const Error &e) {
      failure = failure ? failure : StageFailure{kExitSolver, "diagnostics", e.what()};
    }
  }
  if (failure) {
    o.exit_code = failure->code;
    o.stage = failure->stage;
    o.message = failure->message;
  } else if (have_report) {
    std::vector<std::string> failed;
    if (!rep.pass_conservation)
      failed.push_back("conservation");
    if (gate_v_residual && !rep.pass_energy)
      failed.push_back("energy monotonicity");
    if (gate_v_residual && !rep.pass_v_residual)
      failed.push_back("v residual");
    if (!failed.empty()) {
      o.exit_code = kExitDiagnostic;
      o.stage = "diagnostics";
      for (const std::string &f : failed)
        o.message += (o.message.empty() ? "failed: " : ", ") + f;
    }
  }

  json report = have_report ? report_json(rep) : json::object();
  report["status"] = {{"exit_code", o.exit_code}, {"stage", o.stage}, {"message", o.message}};
  write_json(dir / "report.json", report);
  if (have_report) {
    summary = report_summary(rep);
    if (spec.output.plots)
      snapshot_plots(dir, rep, notes);
  }
  summary["exit_code"] = o.exit_code;
  manifest["plot_notes"] = notes;
  finish_manifest(manifest, o,
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  write_snapshots(dir, s, spec.output.field_stride, manifest);
  return o;
}

Result run_wdist(const RunSpec &spec, const fs::path &dir, std::chrono::steady_clock::time_point start) {
  Result res;
  res.outcome.dir = dir;
  const Grid g = spec.domain.grid();
  const DensityField mu0 = make_density(spec.initial, g, spec.seed);
  const DensityField mu1 = make_density(spec.target, g, spec.seed + 1);
  json manifest = base_manifest(spec);
  json notes = json::array();
  fs::create_directories(dir / "fields");
  write_field_csv(dir / "fields" / "mu0.csv", mu0, "mu0");
  write_field_csv(dir / "fields" / "mu1.csv", mu1, "mu1");
  try {
    const DistanceResult r = solve_distance(mu0, mu1, spec.model, distance_options(spec));
    json report = distance_json(r);
    for (int k = 0; k <= r.path.nt; k += std::max<int>(1, r.path.nt / 8)) {
      char name[32];
      std::snprintf(name, sizeof name, "rho_%03d.csv", k);
      write_field_csv(dir / "fields" / name, r.path.rho[k], "rho");
    }
    if (!r.converged) {
      res.outcome.exit_code = kExitSolver;
      res.outcome.stage = "wdist";
      res.outcome.message = "primal-dual iteration cap reached with residual " + std::to_string(r.primal_dual_gap);
    }
    report["status"] = {{"exit_code", res.outcome.exit_code}, {"stage", res.outcome.stage}};
    write_json(dir / "report.json", report);
    res.summary = {{"distance", r.value},
                   {"iterations", r.iterations},
                   {"residual", r.primal_dual_gap},
                   {"converged", r.converged}};
    if (spec.output.plots && g.dim() == 1) {
      std::vector<PlotSeries> series;
      for (int k : {0, r.path.nt / 2, r.path.nt}) {
        PlotSeries p{"s = " + std::to_string(double(k) / r.path.nt).substr(0, 4), {}, {}};
        for (std::size_t i = 0; i < g.cells(0); ++i) {
          p.x.push_back(g.center(0, i));
          p.y.push_back(r.path.rho[k][i]);
        }
        series.push_back(std::move(p));
      }
      plot_or_note(series, dir / "path.svg", {"Geodesic densities", "x", "rho", false}, notes);
    }
  } catch (const Error &e) {
    res.outcome = {kExitSolver, "wdist", e.what(), dir};
    write_json(dir / "report.json",
               {{"status", {{"exit_code", kExitSolver}, {"stage", "wdist"}, {"message", e.what()}}}});
  }
  res.summary["exit_code"] = res.outcome.exit_code;
  manifest["plot_notes"] = notes;
  finish_manifest(manifest, res.outcome,
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  write_json(dir / "manifest.json", manifest);
  return res;
}

Result run_jko(const RunSpec &spec, const fs::path &dir, std::chrono::steady_clock::time_point start) {
  Result res;
  auto [u0, v0] = initial_pair(spec);
  JkoControls c;
  c.nt = spec.disc.jko_nt;
  c.max_iter = spec.solver.jko_max_iter;
  c.tol = spec.solver.jko_tol;
  c.max_sweeps = spec.solver.max_sweeps;
  c.sweep_tol = spec.solver.sweep_tol;
  c.step_ratio = spec.solver.step_ratio;
  c.mom_scale = spec.solver.mom_scale;
  std::optional<StageFailure> failure;
  Trajectory traj;
  try {
    traj = run_trajectory(u0, v0, spec.disc.tau, spec.disc.t_end, spec.model, c);
    if (traj.aborted)
      failure = StageFailure{kExitSolver, "jko", traj.abort_reason};
  } catch (const Error &e) {
    failure = StageFailure{kExitSolver, "jko", e.what()};
    traj.tau = spec.disc.tau;
    traj.params = spec.model;
    traj.states.push_back({u0, v0, 0, energy(u0, v0, spec.model), 0.0, energy(u0, v0, spec.model), 0, 0});
  }
  json manifest = base_manifest(spec);
  std::size_t iterations = 0;
  for (const JkoState &st : traj.states)
    iterations += st.iterations;
  manifest["jko"] = {{"steps", traj.states.size() - 1}, {"primal_dual_iterations", iterations}};
  res.outcome = finish_snapshots(spec, dir, snapshots(traj), manifest, failure, true, res.summary, start);
  res.summary["primal_dual_iterations"] = iterations;
  return res;
}

Result run_reference_cmd(const RunSpec &spec, const fs::path &dir, std::chrono::steady_clock::time_point start) {
  Result res;
  auto [u0, v0] = initial_pair(spec);
  ReferenceOptions o;
  o.dt = spec.disc.dt.value_or(0.0);
  o.snapshot_interval = spec.disc.snapshot_interval.value_or(spec.disc.tau);
  o.min_dt = spec.solver.min_dt;
  o.regularized = spec.solver.regularized;
  std::optional<StageFailure> failure;
  ReferenceRun run;
  try {
    run = run_reference(u0, v0, spec.disc.t_end, spec.model, o);
    if (run.aborted)
      failure = StageFailure{kExitSolver, "reference", run.abort_reason};
  } catch (const Error &e) {
    failure = StageFailure{kExitSolver, "reference", e.what()};
    run.snapshots.push_back({u0, v0, 0.0, 0.0});
  }
  json manifest = base_manifest(spec);
  manifest["reference"] = {{"steps", run.steps}, {"aborted", run.aborted}, {"abort_reason", run.abort_reason}};
  res.outcome = finish_snapshots(spec, dir, snapshots(run, spec.model), manifest, failure, false, res.summary, start);
  res.summary["fv_steps"] = run.steps;
  res.summary["final_t"] = run.snapshots.empty() ? 0.0 : run.snapshots.back().t;
  return res;
}

Result run_compare(const RunSpec &spec, const fs::path &dir, std::chrono::steady_clock::time_point start) {
  Result res;
  res.outcome.dir = dir;
  json manifest = base_manifest(spec);
  json notes = json::array();
  try {
    const Snapshots a = read_snapshots(spec.inputs[0]);
    const Snapshots b = read_snapshots(spec.inputs[1]);
    const Discrepancy d = compare_trajectories(a, b);
    std::string csv = "t,u_l1,u_l2,v_l1,v_l2\n";
    char line[160];
    for (std::size_t k = 0; k < d.t.size(); ++k) {
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n", d.t[k], d.u_l1[k], d.u_l2[k], d.v_l1[k],
                    d.v_l2[k]);
      csv += line;
    }
    write_text(dir / "discrepancy.csv", csv);
    json report = discrepancy_json(d);
    report["status"] = {{"exit_code", 0}, {"stage", ""}};
    write_json(dir / "report.json", report);
    res.summary = {{"max_u_l1", d.max_u_l1}, {"max_u_l2", d.max_u_l2}, {"max_v_l1", d.max_v_l1},
                   {"max_v_l2", d.max_v_l2}};
    if (spec.output.plots)
      plot_or_note({{"u L1", d.t, d.u_l1}, {"v L1", d.t, d.v_l1}}, dir / "discrepancy.svg",
                   {"Discrepancy", "t", "L1 difference", false}, notes);
  } catch (const Error &e) {
    res.outcome = {kExitSolver, "compare", e.what(), dir};
    write_json(dir / "report.json",
               {{"status", {{"exit_code", kExitSolver}, {"stage", "compare"}, {"message", e.what()}}}});
  }
  res.summary["exit_code"] = res.outcome.exit_code;
  manifest["plot_notes"] = notes;
  finish_manifest(manifest, res.outcome,
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  write_json(dir / "manifest.json", manifest);
  return res;
}

Result run_diagnose(const RunSpec &spec, const fs::path &dir, std::chrono::steady_clock::time_point start) {
  Result res;
  Snapshots s;
  try {
    s = read_snapshots(spec.inputs[0]);
  } catch (const Error &e) {
    res.outcome = {kExitSolver, "diagnose", e.what(), dir};
    json manifest = base_manifest(spec);
    finish_manifest(manifest, res.outcome, 0.0);
    write_json(dir / "manifest.json", manifest);
    write_json(dir / "report.json",
               {{"status", {{"exit_code", kExitSolver}, {"stage", "diagnose"}, {"message", e.what()}}}});
    res.summary["exit_code"] = kExitSolver;
    return res;
  }
  RunSpec local = spec;
  local.model = s.params;
  json manifest = base_manifest(local);
  manifest["source_dir"] = spec.inputs[0];
  res.outcome = finish_snapshots(local, dir, s, manifest, std::nullopt, s.tau > 0.0, res.summary, start);
  return res;
}

Result run_single(const RunSpec &spec);

void apply_parameter(RunSpec &s, const std::string &name, double value) {
  if (name == "tau")
    s.disc.tau = value;
  else if (name == "dt")
    s.disc.dt = value;
  else if (name == "cells")
    s.domain.cells = {static_cast<std::size_t>(std::llround(value)), static_cast<std::size_t>(std::llround(value))};
  else if (name == "eps")
    s.model.eps = value;
  else if (name == "chi")
    s.model.chi = value;
  else if (name == "p")
    s.model.p = value;
  else if (name == "alpha")
    s.model.alpha = value;
  else if (name == "nt")
    s.disc.nt = s.disc.jko_nt = static_cast<int>(std::llround(value));
}

Result run_sweep(const RunSpec &spec, const fs::path &dir, std::chrono::steady_clock::time_point start) {
  const std::size_t n = spec.sweep.values.size();
  std::vector<Result> results(n);
  std::vector<RunSpec> runs(n);
  for (std::size_t i = 0; i < n; ++i) {
    RunSpec r = spec;
    r.command = spec.sweep.base;
    apply_parameter(r, spec.sweep.parameter, spec.sweep.values[i]);
    char name[32];
    std::snprintf(name, sizeof name, "run_%03zu", i);
    r.output.dir = (dir / name).string();
    runs[i] = std::move(r);
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        validate(runs[i]);
        results[i] = run_single(runs[i]);
      } catch (const ConfigError &e) {
        results[i].outcome = {kExitConfig, "config", e.what(), runs[i].output.dir};
        results[i].summary = {{"exit_code", kExitConfig}};
      }
    }
  };
  const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(std::max<std::size_t>(n, 1)));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w)
    pool.emplace_back(worker);
  worker();
  for (std::thread &t : pool)
    t.join();

  // Columns: union of summary keys in first-seen order.
  std::vector<std::string> cols;
  for (const Result &r : results)
    for (const auto &[k, v] : r.summary.items())
      if (std::find(cols.begin(), cols.end(), k) == cols.end())
        cols.push_back(k);
  std::string csv = spec.sweep.parameter + ",dir";
  for (const std::string &c : cols)
    csv += "," + c;
  csv += "\n";
  char buf[64];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", spec.sweep.values[i]);
    csv += std::string(buf) + "," + fs::path(runs[i].output.dir).filename().string();
    for (const std::string &c : cols) {
      csv += ",";
      if (!results[i].summary.contains(c))
        continue;
      const json &v = results[i].summary[c];
      if (v.is_number_float()) {
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        csv += buf;
      } else if (!v.is_null()) {
        csv += v.dump();
      }
    }
    csv += "\n";
  }
  write_text(dir / "summary.csv", csv);

  Result res;
  res.outcome.dir = dir;
  json rows = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const RunOutcome &o = results[i].outcome;
    rows.push_back({{"value", spec.sweep.values[i]},
                    {"dir", fs::path(runs[i].output.dir).filename().string()},
                    {"exit_code", o.exit_code},
                    {"stage", o.stage},
                    {"message", o.message},
                    {"summary", results[i].summary}});
    if (o.exit_code > res.outcome.exit_code) {
      res.outcome.exit_code = o.exit_code;
      res.outcome.stage = "sweep/" + fs::path(runs[i].output.dir).filename().string() + "/" + o.stage;
      res.outcome.message = o.message;
    }
  }
  write_json(dir / "report.json", {{"parameter", spec.sweep.parameter}, {"runs", rows}});

  json notes = json::array();
  if (spec.output.plots) {
    const char *key = spec.sweep.base == Command::Wdist ? "distance" : "max_u_residual";
    PlotSeries s{key, {}, {}};
    for (std::size_t i = 0; i < n; ++i) {
      const json &sm = results[i].summary;
      if (sm.contains(key) && sm[key].is_number() && std::isfinite(sm[key].get<double>())) {
        s.x.push_back(spec.sweep.values[i]);
        s.y.push_back(sm[key].get<double>());
      }
    }
    const bool log_y = spec.sweep.base != Command::Wdist &&
                       std::all_of(s.y.begin(), s.y.end(), [](double y) { return y > 0.0; });
    plot_or_note({s}, dir / "sweep.svg", {"Sweep over " + spec.sweep.parameter, spec.sweep.parameter, key, log_y},
                 notes);
  }
  json manifest = base_manifest(spec);
  manifest["workers"] = workers;
  manifest["plot_notes"] = notes;
  finish_manifest(manifest, res.outcome,
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  write_json(dir / "manifest.json", manifest);
  return res;
}

Result run_single(const RunSpec &spec) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir(spec.output.dir);
  fs::create_directories(dir);
  if (!spec.source.empty())
    write_text(dir / "config.toml", spec.source);
  switch (spec.command) {
  case Command::Wdist: return run_wdist(spec, dir, start);
  case Command::Jko: return run_jko(spec, dir, start);
  case Command::Reference: return run_reference_cmd(spec, dir, start);
  case Command::Compare: return run_compare(spec, dir, start);
  case Command::Diagnose: return run_diagnose(spec, dir, start);
  case Command::Sweep: return run_sweep(spec, dir, start);
  }
  throw InvalidArgument("unknown command");
}

} // namespace

RunOutcome run_command(const RunSpec &spec) {
  try {
    validate(spec);
  } catch (const ConfigError &e) {
    return {kExitConfig, "config", e.what(), spec.output.dir};
  }
  try {
    return run_single(spec).outcome;
  } catch (const Error &e) {
    return {kExitSolver, to_string(spec.command), e.what(), spec.output.dir};
  } catch (const std::exception &e) {
    return {kExitSolver, to_string(spec.command), e.what(), spec.output.dir};
  }
}

unsigned worker_count() {
  if (const char *env = std::getenv("MOBFLOW_THREADS")) {
    char *end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0)
      return static_cast<unsigned>(std::min<unsigned long>(v, 1024));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace mobflow::cli
