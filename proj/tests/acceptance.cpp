// Acceptance checks, one PASS/FAIL line per criterion. Criterion 13 is a
// report. Exit status is nonzero when any gated criterion fails.

#include "mobflow/diagnostics.hpp"
#include "mobflow/elliptic.hpp"
#include "mobflow/jko.hpp"
#include "mobflow/model.hpp"
#include "mobflow/reference.hpp"
#include "mobflow/transport.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace mobflow;

namespace {

// Tolerances, pinned.
constexpr double kConstantMobilityRel = 0.02;
constexpr double kConstantMobilitySeconds = 60.0;
constexpr double kLinearMobilityRel = 0.03;
constexpr double kDistanceTol = 1e-6;
constexpr double kProxStationarity = 1e-10;
constexpr double kProxGridSearch = 1e-4;
constexpr double kEntropyIdentity = 1e-6;
constexpr double kEnergyIncrease = 1e-8;
constexpr double kMassError = 1e-8;
constexpr double kMinDensity = -1e-10;
constexpr double kSteadyJko = 1e-4;
constexpr double kSteadyFv = 1e-10;
constexpr double kJkoVsFvL1 = 0.05;
constexpr double kC4Band = 2.0;
constexpr double kVResidual = 1e-6;
constexpr double kRatioLow = 1.4, kRatioHigh = 3.0;
constexpr double kAuxMass = 1e-10;
constexpr double kAuxMin = -1e-12;
constexpr double kAuxHeat = 1e-10;

// The standard problem: alpha = 0.5, p = 1.5, chi = 1 on (0,1), u0 = 1 + 0.5 cos(pi x), v0 = 1.
ModelParams standard() {
  ModelParams mp;
  mp.p = 1.5;
  mp.alpha = 0.5;
  mp.chi = 1.0;
  mp.eps = 1e-4;
  return mp;
}

DensityField u_initial(const Grid &g) {
  return sample(g, [](double x, double) { return 1.0 + 0.5 * std::cos(M_PI * x); });
}

int failures = 0;
std::vector<double> v_residuals;

void verdict(int id, bool pass, const std::string &what) {
  std::printf("%s %2d  %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!pass)
    ++failures;
}

template <class... A> std::string fmt(const char *f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double max_diff(const DensityField &a, const DensityField &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Snapshots jko_run(std::size_t n, double tau, double t_end) {
  const Grid g = Grid::line(1.0, n);
  const Trajectory tr = run_trajectory(u_initial(g), DensityField(g, 1.0), tau, t_end, standard());
  Snapshots s = snapshots(tr);
  v_residuals.push_back(weak_residual(s, cosine_modes(g, 3)).max_v);
  return s;
}

// 1D quadratic Wasserstein distance by quantile inversion of piecewise-constant densities.
double cdf_w2(const DensityField &a, const DensityField &b) {
  const std::size_t n = a.size();
  const double h = a.grid.h(0);
  auto quantiles = [&](const DensityField &d, std::size_t K) {
    std::vector<double> q(K);
    const double tot = d.mass();
    std::size_t i = 0;
    double acc = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double s = (k + 0.5) / K;
      while (i + 1 < n && acc + d[i] * h / tot < s) {
        acc += d[i] * h / tot;
        ++i;
      }
      const double m = d[i] * h / tot;
      q[k] = (i + (m > 0 ? (s - acc) / m : 0.0)) * h;
    }
    return q;
  };
  const std::size_t K = 400000;
  const auto qa = quantiles(a, K), qb = quantiles(b, K);
  double s2 = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    s2 += (qa[k] - qb[k]) * (qa[k] - qb[k]) / K;
  return std::sqrt(s2);
}

DensityField random_density(const Grid &g, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double a1 = U(rng), a2 = U(rng), a3 = U(rng), c = 0.5 + 0.4 * U(rng);
  DensityField f = sample(g, [&](double x, double) {
    return 1.0 + 0.25 * (a1 * std::cos(M_PI * x) + a2 * std::cos(2 * M_PI * x) + a3 * std::cos(3 * M_PI * x)) +
           0.5 * std::exp(-60.0 * (x - c) * (x - c));
  });
  f *= 1.0 / f.mass();
  return f;
}

void criterion_1() {
  const Grid g = Grid::line(1.0, 64);
  const DensityField mu0(g, 1.0);
  const DensityField mu1 = sample(g, [](double x, double) { return 1.0 + 0.1 * std::cos(M_PI * x); });
  DistanceOptions o;
  o.nt = 32;
  const auto t0 = std::chrono::steady_clock::now();
  const DistanceResult r = solve_distance(mu0, mu1, Mobility{0.0, 0.0}, o);
  const double sec = seconds_since(t0);
  const double oracle = 0.005 / (M_PI * M_PI);
  const double rel = std::abs(r.value * r.value / oracle - 1.0);
  verdict(1, rel <= kConstantMobilityRel && sec < kConstantMobilitySeconds,
          fmt("constant mobility: W^2 = %.6e, closed form %.6e, rel err %.2e (<= %.2g), %.2f s (< %.0f s)",
              r.value * r.value, oracle, rel, kConstantMobilityRel, sec, kConstantMobilitySeconds));
}

void criterion_2() {
  const Grid g = Grid::line(1.0, 128);
  auto bump = [&](double c) {
    DensityField f = sample(g, [&](double x, double) {
      const double d = x - c;
      return 1e-3 + (std::abs(d) < 0.1 ? 0.5 * (1 + std::cos(M_PI * d / 0.1)) : 0.0);
    });
    f *= 1.0 / f.mass();
    return f;
  };
  const DensityField mu0 = bump(0.3), mu1 = bump(0.6);
  DistanceOptions o;
  o.nt = 32;
  o.max_iter = 20000;
  const DistanceResult r = solve_distance(mu0, mu1, Mobility{1.0, 0.0}, o);
  const double oracle = cdf_w2(mu0, mu1);
  const double rel = std::abs(r.value / oracle - 1.0);
  verdict(2, rel <= kLinearMobilityRel,
          fmt("linear mobility: W = %.6f, quantile oracle %.6f (shift 0.3), rel err %.2e (<= %.2g), %zu its",
              r.value, oracle, rel, kLinearMobilityRel, r.iterations));
}

void criterion_3() {
  const Grid g = Grid::line(1.0, 32);
  std::mt19937_64 rng(2024);
  DistanceOptions o;
  o.nt = 16;
  o.tol = kDistanceTol;
  const double eps[] = {1e-3, 1e-2, 1e-1};
  double worst = -1e300;
  for (int pair = 0; pair < 5; ++pair) {
    const DensityField a = random_density(g, rng), b = random_density(g, rng);
    double prev = -1.0;
    for (double e : eps) {
      const double w = solve_distance(a, b, Mobility{0.5, e}, o).value;
      if (prev >= 0.0)
        worst = std::max(worst, w - prev);
      prev = w;
    }
  }
  verdict(3, worst <= 2 * kDistanceTol,
          fmt("eps-monotonicity on 5 pairs, eps in {1e-3, 1e-2, 1e-1}: max W(eps2) - W(eps1) = %.3e (<= 2 tol = %.1e)",
              worst, 2 * kDistanceTol));
}

void criterion_4() {
  const Grid g = Grid::line(1.0, 32);
  std::mt19937_64 rng(77);
  DistanceOptions o;
  o.nt = 16;
  o.tol = kDistanceTol;
  const Mobility mob{0.5, 1e-2};
  auto W = [&](const DensityField &a, const DensityField &b) { return solve_distance(a, b, mob, o).value; };
  double sym = 0.0, tri = -1e300;
  for (int t = 0; t < 4; ++t) {
    const DensityField a = random_density(g, rng), b = random_density(g, rng), c = random_density(g, rng);
    const double ab = W(a, b), ba = W(b, a), bc = W(b, c), ac = W(a, c);
    sym = std::max(sym, std::abs(ab - ba));
    tri = std::max(tri, ac - ab - bc);
  }
  verdict(4, sym <= 2 * kDistanceTol && tri <= 3 * kDistanceTol,
          fmt("distance axioms on 4 triples: max |W(a,b) - W(b,a)| = %.2e (<= %.1e), max W(a,c) - W(a,b) - W(b,c) = "
              "%.2e (<= %.1e)",
              sym, 2 * kDistanceTol, tri, 3 * kDistanceTol));
}

// Coarse lattice over [0,6] x [-2,2] followed by two refinements around the best node.
std::pair<double, double> prox_grid_search(double rt, double wt, double sigma, const Mobility &mob) {
  auto f = [&](double r, double w) {
    return w * w / mob.value(r) + ((r - rt) * (r - rt) + (w - wt) * (w - wt)) / (2 * sigma);
  };
  double best = 1e300, br = 0.0, bw = 0.0;
  auto scan = [&](double r0, double r1, double w0, double w1, int n) {
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        const double r = r0 + (r1 - r0) * i / n, w = w0 + (w1 - w0) * j / n;
        if (r < 0.0)
          continue;
        const double v = f(r, w);
        if (v < best) {
          best = v;
          br = r;
          bw = w;
        }
      }
  };
  scan(0.0, 6.0, -2.0, 2.0, 1200);
  for (double span : {1e-2, 1e-4}) {
    const double r = br, w = bw;
    scan(r - span, r + span, w - span, w + span, 400);
  }
  return {br, bw};
}

void criterion_5() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double stat = 0.0, search = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Mobility mob{0.1 + 0.8 * U(rng), std::pow(10.0, -2.0 + 2.0 * U(rng))};
    const double rt = 0.05 + 1.95 * U(rng), wt = -1.5 + 3.0 * U(rng), sigma = 0.05 + 0.95 * U(rng);
    double r = 0.0, w = 0.0;
    prox_action(rt, wt, sigma, mob, r, w);
    const double m = mob.value(r);
    stat = std::max({stat, std::abs(w - wt * m / (m + 2 * sigma)),
                     std::abs(r - rt - sigma * w * w * mob.d1(r) / (m * m))});
    const auto [gr, gw] = prox_grid_search(rt, wt, sigma, mob);
    search = std::max({search, std::abs(gr - r), std::abs(gw - w)});
  }
  verdict(5, stat <= kProxStationarity && search <= kProxGridSearch,
          fmt("prox on 50 inputs: max stationarity residual %.2e (<= %.0e), max grid-search gap %.2e (<= %.0e)", stat,
              kProxStationarity, search, kProxGridSearch));
}

void criterion_6() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double identity = 0.0;
  int bound_fail = 0;
  const Grid g = Grid::line(1.0, 64);
  for (double a : {0.3, 0.5, 0.9})
    for (double e : {1e-3, 1e-1, 1.0}) {
      ModelParams mp;
      mp.alpha = a;
      mp.eps = e;
      for (int k = 0; k < 100; ++k) {
        const double r = std::pow(10.0, -2.0 + 2.5 * U(rng));
        const double h = 1e-3 * (r + e);
        const double u2 = (u_epsilon(r + h, mp) - 2 * u_epsilon(r, mp) + u_epsilon(r - h, mp)) / (h * h);
        identity = std::max(identity, std::abs(u2 * mobility(r, mp) - 1.0));
      }
      for (int k = 0; k < 20; ++k) {
        DensityField u(g);
        const double scale = 3.0 * U(rng);
        for (double &x : u.values)
          x = scale * U(rng);
        const double bound = std::pow(field_norm(u, Norm::lq(2.0 - a)), 2.0 - a) / (1.0 - a);
        if (big_u(u, mp) > bound)
          ++bound_fail;
      }
    }
  verdict(6, identity <= kEntropyIdentity && bound_fail == 0,
          fmt("entropy: max |U'' m - 1| = %.2e over 900 samples (<= %.0e), bound violations %d of 180", identity,
              kEntropyIdentity, bound_fail));
}

void criterion_7(const Snapshots &s) {
  const EnergyCheck e = check_energy_monotone(s);
  std::size_t violations = 0;
  for (std::size_t k = 1; k < e.energies.size(); ++k)
    if (e.energies[k] - e.energies[k - 1] > kEnergyIncrease)
      ++violations;
  double mass = 0.0, min_u = 1e300;
  for (const DensityField &u : s.u) {
    mass = std::max(mass, std::abs(u.mass() - 1.0));
    min_u = std::min(min_u, u.min());
  }
  verdict(7, violations == 0 && s.size() == 51 && mass <= kMassError && min_u >= kMinDensity,
          fmt("jko 50 steps: %zu energy increases above %.0e (worst %.2e), mass error %.2e (<= %.0e), min u %.3f",
              violations, kEnergyIncrease, e.worst_increase, mass, kMassError, min_u));
}

void criterion_8() {
  const Grid g = Grid::line(1.0, 128);
  const DensityField one(g, 1.0);
  const Trajectory tr = run_trajectory(one, one, 0.01, 0.1, standard());
  double jko = 0.0;
  for (const JkoState &s : tr.states)
    jko = std::max({jko, max_diff(s.u, one), max_diff(s.v, one)});
  const Snapshots js = snapshots(tr);
  v_residuals.push_back(weak_residual(js, cosine_modes(g, 3)).max_v);
  ReferenceOptions o;
  o.snapshot_interval = 0.01;
  const ReferenceRun fv = run_reference(one, one, 0.1, standard(), o);
  double ref = 0.0;
  for (const FvState &s : fv.snapshots)
    ref = std::max({ref, max_diff(s.u, one), max_diff(s.v, one)});
  verdict(8, tr.states.size() == 11 && jko <= kSteadyJko && ref <= kSteadyFv,
          fmt("stationarity: jko max deviation %.2e (<= %.0e) over 10 steps, FV %.2e (<= %.0e) over %zu steps", jko,
              kSteadyJko, ref, kSteadyFv, fv.steps));
}


Snapshots reference_run(std::size_t n, double t_end, double interval) {
  const Grid g = Grid::line(1.0, n);
  ReferenceOptions o;
  o.snapshot_interval = interval;
  return snapshots(run_reference(u_initial(g), DensityField(g, 1.0), t_end, standard(), o), standard());
}

void criterion_9(const Snapshots &coarse, const Snapshots &fine) {
  const Snapshots fv = reference_run(128, 0.05, 2.5e-4);
  const double d1 = compare_trajectories(coarse, fv).max_u_l1;
  const double d2 = compare_trajectories(fine, fv).max_u_l1;
  verdict(9, d1 <= kJkoVsFvL1 && d2 < d1,
          fmt("jko vs finite volumes to T = 0.05: max L1(u) = %.3e at tau 1e-3 (<= %.2g), %.3e at tau 5e-4 (decreasing)",
              d1, kJkoVsFvL1, d2));
}

void criterion_10() {
  const double T = 0.032;
  const double times[][2] = {{0.0, 0.004}, {0.0, 0.016}, {0.004, 0.012}, {0.008, 0.032}, {0.016, 0.032}, {0.012, 0.028}};
  DistanceOptions o;
  o.nt = 8;
  std::vector<double> c4;
  for (double tau : {4e-3, 2e-3, 1e-3}) {
    const Snapshots s = jko_run(128, tau, T);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto &p : times)
      pairs.emplace_back(std::size_t(std::lround(p[0] / tau)), std::size_t(std::lround(p[1] / tau)));
    c4.push_back(equicontinuity_fit(s, pairs, o).c4);
  }
  const double lo = *std::min_element(c4.begin(), c4.end()), hi = *std::max_element(c4.begin(), c4.end());
  verdict(10, lo > 0.0 && hi / lo <= kC4Band,
          fmt("equicontinuity constant C4 = %.4f / %.4f / %.4f for tau 4e-3 / 2e-3 / 1e-3, spread %.3f (<= %.1f)", c4[0],
              c4[1], c4[2], hi / lo, kC4Band));
}

void criterion_11(const std::vector<std::pair<std::size_t, Snapshots>> &ladder) {
  std::vector<double> res;
  for (const auto &[n, s] : ladder)
    res.push_back(weak_residual(s, cosine_modes(s.u[0].grid, 3)).max_u);
  bool ratios_ok = true;
  std::string text;
  for (std::size_t k = 0; k + 1 < res.size(); ++k) {
    const double r = res[k] / res[k + 1];
    ratios_ok = ratios_ok && r >= kRatioLow && r <= kRatioHigh;
    text += fmt("%s%.3f", k ? ", " : "", r);
  }
  const double vmax = *std::max_element(v_residuals.begin(), v_residuals.end());
  verdict(11, ratios_ok && vmax <= kVResidual,
          fmt("weak residuals: max v residual %.2e over %zu runs (<= %.0e), u residual ratios under halving [%s] "
              "(in [%.1f, %.1f])",
              vmax, v_residuals.size(), kVResidual, text.c_str(), kRatioLow, kRatioHigh));
}

void criterion_12() {
  const Grid g = Grid::line(1.0, 128);
  ModelParams mp = standard();
  mp.eps = 0.05;
  mp.delta = 0.5;
  const DensityField w0 = sample(g, [](double x, double) { return 0.01 + std::exp(-40.0 * (x - 0.3) * (x - 0.3)); });
  const DensityField phi = sample(g, [](double x, double) { return std::sin(3 * x) + x * x; });
  const double dt = aux_flow_cfl(phi, mp);
  DensityField w = w0;
  double min_w = w0.min();
  for (int k = 0; k < 500; ++k) {
    w = aux_flow_step(w, phi, dt, mp);
    min_w = std::min(min_w, w.min());
  }
  const double mass = std::abs(w.mass() - w0.mass());
  const double heat = max_diff(aux_flow_step(w0, DensityField(g, 2.0), 1e-3, mp), heat_step(w0, mp.delta, 1e-3, 1));
  verdict(12, mass <= kAuxMass && min_w >= kAuxMin && heat <= kAuxHeat,
          fmt("auxiliary flow, 500 steps: mass drift %.2e (<= %.0e), min w %.3e (>= %.0e), constant-phi heat gap %.2e "
              "(<= %.0e)",
              mass, kAuxMass, min_w, kAuxMin, heat, kAuxHeat));
}

void report_13() {
  const Grid g = Grid::box(1.0, 1.0, 32, 32);
  auto blob = [&](double width, double height) {
    DensityField f = sample(g, [&](double x, double y) {
      const double r2 = (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5);
      return 0.2 + height * std::exp(-r2 / (width * width));
    });
    f *= 1.0 / f.mass();
    return f;
  };
  auto study = [&](const char *label, double p, double chi, const DensityField &u0) {
    ModelParams mp;
    mp.alpha = 0.9;
    mp.p = p;
    mp.chi = chi;
    mp.dim = 3;
    ReferenceOptions o;
    o.snapshot_interval = 0.02;
    o.min_dt = 1e-9;
    const ReferenceRun run = run_reference(u0, DensityField(g, 1.0), 0.2, mp, o);
    const RegimeLabel reg = classify_regime(mp);
    const Norm nrm = Norm::lq(mp.p + 1.0 - mp.alpha);
    double n0 = field_norm(run.snapshots.front().u, nrm), nmax = n0, inf0 = run.snapshots.front().u.max(), infmax = inf0;
    for (const FvState &s : run.snapshots) {
      nmax = std::max(nmax, field_norm(s.u, nrm));
      infmax = std::max(infmax, s.u.max());
    }
    std::string series;
    for (const FvState &s : run.snapshots)
      series += fmt(" %.3g", s.u.max());
    std::printf("REPORT 13  %s: p = %.4f (critical %.4f, %s), chi = %g, 32x32 grid, reached t = %.3f in %zu steps, "
                "%s; max |u|_{p+1-alpha} / initial = %.3f, max |u|_inf / initial = %.3f (single-cell bound %.0f)\n"
                "           |u|_inf every 0.02:%s\n",
                label, p, reg.critical_p, to_string(reg.regime).c_str(), chi, run.snapshots.back().t, run.steps,
                run.aborted ? ("aborted: " + run.abort_reason).c_str() : "no CFL abort", nmax / n0, infmax / inf0,
                1.0 / g.cell_volume(), series.c_str());
  };
  const double pc = 1.0 + 0.9 - 2.0 / 3.0;
  study("critical exponent, small chi", pc, 0.1, blob(0.15, 2.0));
  study("supercritical, large chi", 1.0, 200.0, blob(0.08, 8.0));
}

} // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  const Snapshots s64 = jko_run(64, 2e-3, 0.05);
  const Snapshots s128 = jko_run(128, 1e-3, 0.05);
  criterion_7(s128);
  criterion_8();
  const Snapshots s128f = jko_run(128, 5e-4, 0.05);
  criterion_9(s128, s128f);
  criterion_10();
  const Snapshots s256 = jko_run(256, 5e-4, 0.05);
  criterion_11({{64, s64}, {128, s128}, {256, s256}});
  criterion_12();
  report_13();
  std::printf("%d gated criteria failed, %.1f s\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
