#include "mobflow/diagnostics.hpp"

#include "mobflow/elliptic.hpp"
#include "mobflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mobflow {

Snapshots snapshots(const Trajectory &traj) {
  Snapshots s;
  s.params = traj.params;
  s.tau = traj.tau;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const JkoState &st = traj.states[k];
    s.t.push_back(traj.time(k));
    s.u.push_back(st.u);
    s.v.push_back(st.v);
    s.f_tau.push_back(st.f_tau_value);
    s.w_step.push_back(st.w_step);
  }
  return s;
}

Snapshots snapshots(const ReferenceRun &run, const ModelParams &params) {
  Snapshots s;
  s.params = params;
  for (const FvState &st : run.snapshots) {
    s.t.push_back(st.t);
    s.u.push_back(st.u);
    s.v.push_back(st.v);
  }
  return s;
}

EnergyCheck check_energy_monotone(const Snapshots &s, const DiagnosticThresholds &th) {
  EnergyCheck out;
  out.worst_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.size(); ++k) {
    out.energies.push_back(energy(s.u[k], s.v[k], s.params));
    if (k > 0) {
      const double d = out.energies[k] - out.energies[k - 1];
      if (d > out.worst_increase) {
        out.worst_increase = d;
        out.worst_step = k;
      }
    }
  }
  out.pass = !(out.worst_increase > th.energy_increase);
  return out;
}

ConservationCheck check_conservation(const Snapshots &s, const DiagnosticThresholds &th) {
  ConservationCheck out;
  if (s.size() == 0)
    return out;
  const double m0 = s.u[0].mass();
  out.min_u = std::numeric_limits<double>::infinity();
  out.min_v = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.size(); ++k) {
    out.mass_error = std::max(out.mass_error, std::abs(s.u[k].mass() - m0));
    out.min_u = std::min(out.min_u, s.u[k].min());
    out.min_v = std::min(out.min_v, s.v[k].min());
  }
  out.pass = out.mass_error <= th.mass_error && out.min_u >= th.min_density && out.min_v >= th.min_density;
  return out;
}

namespace {
std::size_t nearest_index(const std::vector<double> &t, double target) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double d = std::abs(t[k] - target);
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  return best;
}
} // namespace

std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(const Snapshots &s, std::size_t count) {
  static const double fractions[][2] = {{0.0, 0.125}, {0.0, 0.25},  {0.0, 0.5},  {0.0, 1.0},
                                         {0.25, 0.5}, {0.5, 1.0},   {0.125, 0.375}, {0.25, 1.0},
                                         {0.5, 0.75}, {0.75, 1.0}};
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (s.size() < 2)
    return out;
  const double t0 = s.t.front(), span = s.t.back() - s.t.front();
  for (const auto &f : fractions) {
    if (out.size() == count)
      break;
    const std::size_t a = nearest_index(s.t, t0 + f[0] * span);
    const std::size_t b = nearest_index(s.t, t0 + f[1] * span);
    if (a != b)
      out.emplace_back(a, b);
  }
  return out;
}

EquicontinuityFit equicontinuity_fit(const Snapshots &s, const std::vector<std::pair<std::size_t, std::size_t>> &pairs,
                                     const DistanceOptions &opts) {
  if (pairs.size() < 5)
    throw InvalidArgument("equicontinuity fit needs at least 5 pairs");
  EquicontinuityFit fit;
  const Mobility mob = s.params.mobility();
  for (const auto &[a, b] : pairs) {
    if (a >= s.size() || b >= s.size())
      throw InvalidArgument("sample pair index out of range");
    const double w = solve_distance(s.u[a], s.u[b], mob, opts).value;
    const double denom = std::sqrt(std::abs(s.t[a] - s.t[b])) + std::sqrt(s.tau);
    fit.samples.push_back({s.t[a], s.t[b], w});
    if (denom > 0.0)
      fit.c4 = std::max(fit.c4, w / denom);
  }
  return fit;
}

namespace {

DensityField pow_field(const DensityField &f, double e, double shift = 0.0) {
  DensityField out = f;
  for (double &x : out.values)
    x = std::pow(std::max(x, 0.0) + shift, e);
  return out;
}

double face_lq(const FaceField &g, double q) {
  double s = 0.0;
  for (int a = 0; a < g.grid.dim(); ++a)
    for (double x : g[a])
      s += std::pow(std::abs(x), q);
  return std::pow(s * g.grid.face_volume(), 1.0 / q);
}

std::vector<double> step_lengths(const Snapshots &s) {
  std::vector<double> dt(s.size(), 0.0);
  for (std::size_t k = 1; k < s.size(); ++k)
    dt[k] = s.t[k] - s.t[k - 1];
  return dt;
}

} // namespace

namespace {

// Without a valid q the mobility-gradient column is left NaN.
AprioriTable apriori_table(const Snapshots &s, const DiagnosticThresholds &th, bool with_q) {
  const ModelParams &mp = s.params;
  AprioriTable tab;
  tab.q = with_q ? 4.0 / (3.0 * mp.alpha + 1.0 - mp.p) : std::numeric_limits<double>::quiet_NaN();
  const double e = mp.energy_exponent();
  const std::vector<double> dt = step_lengths(s);
  for (std::size_t k = 0; k < s.size(); ++k) {
    const DensityField &u = s.u[k], &v = s.v[k];
    AprioriRow row;
    row.t = s.t[k];
    row.u_norm = field_norm(u, Norm::lq(e));
    row.v_h1 = field_norm(v, Norm::h1());
    const FaceField gv = discrete_gradient(v);
    const DensityField lv = laplacian(v);
    row.v_h2_sq = inner(v, v) + inner(gv, gv) + inner(lv, lv);
    const FaceField gp = discrete_gradient(pow_field(u, 0.5 * e));
    row.grad_power_sq = inner(gp, gp);
    DensityField ks = lv - v + u;
    row.ks_residual_sq = inner(ks, ks);
    row.grad_mobility_q = with_q ? face_lq(discrete_gradient(pow_field(u, mp.alpha, mp.eps)), tab.q)
                                 : std::numeric_limits<double>::quiet_NaN();
    tab.rows.push_back(row);

    tab.int_grad_power_sq += dt[k] * row.grad_power_sq;
    tab.int_ks_residual_sq += dt[k] * row.ks_residual_sq;
    tab.int_v_h2_sq += dt[k] * row.v_h2_sq;
    tab.int_grad_mobility_q += dt[k] * row.grad_mobility_q;
    tab.c1 = std::max(tab.c1, std::pow(row.u_norm, e) + row.v_h1 * row.v_h1);
  }
  if (!tab.rows.empty()) {
    const double u0 = std::max(tab.rows.front().u_norm, 1e-12);
    const double v0 = std::max(tab.rows.front().v_h1, 1e-12);
    for (const AprioriRow &r : tab.rows) {
      if (!std::isfinite(r.u_norm) || r.u_norm > th.norm_growth * u0)
        tab.u_norm_bounded = false;
      if (!std::isfinite(r.v_h1) || r.v_h1 > th.norm_growth * v0)
        tab.v_h1_bounded = false;
    }
  }
  return tab;
}

} // namespace

AprioriTable apriori_norms(const Snapshots &s, const DiagnosticThresholds &th) {
  const double denom = 3.0 * s.params.alpha + 1.0 - s.params.p;
  if (!(denom > 0.0))
    throw BadExponent("3 alpha + 1 - p = " + std::to_string(denom) + " is not positive");
  return apriori_table(s, th, true);
}

std::vector<TestFunction> cosine_modes(const Grid &g, int max_mode) {
  std::vector<TestFunction> out;
  const int my = g.dim() == 2 ? max_mode : 0;
  for (int j = 0; j <= my; ++j)
    for (int i = 0; i <= max_mode; ++i)
      if (i != 0 || j != 0)
        out.push_back({i, j});
  return out;
}

DensityField sample_test_function(const Grid &g, const TestFunction &f) {
  const double lx = g.extent(0), ly = g.dim() == 2 ? g.extent(1) : 1.0;
  return sample(g, [&](double x, double y) {
    return std::cos(f.kx * M_PI * x / lx) * (g.dim() == 2 ? std::cos(f.ky * M_PI * y / ly) : 1.0);
  });
}

WeakResidualReport weak_residual(const Snapshots &s, const std::vector<TestFunction> &fns) {
  WeakResidualReport rep;
  if (s.size() == 0)
    return rep;
  const Grid &g = s.u[0].grid;
  const ModelParams &mp = s.params;
  const std::vector<double> dt = step_lengths(s);

  // Time integrals of the face fluxes, shared by all test functions.
  FaceField u_flux(g), v_flux(g);
  DensityField v_source(g);
  for (std::size_t k = 1; k < s.size(); ++k) {
    const DensityField &u = s.u[k], &v = s.v[k];
    const DensityField up = pow_field(u, mp.p);
    const DensityField ua = pow_field(u, mp.alpha);
    for (int a = 0; a < g.dim(); ++a) {
      std::size_t l, r;
      const double inv_h = 1.0 / g.h(a);
      for (std::size_t f = 0; f < u_flux[a].size(); ++f)
        if (g.face_neighbors(a, f, l, r)) {
          const double gv = (v[r] - v[l]) * inv_h;
          const double flux = (up[r] - up[l]) * inv_h - mp.chi * 0.5 * (ua[l] + ua[r]) * gv;
          u_flux[a][f] += dt[k] * flux;
          v_flux[a][f] += dt[k] * gv;
        }
    }
    for (std::size_t c = 0; c < g.num_cells(); ++c)
      v_source[c] += dt[k] * (v[c] - u[c]);
  }
  const DensityField du = s.u.back() - s.u.front();
  const DensityField dv = s.v.back() - s.v.front();

  for (const TestFunction &fn : fns) {
    const DensityField phi = sample_test_function(g, fn);
    const FaceField gphi = discrete_gradient(phi);
    WeakResidual w;
    w.fn = fn;
    w.u_residual = std::abs(inner(du, phi) + inner(u_flux, gphi));
    w.v_residual = std::abs(inner(dv, phi) + inner(v_flux, gphi) + inner(v_source, phi));
    rep.max_u = std::max(rep.max_u, w.u_residual);
    rep.max_v = std::max(rep.max_v, w.v_residual);
    rep.entries.push_back(w);
  }
  return rep;
}

Discrepancy compare_trajectories(const Snapshots &a, const Snapshots &b) {
  Discrepancy d;
  if (a.size() == 0 || b.size() == 0)
    return d;
  if (a.u[0].grid != b.u[0].grid)
    throw GridMismatch("trajectories live on different grids");
  auto norms = [](const DensityField &x, const DensityField &y, double &l1, double &l2) {
    const double vol = x.grid.cell_volume();
    l1 = l2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = x[i] - y[i];
      l1 += std::abs(e);
      l2 += e * e;
    }
    l1 *= vol;
    l2 = std::sqrt(l2 * vol);
  };
  for (std::size_t k = 0; k < a.size(); ++k) {
    const std::size_t j = nearest_index(b.t, a.t[k]);
    double ul1, ul2, vl1, vl2;
    norms(a.u[k], b.u[j], ul1, ul2);
    norms(a.v[k], b.v[j], vl1, vl2);
    d.t.push_back(a.t[k]);
    d.u_l1.push_back(ul1);
    d.u_l2.push_back(ul2);
    d.v_l1.push_back(vl1);
    d.v_l2.push_back(vl2);
    d.max_u_l1 = std::max(d.max_u_l1, ul1);
    d.max_u_l2 = std::max(d.max_u_l2, ul2);
    d.max_v_l1 = std::max(d.max_v_l1, vl1);
    d.max_v_l2 = std::max(d.max_v_l2, vl2);
  }
  return d;
}

DiagnosticsReport diagnose(const Snapshots &s, const DiagnosticThresholds &th, std::size_t equicontinuity_pairs,
                           const DistanceOptions &opts) {
  DiagnosticsReport rep;
  rep.regime = classify_regime(s.params);
  rep.energy = check_energy_monotone(s, th);
  rep.conservation = check_conservation(s, th);
  rep.apriori = apriori_table(s, th, 3.0 * s.params.alpha + 1.0 - s.params.p > 0.0);
  rep.residuals = weak_residual(s, cosine_modes(s.u.empty() ? Grid() : s.u[0].grid, th.max_mode));
  rep.c1 = rep.apriori.c1;
  for (std::size_t k = 0; k < s.size(); ++k) {
    StepRow row;
    row.k = k;
    row.t = s.t[k];
    row.energy = rep.energy.energies[k];
    row.f_tau = k < s.f_tau.size() ? s.f_tau[k] : row.energy;
    row.mass = s.u[k].mass();
    row.min_u = s.u[k].min();
    row.u_norm = rep.apriori.rows[k].u_norm;
    row.v_h1 = rep.apriori.rows[k].v_h1;
    row.v_h2 = std::sqrt(rep.apriori.rows[k].v_h2_sq);
    row.step_w = k < s.w_step.size() ? s.w_step[k] : 0.0;
    rep.table.push_back(row);
  }
  if (equicontinuity_pairs > 0)
    rep.c4 = equicontinuity_fit(s, sample_pairs(s, equicontinuity_pairs), opts).c4;
  rep.pass_energy = rep.energy.pass;
  rep.pass_conservation = rep.conservation.pass;
  rep.pass_v_residual = rep.residuals.max_v <= th.v_residual;
  return rep;
}

} // namespace mobflow
