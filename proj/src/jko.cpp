#include "mobflow/jko.hpp"

#include "mobflow/elliptic.hpp"
#include "mobflow/errors.hpp"
#include "primal_dual.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mobflow {

namespace {

// Action with negative densities read as zero; the primal-dual iterate may
// carry round-off negatives.
double clamped_action(const TransportPath &path, const Mobility &mob) {
  const Grid &g = path.grid;
  double total = 0.0;
  for (int k = 0; k < path.nt; ++k) {
    const FaceField rho_bar = interval_face_density(path, k);
    for (int a = 0; a < g.dim(); ++a)
      for (std::size_t f = 0; f < rho_bar[a].size(); ++f) {
        const double w = path.mom[k][a][f];
        if (w == 0.0)
          continue;
        const double m = mob.value(std::max(rho_bar[a][f], 0.0));
        if (m <= 0.0)
          return std::numeric_limits<double>::infinity();
        total += w * w / m;
      }
  }
  return total * path.dt() * g.face_volume();
}

double endpoint_energy(const DensityField &u, const DensityField &v, const ModelParams &params) {
  const double c = params.energy_coefficient(), q = params.energy_exponent();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    s += c * std::pow(std::max(u[i], 0.0), q) - u[i] * v[i];
  return s * u.grid.cell_volume();
}

TransportPath still_path(const DensityField &u, int nt) {
  TransportPath p;
  p.grid = u.grid;
  p.nt = nt;
  p.rho.assign(nt + 1, u);
  p.mom.assign(nt, FaceField(u.grid));
  return p;
}

UStepResult evaluate(TransportPath path, const DensityField &v, double tau, const ModelParams &params) {
  UStepResult r;
  r.u = path.rho.back();
  r.action = clamped_action(path, params.mobility());
  r.objective = r.action / (2.0 * tau * params.chi) + endpoint_energy(r.u, v, params);
  r.path = std::move(path);
  return r;
}

UStepResult u_step_impl(const DensityField &u_prev, const DensityField &v, double tau, const ModelParams &params,
                        const JkoControls &ctl, const TransportPath *incumbent, detail::PrimalDualState *warm) {
  if (!(tau > 0.0))
    throw InvalidArgument("tau must be positive");
  if (!(params.eps > 0.0))
    throw InvalidArgument("the transport step needs eps > 0");
  if (u_prev.grid != v.grid)
    throw GridMismatch("u and v live on different grids");

  detail::TransportProblem prob;
  prob.grid = u_prev.grid;
  prob.nt = ctl.nt;
  prob.mob = params.mobility();
  prob.rho_start = u_prev;
  prob.action_weight = 1.0 / (2.0 * tau * params.chi);
  prob.end_coef = params.energy_coefficient();
  prob.end_expo = params.energy_exponent();
  prob.end_potential = v;
  detail::PrimalDualControls pdc;
  pdc.max_iter = ctl.max_iter;
  pdc.tol = ctl.tol;
  pdc.step_ratio = ctl.step_ratio;
  pdc.mom_scale = ctl.mom_scale;
  detail::PrimalDualOutcome out = detail::solve_transport(prob, pdc, warm);
  if (warm)
    *warm = out.state;
  if (!out.converged && ctl.require_convergence)
    throw NoConvergence("transport step stopped at gap " + std::to_string(out.gap) + " after " +
                        std::to_string(out.iterations) + " iterations");

  // Round-off negatives at the endpoint are clipped; mass is restored by scaling.
  DensityField &end = out.path.rho.back();
  if (end.min() < 0.0) {
    for (double &x : end.values)
      x = std::max(x, 0.0);
    end *= u_prev.mass() / end.mass();
  }

  UStepResult best = evaluate(std::move(out.path), v, tau, params);
  best.iterations = out.iterations;
  best.gap = out.gap;
  best.converged = out.converged;

  auto consider = [&](const TransportPath &candidate) {
    UStepResult r = evaluate(candidate, v, tau, params);
    if (r.objective < best.objective) {
      r.iterations = best.iterations;
      r.gap = best.gap;
      r.converged = best.converged;
      best = std::move(r);
    }
  };
  consider(still_path(u_prev, ctl.nt));
  if (incumbent)
    consider(*incumbent);
  return best;
}

JkoState jko_step_impl(const JkoState &prev, double tau, const ModelParams &params, const JkoControls &ctl,
                       detail::PrimalDualState *warm) {
  const double e_prev = energy(prev.u, prev.v, params);
  DensityField v = prev.v;
  UStepResult us;
  bool have = false;
  double f_last = 0.0;
  JkoState next;
  next.k = prev.k + 1;
  for (int sweep = 1; sweep <= std::max(ctl.max_sweeps, 1); ++sweep) {
    us = u_step_impl(prev.u, v, tau, params, ctl, have ? &us.path : nullptr, warm);
    have = true;
    v = v_step(us.u, prev.v, tau, params);
    const double f = f_tau(us.u, v, prev, tau, params, std::sqrt(us.action));
    next.iterations += us.iterations;
    next.sweeps = sweep;
    if (sweep > 1 && std::abs(f - f_last) <= ctl.sweep_tol * std::max(1.0, std::abs(f))) {
      f_last = f;
      break;
    }
    f_last = f;
  }
  if (f_last > e_prev + 1e-8)
    throw StepRejected("F_tau " + std::to_string(f_last) + " exceeds the previous energy " + std::to_string(e_prev));
  next.u = std::move(us.u);
  next.v = std::move(v);
  next.f_tau_value = f_last;
  next.w_step = std::sqrt(us.action);
  next.energy = energy(next.u, next.v, params);
  return next;
}

} // namespace

double f_tau(const DensityField &u, const DensityField &v, const JkoState &prev, double tau, const ModelParams &params,
             std::optional<double> w_value) {
  double w = 0.0;
  if (w_value)
    w = *w_value;
  else
    w = solve_distance(u, prev.u, params.mobility()).value;
  const DensityField dv = v - prev.v;
  return (w * w / params.chi + inner(dv, dv)) / (2.0 * tau) + energy(u, v, params);
}

DensityField v_step(const DensityField &u, const DensityField &v_prev, double tau, const ModelParams &) {
  if (!(tau > 0.0))
    throw InvalidArgument("tau must be positive");
  if (u.grid != v_prev.grid)
    throw GridMismatch("u and v live on different grids");
  DensityField rhs = v_prev;
  rhs *= 1.0 / tau;
  rhs += u;
  DensityField v = solve_elliptic(1.0, 1.0 + 1.0 / tau, rhs);
  if (v.min() < -1e-12)
    for (double &x : v.values)
      x = std::abs(x);
  return v;
}

UStepResult u_step(const DensityField &u_prev, const DensityField &v, double tau, const ModelParams &params,
                   const JkoControls &controls, const TransportPath *incumbent) {
  return u_step_impl(u_prev, v, tau, params, controls, incumbent, nullptr);
}

JkoState jko_step(const JkoState &prev, double tau, const ModelParams &params, const JkoControls &controls) {
  detail::PrimalDualState warm;
  return jko_step_impl(prev, tau, params, controls, &warm);
}

Trajectory run_trajectory(const DensityField &u0, const DensityField &v0, double tau, double t_end,
                          const ModelParams &params, const JkoControls &controls) {
  params.validate();
  if (!(tau > 0.0) || !(t_end >= 0.0))
    throw InvalidArgument("need tau > 0 and t_end >= 0");
  if (u0.min() < 0.0 || v0.min() < -1e-10)
    throw InvalidArgument("initial data must be nonnegative");
  Trajectory traj;
  traj.tau = tau;
  traj.params = params;
  traj.regime = classify_regime(params);
  JkoState s0;
  s0.u = u0;
  s0.v = v0;
  s0.energy = energy(u0, v0, params);
  s0.f_tau_value = s0.energy;
  traj.states.push_back(s0);

  const auto steps = static_cast<std::size_t>(std::ceil(t_end / tau - 1e-9));
  detail::PrimalDualState warm;
  for (std::size_t k = 0; k < steps; ++k) {
    try {
      traj.states.push_back(jko_step_impl(traj.states.back(), tau, params, controls, &warm));
    } catch (const StepRejected &e) {
      traj.aborted = true;
      traj.abort_reason = e.what();
      break;
    }
  }
  return traj;
}

} // namespace mobflow
