#include "mobflow/reference.hpp"

#include "mobflow/elliptic.hpp"
#include "mobflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mobflow {

namespace {

double face_mobility_value(double r, const ModelParams &params, bool regularized) {
  r = std::max(r, 0.0);
  return regularized ? std::pow(r + params.eps, params.alpha) : std::pow(r, params.alpha);
}

// Secant slope of r^s between a and b.
double secant(double a, double b, double s) {
  a = std::max(a, 0.0);
  b = std::max(b, 0.0);
  if (std::abs(a - b) > 1e-12 * std::max(a, b))
    return (std::pow(b, s) - std::pow(a, s)) / (b - a);
  const double r = 0.5 * (a + b);
  if (r == 0.0)
    return s >= 1.0 ? (s == 1.0 ? 1.0 : 0.0) : 0.0;
  return s * std::pow(r, s - 1.0);
}

double face_diffusivity(double ul, double ur, const ModelParams &params, bool regularized) {
  if (!regularized)
    return secant(ul, ur, params.p);
  const double s = params.p - params.alpha;
  const double mbar = 0.5 * (face_mobility_value(ul, params, true) + face_mobility_value(ur, params, true));
  return params.p / s * mbar * secant(ul, ur, s);
}

void check_params(const ModelParams &params, bool regularized) {
  if (!(params.p >= 1.0) || !(params.alpha >= 0.0 && params.alpha < 1.0) || !(params.chi >= 0.0))
    throw InvalidArgument("reference solver needs p >= 1, 0 <= alpha < 1, chi >= 0");
  if (regularized && !(params.eps > 0.0))
    throw InvalidArgument("regularized reference solver needs eps > 0");
}

// Scales the outflow of each cell so it cannot empty the cell in one step.
// Each face flux is scaled by the factor of its donor cell, so mass is kept.
void limit_outflow(const DensityField &u, double dt, FaceField &flux) {
  const Grid &g = u.grid;
  std::vector<double> out(g.num_cells(), 0.0);
  for (int a = 0; a < g.dim(); ++a) {
    std::size_t l, r;
    const double inv_h = 1.0 / g.h(a);
    for (std::size_t f = 0; f < flux[a].size(); ++f)
      if (g.face_neighbors(a, f, l, r)) {
        const double j = flux[a][f] * inv_h;
        if (j > 0.0)
          out[l] += j;
        else
          out[r] -= j;
      }
  }
  std::vector<double> scale(g.num_cells(), 1.0);
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (dt * out[c] > std::max(u[c], 0.0))
      scale[c] = out[c] > 0.0 ? std::max(u[c], 0.0) / (dt * out[c]) : 1.0;
  for (int a = 0; a < g.dim(); ++a) {
    std::size_t l, r;
    for (std::size_t f = 0; f < flux[a].size(); ++f)
      if (g.face_neighbors(a, f, l, r))
        flux[a][f] *= flux[a][f] > 0.0 ? scale[l] : scale[r];
  }
}

void clamp_negatives(DensityField &f) {
  for (double &x : f.values)
    if (x < 0.0)
      x = 0.0;
}

} // namespace

double cfl_bound(const FvState &state, const ModelParams &params, bool regularized) {
  check_params(params, regularized);
  const Grid &g = state.u.grid;
  double dmax = 0.0, gmax = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    std::size_t l, r;
    for (std::size_t f = 0; f < g.num_faces(a); ++f)
      if (g.face_neighbors(a, f, l, r)) {
        dmax = std::max(dmax, face_diffusivity(state.u[l], state.u[r], params, regularized));
        gmax = std::max(gmax, std::abs(state.v[r] - state.v[l]) / g.h(a));
      }
  }
  const double h = g.min_h();
  const double denom = g.dim() * (dmax + params.chi * gmax * h);
  if (denom <= 0.0)
    return std::numeric_limits<double>::infinity();
  return 0.4 * h * h / denom;
}

FvState fv_step(const FvState &state, double dt, const ModelParams &params, bool regularized) {
  if (state.u.grid != state.v.grid)
    throw GridMismatch("u and v live on different grids");
  if (!(dt > 0.0))
    throw InvalidArgument("dt must be positive");
  const double bound = cfl_bound(state, params, regularized);
  if (dt > bound * (1.0 + 1e-12))
    throw CflViolation("dt " + std::to_string(dt) + " exceeds the bound " + std::to_string(bound));

  const Grid &g = state.u.grid;
  const DensityField &u = state.u;
  FaceField flux(g);
  for (int a = 0; a < g.dim(); ++a) {
    std::size_t l, r;
    const double inv_h = 1.0 / g.h(a);
    for (std::size_t f = 0; f < flux[a].size(); ++f) {
      if (!g.face_neighbors(a, f, l, r))
        continue;
      const double ul = std::max(u[l], 0.0), ur = std::max(u[r], 0.0);
      double diff;
      if (regularized) {
        const double s = params.p - params.alpha;
        const double mbar = 0.5 * (face_mobility_value(ul, params, true) + face_mobility_value(ur, params, true));
        diff = -params.p / s * mbar * (std::pow(ur, s) - std::pow(ul, s)) * inv_h;
      } else {
        diff = -(std::pow(ur, params.p) - std::pow(ul, params.p)) * inv_h;
      }
      const double dv = (state.v[r] - state.v[l]) * inv_h;
      const double up = dv > 0.0 ? ul : ur;
      const double chemo = params.chi * face_mobility_value(up, params, regularized) * dv;
      // flux[a][f] carries the rate from l to r times h, i.e. flux per unit area.
      flux[a][f] = diff + chemo;
    }
  }
  limit_outflow(u, dt, flux);

  FvState next;
  next.u = u;
  const DensityField div = discrete_divergence(flux);
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    next.u[c] -= dt * div[c];
  clamp_negatives(next.u);

  DensityField rhs = state.v;
  rhs *= 1.0 / dt;
  rhs += next.u;
  next.v = solve_elliptic(1.0, 1.0 + 1.0 / dt, rhs, {}, &state.v);
  next.t = state.t + dt;
  next.dt_last = dt;
  return next;
}

ReferenceRun run_reference(const DensityField &u0, const DensityField &v0, double t_end, const ModelParams &params,
                           const ReferenceOptions &opts) {
  if (!(t_end >= 0.0))
    throw InvalidArgument("t_end must be nonnegative");
  if (opts.dt < 0.0 || opts.snapshot_interval < 0.0)
    throw InvalidArgument("dt and snapshot interval must be nonnegative");
  ReferenceRun run;
  FvState s;
  s.u = u0;
  s.v = v0;
  run.snapshots.push_back(s);
  double next_snap = opts.snapshot_interval > 0.0 ? opts.snapshot_interval : 0.0;
  const double t_tol = 1e-12 * std::max(1.0, t_end);
  while (s.t < t_end - t_tol) {
    double target = t_end;
    if (opts.snapshot_interval > 0.0)
      target = std::min(target, next_snap);
    double dt;
    if (opts.dt > 0.0) {
      dt = opts.dt;
    } else {
      dt = cfl_bound(s, params, opts.regularized);
      if (dt < opts.min_dt) {
        run.aborted = true;
        run.abort_reason = "CflViolation: step bound " + std::to_string(dt) + " fell below " +
                           std::to_string(opts.min_dt) + " at t = " + std::to_string(s.t);
        break;
      }
    }
    bool landed = false;
    if (s.t + dt >= target - t_tol) {
      dt = target - s.t;
      landed = true;
    }
    try {
      s = fv_step(s, dt, params, opts.regularized);
    } catch (const CflViolation &e) {
      run.aborted = true;
      run.abort_reason = e.what();
      break;
    }
    ++run.steps;
    if (landed)
      s.t = target;
    if (opts.snapshot_interval <= 0.0) {
      run.snapshots.push_back(s);
    } else if (landed) {
      run.snapshots.push_back(s);
      next_snap += opts.snapshot_interval;
    }
  }
  if (run.snapshots.back().t != s.t)
    run.snapshots.push_back(s);
  return run;
}

double aux_flow_cfl(const DensityField &phi, const ModelParams &params) {
  const Grid &g = phi.grid;
  double gmax = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    std::size_t l, r;
    for (std::size_t f = 0; f < g.num_faces(a); ++f)
      if (g.face_neighbors(a, f, l, r))
        gmax = std::max(gmax, std::abs(phi[r] - phi[l]) / g.h(a));
  }
  const double lip = params.mobility().sup_d1();
  if (gmax == 0.0)
    return std::numeric_limits<double>::infinity();
  return 0.5 * g.min_h() / (gmax * lip);
}

DensityField aux_flow_step(const DensityField &w, const DensityField &phi, double dt, const ModelParams &params) {
  if (w.grid != phi.grid)
    throw GridMismatch("w and phi live on different grids");
  if (!(params.eps > 0.0))
    throw InvalidArgument("auxiliary flow needs eps > 0");
  if (!(dt > 0.0))
    throw InvalidArgument("dt must be positive");
  const double bound = aux_flow_cfl(phi, params);
  if (dt > bound * (1.0 + 1e-12))
    throw CflViolation("dt " + std::to_string(dt) + " exceeds the drift bound " + std::to_string(bound));

  const Grid &g = w.grid;
  const Mobility mob = params.mobility();
  FaceField flux(g);
  for (int a = 0; a < g.dim(); ++a) {
    std::size_t l, r;
    for (std::size_t f = 0; f < flux[a].size(); ++f) {
      if (!g.face_neighbors(a, f, l, r))
        continue;
      // Flux -m(w) grad phi moves mass down the gradient of phi.
      const double gphi = (phi[r] - phi[l]) / g.h(a);
      const double up = gphi < 0.0 ? w[l] : w[r];
      flux[a][f] = -mob.value(std::max(up, 0.0)) * gphi;
    }
  }
  limit_outflow(w, dt, flux);
  DensityField mid = w;
  const DensityField div = discrete_divergence(flux);
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    mid[c] -= dt * div[c];
  DensityField out = heat_step(mid, params.delta, dt, 1);
  for (double &x : out.values)
    if (x < 0.0 && x >= -1e-12)
      x = 0.0;
  return out;
}

} // namespace mobflow
