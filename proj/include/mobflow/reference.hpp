#pragma once

#include "mobflow/grid.hpp"
#include "mobflow/model.hpp"

#include <string>
#include <vector>

namespace mobflow {

struct FvState {
  DensityField u;
  DensityField v;
  double t = 0.0;
  double dt_last = 0.0;
};

/// Largest admissible explicit step: 0.4 h^2 / (D + chi max|grad v| h), with D
/// the largest face diffusivity of the current state.
double cfl_bound(const FvState &state, const ModelParams &params, bool regularized);

/// One step of the Keller-Segel finite-volume scheme: explicit fluxes for u
/// (nonlinear diffusion plus upwinded chemotaxis), then an implicit solve for v.
/// The unregularized form uses u^p differences and mobility u^alpha; the
/// regularized form uses p/(p-alpha) m_eps(u) grad u^{p-alpha} and m_eps.
/// Throws CflViolation when dt exceeds cfl_bound.
FvState fv_step(const FvState &state, double dt, const ModelParams &params, bool regularized);

struct ReferenceOptions {
  /// Fixed step; 0 steps at the CFL bound.
  double dt = 0.0;
  /// Snapshot spacing in time; 0 records every step.
  double snapshot_interval = 0.0;
  /// Adaptive runs abort when the CFL step drops below this.
  double min_dt = 1e-10;
  bool regularized = false;
};

struct ReferenceRun {
  std::vector<FvState> snapshots;
  bool aborted = false;
  std::string abort_reason;
  std::size_t steps = 0;
};

/// Integrates to t_end, recording the initial state, every snapshot time and
/// the final state. A CFL violation ends the run with the snapshots so far.
ReferenceRun run_reference(const DensityField &u0, const DensityField &v0, double t_end, const ModelParams &params,
                           const ReferenceOptions &opts = {});

/// Step bound for the drift of the auxiliary flow: 0.5 h / (max|grad phi| sup m_eps').
double aux_flow_cfl(const DensityField &phi, const ModelParams &params);

/// One step of w_t = delta Laplacian(w) + div(m_eps(w) grad phi): explicit
/// upwinded drift followed by one backward-Euler diffusion solve.
/// Throws CflViolation when dt exceeds aux_flow_cfl.
DensityField aux_flow_step(const DensityField &w, const DensityField &phi, double dt, const ModelParams &params);

} // namespace mobflow
