#pragma once

#include "mobflow/grid.hpp"
#include "mobflow/model.hpp"
#include "mobflow/transport.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mobflow {

struct JkoState {
  DensityField u;
  DensityField v;
  int k = 0;
  double f_tau_value = 0.0;
  /// Distance between u and the previous accepted u.
  double w_step = 0.0;
  double energy = 0.0;
  /// Primal-dual iterations summed over the sweeps of this step.
  std::size_t iterations = 0;
  int sweeps = 0;
};

struct Trajectory {
  double tau = 0.0;
  ModelParams params;
  std::vector<JkoState> states;
  RegimeLabel regime;
  /// Set when a step was rejected; states then hold the accepted prefix.
  bool aborted = false;
  std::string abort_reason;

  double time(std::size_t k) const { return double(k) * tau; }
};

struct JkoControls {
  /// Time slices of the transport path inside one step.
  int nt = 1;
  std::size_t max_iter = 50000;
  double tol = 1e-7;
  int max_sweeps = 5;
  /// Relative change of F_tau between sweeps that ends the alternation.
  double sweep_tol = 1e-7;
  double step_ratio = 1.0;
  double mom_scale = 0.0;
  /// u_step throws NoConvergence when the iteration cap is hit.
  bool require_convergence = false;
};

/// (W^2 / chi + |v - v_prev|^2) / (2 tau) + E(u, v). The distance is computed
/// with solve_distance unless `w_value` is given.
double f_tau(const DensityField &u, const DensityField &v, const JkoState &prev, double tau, const ModelParams &params,
             std::optional<double> w_value = std::nullopt);

/// Exact minimiser of F_tau in v: ((1 + 1/tau) I - Laplacian) v = v_prev / tau + u.
/// Cells below -1e-12 trigger replacement of v by |v|.
DensityField v_step(const DensityField &u, const DensityField &v_prev, double tau, const ModelParams &params);

struct UStepResult {
  DensityField u;
  TransportPath path;
  /// action / (2 tau chi) + internal energy - <u, v>.
  double objective = 0.0;
  double action = 0.0;
  std::size_t iterations = 0;
  double gap = 0.0;
  bool converged = false;
};

/// Minimises action / (2 tau chi) + c_p |u|^{p+1-alpha}_{p+1-alpha} - <u, v>
/// over continuity paths leaving u_prev with a free endpoint. Never returns
/// something worse than staying at u_prev or than `incumbent` (a path from
/// u_prev) when one is given.
UStepResult u_step(const DensityField &u_prev, const DensityField &v, double tau, const ModelParams &params,
                   const JkoControls &controls = {}, const TransportPath *incumbent = nullptr);

/// Block alternation of u_step and v_step from (prev.u, prev.v). Throws
/// StepRejected when F_tau of the result exceeds E(prev) by more than 1e-8.
JkoState jko_step(const JkoState &prev, double tau, const ModelParams &params, const JkoControls &controls = {});

/// ceil(t_end / tau) steps from (u0, v0). A rejected step ends the run with
/// the accepted prefix and `aborted` set.
Trajectory run_trajectory(const DensityField &u0, const DensityField &v0, double tau, double t_end,
                          const ModelParams &params, const JkoControls &controls = {});

} // namespace mobflow
