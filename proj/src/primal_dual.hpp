#pragma once

// Primal-dual solver shared by the distance computation and the JKO
// transport step. Internal to the library.

#include "mobflow/transport.hpp"

#include <optional>

namespace mobflow::detail {

struct TransportProblem {
  Grid grid;
  int nt = 1;
  Mobility mob;
  DensityField rho_start;
  /// Fixed terminal density; empty selects a free endpoint.
  std::optional<DensityField> rho_end;
  /// Multiplies the action.
  double action_weight = 1.0;
  /// Free endpoint energy: sum vol * (coef * r^expo - r * potential).
  double end_coef = 0.0;
  double end_expo = 2.0;
  DensityField end_potential;
};

struct PrimalDualControls {
  std::size_t max_iter = 20000;
  double tol = 1e-5;
  double step_ratio = 1.0;
  double mom_scale = 0.0;
  std::size_t check_every = 10;
  /// Rebalance sigma / tau from the primal and dual defects.
  bool adaptive = true;
};

/// Iterates carried between solves for warm starts.
struct PrimalDualState {
  std::vector<DensityField> rho;
  std::vector<FaceField> mom_hat;
  std::vector<FaceField> dual_rho;
  std::vector<FaceField> dual_w;
  DensityField dual_end;
  double mom_scale = 0.0;
};

struct PrimalDualOutcome {
  TransportPath path;
  std::size_t iterations = 0;
  double gap = 0.0;
  bool converged = false;
  std::size_t action_increases = 0;
  double objective = 0.0;
  PrimalDualState state;
};

PrimalDualOutcome solve_transport(const TransportProblem &problem, const PrimalDualControls &controls,
                                  const PrimalDualState *warm = nullptr);

/// Minimiser over r >= 0 of step * (coef r^expo - pot r) + (r - r_t)^2 / 2.
double prox_endpoint(double r_t, double step, double coef, double expo, double pot);

} // namespace mobflow::detail
