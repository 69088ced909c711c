#pragma once

#include "mobflow/grid.hpp"
#include "mobflow/model.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace mobflow {

/// Discrete space-time curve on [0,1]: densities at nt+1 time nodes,
/// momenta on faces at the nt interval midpoints.
struct TransportPath {
  Grid grid;
  int nt = 0;
  std::vector<DensityField> rho;
  std::vector<FaceField> mom;

  double dt() const { return 1.0 / double(nt); }
  /// L2 norm (time and volume weighted) of (rho[k+1]-rho[k])/dt + div(mom[k]).
  double continuity_residual() const;
  /// Largest |mass(rho[k]) - mass(rho[0])|.
  double mass_drift() const;
};

/// Density at each face and time interval: mean of the two adjacent cells at
/// the two adjacent time nodes.
FaceField interval_face_density(const TransportPath &path, int k);

/// sum_k dt sum_faces |mom|^2 / m(rho_bar) * face volume. Returns +inf when
/// m(rho_bar) = 0 under nonzero momentum. Throws InvalidPath on negative density.
double action(const TransportPath &path, const Mobility &mob);
double action(const TransportPath &path, const ModelParams &params);

/// sum_faces |w|^2 / M * face volume for given face mobilities M.
double face_action(const FaceField &face_mobility, const FaceField &w);

struct ProxPoint {
  double rho = 0.0;
  std::vector<double> w;
};

/// Minimiser of |w|^2/m(rho) + (|rho - rho_t|^2 + |w - w_t|^2) / (2 sigma)
/// over rho >= 0. Jointly convex because m is concave. Throws NoConvergence
/// after 100 root-finding iterations.
ProxPoint prox_action(double rho_t, std::span<const double> w_t, double sigma, const Mobility &mob);

/// Scalar-momentum variant used on staggered faces.
void prox_action(double rho_t, double w_t, double sigma, const Mobility &mob, double &rho, double &w);

struct DistanceOptions {
  int nt = 16;
  std::size_t max_iter = 20000;
  /// Stopping threshold on the primal-dual residual (see DistanceResult).
  double tol = 1e-5;
  /// sigma / tau; the product is fixed by the operator norm.
  double step_ratio = 1.0;
  /// Momentum unknowns are stored divided by this scale; 0 picks h / dt.
  double mom_scale = 0.0;
};

struct DistanceResult {
  double value = 0.0;
  TransportPath path;
  std::size_t iterations = 0;
  /// Relative KKT residual of the last iterate: max of the relative
  /// stationarity defect projected on the constraint space and the relative
  /// dual defect.
  double primal_dual_gap = 0.0;
  bool converged = false;
  /// Number of residual checks (after the first 10 iterations) at which the
  /// action increased by more than 1e-8.
  std::size_t action_increases = 0;
};

/// Weighted Wasserstein distance by a primal-dual splitting over discrete
/// continuity-equation paths. Throws MassMismatch when masses differ by more
/// than 1e-10 relative. Returns the last iterate with converged = false when
/// max_iter is exhausted.
DistanceResult solve_distance(const DensityField &mu0, const DensityField &mu1, const Mobility &mob,
                              const DistanceOptions &opts = {});
DistanceResult solve_distance(const DensityField &mu0, const DensityField &mu1, const ModelParams &params,
                              const DistanceOptions &opts = {});

/// m(face mean of rho) on interior faces, zero on boundary faces.
FaceField face_mobility(const DensityField &rho, const Mobility &mob);

/// Zero-mean phi with div(M grad phi) = div(w), M the face mobility. The field
/// M grad phi has no larger action than w.
DensityField recover_potential(const FaceField &face_mob, const FaceField &w, double tol = 1e-10);
DensityField recover_potential(const DensityField &rho, const FaceField &w, const ModelParams &params,
                               double tol = 1e-10);

} // namespace mobflow
