#pragma once

#include "mobflow/grid.hpp"
#include "mobflow/jko.hpp"
#include "mobflow/model.hpp"
#include "mobflow/reference.hpp"
#include "mobflow/transport.hpp"

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace mobflow {

/// Every pass/fail threshold used by the checks below.
struct DiagnosticThresholds {
  double energy_increase = 1e-8;
  double mass_error = 1e-8;
  double min_density = -1e-10;
  double v_residual = 1e-6;
  /// Fitted constants must agree within this factor across refinements.
  double constant_band = 2.0;
  /// Accepted range for the residual ratio under simultaneous halving of tau and h.
  double residual_ratio_low = 1.4;
  double residual_ratio_high = 3.0;
  double steady_discrepancy = 1e-6;
  /// A norm counts as bounded while it stays below this multiple of its start value.
  double norm_growth = 10.0;
  /// Cosine test functions use modes 0..max_mode per axis.
  int max_mode = 3;
};

/// Time-ordered (u, v) snapshots, either JKO states or reference snapshots.
/// On (t[k-1], t[k]] the solution is read as the constant state k.
struct Snapshots {
  ModelParams params;
  std::vector<double> t;
  std::vector<DensityField> u;
  std::vector<DensityField> v;
  /// JKO only; empty otherwise.
  std::vector<double> f_tau;
  std::vector<double> w_step;
  /// JKO step; 0 for reference runs.
  double tau = 0.0;

  std::size_t size() const { return t.size(); }
};

Snapshots snapshots(const Trajectory &traj);
Snapshots snapshots(const ReferenceRun &run, const ModelParams &params);

struct EnergyCheck {
  bool pass = true;
  /// max_k (E_k - E_{k-1}); -inf for a single state.
  double worst_increase = 0.0;
  std::size_t worst_step = 0;
  std::vector<double> energies;
};
EnergyCheck check_energy_monotone(const Snapshots &s, const DiagnosticThresholds &th = {});

struct ConservationCheck {
  bool pass = true;
  /// max_k |mass_k - mass_0|.
  double mass_error = 0.0;
  double min_u = 0.0;
  double min_v = 0.0;
};
ConservationCheck check_conservation(const Snapshots &s, const DiagnosticThresholds &th = {});

/// Snapshot index pairs with the given spacings, chosen at fixed physical times.
std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(const Snapshots &s, std::size_t count);

struct EquicontinuityFit {
  double c4 = 0.0;
  /// Per pair: t, s, distance.
  std::vector<std::array<double, 3>> samples;
};
/// C4 = max over pairs of W(u(t), u(s)) / (sqrt|t - s| + sqrt tau). Needs at
/// least 5 pairs.
EquicontinuityFit equicontinuity_fit(const Snapshots &s, const std::vector<std::pair<std::size_t, std::size_t>> &pairs,
                                     const DistanceOptions &opts = {});

struct AprioriRow {
  double t = 0.0;
  double u_norm = 0.0;       ///< |u|_{p+1-alpha}
  double v_h1 = 0.0;         ///< |v|_{H1}
  double v_h2_sq = 0.0;      ///< |v|^2 + |grad v|^2 + |Laplacian v|^2
  double grad_power_sq = 0.0; ///< |grad u^{(p+1-alpha)/2}|^2
  double ks_residual_sq = 0.0; ///< |Laplacian v - v + u|^2
  double grad_mobility_q = 0.0; ///< |grad (u+eps)^alpha|_q
};

struct AprioriTable {
  double q = 0.0;
  std::vector<AprioriRow> rows;
  /// Time integrals over (0, T] of the piecewise-constant interpolant.
  double int_grad_power_sq = 0.0;
  double int_ks_residual_sq = 0.0;
  double int_v_h2_sq = 0.0;
  double int_grad_mobility_q = 0.0;
  /// sup_t (|u|^{p+1-alpha}_{p+1-alpha} + |v|^2_{H1}).
  double c1 = 0.0;
  bool u_norm_bounded = true;
  bool v_h1_bounded = true;
};
/// Throws BadExponent when 3 alpha + 1 - p <= 0.
AprioriTable apriori_norms(const Snapshots &s, const DiagnosticThresholds &th = {});

/// cos(kx pi x / Lx) cos(ky pi y / Ly) sampled at cell centres.
struct TestFunction {
  int kx = 0;
  int ky = 0;
};
std::vector<TestFunction> cosine_modes(const Grid &g, int max_mode);
DensityField sample_test_function(const Grid &g, const TestFunction &f);

struct WeakResidual {
  TestFunction fn;
  double u_residual = 0.0;
  double v_residual = 0.0;
};
struct WeakResidualReport {
  std::vector<WeakResidual> entries;
  double max_u = 0.0;
  double max_v = 0.0;
};
/// Residuals of the weak forms
///   int (u(T) - u0) phi + int_0^T int (grad u^p - chi u^alpha grad v) . grad phi = 0,
///   int (v(T) - v0) zeta + int_0^T int (grad v . grad zeta + (v - u) zeta) = 0,
/// with discrete gradients and the piecewise-constant time interpolant.
WeakResidualReport weak_residual(const Snapshots &s, const std::vector<TestFunction> &fns);

struct Discrepancy {
  std::vector<double> t;
  std::vector<double> u_l1, u_l2, v_l1, v_l2;
  double max_u_l1 = 0.0, max_u_l2 = 0.0, max_v_l1 = 0.0, max_v_l2 = 0.0;
};
/// Pairs each snapshot of `a` with the nearest-in-time snapshot of `b`.
/// Throws GridMismatch.
Discrepancy compare_trajectories(const Snapshots &a, const Snapshots &b);

struct StepRow {
  std::size_t k = 0;
  double t = 0.0;
  double energy = 0.0;
  double f_tau = 0.0;
  double mass = 0.0;
  double min_u = 0.0;
  double u_norm = 0.0;
  double v_h1 = 0.0;
  double v_h2 = 0.0;
  double step_w = 0.0;
};

struct DiagnosticsReport {
  std::vector<StepRow> table;
  EnergyCheck energy;
  ConservationCheck conservation;
  AprioriTable apriori;
  WeakResidualReport residuals;
  /// Negative when not computed.
  double c4 = -1.0;
  double c1 = 0.0;
  bool pass_energy = false;
  bool pass_conservation = false;
  bool pass_v_residual = false;
  RegimeLabel regime;
};

/// Runs every check. equicontinuity_pairs = 0 skips the C4 fit. When
/// 3 alpha + 1 - p <= 0 the mobility-gradient column is NaN instead of throwing.
DiagnosticsReport diagnose(const Snapshots &s, const DiagnosticThresholds &th = {},
                           std::size_t equicontinuity_pairs = 0, const DistanceOptions &opts = {});

} // namespace mobflow
