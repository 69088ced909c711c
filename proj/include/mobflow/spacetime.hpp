#pragma once

#include "mobflow/grid.hpp"

#include <memory>
#include <vector>

namespace mobflow {

/// Orthogonal projection onto discrete continuity-equation paths.
///
/// Unknowns are density slices rho[0..nt] and momentum slices mom[0..nt-1]
/// (face fields, zero on the boundary). The constraint is
///
///   (rho[k+1] - rho[k]) / dt + s * div(mom[k]) = 0,   k = 0 .. nt-1,
///
/// with dt = 1/nt and s the momentum scale. rho[0] is always held fixed;
/// rho[nt] is fixed unless `free_end`. The Euclidean projection reduces to a
/// space-time Neumann Poisson problem, diagonalised by a cosine transform in
/// space and solved by tridiagonal sweeps in time.
class ContinuityProjector {
public:
  ContinuityProjector(const Grid &grid, int nt, bool free_end, double mom_scale = 1.0);
  ~ContinuityProjector();
  ContinuityProjector(const ContinuityProjector &) = delete;
  ContinuityProjector &operator=(const ContinuityProjector &) = delete;

  int nt() const { return nt_; }
  bool free_end() const { return free_end_; }
  double mom_scale() const { return scale_; }

  /// Projects onto the affine constraint set; fixed slices are left untouched.
  void project(std::vector<DensityField> &rho, std::vector<FaceField> &mom);

  /// Projects onto the direction space (constraints with the fixed slices
  /// treated as zero). Fixed slices are zeroed.
  void project_tangent(std::vector<DensityField> &rho, std::vector<FaceField> &mom);

  /// Euclidean norm of the constraint residual, in the units above.
  double residual_norm(const std::vector<DensityField> &rho, const std::vector<FaceField> &mom) const;

private:
  void solve_multiplier(std::vector<std::vector<double>> &r);
  void apply_correction(const std::vector<std::vector<double>> &lambda, std::vector<DensityField> &rho,
                        std::vector<FaceField> &mom) const;

  Grid grid_;
  int nt_;
  bool free_end_;
  double scale_;
  std::vector<double> eig_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

} // namespace mobflow
