#pragma once

#include "mobflow/grid.hpp"

#include <optional>

namespace mobflow {

struct CgOptions {
  double rel_tol = 1e-10;
  /// 0 selects 10 * (number of cells).
  std::size_t max_iter = 0;
};

struct CgReport {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

/// Solves (c I - div(a grad)) phi = rhs with zero-flux boundaries.
///
/// `face_coeff` gives a on faces; the cell-coefficient overloads build it by
/// arithmetic mean of adjacent cells. For c == 0 the right-hand side must have
/// zero mean and the returned solution is gauged to zero mean.
///
/// Throws SingularSystem when c == 0 and rhs is incompatible, NoConvergence
/// when the iteration cap is hit.
DensityField solve_elliptic(const FaceField &face_coeff, double c, const DensityField &rhs,
                            const CgOptions &opts = {}, const DensityField *initial = nullptr,
                            CgReport *report = nullptr);
DensityField solve_elliptic(const DensityField &cell_coeff, double c, const DensityField &rhs,
                            const CgOptions &opts = {}, const DensityField *initial = nullptr,
                            CgReport *report = nullptr);
DensityField solve_elliptic(double coeff, double c, const DensityField &rhs, const CgOptions &opts = {},
                            const DensityField *initial = nullptr, CgReport *report = nullptr);

/// Applies (c I - div(a grad)) to phi.
DensityField apply_elliptic(const FaceField &face_coeff, double c, const DensityField &phi);

/// `substeps` backward-Euler steps of f_t = delta * Laplacian(f) over total time `duration`.
DensityField heat_step(const DensityField &f, double delta, double duration, int substeps,
                       const CgOptions &opts = {});

struct Norm {
  enum class Kind { Lq, H1 };
  Kind kind = Kind::Lq;
  double q = 2.0;

  static Norm lq(double q) { return {Kind::Lq, q}; }
  static Norm h1() { return {Kind::H1, 2.0}; }
};

/// Lq norm (sum |f|^q vol)^(1/q) or H1 norm sqrt(|f|_2^2 + |grad f|_2^2).
/// Throws BadExponent for q < 1.
double field_norm(const DensityField &f, Norm kind);

} // namespace mobflow
