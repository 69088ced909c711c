#pragma once

#include "mobflow/grid.hpp"

#include <string>

namespace mobflow {

/// Power-law mobility m(r) = (r + eps)^alpha.
///
/// The model restricts alpha to (0,1); the type itself admits the closed
/// interval so that alpha = 0 (m = 1, the H^-1 case) and alpha = 1, eps = 0
/// (m = r, quadratic transport) are available as reference limits.
struct Mobility {
  double alpha = 0.5;
  double eps = 0.0;

  double value(double r) const;
  double d1(double r) const;
  double d2(double r) const;
  /// sup over r >= 0 of m'(r); infinite for eps = 0 and 0 < alpha < 1.
  double sup_d1() const;
  /// sup over r >= 0 of |m(r) m''(r)|.
  double sup_m_d2() const;
};

struct ModelParams {
  double p = 1.5;
  double alpha = 0.5;
  double chi = 1.0;
  /// Space dimension used by the regime classification.
  int dim = 1;
  double eps = 0.0;
  double delta = 1.0;

  /// Throws InvalidArgument naming the first violated invariant.
  void validate() const;

  Mobility mobility() const { return {alpha, eps}; }
  /// p + 1 - alpha, the exponent of the internal energy.
  double energy_exponent() const { return p + 1.0 - alpha; }
  /// p / (chi (p - alpha) (p + 1 - alpha)).
  double energy_coefficient() const;
};

/// m_eps(r) and its first two derivatives (order 0, 1, 2).
/// Throws SingularMobility for eps = 0, r = 0, order >= 1.
double mobility(double r, const ModelParams &params, int order = 0);

/// Entropy with U'' m_eps = 1, U(0) = U'(0) = 0; order selects U, U', U''.
/// Throws SingularMobility for eps = 0.
double u_epsilon(double r, const ModelParams &params, int order = 0);

/// Integral of U_eps(u).
double big_u(const DensityField &u, const ModelParams &params);

/// Keller-Segel free energy: internal energy minus the u-v pairing plus half
/// the squared H1 norm of v.
double energy(const DensityField &u, const DensityField &v, const ModelParams &params);

/// <u, phi> + delta * big_u(u).
double v_delta(const DensityField &u, const DensityField &phi, const ModelParams &params);

/// Sup-norm of the cell gradient of phi (central differences, one-sided at walls).
double gradient_sup_norm(const DensityField &phi);
/// Sup over cells of sum_{i,j} |d_i d_j phi| (second differences, one-sided at walls).
double hessian_sup_norm(const DensityField &phi);

/// Convexity constant of the flow-interchange estimate; always <= 0.
double lambda_delta(const DensityField &phi, const ModelParams &params);

enum class Regime { Thm11, Thm12, Thm14SmallChi, Uncovered };

struct RegimeLabel {
  Regime regime = Regime::Uncovered;
  double critical_p = 0.0;
};

std::string to_string(Regime r);

/// Places (p, alpha, dim) among the parameter regimes with a global
/// existence result. Equalities are tested to 1e-12.
RegimeLabel classify_regime(const ModelParams &params);

} // namespace mobflow
