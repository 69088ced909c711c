#include "mobflow/model.hpp"

#include "mobflow/errors.hpp"

#include <cmath>
#include <limits>

namespace mobflow {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRegimeTol = 1e-12;
} // namespace

double Mobility::value(double r) const {
  if (alpha == 0.0)
    return 1.0;
  return std::pow(r + eps, alpha);
}

double Mobility::d1(double r) const {
  if (alpha == 0.0)
    return 0.0;
  if (alpha == 1.0)
    return 1.0;
  return alpha * std::pow(r + eps, alpha - 1.0);
}

double Mobility::d2(double r) const {
  if (alpha == 0.0 || alpha == 1.0)
    return 0.0;
  return alpha * (alpha - 1.0) * std::pow(r + eps, alpha - 2.0);
}

double Mobility::sup_d1() const {
  if (alpha == 0.0)
    return 0.0;
  if (alpha == 1.0)
    return 1.0;
  return eps > 0.0 ? alpha / std::pow(eps, 1.0 - alpha) : kInf;
}

double Mobility::sup_m_d2() const {
  if (alpha == 0.0 || alpha == 1.0)
    return 0.0;
  return eps > 0.0 ? alpha * (1.0 - alpha) / std::pow(eps, 2.0 * (1.0 - alpha)) : kInf;
}

void ModelParams::validate() const {
  if (!(p >= 1.0))
    throw InvalidArgument("p must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidArgument("alpha must lie in (0,1)");
  if (!(chi > 0.0))
    throw InvalidArgument("chi must be > 0");
  if (!(eps >= 0.0))
    throw InvalidArgument("eps must be >= 0");
  if (!(delta > 0.0))
    throw InvalidArgument("delta must be > 0");
  if (dim < 1)
    throw InvalidArgument("dim must be >= 1");
}

double ModelParams::energy_coefficient() const { return p / (chi * (p - alpha) * (p + 1.0 - alpha)); }

double mobility(double r, const ModelParams &params, int order) {
  if (r < 0.0)
    throw InvalidArgument("mobility needs r >= 0");
  const Mobility m = params.mobility();
  if (order >= 1 && params.eps == 0.0 && r == 0.0)
    throw SingularMobility("derivative of r^alpha at r = 0");
  switch (order) {
  case 0:
    return m.value(r);
  case 1:
    return m.d1(r);
  case 2:
    return m.d2(r);
  default:
    throw InvalidArgument("mobility order must be 0, 1 or 2");
  }
}

double u_epsilon(double r, const ModelParams &params, int order) {
  const double a = params.alpha, e = params.eps;
  if (!(e > 0.0))
    throw SingularMobility("U_eps needs eps > 0");
  if (r < 0.0)
    throw InvalidArgument("U_eps needs r >= 0");
  switch (order) {
  case 0:
    return (std::pow(r + e, 2.0 - a) - std::pow(e, 2.0 - a)) / ((2.0 - a) * (1.0 - a)) -
           std::pow(e, 1.0 - a) / (1.0 - a) * r;
  case 1:
    return (std::pow(r + e, 1.0 - a) - std::pow(e, 1.0 - a)) / (1.0 - a);
  case 2:
    return std::pow(r + e, -a);
  default:
    throw InvalidArgument("U_eps order must be 0, 1 or 2");
  }
}

double big_u(const DensityField &u, const ModelParams &params) {
  double s = 0.0;
  for (double v : u.values)
    s += u_epsilon(std::max(v, 0.0), params);
  return s * u.grid.cell_volume();
}

double energy(const DensityField &u, const DensityField &v, const ModelParams &params) {
  const double q = params.energy_exponent();
  double internal = 0.0;
  for (double x : u.values)
    internal += std::pow(std::max(x, 0.0), q);
  internal *= u.grid.cell_volume();
  const FaceField gv = discrete_gradient(v);
  return params.energy_coefficient() * internal - inner(u, v) + 0.5 * (inner(gv, gv) + inner(v, v));
}

double v_delta(const DensityField &u, const DensityField &phi, const ModelParams &params) {
  return inner(u, phi) + params.delta * big_u(u, params);
}

namespace {

// Derivative along `axis` at every cell: central differences inside, one-sided at walls.
DensityField cell_derivative(const DensityField &f, int axis) {
  const Grid &g = f.grid;
  DensityField out(g);
  const std::size_t nx = g.cells(0);
  const std::size_t ny = g.dim() == 2 ? g.cells(1) : 1;
  const std::size_t n = g.cells(axis);
  const double h = g.h(axis);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t k = axis == 0 ? i : j;
      auto at = [&](std::size_t kk) { return axis == 0 ? f[g.cell_index(kk, j)] : f[g.cell_index(i, kk)]; };
      double d;
      if (k == 0)
        d = (at(1) - at(0)) / h;
      else if (k == n - 1)
        d = (at(n - 1) - at(n - 2)) / h;
      else
        d = (at(k + 1) - at(k - 1)) / (2.0 * h);
      out[g.cell_index(i, j)] = d;
    }
  return out;
}

// Second derivative along one axis: centred inside, shifted stencil at walls
// (exact for quadratics).
DensityField cell_second_derivative(const DensityField &f, int axis) {
  const Grid &g = f.grid;
  DensityField out(g);
  const std::size_t nx = g.cells(0);
  const std::size_t ny = g.dim() == 2 ? g.cells(1) : 1;
  const std::size_t n = g.cells(axis);
  const double h2 = g.h(axis) * g.h(axis);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t k = axis == 0 ? i : j;
      auto at = [&](std::size_t kk) { return axis == 0 ? f[g.cell_index(kk, j)] : f[g.cell_index(i, kk)]; };
      double d = 0.0;
      if (n >= 3) {
        const std::size_t c = k == 0 ? 1 : (k == n - 1 ? n - 2 : k);
        d = (at(c + 1) - 2.0 * at(c) + at(c - 1)) / h2;
      }
      out[g.cell_index(i, j)] = d;
    }
  return out;
}

} // namespace

double gradient_sup_norm(const DensityField &phi) {
  const Grid &g = phi.grid;
  std::vector<double> sq(g.num_cells(), 0.0);
  for (int a = 0; a < g.dim(); ++a) {
    const DensityField d = cell_derivative(phi, a);
    for (std::size_t c = 0; c < sq.size(); ++c)
      sq[c] += d[c] * d[c];
  }
  double best = 0.0;
  for (double s : sq)
    best = std::max(best, std::sqrt(s));
  return best;
}

double hessian_sup_norm(const DensityField &phi) {
  const Grid &g = phi.grid;
  std::vector<double> sum(g.num_cells(), 0.0);
  for (int a = 0; a < g.dim(); ++a) {
    const DensityField d2 = cell_second_derivative(phi, a);
    for (std::size_t c = 0; c < sum.size(); ++c)
      sum[c] += std::abs(d2[c]);
  }
  if (g.dim() == 2) {
    const DensityField cross = cell_derivative(cell_derivative(phi, 0), 1);
    for (std::size_t c = 0; c < sum.size(); ++c)
      sum[c] += 2.0 * std::abs(cross[c]);
  }
  double best = 0.0;
  for (double s : sum)
    best = std::max(best, s);
  return best;
}

double lambda_delta(const DensityField &phi, const ModelParams &params) {
  if (!(params.eps > 0.0))
    throw SingularMobility("lambda_delta needs eps > 0");
  if (!(params.delta > 0.0))
    throw InvalidArgument("lambda_delta needs delta > 0");
  const Mobility m = params.mobility();
  const double g = gradient_sup_norm(phi);
  const double hess = hessian_sup_norm(phi);
  // Written so that a vanishing norm contributes an exact zero.
  double out = 0.0;
  if (g > 0.0)
    out -= g * g * m.sup_m_d2() / (2.0 * params.delta);
  if (hess > 0.0)
    out -= hess * m.sup_d1();
  return out;
}

std::string to_string(Regime r) {
  switch (r) {
  case Regime::Thm11:
    return "Thm11";
  case Regime::Thm12:
    return "Thm12";
  case Regime::Thm14SmallChi:
    return "Thm14SmallChi";
  case Regime::Uncovered:
    return "Uncovered";
  }
  return "Uncovered";
}

RegimeLabel classify_regime(const ModelParams &params) {
  const double a = params.alpha, p = params.p;
  const double d = double(params.dim);
  RegimeLabel out;
  out.critical_p = 1.0 + a - 2.0 / d;
  if (std::abs(p - (1.0 + a)) <= kRegimeTol)
    out.regime = Regime::Thm11;
  else if (p > out.critical_p + kRegimeTol && p < 1.0 + a && a >= (1.0 + p) / 3.0 - kRegimeTol)
    out.regime = Regime::Thm12;
  else if (std::abs(p - out.critical_p) <= kRegimeTol && params.dim >= 3 && a >= (d - 1.0) / d - kRegimeTol)
    out.regime = Regime::Thm14SmallChi;
  else
    out.regime = Regime::Uncovered;
  return out;
}

} // namespace mobflow
