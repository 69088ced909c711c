#include "mobflow/elliptic.hpp"

#include "mobflow/errors.hpp"

#include <cassert>
#include <cmath>
#include <string>

namespace mobflow {

namespace {

double dot(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

void remove_mean(std::vector<double> &v) {
  double m = 0.0;
  for (double x : v)
    m += x;
  m /= double(v.size());
  for (double &x : v)
    x -= m;
}

double raw_mean(const std::vector<double> &v) {
  double m = 0.0;
  for (double x : v)
    m += x;
  return m / double(v.size());
}

// Diagonal of (c I - div(a grad)) in cell indexing.
std::vector<double> operator_diagonal(const FaceField &a, double c) {
  const Grid &g = a.grid;
  std::vector<double> d(g.num_cells(), c);
  for (int ax = 0; ax < g.dim(); ++ax) {
    const double ih2 = 1.0 / (g.h(ax) * g.h(ax));
    std::size_t l, r;
    for (std::size_t f = 0; f < a[ax].size(); ++f)
      if (g.face_neighbors(ax, f, l, r)) {
        d[l] += a[ax][f] * ih2;
        d[r] += a[ax][f] * ih2;
      }
  }
  return d;
}

void apply_raw(const FaceField &a, double c, const std::vector<double> &x, std::vector<double> &y) {
  const Grid &g = a.grid;
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] = c * x[i];
  for (int ax = 0; ax < g.dim(); ++ax) {
    const double ih2 = 1.0 / (g.h(ax) * g.h(ax));
    std::size_t l, r;
    for (std::size_t f = 0; f < a[ax].size(); ++f)
      if (g.face_neighbors(ax, f, l, r)) {
        const double flux = a[ax][f] * (x[r] - x[l]) * ih2;
        y[l] -= flux;
        y[r] += flux;
      }
  }
}

} // namespace

DensityField apply_elliptic(const FaceField &face_coeff, double c, const DensityField &phi) {
  DensityField out(phi.grid);
  apply_raw(face_coeff, c, phi.values, out.values);
  return out;
}

DensityField solve_elliptic(const FaceField &a, double c, const DensityField &rhs, const CgOptions &opts,
                            const DensityField *initial, CgReport *report) {
  const Grid &g = rhs.grid;
  if (a.grid != g)
    throw GridMismatch("coefficient and right-hand side live on different grids");
  if (c < 0.0)
    throw InvalidArgument("elliptic shift must be nonnegative");
  const std::size_t n = g.num_cells();
  const bool singular = (c == 0.0);

  std::vector<double> b = rhs.values;
  double b_rms = std::sqrt(dot(b, b) / double(n));
  if (singular) {
    const double m = raw_mean(b);
    if (std::abs(m) > std::max(opts.rel_tol, 1e-12) * (1.0 + b_rms))
      throw SingularSystem("pure Neumann problem with right-hand side mean " + std::to_string(m));
    remove_mean(b);
  }

  std::vector<double> x = initial ? initial->values : std::vector<double>(n, 0.0);
  if (singular)
    remove_mean(x);

  const std::vector<double> diag = operator_diagonal(a, c);
  std::vector<double> r(n), z(n), p(n), q(n);
  apply_raw(a, c, x, q);
  for (std::size_t i = 0; i < n; ++i)
    r[i] = b[i] - q[i];

  const double b_norm = std::sqrt(dot(b, b));
  const std::size_t max_iter = opts.max_iter ? opts.max_iter : 10 * n;
  double r_norm = std::sqrt(dot(r, r));
  std::size_t it = 0;

  if (b_norm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    r_norm = 0.0;
  }

  auto precondition = [&]() {
    for (std::size_t i = 0; i < n; ++i)
      z[i] = diag[i] > 0.0 ? r[i] / diag[i] : r[i];
    if (singular)
      remove_mean(z);
  };

  if (r_norm > opts.rel_tol * b_norm) {
    precondition();
    p = z;
    double rz = dot(r, z);
    for (it = 1; it <= max_iter; ++it) {
      apply_raw(a, c, p, q);
      const double pq = dot(p, q);
      if (pq <= 0.0)
        break;
      const double step = rz / pq;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += step * p[i];
        r[i] -= step * q[i];
      }
      r_norm = std::sqrt(dot(r, r));
      if (r_norm <= opts.rel_tol * b_norm)
        break;
      precondition();
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i)
        p[i] = z[i] + beta * p[i];
    }
    if (it > max_iter)
      throw NoConvergence("conjugate gradients hit " + std::to_string(max_iter) +
                          " iterations, relative residual " + std::to_string(r_norm / b_norm));
  }

  // The constant mode decouples: (c I - div(a grad)) 1 = c 1. Fix it exactly
  // so that mass balances hold to rounding.
  if (singular)
    remove_mean(x);
  else {
    const double shift = raw_mean(b) / c - raw_mean(x);
    for (double &v : x)
      v += shift;
  }

  DensityField out(g, std::move(x));
#ifndef NDEBUG
  {
    DensityField res = apply_elliptic(a, c, out);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      s += (res[i] - b[i]) * (res[i] - b[i]);
    assert(std::sqrt(s) <= 10.0 * opts.rel_tol * b_norm + 1e-300 || b_norm == 0.0);
  }
#endif
  if (report) {
    report->iterations = it;
    report->relative_residual = b_norm > 0.0 ? r_norm / b_norm : 0.0;
  }
  return out;
}

DensityField solve_elliptic(const DensityField &cell_coeff, double c, const DensityField &rhs,
                            const CgOptions &opts, const DensityField *initial, CgReport *report) {
  for (double v : cell_coeff.values)
    if (!(v > 0.0))
      throw InvalidArgument("elliptic coefficient must be positive");
  return solve_elliptic(face_average(cell_coeff), c, rhs, opts, initial, report);
}

DensityField solve_elliptic(double coeff, double c, const DensityField &rhs, const CgOptions &opts,
                            const DensityField *initial, CgReport *report) {
  if (!(coeff > 0.0))
    throw InvalidArgument("elliptic coefficient must be positive");
  return solve_elliptic(DensityField(rhs.grid, coeff), c, rhs, opts, initial, report);
}

DensityField heat_step(const DensityField &f, double delta, double duration, int substeps,
                       const CgOptions &opts) {
  if (!(delta > 0.0) || !(duration > 0.0) || substeps < 1)
    throw InvalidArgument("heat_step needs delta > 0, duration > 0, substeps >= 1");
  const double dt = duration / substeps;
  const double shift = 1.0 / (delta * dt);
  const FaceField ones = face_average(DensityField(f.grid, 1.0));
  DensityField cur = f;
  for (int s = 0; s < substeps; ++s) {
    DensityField rhs = shift * cur;
    cur = solve_elliptic(ones, shift, rhs, opts, &cur);
  }
  return cur;
}

double field_norm(const DensityField &f, Norm kind) {
  const double vol = f.grid.cell_volume();
  if (kind.kind == Norm::Kind::Lq) {
    if (!(kind.q >= 1.0))
      throw BadExponent("Lq norm needs q >= 1, got " + std::to_string(kind.q));
    double s = 0.0;
    for (double v : f.values)
      s += std::pow(std::abs(v), kind.q);
    return std::pow(s * vol, 1.0 / kind.q);
  }
  const FaceField g = discrete_gradient(f);
  return std::sqrt(inner(f, f) + inner(g, g));
}

} // namespace mobflow
