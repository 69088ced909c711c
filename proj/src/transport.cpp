#include "mobflow/transport.hpp"

#include "mobflow/elliptic.hpp"
#include "mobflow/errors.hpp"
#include "mobflow/spacetime.hpp"
#include "primal_dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace mobflow {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

double TransportPath::continuity_residual() const {
  double s = 0.0;
  for (int k = 0; k < nt; ++k) {
    const DensityField div = discrete_divergence(mom[k]);
    for (std::size_t c = 0; c < grid.num_cells(); ++c) {
      const double r = (rho[k + 1][c] - rho[k][c]) / dt() + div[c];
      s += r * r;
    }
  }
  return std::sqrt(s * dt() * grid.cell_volume());
}

double TransportPath::mass_drift() const {
  double worst = 0.0;
  const double m0 = rho.front().mass();
  for (const auto &r : rho)
    worst = std::max(worst, std::abs(r.mass() - m0));
  return worst;
}

FaceField interval_face_density(const TransportPath &path, int k) {
  const Grid &g = path.grid;
  FaceField out(g);
  for (int a = 0; a < g.dim(); ++a) {
    std::size_t l, r;
    for (std::size_t f = 0; f < out[a].size(); ++f)
      if (g.face_neighbors(a, f, l, r))
        out[a][f] = 0.25 * (path.rho[k][l] + path.rho[k][r] + path.rho[k + 1][l] + path.rho[k + 1][r]);
  }
  return out;
}

double action(const TransportPath &path, const Mobility &mob) {
  for (const auto &slice : path.rho)
    for (double v : slice.values)
      if (v < 0.0)
        throw InvalidPath("negative density " + std::to_string(v));
  const Grid &g = path.grid;
  double total = 0.0;
  for (int k = 0; k < path.nt; ++k) {
    const FaceField rho_bar = interval_face_density(path, k);
    double s = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      std::size_t l, r;
      for (std::size_t f = 0; f < rho_bar[a].size(); ++f) {
        if (!g.face_neighbors(a, f, l, r))
          continue;
        const double w = path.mom[k][a][f];
        if (w == 0.0)
          continue;
        const double m = mob.value(rho_bar[a][f]);
        if (m <= 0.0)
          return kInf;
        s += w * w / m;
      }
    }
    total += s * path.dt() * g.face_volume();
  }
  return total;
}

double action(const TransportPath &path, const ModelParams &params) { return action(path, params.mobility()); }

double face_action(const FaceField &face_mob, const FaceField &w) {
  const Grid &g = w.grid;
  double s = 0.0;
  for (int a = 0; a < g.dim(); ++a)
    for (std::size_t f = 0; f < w[a].size(); ++f) {
      const double x = w[a][f];
      if (x == 0.0)
        continue;
      if (face_mob[a][f] <= 0.0)
        return kInf;
      s += x * x / face_mob[a][f];
    }
  return s * g.face_volume();
}

void prox_action(double rho_t, double w_t, double sigma, const Mobility &mob, double &rho, double &w) {
  if (!(sigma > 0.0))
    throw InvalidArgument("prox_action needs sigma > 0");
  const double w2 = w_t * w_t;
  if (w2 == 0.0 || mob.alpha == 0.0) {
    rho = std::max(rho_t, 0.0);
    w = w_t * mob.value(rho) / (mob.value(rho) + 2.0 * sigma);
    return;
  }
  const double a = mob.alpha, e = mob.eps;
  const double two_s = 2.0 * sigma;
  // g(r) = r - rho_t - sigma |w_t|^2 m'(r) / (m(r) + 2 sigma)^2 is increasing.
  auto eval = [&](double r, double &g, double &dg) {
    const double x = r + e;
    double m, m1, m2;
    if (a == 1.0) {
      m = x;
      m1 = 1.0;
      m2 = 0.0;
    } else {
      const double base = std::pow(x, a - 2.0);
      m = base * x * x;
      m1 = a * base * x;
      m2 = a * (a - 1.0) * base;
    }
    const double big = m + two_s;
    const double h = m1 / (big * big);
    const double dh = m2 / (big * big) - 2.0 * m1 * m1 / (big * big * big);
    g = r - rho_t - sigma * w2 * h;
    dg = 1.0 - sigma * w2 * dh;
  };

  double lo = 0.0;
  const bool singular_at_zero = (e == 0.0 && a < 1.0);
  if (!singular_at_zero) {
    double g0, dg0;
    eval(0.0, g0, dg0);
    if (g0 >= 0.0) {
      rho = 0.0;
      const double m0 = mob.value(0.0);
      w = w_t * m0 / (m0 + two_s);
      return;
    }
  }
  // g' >= 1, so a Newton step from below moves up by at most |g|; the upper
  // bracket is only needed once a step overshoots.
  double hi = std::numeric_limits<double>::infinity();
  double r = std::max(rho_t, 0.0);
  if (r <= lo)
    r = std::max(rho_t + sigma * w2, 1e-3);
  for (int it = 0; it < 100; ++it) {
    double g, dg;
    eval(r, g, dg);
    if (g == 0.0)
      break;
    if (g < 0.0)
      lo = r;
    else
      hi = r;
    const double newton = g / dg;
    if (std::abs(newton) <= 1e-13 * std::max(1.0, r)) {
      r = std::clamp(r - newton, lo, hi);
      break;
    }
    double next = r - newton;
    if (!(next > lo && next < hi))
      next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * r;
    r = next;
    if (hi - lo <= 1e-15 * std::max(1.0, r))
      break;
    if (it == 99)
      throw NoConvergence("prox_action root finding exceeded 100 iterations");
  }
  rho = r;
  const double m = mob.value(r);
  w = w_t * m / (m + two_s);
}

ProxPoint prox_action(double rho_t, std::span<const double> w_t, double sigma, const Mobility &mob) {
  // The minimiser keeps the direction of w_t; only its length is scaled.
  double len = 0.0;
  for (double x : w_t)
    len += x * x;
  len = std::sqrt(len);
  ProxPoint out;
  double wl;
  prox_action(rho_t, len, sigma, mob, out.rho, wl);
  out.w.assign(w_t.begin(), w_t.end());
  const double scale = len > 0.0 ? wl / len : 0.0;
  for (double &x : out.w)
    x *= scale;
  return out;
}

FaceField face_mobility(const DensityField &rho, const Mobility &mob) {
  const FaceField avg = face_average(rho);
  FaceField out(rho.grid);
  const Grid &g = rho.grid;
  for (int a = 0; a < g.dim(); ++a) {
    std::size_t l, r;
    for (std::size_t f = 0; f < out[a].size(); ++f)
      if (g.face_neighbors(a, f, l, r))
        out[a][f] = mob.value(std::max(avg[a][f], 0.0));
  }
  return out;
}

DensityField recover_potential(const FaceField &face_mob, const FaceField &w, double tol) {
  DensityField rhs = discrete_divergence(w);
  rhs *= -1.0;
  CgOptions opts;
  opts.rel_tol = tol;
  return solve_elliptic(face_mob, 0.0, rhs, opts);
}

DensityField recover_potential(const DensityField &rho, const FaceField &w, const ModelParams &params, double tol) {
  return recover_potential(face_mobility(rho, params.mobility()), w, tol);
}

DistanceResult solve_distance(const DensityField &mu0, const DensityField &mu1, const Mobility &mob,
                              const DistanceOptions &opts) {
  if (mu0.grid != mu1.grid)
    throw GridMismatch("distance endpoints live on different grids");
  const double m0 = mu0.mass(), m1 = mu1.mass();
  if (std::abs(m0 - m1) > 1e-10 * std::max(1.0, std::abs(m0)))
    throw MassMismatch("endpoint masses " + std::to_string(m0) + " and " + std::to_string(m1));
  if (mu0.min() < 0.0 || mu1.min() < 0.0)
    throw InvalidArgument("distance endpoints must be nonnegative");
  if (mob.eps == 0.0 && mob.alpha > 0.0 && mob.alpha < 1.0 && (mu0.min() <= 0.0 || mu1.min() <= 0.0))
    throw InvalidArgument("eps = 0 needs strictly positive endpoint densities");
  if (opts.nt < 1)
    throw InvalidArgument("distance needs nt >= 1");

  detail::TransportProblem prob;
  prob.grid = mu0.grid;
  prob.nt = opts.nt;
  prob.mob = mob;
  prob.rho_start = mu0;
  prob.rho_end = mu1;
  detail::PrimalDualControls ctl;
  ctl.max_iter = opts.max_iter;
  ctl.tol = opts.tol;
  ctl.step_ratio = opts.step_ratio;
  ctl.mom_scale = opts.mom_scale;
  detail::PrimalDualOutcome res = detail::solve_transport(prob, ctl);

  DistanceResult out;
  out.path = std::move(res.path);
  out.iterations = res.iterations;
  out.primal_dual_gap = res.gap;
  out.converged = res.converged;
  out.action_increases = res.action_increases;
  out.value = std::sqrt(std::max(res.objective, 0.0));
  return out;
}

DistanceResult solve_distance(const DensityField &mu0, const DensityField &mu1, const ModelParams &params,
                              const DistanceOptions &opts) {
  return solve_distance(mu0, mu1, params.mobility(), opts);
}

// ---------------------------------------------------------------------------
// Primal-dual engine.
//
// Primal x = (rho slices, scaled momenta), constrained to continuity paths by
// exact projection. K maps x to face/interval slots (rho_bar, w_hat) and, with
// a free endpoint, to a copy of the last density. The dual variable lives on
// the slots; the action prox is applied slot by slot.

namespace detail {

double prox_endpoint(double r_t, double step, double coef, double expo, double pot) {
  if (step == 0.0 || (coef == 0.0 && pot == 0.0))
    return std::max(r_t, 0.0);
  if (expo == 2.0) {
    return std::max((r_t + step * pot) / (1.0 + 2.0 * step * coef), 0.0);
  }
  auto grad = [&](double r) { return step * (coef * expo * std::pow(r, expo - 1.0) - pot) + r - r_t; };
  auto hess = [&](double r) { return step * coef * expo * (expo - 1.0) * std::pow(r, expo - 2.0) + 1.0; };
  if (grad(0.0) >= 0.0)
    return 0.0;
  double lo = 0.0, hi = std::max(r_t, 0.0) + step * std::max(pot, 0.0) + 1.0;
  while (grad(hi) < 0.0)
    hi *= 2.0;
  double r = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double g = grad(r);
    if (g < 0.0)
      lo = r;
    else
      hi = r;
    double next = r - g / hess(r);
    if (!(next > lo && next < hi))
      next = 0.5 * (lo + hi);
    if (std::abs(next - r) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, r))
      return next;
    r = next;
  }
  throw NoConvergence("endpoint prox exceeded 100 iterations");
}

namespace {

struct Slots {
  std::vector<FaceField> rho;
  std::vector<FaceField> w;
  DensityField end;
};

class Engine {
public:
  Engine(const TransportProblem &p, const PrimalDualControls &c)
      : prob_(p), ctl_(c), g_(p.grid), nt_(p.nt), free_end_(!p.rho_end.has_value()),
        scale_(c.mom_scale > 0.0 ? c.mom_scale : p.grid.min_h() * double(p.nt)),
        proj_(p.grid, p.nt, !p.rho_end.has_value(), scale_) {}

  PrimalDualOutcome run(const PrimalDualState *warm);

private:
  Slots zero_slots() const {
    Slots s;
    s.rho.assign(nt_, FaceField(g_));
    s.w.assign(nt_, FaceField(g_));
    s.end = DensityField(g_);
    return s;
  }

  void apply_k(const std::vector<DensityField> &rho, const std::vector<FaceField> &mom, Slots &out) const;
  void apply_kt(const Slots &y, std::vector<DensityField> &rho, std::vector<FaceField> &mom) const;
  double operator_norm() const;
  double objective(const std::vector<DensityField> &rho, const std::vector<FaceField> &mom) const;
  bool is_free(int j) const { return j >= 1 && (j < nt_ || free_end_); }

  const TransportProblem &prob_;
  PrimalDualControls ctl_;
  Grid g_;
  int nt_;
  bool free_end_;
  double scale_;
  ContinuityProjector proj_;
};

void Engine::apply_k(const std::vector<DensityField> &rho, const std::vector<FaceField> &mom, Slots &out) const {
  for (int k = 0; k < nt_; ++k) {
    for (int a = 0; a < g_.dim(); ++a) {
      std::size_t l, r;
      auto &dst = out.rho[k][a];
      for (std::size_t f = 0; f < dst.size(); ++f)
        if (g_.face_neighbors(a, f, l, r))
          dst[f] = 0.25 * (rho[k][l] + rho[k][r] + rho[k + 1][l] + rho[k + 1][r]);
      out.w[k][a] = mom[k][a];
    }
  }
  if (free_end_)
    out.end.values = rho[nt_].values;
}

void Engine::apply_kt(const Slots &y, std::vector<DensityField> &rho, std::vector<FaceField> &mom) const {
  for (int j = 0; j <= nt_; ++j)
    std::fill(rho[j].values.begin(), rho[j].values.end(), 0.0);
  for (int k = 0; k < nt_; ++k) {
    for (int a = 0; a < g_.dim(); ++a) {
      std::size_t l, r;
      const auto &src = y.rho[k][a];
      for (std::size_t f = 0; f < src.size(); ++f)
        if (g_.face_neighbors(a, f, l, r)) {
          const double v = 0.25 * src[f];
          rho[k][l] += v;
          rho[k][r] += v;
          rho[k + 1][l] += v;
          rho[k + 1][r] += v;
        }
      mom[k][a] = y.w[k][a];
    }
  }
  if (free_end_)
    for (std::size_t c = 0; c < g_.num_cells(); ++c)
      rho[nt_][c] += y.end[c];
  for (int j = 0; j <= nt_; ++j)
    if (!is_free(j))
      std::fill(rho[j].values.begin(), rho[j].values.end(), 0.0);
}

double sq_norm(const std::vector<DensityField> &rho, const std::vector<FaceField> &mom) {
  double s = 0.0;
  for (const auto &r : rho)
    for (double v : r.values)
      s += v * v;
  for (const auto &m : mom)
    for (int a = 0; a < 2; ++a)
      for (double v : m[a])
        s += v * v;
  return s;
}

double sq_norm(const Slots &y) {
  double s = 0.0;
  for (std::size_t k = 0; k < y.rho.size(); ++k)
    for (int a = 0; a < 2; ++a) {
      for (double v : y.rho[k][a])
        s += v * v;
      for (double v : y.w[k][a])
        s += v * v;
    }
  for (double v : y.end.values)
    s += v * v;
  return s;
}

double Engine::operator_norm() const {
  std::vector<DensityField> rho(nt_ + 1, DensityField(g_));
  std::vector<FaceField> mom(nt_, FaceField(g_));
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int j = 0; j <= nt_; ++j)
    if (is_free(j))
      for (double &v : rho[j].values)
        v = U(rng);
  for (auto &m : mom) {
    for (int a = 0; a < g_.dim(); ++a)
      for (double &v : m[a])
        v = U(rng);
    m.zero_boundary();
  }
  Slots y = zero_slots();
  double est = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double n = std::sqrt(sq_norm(rho, mom));
    for (auto &r : rho)
      r *= 1.0 / n;
    for (auto &m : mom)
      m *= 1.0 / n;
    apply_k(rho, mom, y);
    est = std::sqrt(sq_norm(y));
    apply_kt(y, rho, mom);
  }
  return est;
}

double Engine::objective(const std::vector<DensityField> &rho, const std::vector<FaceField> &mom) const {
  double total = 0.0;
  for (int k = 0; k < nt_; ++k) {
    for (int a = 0; a < g_.dim(); ++a) {
      std::size_t l, r;
      for (std::size_t f = 0; f < mom[k][a].size(); ++f) {
        if (!g_.face_neighbors(a, f, l, r))
          continue;
        const double w = mom[k][a][f] * scale_;
        if (w == 0.0)
          continue;
        const double rb = 0.25 * (rho[k][l] + rho[k][r] + rho[k + 1][l] + rho[k + 1][r]);
        const double m = prob_.mob.value(std::max(rb, 0.0));
        if (m <= 0.0)
          return kInf;
        total += w * w / m;
      }
    }
  }
  total *= prob_.action_weight * g_.face_volume() / double(nt_);
  if (free_end_) {
    double e = 0.0;
    for (std::size_t c = 0; c < g_.num_cells(); ++c) {
      const double r = std::max(rho[nt_][c], 0.0);
      e += prob_.end_coef * std::pow(r, prob_.end_expo) - r * prob_.end_potential[c];
    }
    total += e * g_.cell_volume();
  }
  return total;
}

PrimalDualOutcome Engine::run(const PrimalDualState *warm) {
  std::vector<DensityField> rho(nt_ + 1, DensityField(g_));
  std::vector<FaceField> mom(nt_, FaceField(g_));
  Slots eta = zero_slots();

  const bool use_warm = warm && int(warm->rho.size()) == nt_ + 1 && warm->rho[0].grid == g_ &&
                        warm->mom_scale == scale_;
  if (use_warm) {
    rho = warm->rho;
    mom = warm->mom_hat;
    eta.rho = warm->dual_rho;
    eta.w = warm->dual_w;
    if (free_end_)
      eta.end = warm->dual_end;
    rho[0] = prob_.rho_start;
    if (!free_end_)
      rho[nt_] = *prob_.rho_end;
  } else {
    for (int j = 0; j <= nt_; ++j) {
      if (free_end_)
        rho[j] = prob_.rho_start;
      else {
        const double t = double(j) / double(nt_);
        rho[j] = (1.0 - t) * prob_.rho_start + t * (*prob_.rho_end);
      }
    }
  }
  proj_.project(rho, mom);

  const double L = operator_norm();
  const double ratio = ctl_.step_ratio > 0.0 ? ctl_.step_ratio : 1.0;
  const double slot_weight = prob_.action_weight * g_.face_volume() / double(nt_) * scale_ * scale_;
  // Dual magnitudes scale with the slot weight; start from that balance and
  // let residual balancing adjust it.
  double tau = 0.9 / (L * std::sqrt(ratio * slot_weight));
  double sigma = 0.9 * std::sqrt(ratio * slot_weight) / L;
  double adapt = 0.5;

  const Mobility &mob = prob_.mob;

  std::vector<DensityField> rho_old = rho, rho_bar = rho, grad_rho(nt_ + 1, DensityField(g_));
  std::vector<FaceField> mom_old = mom, mom_bar = mom, grad_mom(nt_, FaceField(g_));
  Slots kx = zero_slots(), eta_old = zero_slots();

  PrimalDualOutcome out;
  double last_obj = objective(rho, mom);
  double gap = kInf;
  std::size_t it = 0;
  const std::size_t every = std::max<std::size_t>(ctl_.check_every, 1);
  while (it < ctl_.max_iter) {
    rho_old = rho;
    mom_old = mom;
    const bool check = (it + 1) % every == 0 || it + 1 == ctl_.max_iter;
    if (check)
      eta_old = eta;

    apply_kt(eta, grad_rho, grad_mom);
    for (int j = 0; j <= nt_; ++j)
      if (is_free(j))
        for (std::size_t c = 0; c < g_.num_cells(); ++c)
          rho[j][c] -= tau * grad_rho[j][c];
    for (int k = 0; k < nt_; ++k)
      for (int a = 0; a < g_.dim(); ++a)
        for (std::size_t f = 0; f < mom[k][a].size(); ++f)
          mom[k][a][f] -= tau * grad_mom[k][a][f];
    proj_.project(rho, mom);

    for (int j = 0; j <= nt_; ++j)
      for (std::size_t c = 0; c < g_.num_cells(); ++c)
        rho_bar[j][c] = 2.0 * rho[j][c] - rho_old[j][c];
    for (int k = 0; k < nt_; ++k)
      for (int a = 0; a < g_.dim(); ++a)
        for (std::size_t f = 0; f < mom[k][a].size(); ++f)
          mom_bar[k][a][f] = 2.0 * mom[k][a][f] - mom_old[k][a][f];
    apply_k(rho_bar, mom_bar, kx);

    const double prox_step = slot_weight / sigma;
    const double end_step = g_.cell_volume() / sigma;
    for (int k = 0; k < nt_; ++k)
      for (int a = 0; a < g_.dim(); ++a) {
        std::size_t l, r;
        auto &er = eta.rho[k][a];
        auto &ew = eta.w[k][a];
        for (std::size_t f = 0; f < er.size(); ++f) {
          if (!g_.face_neighbors(a, f, l, r))
            continue;
          const double zr = er[f] + sigma * kx.rho[k][a][f];
          const double zw = ew[f] + sigma * kx.w[k][a][f];
          double pr, pw;
          prox_action(zr / sigma, zw / sigma, prox_step, mob, pr, pw);
          er[f] = zr - sigma * pr;
          ew[f] = zw - sigma * pw;
        }
      }
    if (free_end_)
      for (std::size_t c = 0; c < g_.num_cells(); ++c) {
        const double z = eta.end[c] + sigma * kx.end[c];
        const double pe =
            prox_endpoint(z / sigma, end_step, prob_.end_coef, prob_.end_expo, prob_.end_potential[c]);
        eta.end[c] = z - sigma * pe;
      }
    ++it;

    if (!check)
      continue;

    // Stationarity: K^T eta must be normal to the constraint space.
    apply_kt(eta, grad_rho, grad_mom);
    const double kt_norm = std::sqrt(sq_norm(grad_rho, grad_mom));
    proj_.project_tangent(grad_rho, grad_mom);
    const double rel_p = kt_norm > 1e-300 ? std::sqrt(sq_norm(grad_rho, grad_mom)) / kt_norm : 0.0;

    // Dual defect: (eta_old - eta)/sigma + K(x - x_old).
    for (int j = 0; j <= nt_; ++j)
      for (std::size_t c = 0; c < g_.num_cells(); ++c)
        rho_bar[j][c] = rho[j][c] - rho_old[j][c];
    for (int k = 0; k < nt_; ++k)
      for (int a = 0; a < g_.dim(); ++a)
        for (std::size_t f = 0; f < mom[k][a].size(); ++f)
          mom_bar[k][a][f] = mom[k][a][f] - mom_old[k][a][f];
    apply_k(rho_bar, mom_bar, kx);
    double dsq = 0.0;
    for (int k = 0; k < nt_; ++k)
      for (int a = 0; a < g_.dim(); ++a)
        for (std::size_t f = 0; f < kx.rho[k][a].size(); ++f) {
          const double dr = (eta_old.rho[k][a][f] - eta.rho[k][a][f]) / sigma + kx.rho[k][a][f];
          const double dw = (eta_old.w[k][a][f] - eta.w[k][a][f]) / sigma + kx.w[k][a][f];
          dsq += dr * dr + dw * dw;
        }
    if (free_end_)
      for (std::size_t c = 0; c < g_.num_cells(); ++c) {
        const double d = (eta_old.end[c] - eta.end[c]) / sigma + kx.end[c];
        dsq += d * d;
      }
    apply_k(rho, mom, kx);
    const double kx_norm = std::sqrt(sq_norm(kx));
    const double rel_d = kx_norm > 1e-300 ? std::sqrt(dsq) / kx_norm : std::sqrt(dsq);
    gap = std::max(rel_p, rel_d);

    if (ctl_.adaptive && adapt > 1e-3) {
      // Trade tau against sigma until the two relative defects are comparable.
      if (rel_p > 2.0 * rel_d) {
        tau /= 1.0 - adapt;
        sigma *= 1.0 - adapt;
        adapt *= 0.97;
      } else if (rel_d > 2.0 * rel_p) {
        tau *= 1.0 - adapt;
        sigma /= 1.0 - adapt;
        adapt *= 0.97;
      }
    }

    const double obj = objective(rho, mom);
    if (it > 10 && obj > last_obj + 1e-8 * std::max(1.0, std::abs(last_obj)))
      ++out.action_increases;
    last_obj = obj;
    if (gap <= ctl_.tol && it >= 20) {
      out.converged = true;
      break;
    }
  }

  out.iterations = it;
  out.gap = gap;
  out.objective = objective(rho, mom);
  out.path.grid = g_;
  out.path.nt = nt_;
  out.path.rho = rho;
  out.path.mom = mom;
  for (auto &m : out.path.mom)
    m *= scale_;
  out.state.rho = std::move(rho);
  out.state.mom_hat = std::move(mom);
  out.state.dual_rho = std::move(eta.rho);
  out.state.dual_w = std::move(eta.w);
  out.state.dual_end = std::move(eta.end);
  out.state.mom_scale = scale_;
  return out;
}

} // namespace

PrimalDualOutcome solve_transport(const TransportProblem &problem, const PrimalDualControls &controls,
                                  const PrimalDualState *warm) {
  if (!problem.rho_end && problem.end_potential.values.size() != problem.grid.num_cells())
    throw InvalidArgument("free endpoint needs a potential on the grid");
  Engine engine(problem, controls);
  return engine.run(warm);
}

} // namespace detail
} // namespace mobflow
