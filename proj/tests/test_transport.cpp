#include "mobflow/elliptic.hpp"
#include "mobflow/errors.hpp"
#include "mobflow/transport.hpp"

#include "support.hpp"

#include <doctest.h>

#include <array>
#include <limits>

using namespace mobflow;
using mobflow::test::random_density;

namespace {

TransportPath constant_path(const Grid &g, int nt, double rho, double mom) {
  TransportPath p;
  p.grid = g;
  p.nt = nt;
  for (int k = 0; k <= nt; ++k)
    p.rho.emplace_back(g, rho);
  for (int k = 0; k < nt; ++k) {
    FaceField w(g);
    for (int a = 0; a < g.dim(); ++a)
      std::fill(w[a].begin(), w[a].end(), mom);
    w.zero_boundary();
    p.mom.push_back(w);
  }
  return p;
}

double prox_objective(double r, const std::vector<double> &w, double rt, const std::vector<double> &wt, double sigma,
                      const Mobility &mob) {
  double ww = 0.0, dw = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    ww += w[i] * w[i];
    dw += (w[i] - wt[i]) * (w[i] - wt[i]);
  }
  return ww / mob.value(r) + ((r - rt) * (r - rt) + dw) / (2 * sigma);
}

// Exhaustive search on a coarse lattice over [0,3] x [-2,2], then two finer
// lattices around the best point. Scalar momentum.
std::array<double, 2> grid_search(double rt, double wt, double sigma, const Mobility &mob) {
  double best = std::numeric_limits<double>::infinity(), br = 0.0, bw = 0.0;
  auto scan = [&](double r0, double r1, double w0, double w1, int n) {
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        const double r = r0 + (r1 - r0) * i / n, w = w0 + (w1 - w0) * j / n;
        if (r < 0.0)
          continue;
        const double f = prox_objective(r, {w}, rt, {wt}, sigma, mob);
        if (f < best) {
          best = f;
          br = r;
          bw = w;
        }
      }
  };
  scan(0.0, 3.0, -2.0, 2.0, 1200);
  for (double span : {1e-2, 1e-4}) {
    const double r = br, w = bw;
    scan(r - span, r + span, w - span, w + span, 400);
  }
  return {br, bw};
}

} // namespace

TEST_SUITE("wdist") {

TEST_CASE("action of simple paths") {
  const Grid g = Grid::line(1.0, 16);
  const Mobility mob{0.5, 0.0};
  CHECK(action(constant_path(g, 4, 1.0, 0.0), mob) == 0.0);
  const double a = action(constant_path(g, 4, 1.0, 0.2), mob);
  CHECK(a == doctest::Approx(0.04 * 15.0 / 16.0).epsilon(1e-12));
  CHECK(action(constant_path(g, 4, 1.0, 0.4), mob) == doctest::Approx(4 * a).epsilon(1e-12));
  CHECK(std::isinf(action(constant_path(g, 4, 0.0, 0.2), mob)));
  TransportPath bad = constant_path(g, 2, 1.0, 0.0);
  bad.rho[1][3] = -0.5;
  CHECK_THROWS_AS(action(bad, mob), InvalidPath);
}

TEST_CASE("interval face density is the four-point mean") {
  const Grid g = Grid::line(1.0, 4);
  TransportPath p = constant_path(g, 1, 0.0, 0.0);
  p.rho[0] = DensityField(g, {1.0, 2.0, 3.0, 4.0});
  p.rho[1] = DensityField(g, {5.0, 6.0, 7.0, 8.0});
  const FaceField f = interval_face_density(p, 0);
  CHECK(f[0][1] == doctest::Approx(3.5));
  CHECK(f[0][3] == doctest::Approx(5.5));
}

TEST_CASE("prox of the action: trivial limits") {
  const Mobility mob{0.5, 0.1};
  double r = 0.0, w = 0.0;
  prox_action(0.7, 0.0, 0.3, mob, r, w);
  CHECK(r == doctest::Approx(0.7));
  CHECK(w == 0.0);
  prox_action(-0.4, 0.0, 0.3, mob, r, w);
  CHECK(r == 0.0);
  prox_action(1.3, 0.8, 1e-8, mob, r, w);
  CHECK(std::abs(r - 1.3) <= 1e-6);
  CHECK(std::abs(w - 0.8) <= 1e-6);
  CHECK_THROWS_AS(prox_action(1.0, 1.0, 0.0, mob, r, w), InvalidArgument);
}

TEST_CASE("prox of the action: stationarity and grid search") {
  const Mobility mob{0.5, 0.1};
  const std::vector<double> wt{1.0};
  const ProxPoint pt = prox_action(1.0, wt, 0.5, mob);
  const double m = mob.value(pt.rho);
  CHECK(std::abs(pt.w[0] - wt[0] * m / (m + 2 * 0.5)) <= 1e-10);
  CHECK(std::abs(pt.rho - 1.0 - 0.5 * pt.w[0] * pt.w[0] * mob.d1(pt.rho) / (m * m)) <= 1e-10);
  const auto gs = grid_search(1.0, 1.0, 0.5, mob);
  CHECK(std::abs(gs[0] - pt.rho) <= 1e-4);
  CHECK(std::abs(gs[1] - pt.w[0]) <= 1e-4);
}

TEST_CASE("prox of the action: vector momentum matches the scalar form in norm") {
  const Mobility mob{0.3, 0.05};
  const std::vector<double> wt{0.6, -0.8};
  const ProxPoint pt = prox_action(0.4, wt, 0.7, mob);
  double r = 0.0, w = 0.0;
  prox_action(0.4, 1.0, 0.7, mob, r, w);
  CHECK(pt.rho == doctest::Approx(r).epsilon(1e-12));
  CHECK(pt.w[0] == doctest::Approx(0.6 * w).epsilon(1e-12));
  CHECK(pt.w[1] == doctest::Approx(-0.8 * w).epsilon(1e-12));
}

TEST_CASE("distance between equal densities is zero") {
  std::mt19937_64 rng(1);
  const Grid g = Grid::line(1.0, 32);
  const DensityField mu = random_density(g, rng);
  DistanceOptions o;
  o.nt = 8;
  const DistanceResult r = solve_distance(mu, mu, Mobility{0.5, 0.1}, o);
  CHECK(r.value <= 1e-8);
  CHECK(r.converged);
}

TEST_CASE("distance with constant mobility matches the negative Sobolev norm") {
  const Grid g = Grid::line(1.0, 32);
  const DensityField mu0(g, 1.0);
  const DensityField mu1 = sample(g, [](double x, double) { return 1.0 + 0.1 * std::cos(M_PI * x); });
  DistanceOptions o;
  o.nt = 16;
  const DistanceResult r = solve_distance(mu0, mu1, Mobility{0.0, 0.0}, o);
  CHECK(r.converged);
  CHECK(r.value * r.value == doctest::Approx(0.005 / (M_PI * M_PI)).epsilon(0.03));
  CHECK(r.path.mass_drift() <= 1e-8);
  CHECK(r.path.continuity_residual() <= 1e-8);
  CHECK(r.value * r.value == doctest::Approx(action(r.path, Mobility{0.0, 0.0})).epsilon(1e-12));
}

TEST_CASE("distance input checks") {
  const Grid g = Grid::line(1.0, 16);
  const DensityField a(g, 1.0);
  CHECK_THROWS_AS(solve_distance(a, DensityField(g, 1.1), Mobility{0.5, 0.1}), MassMismatch);
  CHECK_THROWS_AS(solve_distance(a, DensityField(Grid::line(1.0, 8), 1.0), Mobility{0.5, 0.1}), GridMismatch);
  DensityField hole = a;
  hole[0] = 0.0;
  hole[1] = 2.0;
  CHECK_THROWS_AS(solve_distance(a, hole, Mobility{0.5, 0.0}), InvalidArgument);
  DensityField neg = a;
  neg[0] = -1.0;
  neg[1] = 3.0;
  CHECK_THROWS_AS(solve_distance(a, neg, Mobility{0.5, 0.1}), InvalidArgument);
}

TEST_CASE("the returned path conserves mass and stays nonnegative") {
  std::mt19937_64 rng(8);
  const Grid g = Grid::line(1.0, 32);
  DistanceOptions o;
  o.nt = 8;
  const DistanceResult r = solve_distance(random_density(g, rng), random_density(g, rng), Mobility{0.5, 0.01}, o);
  CHECK(r.converged);
  for (const DensityField &s : r.path.rho) {
    CHECK(std::abs(s.mass() - 1.0) <= 1e-8);
    CHECK(s.min() >= 0.0);
  }
  for (const FaceField &m : r.path.mom)
    CHECK(m.boundary_is_zero());
  CHECK(r.value * r.value == doctest::Approx(action(r.path, Mobility{0.5, 0.01})).epsilon(1e-12));
}

TEST_CASE("recovered potentials") {
  std::mt19937_64 rng(17);
  const Grid g = Grid::box(1.0, 1.0, 12, 10);
  ModelParams mp;
  mp.eps = 0.05;
  const DensityField rho = mobflow::test::random_field(g, rng, 0.2, 2.0);
  const FaceField M = face_mobility(rho, mp.mobility());

  DensityField psi = mobflow::test::random_field(g, rng, -1.0, 1.0);
  const DensityField phi = recover_potential(rho, multiply(M, discrete_gradient(psi)), mp);
  const double mean = psi.mean();
  for (double &x : psi.values)
    x -= mean;
  CHECK(mobflow::test::max_abs_diff(phi, psi) <= 1e-7);

  for (double x : recover_potential(rho, FaceField(g), mp).values)
    CHECK(x == 0.0);

  const Grid g1 = Grid::line(1.0, 32);
  const DensityField rho1 = mobflow::test::random_field(g1, rng, 0.1, 1.5);
  const FaceField M1 = face_mobility(rho1, mp.mobility());
  for (int t = 0; t < 10; ++t) {
    const FaceField w = mobflow::test::random_faces(g1, rng);
    const DensityField p = recover_potential(M1, w);
    CHECK(face_action(M1, multiply(M1, discrete_gradient(p))) <= face_action(M1, w) + 1e-8);
  }
}

TEST_CASE("replacing optimal momenta by potential fields never raises the action") {
  std::mt19937_64 rng(23);
  const Grid g = Grid::line(1.0, 24);
  const Mobility mob{0.5, 0.05};
  DistanceOptions o;
  o.nt = 6;
  const DistanceResult r = solve_distance(random_density(g, rng), random_density(g, rng), mob, o);
  TransportPath sub = r.path;
  for (int k = 0; k < sub.nt; ++k) {
    FaceField rb = interval_face_density(sub, k);
    FaceField M(g);
    for (std::size_t i = 0; i < rb[0].size(); ++i)
      M[0][i] = (i == 0 || i + 1 == rb[0].size()) ? 0.0 : mob.value(rb[0][i]);
    sub.mom[k] = multiply(M, discrete_gradient(recover_potential(M, r.path.mom[k])));
  }
  CHECK(action(sub, mob) <= action(r.path, mob) + 1e-8);
}

} // TEST_SUITE
