#include "mobflow/elliptic.hpp"
#include "mobflow/errors.hpp"
#include "mobflow/model.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace mobflow;

namespace {

ModelParams params(double alpha, double eps, double p = 1.5) {
  ModelParams mp;
  mp.alpha = alpha;
  mp.eps = eps;
  mp.p = p;
  return mp;
}

// U(r) = int_0^r (r - t) / m(t) dt by composite Simpson.
double u_by_quadrature(double r, const ModelParams &mp) {
  const int n = 20000;
  const double h = r / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * (r - t) / std::pow(t + mp.eps, mp.alpha);
  }
  return s * h / 3.0;
}

} // namespace

TEST_SUITE("model") {

TEST_CASE("mobility values and derivatives") {
  CHECK(mobility(0.0, params(0.5, 0.04)) == doctest::Approx(0.2));
  const ModelParams mp = params(0.5, 0.01);
  const double h = 1e-5;
  const double fd = (mobility(1.0 + h, mp) - mobility(1.0 - h, mp)) / (2 * h);
  CHECK(std::abs(mobility(1.0, mp, 1) - fd) < 1e-8);
  const double fd2 = (mobility(1.0 + 1e-4, mp, 1) - mobility(1.0 - 1e-4, mp, 1)) / 2e-4;
  CHECK(std::abs(mobility(1.0, mp, 2) - fd2) < 1e-7);
  CHECK_THROWS_AS(mobility(0.0, params(0.5, 0.0), 1), SingularMobility);
}

TEST_CASE("the derivative bound is attained at zero") {
  const ModelParams mp = params(0.3, 0.05);
  double sup = 0.0;
  for (int i = 0; i <= 1000; ++i)
    sup = std::max(sup, mobility(i * 1e-2, mp, 1));
  CHECK(sup == doctest::Approx(0.3 / std::pow(0.05, 0.7)));
  CHECK(mp.mobility().sup_d1() == doctest::Approx(sup));
}

TEST_CASE("U_eps closed form against quadrature") {
  const ModelParams mp = params(0.5, 1.0);
  CHECK(u_epsilon(0.0, mp) == 0.0);
  CHECK(u_epsilon(3.0, mp) == doctest::Approx(10.0 / 3.0).epsilon(1e-12));
  CHECK(u_epsilon(3.0, mp) == doctest::Approx(u_by_quadrature(3.0, mp)).epsilon(1e-9));
  const ModelParams mp2 = params(0.3, 0.1);
  for (double r : {0.2, 1.0, 4.0})
    CHECK(u_epsilon(r, mp2) == doctest::Approx(u_by_quadrature(r, mp2)).epsilon(1e-7));
  CHECK_THROWS_AS(u_epsilon(1.0, params(0.5, 0.0)), SingularMobility);
}

TEST_CASE("U_eps is nonnegative and its derivatives are consistent") {
  const ModelParams mp = params(0.7, 0.01);
  for (double r : {0.0, 1e-3, 0.3, 2.0, 9.0}) {
    CHECK(u_epsilon(r, mp) >= 0.0);
    CHECK(u_epsilon(r, mp, 2) * mobility(r, mp) == doctest::Approx(1.0).epsilon(1e-13));
  }
  const double h = 1e-6;
  CHECK(u_epsilon(0.5, mp, 1) == doctest::Approx((u_epsilon(0.5 + h, mp) - u_epsilon(0.5 - h, mp)) / (2 * h)));
}

TEST_CASE("big_u bound and eps-monotonicity") {
  const Grid g = Grid::line(1.0, 32);
  CHECK(big_u(DensityField(g), params(0.5, 0.1)) == 0.0);
  CHECK(big_u(DensityField(g, 1.0), params(0.5, 1e-3)) <= 2.0);
  std::mt19937_64 rng(9);
  for (int t = 0; t < 10; ++t) {
    const DensityField u = mobflow::test::random_field(g, rng, 0.0, 3.0);
    CHECK(big_u(u, params(0.5, 1e-2)) >= big_u(u, params(0.5, 1e-1)));
  }
}

TEST_CASE("energy on uniform fields") {
  const Grid sq = Grid::box(1.0, 1.0, 8, 8);
  const ModelParams mp = params(0.5, 0.0);
  CHECK(energy(DensityField(sq, 1.0), DensityField(sq, 0.0), mp) == doctest::Approx(0.75));
  CHECK(energy(DensityField(sq, 1.0), DensityField(sq, 1.0), mp) == doctest::Approx(0.25));
  std::mt19937_64 rng(2);
  const Grid g = Grid::line(1.0, 40);
  for (int t = 0; t < 5; ++t)
    CHECK(energy(mobflow::test::random_field(g, rng, 0.0, 2.0), DensityField(g), mp) >= 0.0);
}

TEST_CASE("v_delta and lambda_delta") {
  const Grid g = Grid::line(1.0, 64);
  CHECK(v_delta(DensityField(g), DensityField(g), params(0.5, 0.1)) == 0.0);
  ModelParams mp = params(0.5, 1.0);
  mp.delta = 0.0;
  CHECK(v_delta(DensityField(g, 1.0), DensityField(g, 2.0), mp) == doctest::Approx(2.0));
  mp.delta = 1.0;
  CHECK(v_delta(DensityField(g, 1.0), DensityField(g), mp) ==
        doctest::Approx((std::pow(2.0, 1.5) - 1.0) / 0.75 - 2.0).epsilon(1e-12));

  CHECK(lambda_delta(DensityField(g, 4.0), mp) == 0.0);
  const DensityField x = sample(g, [](double x, double) { return x; });
  CHECK(lambda_delta(x, mp) == doctest::Approx(-0.125).epsilon(1e-10));
  std::mt19937_64 rng(4);
  for (int t = 0; t < 5; ++t)
    CHECK(lambda_delta(mobflow::test::random_field(g, rng), params(0.4, 0.05)) <= 0.0);
  CHECK_THROWS_AS(lambda_delta(x, params(0.5, 0.0)), SingularMobility);
}

TEST_CASE("regime classification") {
  auto cls = [](double a, double p, int d) {
    ModelParams mp = params(a, 0.0, p);
    mp.dim = d;
    return classify_regime(mp);
  };
  CHECK(cls(0.5, 1.5, 3).regime == Regime::Thm11);
  const RegimeLabel r = cls(0.9, 1.5, 3);
  CHECK(r.regime == Regime::Thm12);
  CHECK(r.critical_p == doctest::Approx(1.9 - 2.0 / 3.0));
  const RegimeLabel u = cls(0.7, 1.0, 3);
  CHECK(u.regime == Regime::Uncovered);
  CHECK(u.critical_p == doctest::Approx(1.0333333333));
  CHECK(cls(0.75, 1.25, 4).regime == Regime::Thm14SmallChi);
  CHECK(cls(0.5, 1.5 - 2.0 / 3.0, 3).regime == Regime::Uncovered);
}

TEST_CASE("parameter validation") {
  ModelParams mp;
  CHECK_NOTHROW(mp.validate());
  mp.alpha = 1.2;
  CHECK_THROWS_WITH_AS(mp.validate(), doctest::Contains("alpha must lie in (0,1)"), InvalidArgument);
  mp.alpha = 0.5;
  mp.chi = 0.0;
  CHECK_THROWS_AS(mp.validate(), InvalidArgument);
}

} // TEST_SUITE
