#include <doctest.h>

#include <cmath>
#include <random>

#include "pdesign/error.hpp"
#include "pdesign/material.hpp"
#include "support.hpp"

using namespace pdesign;

namespace {

std::vector<double> grid(double hi, int n) {
  std::vector<double> s(n + 1);
  for (int i = 0; i <= n; ++i) s[i] = hi * i / n;
  return s;
}

}  // namespace

TEST_SUITE("material") {

TEST_CASE("normalization") {
  CHECK(MaterialModel{1, 3, 2, 1}.c() == doctest::Approx(2.0));
  CHECK(MaterialModel{1, 4, 3, 1}.c() == doctest::Approx(1.0));
  auto mesh = testing::unit_square(0.5);
  auto n = normalize(1, 2, 2, ScalarField::constant(mesh, Storage::nodal, 1.0));
  CHECK(n.c == doctest::Approx(1.0));
  CHECK((n.f_tilde.values().array() - 0.5).abs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(normalize(2, 2, 2, n.f_tilde), InvalidInput);
  CHECK_THROWS_AS(normalize(1, 2, 1, n.f_tilde), InvalidInput);
}

TEST_CASE("homog_coeff is a monotone mean between the phases") {
  MaterialModel m{1, 3, 2, 1};
  CHECK(homog_coeff(0, m) == doctest::Approx(3));
  CHECK(homog_coeff(1, m) == doctest::Approx(1));
  CHECK(homog_coeff(0.5, m) == doctest::Approx(1.5));
  for (double p : {1.3, 2.0, 4.0}) {
    MaterialModel q{0.5, 2.5, p, 1};
    double prev = q.beta;
    for (double t : grid(1.0, 200)) {
      const double k = homog_coeff(t, q);
      CHECK(k <= prev + 1e-14);
      CHECK(k >= q.alpha - 1e-14);
      CHECK(k <= q.beta + 1e-14);
      CHECK(k == doctest::Approx(homog_coeff_normalized(t, q)).epsilon(1e-12));
      prev = k;
    }
  }
}

TEST_CASE("F slopes on the three pieces") {
  IntegrandF F(1, 1, 2);
  CHECK(F.value_and_slope(0.5).slope == doctest::Approx(0.5));
  CHECK(F.value_and_slope(1.5).slope == doctest::Approx(1.0));
  CHECK(F.value_and_slope(3.0).slope == doctest::Approx(1.5));
  CHECK(F.value_and_slope(0.0).value == 0.0);
  CHECK_THROWS_AS(F.value_and_slope(-1e-3), InvalidInput);
}

TEST_CASE("mu = 0 degenerates to the weak-phase power law") {
  IntegrandF F(0, 1.5, 3);
  for (double s : {0.1, 1.0, 2.0})
    CHECK(F.value_and_slope(s).slope == doctest::Approx(s * s / std::pow(2.5, 2)));
}

TEST_CASE("F value is the integral of its slope") {
  for (double eps : {0.0, 1e-2}) {
    IntegrandF F(0.8, 1.5, 2.5, eps);
    // Simpson on a fine grid from 0 to s
    const int n = 20000;
    const double S = 3.5;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double a = S * i / n, b = S * (i + 1) / n;
      acc += (b - a) / 6 *
             (F.eval(a).slope + 4 * F.eval(0.5 * (a + b)).slope + F.eval(b).slope);
    }
    CHECK(F.eval(S).value == doctest::Approx(acc).epsilon(1e-9));
  }
}

TEST_CASE("convexity: slope nondecreasing on a dense grid for random parameters") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> Umu(0.05, 3), Uc(0.1, 5), Up(1.1, 4);
  for (int trial = 0; trial < 40; ++trial) {
    const double mu = Umu(rng), c = Uc(rng), p = Up(rng);
    for (double eps : {0.0, 1e-1, 1e-3}) {
      IntegrandF F(mu, c, p, eps);
      double prev = -1.0;
      for (double s : grid(3 * (1 + c) * mu, 4000)) {
        const double sl = F.eval(s).slope;
        REQUIRE(sl >= prev - 1e-12 * std::max(1.0, std::abs(sl)));
        prev = sl;
      }
    }
  }
}

TEST_CASE("smoothed F: curvature at least eps, bounded by eps + k s^(p-2)") {
  for (double p : {1.5, 2.0, 3.0}) {
    for (double eps : {1e-1, 1e-2, 1e-4}) {
      IntegrandF F(1.0, 1.0, p, eps);
      double k = 0.0;
      for (double s : grid(5.0, 5000)) {
        if (s == 0.0) continue;
        const double curv = F.eval(s).curvature;
        CHECK(curv >= eps * (1 - 1e-12));
        k = std::max(k, (curv - eps) / std::pow(s, p - 2));
      }
      // a fixed k independent of eps
      CHECK(k <= 4.0);
    }
  }
}

TEST_CASE("F_eps converges uniformly to F") {
  for (double p : {1.5, 2.0, 3.0}) {
    double prev = INFINITY;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
      IntegrandF Fe(0.7, 1.2, p, eps);
      double worst = 0.0;
      for (double s : grid(5.0, 4000)) worst = std::max(worst, std::abs(Fe.eval(s).value - Fe.exact(s).value));
      CHECK(worst < prev);
      // the eps s^2 / 2 term dominates on [0, 5]
      CHECK(worst <= 13 * eps);
      prev = worst;
    }
  }
}

TEST_CASE("smoothed F matches F beyond the upper kink up to O(eps)") {
  const double eps = 1e-3;
  IntegrandF Fe(1.0, 1.0, 2.0, eps);
  for (double s : {2.5, 3.0, 4.0}) {
    CHECK(std::abs(Fe.eval(s).slope - Fe.exact(s).slope) <= 1.0001 * eps * s);
    CHECK(std::abs(Fe.eval(s).value - Fe.exact(s).value) <= 10 * eps * (1 + s * s));
  }
}

TEST_CASE("joint convexity of |xi|^p / t^(p-1)") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-2, 2), T(0.05, 3), P(1.1, 4);
  for (int i = 0; i < 2000; ++i) {
    const double p = P(rng);
    const Point x1(U(rng), U(rng)), x2(U(rng), U(rng));
    const double t1 = T(rng), t2 = T(rng);
    auto g = [p](const Point& x, double t) { return std::pow(x.norm(), p) / std::pow(t, p - 1); };
    const double mid = g(0.5 * (x1 + x2), 0.5 * (t1 + t2));
    CHECK(mid <= 0.5 * (g(x1, t1) + g(x2, t2)) * (1 + 1e-12) + 1e-15);
  }
}

TEST_CASE("primal energy examples") {
  auto mesh = testing::unit_square(0.25);
  MaterialModel m{1, 2, 2, 0.5};
  auto f = ScalarField::constant(mesh, Storage::nodal, 0.5);
  auto theta0 = ScalarField::zeros(mesh, Storage::element);
  CHECK(primal_energy(ScalarField::zeros(mesh, Storage::nodal), theta0, f, m) == 0.0);
  auto u = interpolate_nodal(mesh, [](const Point& x) { return x.x() * (1 - x.x()) * x.y() * (1 - x.y()); });
  double dir = 0.0;
  auto g = gradient(u);
  for (int e = 0; e < mesh->num_elements(); ++e) dir += 0.5 * mesh->area(e) * g[e].squaredNorm();
  CHECK(primal_energy(u, theta0, f, m) == doctest::Approx(dir - load_pairing(f, u)));
  auto bad = ScalarField::constant(mesh, Storage::element, 1.5);
  CHECK_THROWS_AS(primal_energy(u, bad, f, m), InvalidInput);
}

TEST_CASE("model preconditions") {
  CHECK_THROWS_AS((MaterialModel{2, 1, 2, 1}.validate()), InvalidInput);
  CHECK_THROWS_AS((MaterialModel{1, 2, 1, 1}.validate()), InvalidInput);
  CHECK_THROWS_AS((MaterialModel{1, 2, 2, 0}.validate()), InvalidInput);
}

}
