#include <doctest.h>

#include <cmath>

#include "pdesign/design_opt.hpp"
#include "pdesign/duality.hpp"
#include "pdesign/error.hpp"
#include "support.hpp"

using namespace pdesign;

namespace {

DesignSolution square_design(double p, double h = 0.1, double kappa = 0.5) {
  MaterialModel m{1, 2, p, kappa};
  return solve_design(DomainSpec{Rectangle{}, h}, m, [](const Point&) { return 1.0; });
}

}  // namespace

TEST_SUITE("design") {

TEST_CASE("theta from the gradient level, half-open pieces") {
  CHECK(theta_of_gradient(0.5, 1, 1) == 0.0);
  CHECK(theta_of_gradient(1.0, 1, 1) == 0.0);
  CHECK(theta_of_gradient(1.5, 1, 1) == doctest::Approx(0.5));
  CHECK(theta_of_gradient(2.0, 1, 1) == 1.0);
  CHECK(theta_of_gradient(7.0, 1, 1) == 1.0);
}

TEST_CASE("F density equals the state density at theta(u) plus c mu^p theta / p'") {
  for (double p : {1.5, 2.0, 3.0}) {
    const double mu = 0.7, c = 1.3;
    IntegrandF F(mu, c, p);
    for (double s = 0.0; s < 3.0; s += 0.01) {
      const double th = theta_of_gradient(s, mu, c);
      const double state = std::pow(s, p) / (p * std::pow(1 + c * th, p - 1));
      CHECK(F.eval(s).value == doctest::Approx(state + c * std::pow(mu, p) * th * (p - 1) / p).epsilon(1e-12));
    }
  }
}

TEST_CASE("volume of mu is nonincreasing over a logarithmic sweep") {
  auto mesh = testing::unit_square(0.1);
  auto ft = ScalarField::constant(mesh, Storage::nodal, 0.5);
  MaterialModel m{1, 2, 2, 0.5};
  double prev = INFINITY;
  for (double mu = 0.01; mu < 1.0; mu *= 1.5) {
    const double v = volume_of_mu(mu, ft, m);
    CHECK(v <= prev + 1e-8);
    CHECK(v >= 0.0);
    prev = v;
  }
  CHECK(prev == 0.0);
}

TEST_CASE("square design meets the volume budget and complementarity") {
  for (double p : {1.5, 2.0, 3.0}) {
    CAPTURE(p);
    auto sol = square_design(p);
    const double kappa = sol.model.kappa;
    CHECK(!sol.degenerate);
    CHECK(sol.mu_hat > 0.0);
    CHECK(std::abs(sol.volume - kappa) <= 1e-5 * kappa);
    CHECK(integrate(sol.theta_hat) == doctest::Approx(sol.volume));
    CHECK(sol.theta_hat.values().minCoeff() >= 0.0);
    CHECK(sol.theta_hat.values().maxCoeff() <= 1.0);
    CHECK(sol.kkt_residual <= 1e-6);
    CHECK(sol.solver_residual <= sol.solver_tolerance);
    // intermediate values only on the plateau of |grad u|
    const double c = sol.model.c();
    auto g = gradient(sol.u_hat);
    for (int e = 0; e < sol.mesh->num_elements(); ++e) {
      const double th = sol.theta_hat[e];
      if (th > 1e-12 && th < 1 - 1e-12) {
        const double s = g[e].norm();
        CHECK(s >= sol.mu_hat * (1 - 1e-9));
        CHECK(s <= (1 + c) * sol.mu_hat * (1 + 1e-9));
      }
    }
  }
}

TEST_CASE("both formulations reach the same optimum") {
  for (double p : {1.5, 2.0, 3.0}) {
    CAPTURE(p);
    auto sol = square_design(p);
    auto u = solve_state(sol.theta_hat, sol.f_tilde, sol.model);
    const double state = primal_energy(u, sol.theta_hat, sol.f_tilde, sol.model);
    const double shift = sol.model.c() * std::pow(sol.mu_hat, p) * (p - 1) / p * integrate(sol.theta_hat);
    CHECK(std::abs(state - (sol.F_energy - shift)) <= 1e-8 * std::abs(state));
    CHECK(std::abs(state - sol.primal_energy) <= 1e-8 * std::abs(state));
  }
}

TEST_CASE("sweep records every evaluated multiplier") {
  auto sol = square_design(2.0);
  CHECK(sol.sweep.size() >= 2);
  for (const auto& [mu, v] : sol.sweep) {
    CHECK(mu > 0.0);
    CHECK(v >= 0.0);
  }
}

TEST_CASE("budget covering the gradient support takes the mu = 0 branch") {
  // Square fanned around its centre plus a fin triangle whose nodes all lie on
  // the boundary; the fin carries zero gradient, so the support has area 1.
  std::vector<Point> nodes{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {2, 0}};
  std::vector<std::array<int, 3>> elements{{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}, {1, 5, 2}};
  auto mesh = std::make_shared<const Mesh>(nodes, elements);
  REQUIRE(mesh->total_area() == doctest::Approx(1.5));
  MaterialModel m{1, 2, 2, 1.2};
  auto sol = solve_design(mesh, m, ScalarField::constant(mesh, Storage::nodal, 1.0));
  CHECK(sol.degenerate);
  CHECK(sol.mu_hat == 0.0);
  for (int e = 0; e < 4; ++e) CHECK(sol.theta_hat[e] == 1.0);
  CHECK(sol.theta_hat[4] == 0.0);
  CHECK(sol.volume <= m.kappa);
}

TEST_CASE("design preconditions") {
  auto mesh = testing::unit_square(0.25);
  auto f = ScalarField::constant(mesh, Storage::nodal, 1.0);
  CHECK_THROWS_AS(solve_design(mesh, MaterialModel{1, 2, 2, 1.5}, f), InvalidInput);
  CHECK_THROWS_AS(solve_design(mesh, MaterialModel{3, 2, 2, 0.5}, f), InvalidInput);
  // zero load: the strong-phase state has empty gradient support, so mu = 0
  auto zero = solve_design(mesh, MaterialModel{1, 2, 2, 0.5}, ScalarField::zeros(mesh, Storage::nodal));
  CHECK(zero.degenerate);
  CHECK(zero.theta_hat.values().maxCoeff() == 0.0);
  DesignConfig cfg;
  cfg.vol_tol = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}

}
