#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pdesign/error.hpp"
#include "pdesign/state_solver.hpp"
#include "support.hpp"

using namespace pdesign;

namespace {

Eigen::VectorXd random_interior(const Mesh& m, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> U(-amp, amp);
  Eigen::VectorXd v(m.num_nodes());
  for (int i = 0; i < v.size(); ++i) v[i] = m.is_boundary(i) ? 0.0 : U(rng);
  return v;
}

// Worst relative error of grad.d against central differences over ten random (u, d).
double fd_check(const DiscreteEnergy& E, std::uint64_t seed, double amp) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Eigen::VectorXd u = random_interior(E.mesh(), rng, amp);
    const Eigen::VectorXd d = random_interior(E.mesh(), rng, 1.0);
    const double h = 1e-6 * amp;
    const double fd = (E.value(u + h * d) - E.value(u - h * d)) / (2 * h);
    const double an = E.gradient(u).dot(d);
    worst = std::max(worst, std::abs(fd - an) / std::abs(an));
  }
  return worst;
}

}  // namespace

TEST_SUITE("state_solver") {

TEST_CASE("energy gradient matches central differences with smoothing active") {
  auto mesh = testing::unit_square(0.1);
  auto f = ScalarField::constant(mesh, Storage::nodal, 0.5);
  auto theta = interpolate_centroids(mesh, [](const Point& x) { return x.x(); });
  for (double p : {1.5, 2.0, 3.0}) {
    MaterialModel m{1, 2, p, 0.5};
    CHECK(fd_check(DiscreteEnergy::state(theta, f, m, 1e-2, p < 2 ? 1e-2 : 0.0), 1, 0.2) <= 1e-6);
    // amplitude chosen so element gradients straddle both kinks
    IntegrandF F(0.5, m.c(), p, 1e-2);
    CHECK(fd_check(DiscreteEnergy::integrand(F, f, p < 2 ? 1e-2 : 0.0), 2, 0.1) <= 1e-6);
  }
}

TEST_CASE("element Hessian matches differences of the element flux") {
  auto mesh = testing::unit_square(0.25);
  auto f = ScalarField::constant(mesh, Storage::nodal, 1.0);
  IntegrandF F(0.5, 1.0, 3.0, 1e-2);
  auto E = DiscreteEnergy::integrand(F, f);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(-1.2, 1.2);
  for (int k = 0; k < 20; ++k) {
    Point g(U(rng), U(rng));
    Eigen::Matrix2d H = E.element_hessian(0, g), fd;
    const double h = 1e-7;
    for (int j = 0; j < 2; ++j) {
      Point dp = g, dm = g;
      dp[j] += h, dm[j] -= h;
      fd.col(j) = (E.element_flux(0, dp) - E.element_flux(0, dm)) / (2 * h);
    }
    CHECK((H - fd).norm() <= 1e-5 * (1 + H.norm()));
  }
}

TEST_CASE("manufactured solution converges at second order for p = 2") {
  // -div grad u = f_tilde with u = sin(pi x) sin(pi y)
  const double pi = std::numbers::pi;
  std::vector<double> err;
  for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    auto mesh = testing::unit_square(h);
    auto ft = interpolate_nodal(mesh, [pi](const Point& x) {
      return 2 * pi * pi * std::sin(pi * x.x()) * std::sin(pi * x.y());
    });
    MaterialModel m{1, 2, 2, 0.5};
    auto u = solve_state(ScalarField::zeros(mesh, Storage::element), ft, m);
    auto exact = interpolate_nodal(mesh, [pi](const Point& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); });
    err.push_back((u.values() - exact.values()).cwiseAbs().maxCoeff());
  }
  CHECK(err[0] / err[1] >= 3.5);
  CHECK(err[1] / err[2] >= 3.5);
  CHECK(err[2] <= 2e-3);
}

TEST_CASE("constant theta scales the p = 2 solution by 1 + c theta") {
  auto mesh = testing::unit_disk(0.15);
  auto f = ScalarField::constant(mesh, Storage::nodal, 0.5);
  MaterialModel m{1, 3, 2, 0.5};
  auto u0 = solve_state(ScalarField::zeros(mesh, Storage::element), f, m);
  for (double t : {0.3, 1.0}) {
    auto ut = solve_state(ScalarField::constant(mesh, Storage::element, t), f, m);
    CHECK((ut.values() - (1 + m.c() * t) * u0.values()).cwiseAbs().maxCoeff() <=
          1e-9 * u0.values().cwiseAbs().maxCoeff());
  }
}

TEST_CASE("energy decreases along accepted steps and the residual meets its bound") {
  auto mesh = testing::unit_square(0.1);
  auto f = ScalarField::constant(mesh, Storage::nodal, 1.0);
  for (double p : {1.5, 3.0}) {
    MaterialModel m{1, 2, p, 0.5};
    IntegrandF F(0.2, m.c(), p);
    for (const SolveResult& r :
         {solve_state_detailed(ScalarField::constant(mesh, Storage::element, 0.4), f, m),
          solve_F_problem_detailed(F, f)}) {
      CHECK(r.residual <= r.tolerance);
      CHECK(!r.used_fallback);
      for (std::size_t i = 1; i < r.log.size(); ++i) {
        if (r.log[i].stage != r.log[i - 1].stage) continue;
        CHECK(r.log[i].energy <= r.log[i - 1].energy + 1e-11 * std::abs(r.log[i - 1].energy));
      }
    }
  }
}

TEST_CASE("two starting guesses give the same energy") {
  auto mesh = testing::unit_square(0.1);
  auto f = ScalarField::constant(mesh, Storage::nodal, 1.0);
  std::mt19937_64 rng(4);
  for (double p : {1.5, 2.0, 3.0}) {
    MaterialModel m{1, 2, p, 0.5};
    IntegrandF F(0.15, m.c(), p);
    const Eigen::VectorXd start = random_interior(*mesh, rng, 0.3);
    auto a = solve_F_problem_detailed(F, f);
    auto b = solve_F_problem_detailed(F, f, {}, &start);
    const double ea = F_energy(F, ScalarField(mesh, Storage::nodal, a.u), f);
    const double eb = F_energy(F, ScalarField(mesh, Storage::nodal, b.u), f);
    CHECK(std::abs(ea - eb) <= 1e-9 * std::abs(ea));
  }
}

TEST_CASE("non-convergence raises SolveError with the last iterate") {
  auto mesh = testing::unit_square(0.1);
  auto f = ScalarField::constant(mesh, Storage::nodal, 1.0);
  SolveConfig cfg;
  cfg.max_iter = 1;
  cfg.eps_schedule = {0.0};
  IntegrandF F(0.1, 1.0, 3.0);
  try {
    solve_F_problem(F, f, cfg);
    FAIL("expected SolveError");
  } catch (const SolveError& e) {
    CHECK(e.last_iterate().size() == mesh->num_nodes());
    CHECK(!e.residual_history().empty());
  }
}

TEST_CASE("solver configuration is validated") {
  SolveConfig cfg;
  cfg.eps_schedule = {1e-2, 1e-2};
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.max_iter = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.newton_tol = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}

TEST_CASE("solution vanishes on the boundary") {
  auto mesh = testing::unit_disk(0.2);
  auto f = ScalarField::constant(mesh, Storage::nodal, 1.0);
  auto u = solve_state(ScalarField::zeros(mesh, Storage::element), f, MaterialModel{1, 2, 3, 1});
  for (int i = 0; i < mesh->num_nodes(); ++i)
    if (mesh->is_boundary(i)) CHECK(u[i] == 0.0);
  CHECK(u.dirichlet());
}

}
