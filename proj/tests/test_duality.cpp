#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "pdesign/design_opt.hpp"
#include "pdesign/duality.hpp"
#include "support.hpp"

using namespace pdesign;

namespace {

const DesignSolution& square_solution(double p) {
  static std::map<double, DesignSolution> cache;
  auto it = cache.find(p);
  if (it == cache.end())
    it = cache.emplace(p, solve_design(DomainSpec{Rectangle{}, 0.1}, MaterialModel{1, 2, p, 0.5},
                                       [](const Point&) { return 1.0; }))
             .first;
  return it->second;
}

ScalarField random_theta(const MeshPtr& mesh, double kappa, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0, 1);
  Eigen::VectorXd t(mesh->num_elements());
  for (int e = 0; e < t.size(); ++e) t[e] = U(rng);
  ScalarField th(mesh, Storage::element, t);
  const double scale = std::min(1.0, kappa / integrate(th));
  return ScalarField(mesh, Storage::element, scale * t);
}

}  // namespace

TEST_SUITE("duality") {

TEST_CASE("flux of a p = 2 state with theta = 0 is its gradient") {
  auto mesh = testing::unit_square(0.25);
  auto u = interpolate_nodal(mesh, [](const Point& x) { return x.x() * (1 - x.x()); });
  auto s = flux(u, ScalarField::zeros(mesh, Storage::element), MaterialModel{1, 2, 2, 0.5});
  auto g = gradient(u);
  for (int e = 0; e < mesh->num_elements(); ++e) CHECK((s[e] - g[e]).norm() <= 1e-15);
  auto z = flux(ScalarField::zeros(mesh, Storage::nodal), ScalarField::zeros(mesh, Storage::element),
                MaterialModel{1, 2, 1.5, 0.5});
  for (const auto& v : z.values()) CHECK(v.norm() == 0.0);
}

TEST_CASE("zero duality gap and divergence feasibility at the optimum") {
  for (double p : {1.5, 2.0, 3.0}) {
    CAPTURE(p);
    const auto& sol = square_solution(p);
    CHECK(std::abs(sol.primal_energy + sol.dual_energy) <= 1e-8 * std::abs(sol.primal_energy));
    CHECK(div_residual(sol.sigma_hat, sol.f_tilde) <= 1e-6);
    // inner max over theta dominates theta_hat, up to the volume overshoot the
    // bisection tolerance allows
    double smax = 0.0;
    for (const auto& s : sol.sigma_hat.values()) smax = std::max(smax, s.norm());
    const double q = sol.model.p_conj();
    const double slack = sol.model.c() * std::pow(smax, q) / q * std::max(0.0, sol.volume - sol.model.kappa);
    CHECK(dual_max_value(sol.sigma_hat, sol.model) >= sol.dual_energy - slack - 1e-15);
  }
}

TEST_CASE("weak duality for feasible flux and arbitrary theta and v") {
  std::mt19937_64 rng(21);
  for (double p : {1.5, 2.0, 3.0}) {
    const auto& sol = square_solution(p);
    for (int k = 0; k < 5; ++k) {
      auto th = random_theta(sol.mesh, sol.model.kappa, rng);
      const double dual = dual_value(th, sol.sigma_hat, sol.model);
      auto u = solve_state(th, sol.f_tilde, sol.model);
      CHECK(primal_energy(u, th, sol.f_tilde, sol.model) >= -dual - 1e-10);
      std::uniform_real_distribution<double> U(-0.1, 0.1);
      Eigen::VectorXd v = u.values();
      for (int i = 0; i < v.size(); ++i)
        if (!sol.mesh->is_boundary(i)) v[i] += U(rng);
      CHECK(primal_energy(ScalarField(sol.mesh, Storage::nodal, v), th, sol.f_tilde, sol.model) >= -dual - 1e-10);
    }
  }
}

TEST_CASE("a perturbed flux violates the divergence identity") {
  const auto& sol = square_solution(2.0);
  std::vector<Point> v = sol.sigma_hat.values();
  for (std::size_t e = 0; e < v.size(); e += 7) v[e] *= 1.5;
  CHECK(div_residual(VectorField(sol.mesh, v), sol.f_tilde) >= 1e-3);
}

TEST_CASE("greedy theta is a feasible knapsack maximizer") {
  const auto& sol = square_solution(2.0);
  auto th = greedy_theta(sol.sigma_hat, sol.model);
  CHECK(integrate(th) == doctest::Approx(sol.model.kappa).epsilon(1e-12));
  CHECK(th.values().minCoeff() >= 0.0);
  CHECK(th.values().maxCoeff() <= 1.0);
  int fractional = 0;
  for (int e = 0; e < th.size(); ++e) fractional += th[e] > 0 && th[e] < 1;
  CHECK(fractional <= 1);
  const double best = dual_value(th, sol.sigma_hat, sol.model);
  CHECK(best == doctest::Approx(dual_max_value(sol.sigma_hat, sol.model)));
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k)
    CHECK(dual_value(random_theta(sol.mesh, sol.model.kappa, rng), sol.sigma_hat, sol.model) <= best);
}

TEST_CASE("greedy ties go to the lower element index") {
  auto mesh = testing::unit_square(0.5);  // eight triangles of area 1/8
  VectorField s(mesh, std::vector<Point>(8, Point(1, 0)));
  auto th = greedy_theta(s, MaterialModel{1, 2, 2, 0.3});
  CHECK(th[0] == 1.0);
  CHECK(th[1] == 1.0);
  CHECK(th[2] == doctest::Approx(0.4));
  for (int e = 3; e < 8; ++e) CHECK(th[e] == 0.0);
}

TEST_CASE("restart flux spread is tiny and independent of thread count") {
  const auto& sol = square_solution(2.0);
  auto a = dual_report(sol, 3, {}, 5, 1);
  auto b = dual_report(sol, 3, {}, 5, 2);
  CHECK(a.flux_spread <= 1e-5);
  CHECK(a.restart_flux_spreads.size() == 3);
  CHECK(a.flux_spread == b.flux_spread);
  CHECK(a.theta_spread == b.theta_spread);
  CHECK(a.relative_gap <= 1e-6);
  CHECK(a.gap <= a.relative_gap);
}

}
