#include "pdesign/duality.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>

#include "pdesign/design_opt.hpp"
#include "pdesign/error.hpp"

namespace pdesign {

VectorField flux(const ScalarField& u, const ScalarField& theta, const MaterialModel& model) {
  if (!u.is_nodal() || theta.is_nodal()) throw InvalidInput("flux: field storage mismatch");
  if (u.mesh() != theta.mesh()) throw InvalidInput("flux: fields on different meshes");
  const Mesh& mesh = *u.mesh();
  const double c = model.c(), p = model.p;
  std::vector<Point> s(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Point g = element_gradient(mesh, e, u.values());
    const double n = g.norm();
    s[e] = n > 0.0 ? Point(std::pow(n, p - 2.0) / std::pow(1.0 + c * theta[e], p - 1.0) * g)
                   : Point::Zero();
  }
  return VectorField(u.mesh(), std::move(s), "flux");
}

double dual_value(const ScalarField& theta, const VectorField& sigma, const MaterialModel& model) {
  if (theta.is_nodal()) throw InvalidInput("dual_value: theta must be per-element");
  const Mesh& mesh = *sigma.mesh();
  const double c = model.c(), q = model.p_conj();
  double s = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e)
    s += mesh.area(e) * (1.0 + c * theta[e]) * std::pow(sigma[e].norm(), q);
  return s / q;
}

ScalarField greedy_theta(const VectorField& sigma, const MaterialModel& model) {
  const Mesh& mesh = *sigma.mesh();
  const int ne = mesh.num_elements();
  std::vector<int> order(ne);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return sigma[a].norm() > sigma[b].norm(); });
  Eigen::VectorXd th = Eigen::VectorXd::Zero(ne);
  double budget = model.kappa;
  for (int e : order) {
    if (budget <= 0.0) break;
    const double a = mesh.area(e);
    th[e] = std::min(1.0, budget / a);
    budget -= th[e] * a;
  }
  return ScalarField(sigma.mesh(), Storage::element, std::move(th), "1");
}

double dual_max_value(const VectorField& sigma, const MaterialModel& model) {
  return dual_value(greedy_theta(sigma, model), sigma, model);
}

double div_residual(const VectorField& sigma, const ScalarField& f_tilde) {
  const Mesh& mesh = *sigma.mesh();
  Eigen::VectorXd r = -lumped_load(f_tilde);
  const Eigen::VectorXd b = lumped_load(f_tilde);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.elements()[e];
    const auto& B = mesh.grad_map(e);
    for (int k = 0; k < 3; ++k) r[t[k]] += mesh.area(e) * sigma[e].dot(B[k]);
  }
  double worst = 0.0, scale = 0.0;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (mesh.is_boundary(i)) continue;
    worst = std::max(worst, std::abs(r[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return scale > 0.0 ? worst / scale : worst;
}

namespace {

struct RestartOutcome {
  VectorField sigma;
  double flux_spread;
  double theta_spread;
};

RestartOutcome run_restart(const DesignSolution& sol, const SolveConfig& cfg, std::uint64_t seed) {
  const Mesh& mesh = *sol.mesh;
  const MaterialModel& model = sol.model;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const double amp = 2.0 * std::max(sol.u_hat.values().cwiseAbs().maxCoeff(), 1e-12);
  Eigen::VectorXd init(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) init[i] = mesh.is_boundary(i) ? 0.0 : amp * dist(rng);

  // Exact energy straight from the random start, so the solve is free to land
  // on a different minimizer than the continuation path did.
  SolveConfig exact = cfg;
  exact.eps_schedule = {0.0};
  SolveResult r;
  ScalarField theta = sol.theta_hat;
  auto solve = [&](const SolveConfig& c) {
    if (sol.degenerate) return solve_state_detailed(sol.theta_hat, sol.f_tilde, model, c, &init);
    return solve_F_problem_detailed(IntegrandF(sol.mu_hat, model.c(), model.p), sol.f_tilde, c, &init);
  };
  try {
    r = solve(exact);
  } catch (const SolveError&) {
    r = solve(cfg);
  }
  const ScalarField u(sol.mesh, Storage::nodal, r.u, "u", true);
  if (!sol.degenerate) theta = theta_from_u(u, sol.mu_hat, model);
  VectorField sigma = flux(u, theta, model);
  const double q = model.p_conj();
  std::vector<Point> diff(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) diff[e] = sigma[e] - sol.sigma_hat[e];
  const double ref = lq_norm(sol.sigma_hat, q);
  const double spread = lq_norm(VectorField(sol.mesh, std::move(diff)), q) / (ref > 0 ? ref : 1.0);
  double tdiff = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e)
    tdiff += mesh.area(e) * std::abs(theta[e] - sol.theta_hat[e]);
  return {std::move(sigma), spread, tdiff};
}

}  // namespace

DualReport dual_report(const DesignSolution& sol, int n_restarts, const SolveConfig& cfg,
                       std::uint64_t seed, int threads) {
  if (n_restarts < 0) throw InvalidInput("dual_report: restart count must be >= 0");
  const MaterialModel& model = sol.model;
  DualReport rep;
  rep.primal_value = primal_energy(sol.u_hat, sol.theta_hat, sol.f_tilde, model);
  rep.dual_value = dual_value(sol.theta_hat, sol.sigma_hat, model);
  const double sum = std::abs(rep.primal_value + rep.dual_value);
  rep.gap = sum / std::max(1.0, std::abs(rep.primal_value));
  rep.relative_gap = std::abs(rep.primal_value) > 0 ? sum / std::abs(rep.primal_value) : sum;
  rep.dual_max_value = dual_max_value(sol.sigma_hat, model);
  rep.div_residual = div_residual(sol.sigma_hat, sol.f_tilde);

  // Restart k always uses seed + k, and results are collected in order, so
  // the report does not depend on the thread count.
  std::vector<RestartOutcome> outcomes;
  outcomes.reserve(static_cast<std::size_t>(n_restarts));
  const int batch = std::max(1, threads);
  for (int k0 = 0; k0 < n_restarts; k0 += batch) {
    std::vector<std::future<RestartOutcome>> jobs;
    for (int k = k0; k < std::min(n_restarts, k0 + batch); ++k)
      jobs.push_back(std::async(batch > 1 ? std::launch::async : std::launch::deferred,
                                run_restart, std::cref(sol), std::cref(cfg),
                                seed + static_cast<std::uint64_t>(k)));
    for (auto& j : jobs) outcomes.push_back(j.get());
  }
  for (auto& o : outcomes) {
    rep.flux_spread = std::max(rep.flux_spread, o.flux_spread);
    rep.theta_spread = std::max(rep.theta_spread, o.theta_spread);
    rep.restart_flux_spreads.push_back(o.flux_spread);
    rep.restart_theta_spreads.push_back(o.theta_spread);
    rep.restart_fluxes.push_back(std::move(o.sigma));
  }
  return rep;
}

}  // namespace pdesign
