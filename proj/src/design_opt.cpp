#include "pdesign/design_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pdesign/duality.hpp"
#include "pdesign/error.hpp"
#include "pdesign/io_util.hpp"

namespace pdesign {

void DesignConfig::validate() const {
  solve.validate();
  if (!(vol_tol > 0.0)) throw InvalidInput("vol_tol: must be > 0");
  if (max_bisection < 1) throw InvalidInput("max_bisection: must be >= 1");
  if (bracket_tries < 0) throw InvalidInput("bracket_tries: must be >= 0");
  if (!(mu_collapse > 0.0 && mu_collapse < 1.0)) throw InvalidInput("mu_collapse: must be in (0,1)");
  if (!(grad_zero_tol > 0.0 && grad_zero_tol < 1.0)) throw InvalidInput("grad_zero_tol: must be in (0,1)");
}

double theta_of_gradient(double s, double mu, double c) {
  if (s < mu) return 0.0;
  if (s < (1.0 + c) * mu) return (s / mu - 1.0) / c;
  return 1.0;
}

ScalarField theta_from_u(const ScalarField& u, double mu, const MaterialModel& model) {
  if (!(mu > 0.0)) throw InvalidInput("theta_from_u: mu must be > 0 (use the mu = 0 branch)");
  if (!u.is_nodal()) throw InvalidInput("theta_from_u: u must be nodal");
  const Mesh& mesh = *u.mesh();
  const double c = model.c();
  Eigen::VectorXd th(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e)
    th[e] = theta_of_gradient(element_gradient(mesh, e, u.values()).norm(), mu, c);
  return ScalarField(u.mesh(), Storage::element, std::move(th), "1");
}

namespace {

double volume_of(const ScalarField& u, double mu, const MaterialModel& model) {
  return integrate(theta_from_u(u, mu, model));
}

class VolumeMap {
 public:
  VolumeMap(const ScalarField& f_tilde, const MaterialModel& model, const SolveConfig& cfg)
      : f_tilde_(f_tilde), model_(model), cfg_(cfg) {}

  double operator()(double mu) {
    const Eigen::VectorXd* warm = last_.size() ? &last_ : nullptr;
    const IntegrandF F(mu, model_.c(), model_.p);
    SolveResult r;
    try {
      r = solve_F_problem_detailed(F, f_tilde_, cfg_, warm);
    } catch (const SolveError&) {
      if (!warm) throw;
      r = solve_F_problem_detailed(F, f_tilde_, cfg_);
    }
    last_ = r.u;
    last_result_ = std::move(r);
    const ScalarField u(f_tilde_.mesh(), Storage::nodal, last_, "u", true);
    const double v = volume_of(u, mu, model_);
    sweep.emplace_back(mu, v);
    return v;
  }

  const SolveResult& last_result() const { return last_result_; }
  void seed(const Eigen::VectorXd& u) { last_ = u; }

  std::vector<std::pair<double, double>> sweep;

 private:
  const ScalarField& f_tilde_;
  const MaterialModel& model_;
  const SolveConfig& cfg_;
  Eigen::VectorXd last_;
  SolveResult last_result_;
};

// Searches t in [0,1] for u = (1-t) u_lo + t u_hi with volume kappa at mu.
SolveResult plateau_blend(const SolveResult& lo, const SolveResult& hi, double mu,
                          const ScalarField& f_tilde, const MaterialModel& model,
                          const DesignConfig& cfg,
                          const std::vector<std::pair<double, double>>& sweep) {
  const MeshPtr& mesh = f_tilde.mesh();
  const double kappa = model.kappa, tol = cfg.vol_tol * kappa;
  auto blend = [&](double t) -> Eigen::VectorXd { return (1.0 - t) * lo.u + t * hi.u; };
  auto excess = [&](double t) {
    return volume_of(ScalarField(mesh, Storage::nodal, blend(t), "u", true), mu, model) - kappa;
  };
  double a = 0.0, b = 1.0, fa = excess(a), fb = excess(b);
  if (fa < -tol || fb > tol)
    throw BracketError("volume jump at mu = " + fmt_real(mu) + " cannot be bridged", sweep);
  double t = std::abs(fa) <= tol ? a : b;
  for (int k = 0; k < 200 && std::abs(fa) > tol && std::abs(fb) > tol; ++k) {
    t = 0.5 * (a + b);
    const double ft = excess(t);
    if (std::abs(ft) <= tol) break;
    if (ft > 0) a = t, fa = ft;
    else b = t, fb = ft;
  }
  SolveResult r;
  r.u = blend(t);
  const IntegrandF F(mu, model.c(), model.p);
  const DiscreteEnergy E = DiscreteEnergy::integrand(F, f_tilde);
  Eigen::VectorXd g = E.gradient(r.u);
  Eigen::VectorXd b_load = E.load();
  for (int i = 0; i < mesh->num_nodes(); ++i)
    if (mesh->is_boundary(i)) g[i] = b_load[i] = 0.0;
  r.residual = g.norm();
  r.tolerance = cfg.solve.newton_tol * (1.0 + b_load.norm());
  r.energy = E.value(r.u);
  r.iterations = lo.iterations + hi.iterations;
  r.used_fallback = lo.used_fallback || hi.used_fallback;
  return r;
}

double max_gradient(const ScalarField& u) {
  const VectorField g = gradient(u);
  double m = 0.0;
  for (const auto& v : g.values()) m = std::max(m, v.norm());
  return m;
}

DesignSolution assemble(MeshPtr mesh, const MaterialModel& model, ScalarField f_tilde,
                        ScalarField u, ScalarField theta, double mu) {
  VectorField sigma = flux(u, theta, model);
  const double primal = primal_energy(u, theta, f_tilde, model);
  const double dual = dual_value(theta, sigma, model);
  const double Fe = F_energy(IntegrandF(mu, model.c(), model.p), u, f_tilde);
  const double vol = integrate(theta);
  DesignSolution sol{.mesh = std::move(mesh),
                     .model = model,
                     .f_tilde = std::move(f_tilde),
                     .u_hat = std::move(u),
                     .theta_hat = std::move(theta),
                     .mu_hat = mu,
                     .sigma_hat = std::move(sigma),
                     .primal_energy = primal,
                     .dual_energy = dual,
                     .F_energy = Fe,
                     .volume = vol,
                     .solver_log = {},
                     .sweep = {}};
  sol.kkt_residual = kkt_residual(sol, model);
  return sol;
}

}  // namespace

double volume_of_mu(double mu, const ScalarField& f_tilde, const MaterialModel& model,
                    const SolveConfig& cfg) {
  if (!(mu > 0.0)) throw InvalidInput("volume_of_mu: mu must be > 0");
  const ScalarField u = solve_F_problem(IntegrandF(mu, model.c(), model.p), f_tilde, cfg);
  return volume_of(u, mu, model);
}

DesignSolution solve_design(MeshPtr mesh, const MaterialModel& model, const ScalarField& f,
                            const DesignConfig& cfg) {
  model.validate();
  cfg.validate();
  if (!(model.kappa < mesh->total_area()))
    throw InvalidInput("kappa: must satisfy kappa < |domain| = " + fmt_real(mesh->total_area()));
  const Normalization norm = normalize(model.alpha, model.beta, model.p, f);
  const ScalarField& f_tilde = norm.f_tilde;
  const double c = norm.c;
  const int ne = mesh->num_elements();

  // mu = 0 branch: the all-alpha state already fits the budget on its support.
  const auto ones = ScalarField::constant(mesh, Storage::element, 1.0);
  SolveResult rt = solve_state_detailed(ones, f_tilde, model, cfg.solve);
  const ScalarField u_one(mesh, Storage::nodal, rt.u, "u", true);
  const VectorField g_one = gradient(u_one);
  double gmax = 0.0;
  for (const auto& v : g_one.values()) gmax = std::max(gmax, v.norm());
  Eigen::VectorXd support(ne);
  for (int e = 0; e < ne; ++e) support[e] = g_one[e].norm() > cfg.grad_zero_tol * gmax ? 1.0 : 0.0;
  const double support_area = integrate(ScalarField(mesh, Storage::element, support));
  if (support_area <= model.kappa) {
    ScalarField theta(mesh, Storage::element, support, "1");
    DesignSolution sol = assemble(mesh, model, f_tilde, u_one, std::move(theta), 0.0);
    sol.degenerate = true;
    sol.solver_residual = rt.residual;
    sol.solver_tolerance = rt.tolerance;
    sol.solver_fallback = rt.used_fallback;
    sol.solver_log = rt.log;
    return sol;
  }

  // Upper bracket: all-beta state, where no gradient exceeds mu_hi.
  const auto zeros = ScalarField::zeros(mesh, Storage::element);
  const ScalarField u_zero = solve_state(zeros, f_tilde, model, cfg.solve);
  double mu_hi = max_gradient(u_zero);
  if (!(mu_hi > 0.0)) throw BracketError("zero load: no positive multiplier exists", {});

  // Lower bracket: gradient quantile of the all-alpha state that matches kappa.
  std::vector<int> order(ne);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return g_one[a].norm() > g_one[b].norm(); });
  double acc = 0.0, s_star = g_one[order.back()].norm();
  for (int e : order) {
    acc += mesh->area(e);
    if (acc >= model.kappa) {
      s_star = g_one[e].norm();
      break;
    }
  }
  double mu_lo = std::min(s_star / (1.0 + c), 0.5 * mu_hi);

  const double kappa = model.kappa;
  const double tol = cfg.vol_tol * kappa;
  VolumeMap vol(f_tilde, model, cfg.solve);
  vol.seed(u_one.values());
  double v_lo = vol(mu_lo);
  SolveResult at_lo = vol.last_result();
  for (int k = 0; v_lo < kappa - tol && k < cfg.bracket_tries; ++k) {
    mu_lo *= 0.5;
    v_lo = vol(mu_lo);
    at_lo = vol.last_result();
  }
  if (v_lo < kappa - tol)
    throw BracketError("volume(mu) never exceeds kappa on the lower sweep", vol.sweep);
  vol.seed(u_zero.values());
  double v_hi = vol(mu_hi);
  if (v_hi > kappa + tol) throw BracketError("volume(mu_hi) exceeds kappa", vol.sweep);

  SolveResult at_hi = vol.last_result();
  double mu = mu_hi;
  SolveResult final_solve = at_hi;
  bool done = std::abs(v_hi - kappa) <= tol;
  if (!done && std::abs(v_lo - kappa) <= tol) {
    mu = mu_lo;
    final_solve = at_lo;
    done = true;
  }
  vol.seed(at_lo.u);

  // Bisection on mu; switches to Illinois regula falsi if volume(mu) is seen
  // to leave the bracket values (non-monotone blip).
  int steps = 0, violations = 0;
  bool regula = false, blended = false;
  int side = 0;
  double f_lo = v_lo - kappa, f_hi = v_hi - kappa;
  double w_lo = f_lo, w_hi = f_hi;  // Illinois-weighted copies
  while (!done) {
    if (mu_hi - mu_lo <= cfg.mu_collapse * mu_hi) {
      // The discrete volume jumps across kappa at a single mu: the minimizers
      // there form a segment, so pick the point on it with the right volume.
      mu = 0.5 * (mu_lo + mu_hi);
      final_solve = plateau_blend(at_lo, at_hi, mu, f_tilde, model, cfg, vol.sweep);
      blended = true;
      break;
    }
    if (steps >= cfg.max_bisection)
      throw BracketError("bisection did not reach the volume tolerance", vol.sweep);
    ++steps;
    mu = 0.5 * (mu_lo + mu_hi);
    if (regula) {
      const double m = (mu_lo * w_hi - mu_hi * w_lo) / (w_hi - w_lo);
      if (m > mu_lo && m < mu_hi) mu = m;
    }
    const double fm = vol(mu) - kappa;
    if (fm > f_lo + tol || fm < f_hi - tol) {
      ++violations;
      regula = true;
    }
    if (std::abs(fm) <= tol) {
      final_solve = vol.last_result();
      break;
    }
    if (fm > 0) {
      mu_lo = mu;
      at_lo = vol.last_result();
      f_lo = w_lo = fm;
      if (side == +1) w_hi *= 0.5;
      side = +1;
    } else {
      mu_hi = mu;
      at_hi = vol.last_result();
      f_hi = w_hi = fm;
      if (side == -1) w_lo *= 0.5;
      side = -1;
    }
  }

  const SolveResult& last = final_solve;
  ScalarField u_hat(mesh, Storage::nodal, last.u, "u", true);
  ScalarField theta_hat = theta_from_u(u_hat, mu, model);
  DesignSolution sol = assemble(mesh, model, f_tilde, std::move(u_hat), std::move(theta_hat), mu);
  sol.solver_residual = last.residual;
  sol.solver_tolerance = last.tolerance;
  sol.solver_fallback = last.used_fallback;
  sol.solver_log = last.log;
  sol.bisection_steps = steps;
  sol.plateau_blend = blended;
  sol.monotonicity_violations = violations;
  sol.sweep = vol.sweep;
  return sol;
}

DesignSolution solve_design(const DomainSpec& domain, const MaterialModel& model,
                            const std::function<double(const Point&)>& f,
                            const DesignConfig& cfg) {
  auto mesh = std::make_shared<const Mesh>(build_mesh(domain));
  return solve_design(mesh, model, interpolate_nodal(mesh, f, "load"), cfg);
}

double kkt_residual(const DesignSolution& sol, const MaterialModel& model) {
  const Mesh& mesh = *sol.mesh;
  const double c = model.c(), p = model.p;
  const double mup = std::pow(sol.mu_hat, p);
  const double mean_area = mesh.total_area() / mesh.num_elements();
  double worst = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double th = sol.theta_hat[e];
    const double s = element_gradient(mesh, e, sol.u_hat.values()).norm();
    const double g = mup - std::pow(s / (1.0 + c * th), p);
    double viol = 0.0;
    if (th < 1.0) viol = std::max(viol, -g);
    if (th > 0.0) viol = std::max(viol, g);
    worst = std::max(worst, viol * mesh.area(e) / mean_area);
  }
  return worst + std::abs(sol.mu_hat * (sol.volume - model.kappa));
}

}  // namespace pdesign
