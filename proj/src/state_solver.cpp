#include "pdesign/state_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "pdesign/error.hpp"
#include "pdesign/io_util.hpp"

namespace pdesign {

void SolveConfig::validate() const {
  if (!(newton_tol > 0.0)) throw InvalidInput("newton_tol: must be > 0");
  if (max_iter < 1) throw InvalidInput("max_iter: must be >= 1");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw InvalidInput("armijo_c: must be in (0,1)");
  if (!(hessian_floor >= 0.0)) throw InvalidInput("hessian_floor: must be >= 0");
  if (!(stage_tol > 0.0)) throw InvalidInput("stage_tol: must be > 0");
  if (eps_schedule.empty()) throw InvalidInput("eps_schedule: must not be empty");
  for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
    if (!(eps_schedule[i] >= 0.0)) throw InvalidInput("eps_schedule: entries must be >= 0");
    if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1]))
      throw InvalidInput("eps_schedule: must be strictly decreasing");
  }
}

// ---------------------------------------------------------------------------
// DiscreteEnergy

DiscreteEnergy DiscreteEnergy::state(const ScalarField& theta, const ScalarField& f_tilde,
                                     const MaterialModel& model, double eps, double delta) {
  if (theta.is_nodal()) throw InvalidInput("solve_state: theta must be per-element");
  if (!f_tilde.is_nodal()) throw InvalidInput("solve_state: load must be nodal");
  if (theta.mesh() != f_tilde.mesh()) throw InvalidInput("solve_state: fields on different meshes");
  DiscreteEnergy E;
  E.mesh_ = theta.mesh();
  E.load_ = lumped_load(f_tilde);
  E.delta_ = delta;
  E.p_ = model.p;
  E.eps_ = eps;
  const double c = model.c();
  E.coeff_.resize(theta.size());
  for (int e = 0; e < theta.size(); ++e) {
    const double th = theta[e];
    if (!(th >= 0.0 && th <= 1.0)) throw InvalidInput("solve_state: theta outside [0,1]");
    E.coeff_[e] = 1.0 / std::pow(1.0 + c * th, model.p - 1.0);
  }
  return E;
}

DiscreteEnergy DiscreteEnergy::integrand(const IntegrandF& F, const ScalarField& f_tilde,
                                         double delta) {
  if (!f_tilde.is_nodal()) throw InvalidInput("solve_F_problem: load must be nodal");
  DiscreteEnergy E;
  E.mesh_ = f_tilde.mesh();
  E.load_ = lumped_load(f_tilde);
  E.delta_ = delta;
  E.p_ = F.p();
  E.F_ = F;
  return E;
}

ValueSlopeCurvature DiscreteEnergy::density(int e, double s) const {
  if (F_) return F_->eval(s);
  const double a = coeff_[e];
  ValueSlopeCurvature r;
  const double sp2 = s > 0.0 ? std::pow(s, p_ - 2.0) : (p_ == 2.0 ? 1.0 : (p_ < 2.0 ? 1e300 : 0.0));
  r.value = a * (s > 0.0 ? std::pow(s, p_) / p_ : 0.0) + 0.5 * eps_ * s * s;
  r.slope = a * sp2 * s + eps_ * s;
  r.curvature = a * (p_ - 1.0) * sp2 + eps_;
  return r;
}

double DiscreteEnergy::element_density(int e, const Point& g) const {
  if (delta_ == 0.0) return density(e, g.norm()).value;
  return density(e, std::sqrt(g.squaredNorm() + delta_ * delta_)).value - density(e, delta_).value;
}

Point DiscreteEnergy::element_flux(int e, const Point& g) const {
  const double sd = std::sqrt(g.squaredNorm() + delta_ * delta_);
  if (sd == 0.0) return Point::Zero();
  return (density(e, sd).slope / sd) * g;
}

Eigen::Matrix2d DiscreteEnergy::element_hessian(int e, const Point& g) const {
  constexpr double cap = 1e12;
  double sd = std::sqrt(g.squaredNorm() + delta_ * delta_);
  if (sd < 1e-150) sd = 1e-150;
  const auto d = density(e, sd);
  const double iso = std::min(d.slope / sd, cap);
  const double radial = std::min(d.curvature, cap);
  const Point n = g / sd;
  return iso * Eigen::Matrix2d::Identity() + (radial - iso) * (n * n.transpose());
}

double DiscreteEnergy::value(const Eigen::VectorXd& u) const {
  const Mesh& m = *mesh_;
  double s = 0.0;
  for (int e = 0; e < m.num_elements(); ++e)
    s += m.area(e) * element_density(e, element_gradient(m, e, u));
  return s - load_.dot(u);
}

Eigen::VectorXd DiscreteEnergy::gradient(const Eigen::VectorXd& u) const {
  const Mesh& m = *mesh_;
  Eigen::VectorXd g = -load_;
  for (int e = 0; e < m.num_elements(); ++e) {
    const Point flux = m.area(e) * element_flux(e, element_gradient(m, e, u));
    const auto& t = m.elements()[e];
    const auto& B = m.grad_map(e);
    for (int k = 0; k < 3; ++k) g[t[k]] += flux.dot(B[k]);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Newton

namespace {

using SpMat = Eigen::SparseMatrix<double>;

class NewtonWorkspace {
 public:
  explicit NewtonWorkspace(const Mesh& mesh) : mesh_(mesh) {
    dof_.assign(mesh.num_nodes(), -1);
    for (int i = 0; i < mesh.num_nodes(); ++i)
      if (!mesh.is_boundary(i)) {
        dof_[i] = static_cast<int>(nodes_.size());
        nodes_.push_back(i);
      }
    const int n = num_dofs();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mesh.num_elements()) * 9 + n);
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 0.0);
    for (const auto& t : mesh.elements())
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          if (dof_[t[a]] >= 0 && dof_[t[b]] >= 0) trip.emplace_back(dof_[t[a]], dof_[t[b]], 0.0);
    H_.resize(n, n);
    H_.setFromTriplets(trip.begin(), trip.end());
    H_.makeCompressed();
    slots_.resize(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const auto& t = mesh.elements()[e];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          slots_[e][3 * a + b] =
              (dof_[t[a]] >= 0 && dof_[t[b]] >= 0) ? slot(dof_[t[a]], dof_[t[b]]) : -1;
    }
    if (n > 0) ldlt_.analyzePattern(H_);
  }

  int num_dofs() const { return static_cast<int>(nodes_.size()); }

  Eigen::VectorXd gather(const Eigen::VectorXd& full) const {
    Eigen::VectorXd r(num_dofs());
    for (int i = 0; i < num_dofs(); ++i) r[i] = full[nodes_[i]];
    return r;
  }

  void add_scattered(Eigen::VectorXd& full, const Eigen::VectorXd& d, double t) const {
    for (int i = 0; i < num_dofs(); ++i) full[nodes_[i]] += t * d[i];
  }

  /// Newton direction for H(u) d = -g. Returns false if the factorization fails.
  bool direction(const DiscreteEnergy& E, const Eigen::VectorXd& u, const Eigen::VectorXd& g,
                 double floor, Eigen::VectorXd& d) {
    double* val = H_.valuePtr();
    std::fill(val, val + H_.nonZeros(), 0.0);
    for (int e = 0; e < mesh_.num_elements(); ++e) {
      const Point ge = element_gradient(mesh_, e, u);
      const Eigen::Matrix2d Hg = E.element_hessian(e, ge) + floor * Eigen::Matrix2d::Identity();
      const auto& B = mesh_.grad_map(e);
      const double area = mesh_.area(e);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          const int s = slots_[e][3 * a + b];
          if (s >= 0) val[s] += area * B[a].dot(Hg * B[b]);
        }
    }
    ldlt_.factorize(H_);
    if (ldlt_.info() != Eigen::Success) return false;
    d = ldlt_.solve(-g);
    return ldlt_.info() == Eigen::Success && d.allFinite();
  }

 private:
  int slot(int row, int col) const {
    const int* inner = H_.innerIndexPtr();
    const int* outer = H_.outerIndexPtr();
    const int* lo = inner + outer[col];
    const int* hi = inner + outer[col + 1];
    const int* it = std::lower_bound(lo, hi, row);
    return static_cast<int>(it - inner);
  }

  const Mesh& mesh_;
  std::vector<int> dof_;
  std::vector<int> nodes_;
  SpMat H_;
  std::vector<std::array<int, 9>> slots_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
};

struct StageOutcome {
  bool converged = false;
  double residual = 0.0;
  double energy = 0.0;
};

StageOutcome run_stage(NewtonWorkspace& ws, const DiscreteEnergy& E, Eigen::VectorXd& u,
                       double tol_abs, const SolveConfig& cfg, int stage, double eps,
                       SolveResult& result, std::vector<double>& history) {
  StageOutcome out;
  if (ws.num_dofs() == 0) {
    out.converged = true;
    out.energy = E.value(u);
    return out;
  }
  Eigen::VectorXd g = ws.gather(E.gradient(u));
  double energy = E.value(u);
  double step_len = 0.0;
  Eigen::VectorXd d, trial;
  for (int it = 0;; ++it) {
    const double r = g.norm();
    history.push_back(r);
    result.log.push_back({stage, eps, it, energy, r, step_len});
    out.residual = r;
    out.energy = energy;
    if (r <= tol_abs) {
      out.converged = true;
      return out;
    }
    if (it >= cfg.max_iter) return out;
    ++result.iterations;

    if (!ws.direction(E, u, g, cfg.hessian_floor, d)) d = -g;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      d = -g;
      slope = -r * r;
    }
    bool accepted = false;
    double t = 1.0;
    Eigen::VectorXd g_trial;
    for (int bt = 0; bt < 60; ++bt, t *= 0.5) {
      trial = u;
      ws.add_scattered(trial, d, t);
      const double e_trial = E.value(trial);
      if (!std::isfinite(e_trial)) continue;
      const double target = cfg.armijo_c * t * slope;
      if (e_trial - energy <= target) {
        accepted = true;
        energy = e_trial;
        g_trial = ws.gather(E.gradient(trial));
        break;
      }
      // Decrease below round-off of the energy sum: fall back to the gradient norm.
      if (std::abs(t * slope) <= 1e-11 * std::max(std::abs(energy), 1e-300)) {
        g_trial = ws.gather(E.gradient(trial));
        if (g_trial.norm() < r) {
          accepted = true;
          energy = e_trial;
          break;
        }
      }
    }
    if (!accepted) return out;
    step_len = t * d.norm();
    u = std::move(trial);
    g = std::move(g_trial);
  }
}

double reference_gradient_scale(const ScalarField& f_tilde, double p) {
  const double fmax = f_tilde.values().cwiseAbs().maxCoeff();
  const double L = std::sqrt(f_tilde.mesh()->total_area());
  const double s = std::pow(fmax * L / 2.0, 1.0 / (p - 1.0));
  return s > 0.0 && std::isfinite(s) ? s : 1.0;
}

template <class MakeEnergy>
SolveResult continuation(const Mesh& mesh, const MakeEnergy& make_energy,
                         const std::vector<double>& schedule, const SolveConfig& cfg,
                         const Eigen::VectorXd* initial, const DiscreteEnergy& exact) {
  cfg.validate();
  NewtonWorkspace ws(mesh);
  SolveResult result;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(mesh.num_nodes());
  if (initial) {
    if (initial->size() != mesh.num_nodes()) throw InvalidInput("initial guess: wrong size");
    u = *initial;
    for (int i = 0; i < mesh.num_nodes(); ++i)
      if (mesh.is_boundary(i)) u[i] = 0.0;
  }
  const double bnorm = ws.gather(exact.load()).norm();
  result.tolerance = cfg.newton_tol * (1.0 + bnorm);
  std::vector<double> history;
  Eigen::VectorXd smoothed;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const double eps = schedule[k];
    const bool last = k + 1 == schedule.size();
    const DiscreteEnergy E = make_energy(eps);
    const double tol = (last ? cfg.newton_tol : std::max(cfg.stage_tol, cfg.newton_tol)) * (1.0 + bnorm);
    const StageOutcome st =
        run_stage(ws, E, u, tol, cfg, static_cast<int>(k), eps, result, history);
    result.energy = st.energy;
    result.final_eps = eps;
    if (!st.converged) {
      if (last && eps == 0.0 && k > 0) {
        // Exact stage failed; keep whichever iterate has the smaller exact residual.
        const double r_exact = ws.gather(exact.gradient(u)).norm();
        const double r_smooth = ws.gather(exact.gradient(smoothed)).norm();
        if (r_smooth < r_exact) {
          u = smoothed;
          result.final_eps = schedule[k - 1];
          result.energy = make_energy(schedule[k - 1]).value(u);
        }
        result.used_fallback = true;
        break;
      }
      throw SolveError("Newton did not converge (stage eps=" + fmt_real(eps) +
                           ", residual=" + fmt_real(st.residual) + ")",
                       u, history);
    }
    smoothed = u;
  }
  result.residual = ws.gather(exact.gradient(u)).norm();
  result.u = std::move(u);
  return result;
}

}  // namespace

SolveResult solve_state_detailed(const ScalarField& theta, const ScalarField& f_tilde,
                                 const MaterialModel& model, const SolveConfig& cfg,
                                 const Eigen::VectorXd* initial) {
  const DiscreteEnergy exact = DiscreteEnergy::state(theta, f_tilde, model);
  const double sref = reference_gradient_scale(f_tilde, model.p);
  std::vector<double> schedule{0.0};
  if (model.p != 2.0) schedule = cfg.eps_schedule;
  auto make = [&](double eps) {
    const double delta = model.p < 2.0 ? eps * sref : 0.0;
    return DiscreteEnergy::state(theta, f_tilde, model, eps, delta);
  };
  return continuation(*theta.mesh(), make, schedule, cfg, initial, exact);
}

ScalarField solve_state(const ScalarField& theta, const ScalarField& f_tilde,
                        const MaterialModel& model, const SolveConfig& cfg) {
  auto r = solve_state_detailed(theta, f_tilde, model, cfg);
  return ScalarField(theta.mesh(), Storage::nodal, std::move(r.u), "u", true);
}

SolveResult solve_F_problem_detailed(const IntegrandF& F, const ScalarField& f_tilde,
                                     const SolveConfig& cfg, const Eigen::VectorXd* initial) {
  const IntegrandF F0(F.mu(), F.c(), F.p(), 0.0);
  const DiscreteEnergy exact = DiscreteEnergy::integrand(F0, f_tilde);
  const double sref = reference_gradient_scale(f_tilde, F.p());
  auto make = [&](double eps) {
    const double delta = F.p() < 2.0 ? eps * sref : 0.0;
    return DiscreteEnergy::integrand(IntegrandF(F.mu(), F.c(), F.p(), eps), f_tilde, delta);
  };
  return continuation(*f_tilde.mesh(), make, cfg.eps_schedule, cfg, initial, exact);
}

ScalarField solve_F_problem(const IntegrandF& F, const ScalarField& f_tilde,
                            const SolveConfig& cfg) {
  auto r = solve_F_problem_detailed(F, f_tilde, cfg);
  return ScalarField(f_tilde.mesh(), Storage::nodal, std::move(r.u), "u", true);
}

double F_energy(const IntegrandF& F, const ScalarField& u, const ScalarField& f_tilde) {
  const IntegrandF F0(F.mu(), F.c(), F.p(), 0.0);
  return DiscreteEnergy::integrand(F0, f_tilde).value(u.values());
}

void write_iteration_log(const std::vector<IterationRecord>& log,
                         const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "stage,eps,iter,energy,residual,step_length\n";
  for (const auto& r : log)
    out << r.stage << ',' << fmt_real(r.eps) << ',' << r.iter << ',' << fmt_real(r.energy) << ','
        << fmt_real(r.residual) << ',' << fmt_real(r.step_length) << '\n';
}

}  // namespace pdesign
