#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "pdesign/fields.hpp"
#include "pdesign/material.hpp"
#include "pdesign/state_solver.hpp"

namespace pdesign {

struct DesignConfig {
  SolveConfig solve;
  /// Bisection stops once |volume - kappa| <= vol_tol * kappa.
  double vol_tol = 1e-5;
  int max_bisection = 100;
  /// |grad u| below grad_zero_tol * max|grad u| counts as zero in the mu = 0 test.
  double grad_zero_tol = 1e-8;
  /// Halvings of the lower bracket end before giving up.
  int bracket_tries = 30;
  /// Relative bracket width at which volume(mu) is treated as jumping.
  double mu_collapse = 1e-10;

  void validate() const;
};

struct DesignSolution {
  MeshPtr mesh;
  MaterialModel model;
  ScalarField f_tilde;
  ScalarField u_hat;
  ScalarField theta_hat;
  double mu_hat = 0.0;
  VectorField sigma_hat;
  double primal_energy = 0.0;
  double dual_energy = 0.0;
  /// int F(|grad u_hat|) - <f_tilde, u_hat> with the exact F at mu_hat.
  double F_energy = 0.0;
  double volume = 0.0;
  double kkt_residual = 0.0;
  /// Exact-energy gradient norm of the last solve and its tolerance.
  double solver_residual = 0.0;
  double solver_tolerance = 0.0;
  bool solver_fallback = false;
  bool degenerate = false;  // mu_hat = 0 branch
  int bisection_steps = 0;
  int monotonicity_violations = 0;
  /// Final u is a blend of two minimizers at a volume jump.
  bool plateau_blend = false;
  /// Newton log of the solve behind u_hat.
  std::vector<IterationRecord> solver_log;
  /// Every (mu, volume(mu)) evaluated, in order.
  std::vector<std::pair<double, double>> sweep;
};

/// No mu with volume(mu) = kappa could be bracketed.
class BracketError : public std::runtime_error {
 public:
  BracketError(const std::string& what, std::vector<std::pair<double, double>> sweep)
      : std::runtime_error(what), sweep_(std::move(sweep)) {}
  const std::vector<std::pair<double, double>>& sweep() const { return sweep_; }

 private:
  std::vector<std::pair<double, double>> sweep_;
};

/// theta = 0 below mu, (|grad u|/mu - 1)/c on [mu, (1+c)mu), 1 above.
ScalarField theta_from_u(const ScalarField& u, double mu, const MaterialModel& model);
double theta_of_gradient(double s, double mu, double c);

/// int theta over the F-problem solution at mu.
double volume_of_mu(double mu, const ScalarField& f_tilde, const MaterialModel& model,
                    const SolveConfig& cfg = {});

/// Full optimal-design solve on a prepared mesh with a nodal (unscaled) load f.
DesignSolution solve_design(MeshPtr mesh, const MaterialModel& model, const ScalarField& f,
                            const DesignConfig& cfg = {});
DesignSolution solve_design(const DomainSpec& domain, const MaterialModel& model,
                            const std::function<double(const Point&)>& f,
                            const DesignConfig& cfg = {});

/// Complementarity / variational-inequality defect of a solution.
///
/// Per element g = mu^p - |grad u|^p / (1 + c theta)^p must be >= 0 where
/// theta < 1 and <= 0 where theta > 0. Returns max_T violation_T * area_T /
/// mean area, plus |mu (volume - kappa)|.
double kkt_residual(const DesignSolution& sol, const MaterialModel& model);

}  // namespace pdesign
