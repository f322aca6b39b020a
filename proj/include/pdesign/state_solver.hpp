#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "pdesign/fields.hpp"
#include "pdesign/material.hpp"

namespace pdesign {

struct SolveConfig {
  double newton_tol = 1e-10;
  int max_iter = 200;
  double armijo_c = 1e-4;
  double hessian_floor = 1e-10;
  /// Decreasing smoothing levels; a trailing 0 requests the exact energy,
  /// falling back to the last smoothed iterate if that stage cannot converge.
  std::vector<double> eps_schedule{1e-2, 1e-4, 1e-6, 0.0};
  /// Relative gradient tolerance for the intermediate (smoothed) stages.
  double stage_tol = 1e-7;

  void validate() const;
};

struct IterationRecord {
  int stage;
  double eps;
  int iter;
  double energy;
  double residual;
  double step_length;
};

struct SolveResult {
  Eigen::VectorXd u;  // nodal, zero on the boundary
  /// Discrete energy of the final stage's functional.
  double energy = 0.0;
  /// Gradient norm of the unsmoothed energy over interior nodes.
  double residual = 0.0;
  /// newton_tol * (1 + |b|), the bound `residual` was checked against.
  double tolerance = 0.0;
  int iterations = 0;
  /// True when the exact stage failed and the smoothed iterate was kept.
  bool used_fallback = false;
  double final_eps = 0.0;
  std::vector<IterationRecord> log;
};

/// Raised when Newton does not reach the tolerance; keeps the last iterate.
class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, Eigen::VectorXd last_iterate,
             std::vector<double> residual_history)
      : std::runtime_error(what),
        last_iterate_(std::move(last_iterate)),
        residual_history_(std::move(residual_history)) {}

  const Eigen::VectorXd& last_iterate() const { return last_iterate_; }
  const std::vector<double>& residual_history() const { return residual_history_; }

 private:
  Eigen::VectorXd last_iterate_;
  std::vector<double> residual_history_;
};

/// Sum over elements of area * phi_T(|grad u|) - <f_tilde, u>, where phi_T is
/// either the weighted p-power of the state problem or the integrand F.
///
/// `eps` adds eps*s^2/2 to the state density (F carries its own eps) and
/// `delta` replaces |g| by sqrt(|g|^2 + delta^2).
class DiscreteEnergy {
 public:
  static DiscreteEnergy state(const ScalarField& theta, const ScalarField& f_tilde,
                              const MaterialModel& model, double eps = 0.0, double delta = 0.0);
  static DiscreteEnergy integrand(const IntegrandF& F, const ScalarField& f_tilde,
                                  double delta = 0.0);

  const Mesh& mesh() const { return *mesh_; }
  const Eigen::VectorXd& load() const { return load_; }

  double value(const Eigen::VectorXd& u) const;
  /// Full nodal gradient (boundary rows included).
  Eigen::VectorXd gradient(const Eigen::VectorXd& u) const;

  /// 2x2 Hessian of the element density with respect to the element gradient.
  Eigen::Matrix2d element_hessian(int e, const Point& g) const;
  Point element_flux(int e, const Point& g) const;
  double element_density(int e, const Point& g) const;

 private:
  DiscreteEnergy() = default;
  ValueSlopeCurvature density(int e, double s) const;

  MeshPtr mesh_;
  Eigen::VectorXd load_;
  double delta_ = 0.0;
  // state form
  Eigen::VectorXd coeff_;
  double p_ = 2.0;
  double eps_ = 0.0;
  // integrand form
  std::optional<IntegrandF> F_;
};

/// Minimizes the discrete state energy at fixed theta.
ScalarField solve_state(const ScalarField& theta, const ScalarField& f_tilde,
                        const MaterialModel& model, const SolveConfig& cfg = {});
SolveResult solve_state_detailed(const ScalarField& theta, const ScalarField& f_tilde,
                                 const MaterialModel& model, const SolveConfig& cfg = {},
                                 const Eigen::VectorXd* initial = nullptr);

/// Minimizes sum area*F(|grad u|) - <f_tilde, u> through the eps schedule.
/// F's own eps is ignored; the schedule drives the smoothing.
ScalarField solve_F_problem(const IntegrandF& F, const ScalarField& f_tilde,
                            const SolveConfig& cfg = {});
SolveResult solve_F_problem_detailed(const IntegrandF& F, const ScalarField& f_tilde,
                                     const SolveConfig& cfg = {},
                                     const Eigen::VectorXd* initial = nullptr);

/// Exact (unsmoothed) discrete F energy.
double F_energy(const IntegrandF& F, const ScalarField& u, const ScalarField& f_tilde);

void write_iteration_log(const std::vector<IterationRecord>& log,
                         const std::filesystem::path& path);

}  // namespace pdesign
