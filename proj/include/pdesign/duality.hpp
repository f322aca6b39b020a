#pragma once

#include <cstdint>
#include <vector>

#include "pdesign/fields.hpp"
#include "pdesign/material.hpp"
#include "pdesign/state_solver.hpp"

namespace pdesign {

struct DesignSolution;

/// sigma = |grad u|^(p-2) grad u / (1 + c theta)^(p-1), elementwise; zero
/// where grad u vanishes.
VectorField flux(const ScalarField& u, const ScalarField& theta, const MaterialModel& model);

/// (1/p') int (1 + c theta) |sigma|^p'. At a discrete optimum this equals
/// minus the primal energy.
double dual_value(const ScalarField& theta, const VectorField& sigma, const MaterialModel& model);

/// Maximizer of int (1 + c theta)|sigma|^p' over theta in [0,1] with
/// int theta <= kappa: fill elements in decreasing |sigma| order, ties by
/// element index, fractional on the last one.
ScalarField greedy_theta(const VectorField& sigma, const MaterialModel& model);

/// Inner maximum over theta of the flux functional, evaluated at sigma.
double dual_max_value(const VectorField& sigma, const MaterialModel& model);

/// max_i |int sigma . grad phi_i - <f_tilde, phi_i>| / max_i |<f_tilde, phi_i>|
/// over interior hat functions phi_i.
double div_residual(const VectorField& sigma, const ScalarField& f_tilde);

struct DualReport {
  double primal_value = 0.0;
  double dual_value = 0.0;
  /// |primal + dual| / max(1, |primal|)
  double gap = 0.0;
  /// |primal + dual| / |primal|
  double relative_gap = 0.0;
  /// Inner max over theta of the flux functional at sigma_hat (times 1/p').
  double dual_max_value = 0.0;
  double div_residual = 0.0;
  /// max over restarts of |sigma_k - sigma_hat|_{p'} / |sigma_hat|_{p'}
  double flux_spread = 0.0;
  /// max over restarts of |theta_k - theta_hat|_{L1}
  double theta_spread = 0.0;
  std::vector<double> restart_flux_spreads;
  std::vector<double> restart_theta_spreads;
  std::vector<VectorField> restart_fluxes;
};

/// Gap, divergence defect, and flux spread over `n_restarts` exact solves at
/// mu_hat started from random nodal values (seeded, reproducible).
DualReport dual_report(const DesignSolution& sol, int n_restarts, const SolveConfig& cfg,
                       std::uint64_t seed = 0, int threads = 1);

}  // namespace pdesign
