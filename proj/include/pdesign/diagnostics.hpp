#pragma once

#include <string>

#include "pdesign/fields.hpp"
#include "pdesign/material.hpp"

namespace pdesign {

/// Closed-form optimal design on the disk of radius R with constant load f.
///
/// The flux is radial with |sigma|(r) = f_tilde r / 2; the good material fills
/// the outer annulus r > r0 where |{theta = 1}| = kappa.
class RadialOracle {
 public:
  RadialOracle(double R, const MaterialModel& model, double f);

  /// Center of the disk (defaults to the origin).
  void set_center(double cx, double cy) { cx_ = cx, cy_ = cy; }
  Point center() const { return {cx_, cy_}; }

  double R() const { return R_; }
  double r0() const { return r0_; }
  double f_tilde() const { return ft_; }
  /// Flux level of the interface, t_hat = mu_hat^(p-1).
  double sigma_threshold() const { return t_hat_; }
  double mu_hat() const { return mu_hat_; }

  double sigma_abs(double r) const;
  double theta(double r) const;
  double grad_abs(double r) const;
  /// u_hat(r), integrated in closed form inward from u(R) = 0.
  double u(double r) const;

  /// (1/p') int (1 + c theta) |sigma|^p'; equals minus the primal optimum.
  double dual_energy() const;
  double primal_energy() const { return -dual_energy(); }

  /// Oracle fields sampled on a mesh: u at nodes, the rest at centroids.
  ScalarField u_field(const MeshPtr& mesh) const;
  ScalarField theta_field(const MeshPtr& mesh) const;
  VectorField sigma_field(const MeshPtr& mesh) const;

  /// int |theta - 1{r > r0}| with the indicator taken at centroids.
  double theta_l1_mismatch(const ScalarField& theta) const;

 private:
  double R_, r0_, ft_, t_hat_, mu_hat_, c_, p_;
  double cx_ = 0.0, cy_ = 0.0;
};

/// Discrete H1 seminorm of |sigma|^r sigma after area-weighted nodal recovery.
double flux_h1_seminorm(const VectorField& sigma, double r_exp);

struct CommutatorReport {
  ScalarField eta;  // d1 theta sigma2 - d2 theta sigma1, per element
  double l2_total = 0.0;
  double l2_off_band = 0.0;
  double l2_on_band = 0.0;
  /// Half width of the band | |sigma| - t_hat | <= band_tol.
  double band_tol = 0.0;
};

/// theta is recovered to nodes before differentiation. The band width is
/// 2 h max|grad |sigma|| with h the longest mesh edge.
CommutatorReport theta_sigma_commutator(const ScalarField& theta, const VectorField& sigma,
                                        double t_hat);

/// ||curl w|| / |w|_H1 for w = |sigma|^(p'-2) sigma recovered to nodes.
double curl_residual(const VectorField& sigma, const MaterialModel& model);

/// Area of elements with band < theta < 1 - band.
double intermediate_measure(const ScalarField& theta, double band);

struct AlignmentReport {
  /// Area-weighted mean and max of |sigma . t| / |sigma| over elements with
  /// a boundary edge, t the unit tangent of that edge.
  double mean = 0.0;
  double max = 0.0;
  int elements = 0;
};
AlignmentReport boundary_flux_alignment(const VectorField& sigma);

/// Elements whose theta contradicts their flux level: |sigma| > t_hat (1 + band)
/// with theta < 1 - tol, or |sigma| < t_hat (1 - band) with theta > tol.
int interface_violations(const ScalarField& theta, const VectorField& sigma, double t_hat,
                         double band, double tol);

double max_gradient_norm(const ScalarField& u);

/// Text attached to every report computed on a polygonal boundary.
std::string boundary_caveat();

}  // namespace pdesign
