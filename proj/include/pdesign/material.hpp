#pragma once

#include "pdesign/fields.hpp"

namespace pdesign {

/// Two conductivities alpha < beta, exponent p and the budget kappa for the
/// scarce phase alpha.
struct MaterialModel {
  double alpha = 1.0;
  double beta = 2.0;
  double p = 2.0;
  double kappa = 0.5;

  /// (beta/alpha)^(1/(p-1)) - 1, the contrast in normalized form.
  double c() const;
  double p_conj() const { return p / (p - 1.0); }

  /// Checks 0 < alpha < beta, p > 1, kappa > 0. The kappa < |domain| check
  /// needs a mesh and happens at solve time.
  void validate() const;
};

struct Normalization {
  double c;
  ScalarField f_tilde;
};

/// c and the scaled load f / beta.
Normalization normalize(double alpha, double beta, double p, const ScalarField& f);

/// Effective conductivity of a rank-one laminate with alpha-fraction theta:
/// (theta alpha^(1/(1-p)) + (1-theta) beta^(1/(1-p)))^(1-p).
double homog_coeff(double theta, const MaterialModel& model);

/// Same coefficient in normalized form, beta / (1 + c theta)^(p-1).
double homog_coeff_normalized(double theta, const MaterialModel& model);

struct ValueSlope {
  double value;
  double slope;
};

struct ValueSlopeCurvature {
  double value;
  double slope;
  double curvature;
};

/// The theta-eliminated energy density for a fixed multiplier mu.
///
/// Slope s^(p-1) below mu, flat mu^(p-1) on [mu, (1+c)mu], and
/// s^(p-1)/(1+c)^(p-1) above. With eps > 0 both kinks are blended by monotone
/// cubic Hermite pieces of half-width w = eps*mu and eps*s is added to the
/// slope, so the second derivative is at least eps everywhere.
class IntegrandF {
 public:
  IntegrandF(double mu, double c, double p, double eps = 0.0);

  double mu() const { return mu_; }
  double c() const { return c_; }
  double p() const { return p_; }
  double eps() const { return eps_; }
  /// Half-width of the blending windows around the kinks (0 when eps = 0).
  double blend_width() const { return w_; }
  double upper_kink() const { return (1.0 + c_) * mu_; }

  ValueSlope value_and_slope(double s) const;
  ValueSlopeCurvature eval(double s) const;

  /// Unsmoothed pieces, regardless of eps.
  ValueSlopeCurvature exact(double s) const;

 private:
  ValueSlopeCurvature blended(double s, double a, double b) const;

  double mu_, c_, p_, eps_, w_;
  double scale_;  // (1+c)^(p-1)
  double offset1_ = 0.0, offset2_ = 0.0;
};

/// (1/p) int |grad u|^p / (1 + c theta)^(p-1) - <f_tilde, u>.
double primal_energy(const ScalarField& u, const ScalarField& theta, const ScalarField& f_tilde,
                     const MaterialModel& model);

}  // namespace pdesign
