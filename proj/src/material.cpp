#include "pdesign/material.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdesign/error.hpp"

namespace pdesign {

double MaterialModel::c() const { return std::pow(beta / alpha, 1.0 / (p - 1.0)) - 1.0; }

void MaterialModel::validate() const {
  if (!(alpha > 0.0)) throw InvalidInput("alpha: must be > 0");
  if (!(beta > 0.0)) throw InvalidInput("beta: must be > 0");
  if (!(alpha < beta)) throw InvalidInput("alpha: must satisfy alpha < beta");
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidInput("p: must be in (1, inf)");
  if (!(kappa > 0.0)) throw InvalidInput("kappa: must be > 0");
}

Normalization normalize(double alpha, double beta, double p, const ScalarField& f) {
  MaterialModel m{alpha, beta, p, 1.0};
  m.validate();
  return {m.c(), ScalarField(f.mesh(), f.storage(), f.values() / beta, f.unit())};
}

double homog_coeff(double theta, const MaterialModel& model) {
  const double e = 1.0 / (1.0 - model.p);
  return std::pow(theta * std::pow(model.alpha, e) + (1.0 - theta) * std::pow(model.beta, e),
                  1.0 - model.p);
}

double homog_coeff_normalized(double theta, const MaterialModel& model) {
  return model.beta / std::pow(1.0 + model.c() * theta, model.p - 1.0);
}

namespace {

struct Hermite {
  double a, h, y0, y1, d0, d1;

  double value(double x) const {
    const double t = (x - a) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 +
           (t3 - t2) * h * d1;
  }
  double derivative(double x) const {
    const double t = (x - a) / h;
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * h * d0 + (-6 * t2 + 6 * t) * y1 +
            (3 * t2 - 2 * t) * h * d1) /
           h;
  }
  double integral(double x) const {
    const double t = (x - a) / h;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    return h * ((t4 / 2 - t3 + t) * y0 + (t4 / 4 - 2 * t3 / 3 + t2 / 2) * h * d0 +
                (-t4 / 2 + t3) * y1 + (t4 / 4 - t3 / 3) * h * d1);
  }
};

}  // namespace

IntegrandF::IntegrandF(double mu, double c, double p, double eps)
    : mu_(mu), c_(c), p_(p), eps_(eps), w_(0.0), scale_(std::pow(1.0 + c, p - 1.0)) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidInput("IntegrandF: mu must be >= 0");
  if (!(c > 0.0)) throw InvalidInput("IntegrandF: c must be > 0");
  if (!(p > 1.0)) throw InvalidInput("IntegrandF: p must be > 1");
  if (!(eps >= 0.0)) throw InvalidInput("IntegrandF: eps must be >= 0");
  if (eps > 0.0 && mu > 0.0) {
    w_ = std::min({eps * mu, 0.25 * mu, 0.25 * c * mu});
    auto offset = [&](double k) {
      const double a = k - w_, b = k + w_;
      const auto lo = exact(a), hi = exact(b);
      const Hermite hm{a, b - a, lo.slope, hi.slope, lo.curvature, hi.curvature};
      return hm.integral(b) - (hi.value - lo.value);
    };
    offset1_ = offset(mu_);
    offset2_ = offset(upper_kink());
  }
}

ValueSlopeCurvature IntegrandF::exact(double s) const {
  const double p = p_;
  auto power_curv = [p](double x) {
    if (x > 0.0) return (p - 1.0) * std::pow(x, p - 2.0);
    if (p < 2.0) return std::numeric_limits<double>::infinity();
    return p == 2.0 ? 1.0 : 0.0;
  };
  if (s < mu_) return {std::pow(s, p) / p, std::pow(s, p - 1.0), power_curv(s)};
  const double k = upper_kink();
  const double mp1 = std::pow(mu_, p - 1.0);
  if (s <= k && mu_ > 0.0) return {mu_ * mp1 / p + mp1 * (s - mu_), mp1, 0.0};
  return {std::pow(s, p) / (p * scale_) + c_ * mu_ * mp1 * (p - 1.0) / p,
          std::pow(s, p - 1.0) / scale_, power_curv(s) / scale_};
}

ValueSlopeCurvature IntegrandF::blended(double s, double a, double b) const {
  const auto lo = exact(a), hi = exact(b);
  const Hermite hm{a, b - a, lo.slope, hi.slope, lo.curvature, hi.curvature};
  return {lo.value + hm.integral(s), hm.value(s), hm.derivative(s)};
}

ValueSlopeCurvature IntegrandF::eval(double s) const {
  if (eps_ == 0.0) return exact(s);
  ValueSlopeCurvature r;
  if (w_ == 0.0) {
    r = exact(s);
  } else {
    const double k = upper_kink();
    if (s < mu_ - w_) {
      r = exact(s);
    } else if (s <= mu_ + w_) {
      r = blended(s, mu_ - w_, mu_ + w_);
    } else if (s < k - w_) {
      r = exact(s);
      r.value += offset1_;
    } else if (s <= k + w_) {
      r = blended(s, k - w_, k + w_);
      r.value += offset1_;
    } else {
      r = exact(s);
      r.value += offset1_ + offset2_;
    }
  }
  r.value += 0.5 * eps_ * s * s;
  r.slope += eps_ * s;
  r.curvature += eps_;
  return r;
}

ValueSlope IntegrandF::value_and_slope(double s) const {
  if (!(s >= 0.0)) throw InvalidInput("IntegrandF: s must be >= 0");
  const auto r = eval(s);
  return {r.value, r.slope};
}

double primal_energy(const ScalarField& u, const ScalarField& theta, const ScalarField& f_tilde,
                     const MaterialModel& model) {
  if (!u.is_nodal() || theta.is_nodal()) throw InvalidInput("primal_energy: field storage mismatch");
  const Mesh& mesh = *u.mesh();
  const double c = model.c(), p = model.p;
  double e = 0.0;
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const double th = theta[t];
    if (!(th >= 0.0 && th <= 1.0)) throw InvalidInput("primal_energy: theta outside [0,1]");
    const double g = element_gradient(mesh, t, u.values()).norm();
    e += mesh.area(t) * std::pow(g, p) / std::pow(1.0 + c * th, p - 1.0);
  }
  return e / p - load_pairing(f_tilde, u);
}

}  // namespace pdesign
