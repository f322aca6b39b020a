#include "pdesign/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "pdesign/error.hpp"

namespace pdesign {

RadialOracle::RadialOracle(double R, const MaterialModel& model, double f) {
  model.validate();
  if (!(R > 0.0)) throw InvalidInput("oracle: R must be > 0");
  if (!(f > 0.0)) throw InvalidInput("oracle: f must be a positive constant");
  const double area = std::numbers::pi * R * R;
  if (!(model.kappa < area)) throw InvalidInput("oracle: kappa must be < pi R^2");
  R_ = R;
  r0_ = std::sqrt(R * R - model.kappa / std::numbers::pi);
  ft_ = f / model.beta;
  t_hat_ = ft_ * r0_ / 2.0;
  p_ = model.p;
  c_ = model.c();
  mu_hat_ = std::pow(t_hat_, 1.0 / (p_ - 1.0));
}

double RadialOracle::sigma_abs(double r) const { return ft_ * r / 2.0; }

double RadialOracle::theta(double r) const { return r > r0_ ? 1.0 : 0.0; }

double RadialOracle::grad_abs(double r) const {
  return (1.0 + c_ * theta(r)) * std::pow(sigma_abs(r), 1.0 / (p_ - 1.0));
}

double RadialOracle::u(double r) const {
  // |grad u| = (1 + c theta) (f_tilde/2)^a r^a with a = 1/(p-1).
  const double a = 1.0 / (p_ - 1.0);
  const double k = std::pow(ft_ / 2.0, a) / (a + 1.0);
  auto seg = [&](double lo, double hi) { return k * (std::pow(hi, a + 1.0) - std::pow(lo, a + 1.0)); };
  r = std::min(r, R_);
  if (r >= r0_) return (1.0 + c_) * seg(r, R_);
  return (1.0 + c_) * seg(r0_, R_) + seg(r, r0_);
}

double RadialOracle::dual_energy() const {
  const double q = p_ / (p_ - 1.0);
  const double k = std::pow(ft_ / 2.0, q) / (q + 2.0);
  const double outer = std::pow(R_, q + 2.0), inner = std::pow(r0_, q + 2.0);
  return 2.0 * std::numbers::pi * k * (outer + c_ * (outer - inner)) / q;
}

ScalarField RadialOracle::u_field(const MeshPtr& mesh) const {
  Eigen::VectorXd v(mesh->num_nodes());
  for (int i = 0; i < mesh->num_nodes(); ++i)
    v[i] = mesh->is_boundary(i) ? 0.0 : u((mesh->nodes()[i] - center()).norm());
  return ScalarField(mesh, Storage::nodal, std::move(v), "u", true);
}

ScalarField RadialOracle::theta_field(const MeshPtr& mesh) const {
  Eigen::VectorXd v(mesh->num_elements());
  for (int e = 0; e < mesh->num_elements(); ++e) v[e] = theta((mesh->centroid(e) - center()).norm());
  return ScalarField(mesh, Storage::element, std::move(v), "1");
}

VectorField RadialOracle::sigma_field(const MeshPtr& mesh) const {
  // The flux points inward: u decreases toward the boundary.
  std::vector<Point> v(mesh->num_elements());
  for (int e = 0; e < mesh->num_elements(); ++e) v[e] = -(ft_ / 2.0) * (mesh->centroid(e) - center());
  return VectorField(mesh, std::move(v), "flux");
}

double RadialOracle::theta_l1_mismatch(const ScalarField& theta_h) const {
  const Mesh& mesh = *theta_h.mesh();
  double s = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e)
    s += mesh.area(e) * std::abs(theta_h[e] - theta((mesh.centroid(e) - center()).norm()));
  return s;
}

namespace {

// Nodal recovery of both components, then per-element gradients (rows d/dx, d/dy).
std::vector<Eigen::Matrix2d> recovered_jacobian(const Mesh& mesh, const std::vector<Point>& w) {
  const int ne = mesh.num_elements();
  Eigen::VectorXd w1(ne), w2(ne);
  for (int e = 0; e < ne; ++e) w1[e] = w[e].x(), w2[e] = w[e].y();
  const Eigen::VectorXd n1 = recover_nodal(mesh, w1), n2 = recover_nodal(mesh, w2);
  std::vector<Eigen::Matrix2d> J(ne);
  for (int e = 0; e < ne; ++e) {
    J[e].col(0) = element_gradient(mesh, e, n1);
    J[e].col(1) = element_gradient(mesh, e, n2);
  }
  return J;
}

std::vector<Point> power_field(const VectorField& sigma, double r_exp) {
  std::vector<Point> w(sigma.size());
  for (int e = 0; e < sigma.size(); ++e) {
    const double n = sigma[e].norm();
    w[e] = n > 0.0 ? Point(std::pow(n, r_exp) * sigma[e]) : Point::Zero();
  }
  return w;
}

double seminorm(const Mesh& mesh, const std::vector<Eigen::Matrix2d>& J) {
  double s = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) s += mesh.area(e) * J[e].squaredNorm();
  return std::sqrt(s);
}

}  // namespace

double flux_h1_seminorm(const VectorField& sigma, double r_exp) {
  if (!(r_exp > -0.5)) throw InvalidInput("flux_h1_seminorm: r must be > -1/2");
  const Mesh& mesh = *sigma.mesh();
  return seminorm(mesh, recovered_jacobian(mesh, power_field(sigma, r_exp)));
}

CommutatorReport theta_sigma_commutator(const ScalarField& theta, const VectorField& sigma,
                                        double t_hat) {
  if (theta.is_nodal()) throw InvalidInput("commutator: theta must be per-element");
  if (theta.mesh() != sigma.mesh()) throw InvalidInput("commutator: fields on different meshes");
  const Mesh& mesh = *sigma.mesh();
  const int ne = mesh.num_elements();
  const Eigen::VectorXd tn = recover_nodal(mesh, theta.values());
  Eigen::VectorXd mag(ne);
  for (int e = 0; e < ne; ++e) mag[e] = sigma[e].norm();
  const Eigen::VectorXd mn = recover_nodal(mesh, mag);
  double slope = 0.0;
  for (int e = 0; e < ne; ++e) slope = std::max(slope, element_gradient(mesh, e, mn).norm());

  CommutatorReport rep{ScalarField::zeros(sigma.mesh(), Storage::element)};
  rep.band_tol = 2.0 * mesh.max_edge_length() * slope;
  Eigen::VectorXd eta(ne);
  double tot = 0.0, off = 0.0, on = 0.0;
  for (int e = 0; e < ne; ++e) {
    const Point dt = element_gradient(mesh, e, tn);
    eta[e] = dt.x() * sigma[e].y() - dt.y() * sigma[e].x();
    const double w = mesh.area(e) * eta[e] * eta[e];
    tot += w;
    (std::abs(mag[e] - t_hat) <= rep.band_tol ? on : off) += w;
  }
  rep.eta = ScalarField(sigma.mesh(), Storage::element, std::move(eta));
  rep.l2_total = std::sqrt(tot);
  rep.l2_off_band = std::sqrt(off);
  rep.l2_on_band = std::sqrt(on);
  return rep;
}

double curl_residual(const VectorField& sigma, const MaterialModel& model) {
  const Mesh& mesh = *sigma.mesh();
  const auto J = recovered_jacobian(mesh, power_field(sigma, model.p_conj() - 2.0));
  double s = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    // J(i, j) = d_i w_j; curl w = d_x w_y - d_y w_x.
    const double curl = J[e](0, 1) - J[e](1, 0);
    s += mesh.area(e) * curl * curl;
  }
  const double semi = seminorm(mesh, J);
  return semi > 0.0 ? std::sqrt(s) / semi : std::sqrt(s);
}

double intermediate_measure(const ScalarField& theta, double band) {
  if (!(band > 0.0 && band < 0.5)) throw InvalidInput("intermediate_measure: band must be in (0,1/2)");
  if (theta.is_nodal()) throw InvalidInput("intermediate_measure: theta must be per-element");
  const Mesh& mesh = *theta.mesh();
  double s = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e)
    if (theta[e] > band && theta[e] < 1.0 - band) s += mesh.area(e);
  return s;
}

AlignmentReport boundary_flux_alignment(const VectorField& sigma) {
  const Mesh& mesh = *sigma.mesh();
  std::map<std::pair<int, int>, int> owner;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.elements()[e];
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      owner[{std::min(a, b), std::max(a, b)}] = e;
    }
  }
  AlignmentReport rep;
  double wsum = 0.0, acc = 0.0;
  std::vector<char> seen(mesh.num_elements(), 0);
  for (const auto& be : mesh.boundary_edges()) {
    const int e = owner.at({std::min(be[0], be[1]), std::max(be[0], be[1])});
    const double n = sigma[e].norm();
    if (n == 0.0 || seen[e]) continue;
    seen[e] = 1;
    const Point t = (mesh.nodes()[be[1]] - mesh.nodes()[be[0]]).normalized();
    const double ratio = std::abs(sigma[e].dot(t)) / n;
    acc += mesh.area(e) * ratio;
    wsum += mesh.area(e);
    rep.max = std::max(rep.max, ratio);
    ++rep.elements;
  }
  rep.mean = wsum > 0.0 ? acc / wsum : 0.0;
  return rep;
}

int interface_violations(const ScalarField& theta, const VectorField& sigma, double t_hat,
                         double band, double tol) {
  int n = 0;
  for (int e = 0; e < sigma.size(); ++e) {
    const double s = sigma[e].norm();
    if (s > t_hat * (1.0 + band) && theta[e] < 1.0 - tol) ++n;
    if (s < t_hat * (1.0 - band) && theta[e] > tol) ++n;
  }
  return n;
}

double max_gradient_norm(const ScalarField& u) {
  const Mesh& mesh = *u.mesh();
  double m = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e)
    m = std::max(m, element_gradient(mesh, e, u.values()).norm());
  return m;
}

std::string boundary_caveat() {
  return "boundary is polygonal; regularity results assume a C^{1,1} boundary, so boundary "
         "quantities are trends only, and hypotheses on f are not verified";
}

}  // namespace pdesign
