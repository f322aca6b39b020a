#include "pdesign/lamination.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "pdesign/error.hpp"
#include "pdesign/io_util.hpp"

namespace pdesign {

double H_eval(double q, double r) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("H: q must be in [0,1]");
  const double fr = r - std::floor(r);
  return fr < q ? 1.0 : 0.0;
}

double G_eval(double q, double r) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("G: q must be in [0,1]");
  // int_0^r H = q floor(r) + min(frac(r), q), so G only sees the fractional part.
  const double fr = r - std::floor(r);
  return q * fr - std::min(fr, q);
}

namespace {

double bump(double t) {
  if (std::abs(t) >= 1.0) return 0.0;
  const double c = std::cos(0.5 * std::numbers::pi * t);
  return c * c;
}

}  // namespace

int LaminateSpec::cube_of(const Point& x) const {
  const int i = std::clamp(static_cast<int>(std::floor((x.x() - origin.x()) / delta)), 0, nx - 1);
  const int j = std::clamp(static_cast<int>(std::floor((x.y() - origin.y()) / delta)), 0, ny - 1);
  return j * nx + i;
}

Point LaminateSpec::cube_center(int i) const {
  return origin + delta * Point((i % nx) + 0.5, (i / nx) + 0.5);
}

double LaminateSpec::psi(int i, const Point& x) const {
  auto raw = [&](int k) {
    const Point t = (x - cube_center(k)) / delta;
    return bump(t.x()) * bump(t.y());
  };
  const int home = cube_of(x);
  const int hi = home % nx, hj = home / nx;
  double sum = 0.0;
  for (int dj = -1; dj <= 1; ++dj)
    for (int di = -1; di <= 1; ++di) {
      const int a = hi + di, b = hj + dj;
      if (a >= 0 && a < nx && b >= 0 && b < ny) sum += raw(b * nx + a);
    }
  return raw(i) / sum;
}

void LaminateSpec::validate() const {
  if (!(delta > 0.0)) throw InvalidInput("laminate: delta must be > 0");
  if (!(epsilon > 0.0)) throw InvalidInput("laminate: epsilon must be > 0");
  if (!(epsilon < delta)) throw InvalidInput("laminate: epsilon must be < delta");
  if (nx < 1 || ny < 1) throw InvalidInput("laminate: empty cube grid");
  const auto n = static_cast<std::size_t>(num_cubes());
  if (q.size() != n || xi.size() != n || zeta.size() != n)
    throw InvalidInput("laminate: per-cube data size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(q[i] >= 0.0 && q[i] <= 1.0)) throw InvalidInput("laminate: q_i outside [0,1]");
    if (std::abs(zeta[i].norm() - 1.0) > 1e-12) throw InvalidInput("laminate: zeta_i not a unit vector");
  }
}

LaminateSpec make_laminate_spec(const ScalarField& theta, const ScalarField& u, double delta,
                                double epsilon, const Point& fallback) {
  if (theta.is_nodal() || !u.is_nodal()) throw InvalidInput("laminate: need element theta and nodal u");
  if (theta.mesh() != u.mesh()) throw InvalidInput("laminate: fields on different meshes");
  if (!(fallback.norm() > 0.0)) throw InvalidInput("laminate: fallback direction must be nonzero");
  if (!(delta > 0.0)) throw InvalidInput("laminate: delta must be > 0");
  const Mesh& mesh = *u.mesh();
  Point lo = mesh.nodes().front(), hi = lo;
  for (const auto& x : mesh.nodes()) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  LaminateSpec spec;
  spec.origin = lo;
  spec.delta = delta;
  spec.epsilon = epsilon;
  spec.fallback = fallback.normalized();
  spec.nx = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / delta - 1e-9)));
  spec.ny = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / delta - 1e-9)));
  const int n = spec.num_cubes();
  spec.q.assign(n, 0.0);
  spec.xi.assign(n, Point::Zero());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const int i = spec.cube_of(mesh.centroid(e));
    spec.q[i] += mesh.area(e) * theta[e];
    spec.xi[i] += mesh.area(e) * element_gradient(mesh, e, u.values());
  }
  const double d2 = delta * delta;
  double xmax = 0.0;
  for (int i = 0; i < n; ++i) {
    spec.q[i] = std::clamp(spec.q[i] / d2, 0.0, 1.0);
    spec.xi[i] /= d2;
    xmax = std::max(xmax, spec.xi[i].norm());
  }
  spec.zeta.resize(n);
  for (int i = 0; i < n; ++i) {
    const double m = spec.xi[i].norm();
    spec.zeta[i] = m > 1e-12 * xmax && m > 0.0 ? Point(spec.xi[i] / m) : spec.fallback;
  }
  spec.validate();
  return spec;
}

double laminate_max_h(double epsilon) { return epsilon / 8.0; }

Laminate build_laminate(const LaminateSpec& spec, const ScalarField& u, const MaterialModel& model) {
  spec.validate();
  model.validate();
  if (!u.is_nodal()) throw InvalidInput("laminate: u must be nodal");
  const MeshPtr& mp = u.mesh();
  const Mesh& mesh = *mp;
  const double hmax = laminate_max_h(spec.epsilon);
  if (mesh.max_edge_length() > hmax)
    throw InvalidInput("laminate: mesh too coarse, max edge " + fmt_real(mesh.max_edge_length()) +
                       " > epsilon/8; need h <= " + fmt_real(hmax));
  const double eps = spec.epsilon;
  const double a = 1.0 / (1.0 - model.p);
  const double aa = std::pow(model.alpha, a), ba = std::pow(model.beta, a);
  std::vector<double> k(spec.num_cubes());
  for (int i = 0; i < spec.num_cubes(); ++i) k[i] = (ba - aa) / (aa * spec.q[i] + ba * (1.0 - spec.q[i]));

  Eigen::VectorXd chi(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Point x = mesh.centroid(e);
    const int i = spec.cube_of(x);
    chi[e] = H_eval(spec.q[i], spec.zeta[i].dot(x) / eps);
  }
  Eigen::VectorXd uc = u.values();
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    const Point& x = mesh.nodes()[v];
    const int home = spec.cube_of(x);
    const int hi = home % spec.nx, hj = home / spec.nx;
    double corr = 0.0;
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int ci = hi + di, cj = hj + dj;
        if (ci < 0 || ci >= spec.nx || cj < 0 || cj >= spec.ny) continue;
        const int i = cj * spec.nx + ci;
        const double w = spec.psi(i, x);
        if (w == 0.0) continue;
        corr += w * spec.xi[i].norm() * k[i] * G_eval(spec.q[i], spec.zeta[i].dot(x) / eps);
      }
    uc[v] += eps * corr;
  }
  return {ScalarField(mp, Storage::element, std::move(chi), "1"),
          // The corrector need not vanish on the boundary, so no Dirichlet tag.
          ScalarField(mp, Storage::nodal, std::move(uc), u.unit(), false)};
}

double laminate_energy(const ScalarField& chi, const ScalarField& u, const MaterialModel& model) {
  const Mesh& mesh = *u.mesh();
  double s = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double coef = model.alpha * chi[e] + model.beta * (1.0 - chi[e]);
    s += mesh.area(e) * coef * std::pow(element_gradient(mesh, e, u.values()).norm(), model.p);
  }
  return s;
}

double homogenized_energy(const ScalarField& theta, const ScalarField& u, const MaterialModel& model) {
  const Mesh& mesh = *u.mesh();
  double s = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e)
    s += mesh.area(e) * homog_coeff(theta[e], model) *
         std::pow(element_gradient(mesh, e, u.values()).norm(), model.p);
  return s;
}

Transferred refine_until(const ScalarField& theta, const ScalarField& u, double h_max) {
  if (!(h_max > 0.0)) throw InvalidInput("refine_until: h_max must be > 0");
  Transferred out{theta, u, 0};
  while (out.u.mesh()->max_edge_length() > h_max) {
    Refinement r = refine_tracked(*out.u.mesh());
    auto mp = std::make_shared<const Mesh>(std::move(r.mesh));
    Eigen::VectorXd uv(mp->num_nodes()), tv(mp->num_elements());
    for (int i = 0; i < mp->num_nodes(); ++i)
      uv[i] = 0.5 * (out.u[r.node_parents[i][0]] + out.u[r.node_parents[i][1]]);
    for (int e = 0; e < mp->num_elements(); ++e) tv[e] = out.theta[r.element_parent[e]];
    out.u = ScalarField(mp, Storage::nodal, std::move(uv), u.unit(), u.dirichlet());
    out.theta = ScalarField(mp, Storage::element, std::move(tv), theta.unit());
    ++out.levels;
  }
  return out;
}

std::vector<LaminateRow> laminate_table(const ScalarField& theta, const ScalarField& u,
                                        const MaterialModel& model,
                                        const std::vector<double>& deltas,
                                        const std::vector<double>& epsilons) {
  if (deltas.empty() || epsilons.empty()) throw InvalidInput("laminate: need at least one delta and one epsilon");
  std::vector<LaminateRow> rows;
  for (double eps : epsilons) {
    const Transferred fine = refine_until(theta, u, laminate_max_h(eps));
    const double hom = homogenized_energy(fine.theta, fine.u, model);
    for (double delta : deltas) {
      const LaminateSpec spec = make_laminate_spec(fine.theta, fine.u, delta, eps);
      const Laminate lam = build_laminate(spec, fine.u, model);
      LaminateRow row;
      row.delta = delta;
      row.epsilon = eps;
      row.laminate_energy = laminate_energy(lam.chi, lam.u_corr, model);
      row.homogenized_energy = hom;
      row.gap = std::abs(row.laminate_energy - hom) / (hom != 0.0 ? std::abs(hom) : 1.0);
      rows.push_back(row);
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const LaminateRow& a, const LaminateRow& b) {
    return a.delta != b.delta ? a.delta > b.delta : a.epsilon > b.epsilon;
  });
  return rows;
}

void write_laminate_table(const std::vector<LaminateRow>& rows, const std::filesystem::path& path) {
  std::ofstream f = open_output(path);
  f << "delta,epsilon,laminate_energy,homogenized_energy,gap\n";
  for (const auto& r : rows)
    f << fmt_real(r.delta) << ',' << fmt_real(r.epsilon) << ',' << fmt_real(r.laminate_energy) << ','
      << fmt_real(r.homogenized_energy) << ',' << fmt_real(r.gap) << '\n';
}

}  // namespace pdesign
