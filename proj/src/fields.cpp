#include "pdesign/fields.hpp"

#include <cmath>

#include "pdesign/error.hpp"
#include "pdesign/io_util.hpp"

namespace pdesign {

namespace {

int expected_size(const Mesh& mesh, Storage s) {
  return s == Storage::nodal ? mesh.num_nodes() : mesh.num_elements();
}

}  // namespace

ScalarField::ScalarField(MeshPtr mesh, Storage storage, Eigen::VectorXd values, std::string unit,
                         bool dirichlet)
    : mesh_(std::move(mesh)),
      storage_(storage),
      values_(std::move(values)),
      unit_(std::move(unit)),
      dirichlet_(dirichlet) {
  if (!mesh_) throw InvalidInput("field: null mesh");
  if (values_.size() != expected_size(*mesh_, storage_))
    throw InvalidInput("field: value count does not match storage kind");
  if (dirichlet_) {
    if (storage_ != Storage::nodal) throw InvalidInput("field: Dirichlet tag needs nodal storage");
    for (int i = 0; i < mesh_->num_nodes(); ++i)
      if (mesh_->is_boundary(i) && values_[i] != 0.0)
        throw InvalidInput("field: Dirichlet field must vanish on boundary nodes");
  }
}

ScalarField ScalarField::zeros(MeshPtr mesh, Storage storage, std::string unit) {
  return constant(std::move(mesh), storage, 0.0, std::move(unit));
}

ScalarField ScalarField::constant(MeshPtr mesh, Storage storage, double value, std::string unit) {
  const int n = expected_size(*mesh, storage);
  return ScalarField(std::move(mesh), storage, Eigen::VectorXd::Constant(n, value), std::move(unit));
}

VectorField::VectorField(MeshPtr mesh, std::vector<Point> values, std::string unit)
    : mesh_(std::move(mesh)), values_(std::move(values)), unit_(std::move(unit)) {
  if (!mesh_) throw InvalidInput("field: null mesh");
  if (static_cast<int>(values_.size()) != mesh_->num_elements())
    throw InvalidInput("vector field: need one value per element");
}

ScalarField VectorField::magnitude() const {
  Eigen::VectorXd m(size());
  for (int e = 0; e < size(); ++e) m[e] = values_[e].norm();
  return ScalarField(mesh_, Storage::element, std::move(m), unit_);
}

ScalarField interpolate_nodal(MeshPtr mesh, const std::function<double(const Point&)>& fn,
                              std::string unit) {
  Eigen::VectorXd v(mesh->num_nodes());
  for (int i = 0; i < mesh->num_nodes(); ++i) v[i] = fn(mesh->nodes()[i]);
  return ScalarField(std::move(mesh), Storage::nodal, std::move(v), std::move(unit));
}

ScalarField interpolate_centroids(MeshPtr mesh, const std::function<double(const Point&)>& fn,
                                  std::string unit) {
  Eigen::VectorXd v(mesh->num_elements());
  for (int e = 0; e < mesh->num_elements(); ++e) v[e] = fn(mesh->centroid(e));
  return ScalarField(std::move(mesh), Storage::element, std::move(v), std::move(unit));
}

Point element_gradient(const Mesh& mesh, int e, const Eigen::VectorXd& nodal) {
  const auto& t = mesh.elements()[e];
  const auto& g = mesh.grad_map(e);
  return nodal[t[0]] * g[0] + nodal[t[1]] * g[1] + nodal[t[2]] * g[2];
}

VectorField gradient(const ScalarField& u) {
  if (!u.is_nodal()) throw InvalidInput("gradient: field must be nodal");
  const Mesh& mesh = *u.mesh();
  std::vector<Point> g(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) g[e] = element_gradient(mesh, e, u.values());
  return VectorField(u.mesh(), std::move(g));
}

double integrate(const ScalarField& g) {
  if (g.is_nodal()) throw InvalidInput("integrate: field must be per-element");
  const auto areas = g.mesh()->areas();
  double s = 0.0;
  for (int e = 0; e < g.size(); ++e) s += g[e] * areas[e];
  return s;
}

Eigen::VectorXd lumped_load(const ScalarField& f) {
  if (!f.is_nodal()) throw InvalidInput("lumped_load: load must be nodal");
  const Mesh& mesh = *f.mesh();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int v : mesh.elements()[e]) b[v] += mesh.area(e) / 3.0;
  return b.cwiseProduct(f.values());
}

double load_pairing(const ScalarField& f, const ScalarField& u) {
  if (!u.is_nodal()) throw InvalidInput("load_pairing: state must be nodal");
  if (f.mesh() != u.mesh()) throw InvalidInput("load_pairing: fields live on different meshes");
  return lumped_load(f).dot(u.values());
}

double lq_norm(const VectorField& v, double q) {
  const auto areas = v.mesh()->areas();
  double s = 0.0;
  for (int e = 0; e < v.size(); ++e) s += areas[e] * std::pow(v[e].norm(), q);
  return std::pow(s, 1.0 / q);
}

Eigen::VectorXd recover_nodal(const Mesh& mesh, const Eigen::VectorXd& element_values) {
  Eigen::VectorXd num = Eigen::VectorXd::Zero(mesh.num_nodes());
  Eigen::VectorXd den = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int v : mesh.elements()[e]) {
      num[v] += mesh.area(e) * element_values[e];
      den[v] += mesh.area(e);
    }
  for (int i = 0; i < mesh.num_nodes(); ++i)
    if (den[i] > 0) num[i] /= den[i];
  return num;
}

void write_field_csv(const ScalarField& f, const std::string& name,
                     const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "# field=" << name << " unit=" << f.unit() << '\n';
  out << (f.is_nodal() ? "node_id," : "element_id,") << name << '\n';
  for (int i = 0; i < f.size(); ++i) out << i << ',' << fmt_real(f[i]) << '\n';
}

void write_field_csv(const VectorField& f, const std::string& name,
                     const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "# field=" << name << " unit=" << f.unit() << '\n';
  out << "element_id," << name << "_x," << name << "_y\n";
  for (int i = 0; i < f.size(); ++i)
    out << i << ',' << fmt_real(f[i].x()) << ',' << fmt_real(f[i].y()) << '\n';
}

}  // namespace pdesign
