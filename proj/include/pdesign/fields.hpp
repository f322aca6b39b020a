#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pdesign/geometry.hpp"

namespace pdesign {

using MeshPtr = std::shared_ptr<const Mesh>;

enum class Storage { nodal, element };

/// Real values per node or per element of one mesh.
class ScalarField {
 public:
  ScalarField(MeshPtr mesh, Storage storage, Eigen::VectorXd values, std::string unit = {},
              bool dirichlet = false);

  static ScalarField zeros(MeshPtr mesh, Storage storage, std::string unit = {});
  static ScalarField constant(MeshPtr mesh, Storage storage, double value, std::string unit = {});

  const MeshPtr& mesh() const { return mesh_; }
  Storage storage() const { return storage_; }
  bool is_nodal() const { return storage_ == Storage::nodal; }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](int i) const { return values_[i]; }
  int size() const { return static_cast<int>(values_.size()); }
  const std::string& unit() const { return unit_; }
  /// True for nodal fields carrying a homogeneous Dirichlet condition.
  bool dirichlet() const { return dirichlet_; }

 private:
  MeshPtr mesh_;
  Storage storage_;
  Eigen::VectorXd values_;
  std::string unit_;
  bool dirichlet_;
};

/// One constant 2D vector per element.
class VectorField {
 public:
  VectorField(MeshPtr mesh, std::vector<Point> values, std::string unit = {});

  const MeshPtr& mesh() const { return mesh_; }
  const std::vector<Point>& values() const { return values_; }
  const Point& operator[](int e) const { return values_[e]; }
  int size() const { return static_cast<int>(values_.size()); }
  const std::string& unit() const { return unit_; }

  /// Per-element |v|.
  ScalarField magnitude() const;

 private:
  MeshPtr mesh_;
  std::vector<Point> values_;
  std::string unit_;
};

ScalarField interpolate_nodal(MeshPtr mesh, const std::function<double(const Point&)>& fn,
                              std::string unit = {});
ScalarField interpolate_centroids(MeshPtr mesh, const std::function<double(const Point&)>& fn,
                                  std::string unit = {});

/// Element gradient of a nodal field.
VectorField gradient(const ScalarField& u);
Point element_gradient(const Mesh& mesh, int e, const Eigen::VectorXd& nodal);

/// Sum of value times area of a per-element field.
double integrate(const ScalarField& g);

/// Lumped load vector b_i = f(x_i) * (one third of the area of the star of i).
Eigen::VectorXd lumped_load(const ScalarField& f);
/// Discrete <f, u> with the lumped rule.
double load_pairing(const ScalarField& f, const ScalarField& u);

/// (sum_T area_T |v_T|^q)^(1/q).
double lq_norm(const VectorField& v, double q);

/// Area-weighted average of element values onto nodes.
Eigen::VectorXd recover_nodal(const Mesh& mesh, const Eigen::VectorXd& element_values);

/// `id,<name>` CSV with a `# field=<name> unit=<unit>` header line.
void write_field_csv(const ScalarField& f, const std::string& name,
                     const std::filesystem::path& path);
void write_field_csv(const VectorField& f, const std::string& name,
                     const std::filesystem::path& path);

}  // namespace pdesign
