#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace pdesign {

using Point = Eigen::Vector2d;

struct Rectangle {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
};

struct Disk {
  double cx = 0.0, cy = 0.0, radius = 1.0;
};

/// Simple counterclockwise polygon.
struct Polygon {
  std::vector<Point> vertices;
};

/// Domain shape plus requested mesh size.
///
/// For rectangles `target_h` is the grid spacing (legs of the right
/// triangles); for disks it is the ring spacing; for polygons it bounds the
/// longest edge after uniform refinement.
struct DomainSpec {
  using Shape = std::variant<Rectangle, Disk, Polygon>;
  Shape shape;
  double target_h = 0.1;

  /// Exact area of the continuous shape.
  double area() const;
  void validate() const;
};

/// Gradients of the three P1 basis functions of one triangle.
using GradMap = std::array<Point, 3>;

/// Immutable conforming triangulation with P1 gradient operators.
class Mesh {
 public:
  /// Builds the derived data (areas, gradient maps, boundary flags) from raw
  /// connectivity. Clockwise triangles are flipped; zero-area ones rejected.
  Mesh(std::vector<Point> nodes, std::vector<std::array<int, 3>> elements,
       std::optional<Disk> circle = std::nullopt);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_elements() const { return static_cast<int>(elements_.size()); }

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<std::array<int, 3>>& elements() const { return elements_; }
  const std::vector<char>& boundary() const { return boundary_; }
  bool is_boundary(int node) const { return boundary_[node] != 0; }
  std::span<const double> areas() const { return areas_; }
  double area(int e) const { return areas_[e]; }
  const GradMap& grad_map(int e) const { return grad_maps_[e]; }
  Point centroid(int e) const;

  /// Circle the boundary approximates, for disk meshes.
  const std::optional<Disk>& circle() const { return circle_; }

  double total_area() const;
  double max_edge_length() const;
  double min_edge_length() const;

  /// Boundary edges as node pairs (each belongs to exactly one element).
  std::vector<std::array<int, 2>> boundary_edges() const;

 private:
  std::vector<Point> nodes_;
  std::vector<std::array<int, 3>> elements_;
  std::vector<char> boundary_;
  std::vector<double> areas_;
  std::vector<GradMap> grad_maps_;
  std::optional<Disk> circle_;
};

Mesh build_mesh(const DomainSpec& domain);

/// Red refinement: every triangle is split into four similar ones. Boundary
/// midpoints of disk meshes are pushed back onto the circle.
Mesh refine(const Mesh& mesh);

struct Refinement {
  Mesh mesh;
  /// Coarse element containing each fine element.
  std::vector<int> element_parent;
  /// Coarse endpoints of the edge each fine node bisects ({i, i} for old nodes).
  std::vector<std::array<int, 2>> node_parents;
};
Refinement refine_tracked(const Mesh& mesh);

/// Writes `id,x,y,boundary_flag` and `id,n0,n1,n2,area` tables.
void write_mesh_csv(const Mesh& mesh, const std::filesystem::path& nodes_csv,
                    const std::filesystem::path& elements_csv);

}  // namespace pdesign
