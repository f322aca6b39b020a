#include "pdesign/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include "pdesign/error.hpp"
#include "pdesign/io_util.hpp"

namespace pdesign {

namespace {

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

double polygon_area(const std::vector<Point>& v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point& p = v[i];
    const Point& q = v[(i + 1) % v.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

bool segments_cross(const Point& a, const Point& b, const Point& c, const Point& d) {
  const double d1 = signed_area(c, d, a), d2 = signed_area(c, d, b);
  const double d3 = signed_area(a, b, c), d4 = signed_area(a, b, d);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
         d4 != 0;
}

int cells_for(double length, double h) {
  return std::max(1, static_cast<int>(std::ceil(length / h - 1e-9)));
}

Mesh mesh_rectangle(const Rectangle& r, double h) {
  const int nx = cells_for(r.x1 - r.x0, h);
  const int ny = cells_for(r.y1 - r.y0, h);
  std::vector<Point> nodes;
  nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      // Exact endpoints so the area identity holds to round-off.
      const double x = i == nx ? r.x1 : r.x0 + (r.x1 - r.x0) * i / nx;
      const double y = j == ny ? r.y1 : r.y0 + (r.y1 - r.y0) * j / ny;
      nodes.emplace_back(x, y);
    }
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<std::array<int, 3>> elems;
  elems.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      elems.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      elems.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return Mesh(std::move(nodes), std::move(elems));
}

Mesh mesh_disk(const Disk& d, double h) {
  const int rings = cells_for(d.radius, h);
  std::vector<Point> nodes;
  nodes.emplace_back(d.cx, d.cy);
  auto ring_start = [](int k) { return 1 + 3 * k * (k - 1); };
  for (int k = 1; k <= rings; ++k) {
    const double r = k == rings ? d.radius : d.radius * k / rings;
    const int m = 6 * k;
    for (int j = 0; j < m; ++j) {
      const double a = 2.0 * std::numbers::pi * j / m;
      nodes.emplace_back(d.cx + r * std::cos(a), d.cy + r * std::sin(a));
    }
  }
  std::vector<std::array<int, 3>> elems;
  for (int j = 0; j < 6; ++j) elems.push_back({0, ring_start(1) + j, ring_start(1) + (j + 1) % 6});
  for (int k = 2; k <= rings; ++k) {
    const int mi = 6 * (k - 1), mo = 6 * k;
    const int si = ring_start(k - 1), so = ring_start(k);
    int i = 0, j = 0;
    // Zip the two rings together in order of angle.
    while (i < mi || j < mo) {
      const double next_in = (i < mi) ? static_cast<double>(i + 1) / mi : 2.0;
      const double next_out = (j < mo) ? static_cast<double>(j + 1) / mo : 2.0;
      if (next_out <= next_in) {
        elems.push_back({si + i % mi, so + j % mo, so + (j + 1) % mo});
        ++j;
      } else {
        elems.push_back({si + i % mi, so + j % mo, si + (i + 1) % mi});
        ++i;
      }
    }
  }
  return Mesh(std::move(nodes), std::move(elems), d);
}

Mesh mesh_polygon(const Polygon& poly, double h) {
  // Ear clipping, then uniform refinement down to the requested edge length.
  std::vector<int> idx(poly.vertices.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::vector<std::array<int, 3>> elems;
  const auto& v = poly.vertices;
  while (idx.size() > 3) {
    bool clipped = false;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const int a = idx[(k + idx.size() - 1) % idx.size()], b = idx[k], c = idx[(k + 1) % idx.size()];
      if (signed_area(v[a], v[b], v[c]) <= 0) continue;
      bool inside = false;
      for (int o : idx) {
        if (o == a || o == b || o == c) continue;
        if (signed_area(v[a], v[b], v[o]) >= 0 && signed_area(v[b], v[c], v[o]) >= 0 &&
            signed_area(v[c], v[a], v[o]) >= 0) {
          inside = true;
          break;
        }
      }
      if (inside) continue;
      elems.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k));
      clipped = true;
      break;
    }
    if (!clipped) throw InvalidInput("polygon: ear clipping failed (not simple?)");
  }
  elems.push_back({idx[0], idx[1], idx[2]});
  Mesh mesh(v, std::move(elems));
  while (mesh.max_edge_length() > h) mesh = refine(mesh);
  return mesh;
}

}  // namespace

double DomainSpec::area() const {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Rectangle>) {
          return (s.x1 - s.x0) * (s.y1 - s.y0);
        } else if constexpr (std::is_same_v<T, Disk>) {
          return std::numbers::pi * s.radius * s.radius;
        } else {
          return polygon_area(s.vertices);
        }
      },
      shape);
}

void DomainSpec::validate() const {
  if (!(target_h > 0.0) || !std::isfinite(target_h)) throw InvalidInput("domain: target_h must be > 0");
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Rectangle>) {
          if (!(s.x0 < s.x1) || !(s.y0 < s.y1)) throw InvalidInput("rectangle: need x0<x1 and y0<y1");
        } else if constexpr (std::is_same_v<T, Disk>) {
          if (!(s.radius > 0.0)) throw InvalidInput("disk: radius must be > 0");
        } else {
          const auto& v = s.vertices;
          if (v.size() < 3) throw InvalidInput("polygon: need at least 3 vertices");
          if (!(polygon_area(v) > 0.0))
            throw InvalidInput("polygon: vertices must be counterclockwise with positive area");
          const std::size_t n = v.size();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
              if (segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]))
                throw InvalidInput("polygon: edges intersect");
        }
      },
      shape);
}

Mesh::Mesh(std::vector<Point> nodes, std::vector<std::array<int, 3>> elements,
           std::optional<Disk> circle)
    : nodes_(std::move(nodes)), elements_(std::move(elements)), circle_(circle) {
  const int nn = num_nodes();
  areas_.resize(elements_.size());
  grad_maps_.resize(elements_.size());
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    auto& t = elements_[e];
    for (int v : t)
      if (v < 0 || v >= nn) throw InvalidInput("mesh: element references missing node");
    double a = signed_area(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]);
    if (a < 0) {
      std::swap(t[1], t[2]);
      a = -a;
    }
    if (!(a > 0.0)) throw InvalidInput("mesh: degenerate element with zero area");
    areas_[e] = a;
    const Point& p0 = nodes_[t[0]];
    const Point& p1 = nodes_[t[1]];
    const Point& p2 = nodes_[t[2]];
    // grad(lambda_i) = rot90(opposite edge, counterclockwise) / (2 area)
    auto rot = [a](const Point& from, const Point& to) -> Point {
      return Point(-(to.y() - from.y()), to.x() - from.x()) / (2.0 * a);
    };
    grad_maps_[e] = {rot(p1, p2), rot(p2, p0), rot(p0, p1)};
  }
  boundary_.assign(nodes_.size(), 0);
  for (const auto& edge : boundary_edges()) {
    boundary_[edge[0]] = 1;
    boundary_[edge[1]] = 1;
  }
}

Point Mesh::centroid(int e) const {
  const auto& t = elements_[e];
  return (nodes_[t[0]] + nodes_[t[1]] + nodes_[t[2]]) / 3.0;
}

double Mesh::total_area() const {
  double s = 0.0;
  for (double a : areas_) s += a;
  return s;
}

double Mesh::max_edge_length() const {
  double m = 0.0;
  for (const auto& t : elements_)
    for (int k = 0; k < 3; ++k) m = std::max(m, (nodes_[t[k]] - nodes_[t[(k + 1) % 3]]).norm());
  return m;
}

double Mesh::min_edge_length() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& t : elements_)
    for (int k = 0; k < 3; ++k) m = std::min(m, (nodes_[t[k]] - nodes_[t[(k + 1) % 3]]).norm());
  return m;
}

std::vector<std::array<int, 2>> Mesh::boundary_edges() const {
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : elements_)
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  std::vector<std::array<int, 2>> out;
  // Keep the element's orientation so boundary edges run counterclockwise.
  for (const auto& t : elements_)
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      if (count[{std::min(a, b), std::max(a, b)}] == 1) out.push_back({a, b});
    }
  return out;
}

Mesh build_mesh(const DomainSpec& domain) {
  domain.validate();
  return std::visit(
      [&](const auto& s) -> Mesh {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Rectangle>) {
          return mesh_rectangle(s, domain.target_h);
        } else if constexpr (std::is_same_v<T, Disk>) {
          return mesh_disk(s, domain.target_h);
        } else {
          return mesh_polygon(s, domain.target_h);
        }
      },
      domain.shape);
}

Mesh refine(const Mesh& mesh) { return refine_tracked(mesh).mesh; }

Refinement refine_tracked(const Mesh& mesh) {
  std::vector<Point> nodes = mesh.nodes();
  std::vector<std::array<int, 2>> node_parents;
  node_parents.reserve(nodes.size() * 4);
  for (int i = 0; i < mesh.num_nodes(); ++i) node_parents.push_back({i, i});
  std::map<std::pair<int, int>, int> midpoint;
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : mesh.elements())
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      ++edge_count[{std::min(a, b), std::max(a, b)}];
    }
  const auto& circle = mesh.circle();
  auto mid = [&](int a, int b) {
    const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
    if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
    Point m = 0.5 * (nodes[a] + nodes[b]);
    if (circle && edge_count[key] == 1) {
      const Point c(circle->cx, circle->cy);
      m = c + circle->radius * (m - c).normalized();
    }
    nodes.push_back(m);
    node_parents.push_back({a, b});
    const int id = static_cast<int>(nodes.size()) - 1;
    midpoint.emplace(key, id);
    return id;
  };
  std::vector<std::array<int, 3>> elems;
  elems.reserve(mesh.elements().size() * 4);
  for (const auto& t : mesh.elements()) {
    const int m01 = mid(t[0], t[1]), m12 = mid(t[1], t[2]), m20 = mid(t[2], t[0]);
    elems.push_back({t[0], m01, m20});
    elems.push_back({m01, t[1], m12});
    elems.push_back({m20, m12, t[2]});
    elems.push_back({m01, m12, m20});
  }
  std::vector<int> parent(elems.size());
  for (std::size_t e = 0; e < parent.size(); ++e) parent[e] = static_cast<int>(e / 4);
  return {Mesh(std::move(nodes), std::move(elems), circle), std::move(parent),
          std::move(node_parents)};
}

void write_mesh_csv(const Mesh& mesh, const std::filesystem::path& nodes_csv,
                    const std::filesystem::path& elements_csv) {
  std::ofstream nf = open_output(nodes_csv);
  nf << "id,x,y,boundary_flag\n";
  for (int i = 0; i < mesh.num_nodes(); ++i)
    nf << i << ',' << fmt_real(mesh.nodes()[i].x()) << ',' << fmt_real(mesh.nodes()[i].y()) << ','
       << (mesh.is_boundary(i) ? 1 : 0) << '\n';
  std::ofstream ef = open_output(elements_csv);
  ef << "id,n0,n1,n2,area\n";
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.elements()[e];
    ef << e << ',' << t[0] << ',' << t[1] << ',' << t[2] << ',' << fmt_real(mesh.area(e)) << '\n';
  }
}

}  // namespace pdesign
