#pragma once

#include <filesystem>
#include <vector>

#include "pdesign/fields.hpp"
#include "pdesign/geometry.hpp"
#include "pdesign/material.hpp"

namespace pdesign {

/// Layer indicator: 1 if frac(r) < q, else 0. Period 1 in r.
double H_eval(double q, double r);
/// q r - int_0^r H(q, s) ds. Vanishes at integers; q(q-1) <= G <= 0.
double G_eval(double q, double r);

/// Square cells of side delta tiling the bounding box of the mesh, with the
/// per-cell volume fraction q, mean gradient xi and unit layer normal zeta.
struct LaminateSpec {
  Point origin = Point::Zero();
  int nx = 0, ny = 0;
  double delta = 0.0;
  double epsilon = 0.0;
  Point fallback = Point(1.0, 0.0);
  std::vector<double> q;
  std::vector<Point> xi;
  std::vector<Point> zeta;

  int num_cubes() const { return nx * ny; }
  /// Cell containing x (clamped to the grid).
  int cube_of(const Point& x) const;
  Point cube_center(int i) const;
  /// Normalized tensor-product cos^2 bump of cell i at x.
  double psi(int i, const Point& x) const;
  void validate() const;
};

/// q_i = (1/delta^2) int_{Q_i} theta and xi_i = (1/delta^2) int_{Q_i} grad u,
/// with elements assigned to cells by centroid. zeta_i = xi_i/|xi_i|, or the
/// fallback when |xi_i| <= 1e-12 max|xi|.
LaminateSpec make_laminate_spec(const ScalarField& theta, const ScalarField& u, double delta,
                                double epsilon, const Point& fallback = Point(1.0, 0.0));

struct Laminate {
  ScalarField chi;     // per element, 0 or 1
  ScalarField u_corr;  // nodal
};

/// chi = H(q_i, zeta_i.x/eps) at centroids and
/// u_corr = u + eps sum_i psi_i |xi_i| k_i G(q_i, zeta_i.x/eps), where
/// k_i = (beta^a - alpha^a)/(alpha^a q_i + beta^a (1 - q_i)), a = 1/(1-p).
/// Throws InvalidInput when the mesh is coarser than eps/8.
Laminate build_laminate(const LaminateSpec& spec, const ScalarField& u, const MaterialModel& model);

/// Largest mesh edge build_laminate accepts for a given period.
double laminate_max_h(double epsilon);

/// int (alpha chi + beta (1 - chi)) |grad u|^p
double laminate_energy(const ScalarField& chi, const ScalarField& u, const MaterialModel& model);
/// int homog_coeff(theta) |grad u|^p
double homogenized_energy(const ScalarField& theta, const ScalarField& u, const MaterialModel& model);

/// (theta, u) carried to a nested refinement of their mesh: u by linear
/// interpolation at midpoints, theta inherited from the parent element.
struct Transferred {
  ScalarField theta;
  ScalarField u;
  int levels = 0;
};
Transferred refine_until(const ScalarField& theta, const ScalarField& u, double h_max);

struct LaminateRow {
  double delta = 0.0;
  double epsilon = 0.0;
  double laminate_energy = 0.0;
  double homogenized_energy = 0.0;
  /// |laminate - homogenized| / |homogenized|
  double gap = 0.0;
};

/// Double table over delta and epsilon for a design (theta, u).
std::vector<LaminateRow> laminate_table(const ScalarField& theta, const ScalarField& u,
                                        const MaterialModel& model,
                                        const std::vector<double>& deltas,
                                        const std::vector<double>& epsilons);

void write_laminate_table(const std::vector<LaminateRow>& rows, const std::filesystem::path& path);

}  // namespace pdesign
