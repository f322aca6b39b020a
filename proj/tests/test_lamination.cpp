#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "pdesign/error.hpp"
#include "pdesign/lamination.hpp"
#include "support.hpp"

using namespace pdesign;

namespace {

MeshPtr square(double side, int n) {
  return std::make_shared<const Mesh>(build_mesh({Rectangle{0, side, 0, side}, side / n}));
}

ScalarField affine(const MeshPtr& m, const Point& xi) {
  return interpolate_nodal(m, [&](const Point& x) { return xi.dot(x); });
}

}  // namespace

TEST_SUITE("lamination") {

TEST_CASE("H examples and periodicity") {
  CHECK(H_eval(0.5, 0.25) == 1.0);
  CHECK(H_eval(0.5, 0.75) == 0.0);
  CHECK(H_eval(0.0, 0.3) == 0.0);
  CHECK(H_eval(1.0, 0.3) == 1.0);
  CHECK(H_eval(0.3, -0.8) == 1.0);  // frac(-0.8) = 0.2
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> Q(0, 1), R(-20, 20);
  for (int i = 0; i < 5000; ++i) {
    const double q = Q(rng), r = R(rng);
    CHECK(H_eval(q, r + 1) == H_eval(q, r));
  }
  CHECK_THROWS_AS(H_eval(1.5, 0), InvalidInput);
}

TEST_CASE("G stays within its bounds and vanishes at integers") {
  CHECK(G_eval(0.3, 0) == 0.0);
  CHECK(G_eval(0.5, 0.5) == doctest::Approx(-0.25));
  CHECK(G_eval(0.5, 1) == doctest::Approx(0.0).epsilon(1e-15));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> Q(0, 1), R(-20, 20);
  for (int i = 0; i < 5000; ++i) {
    const double q = Q(rng), r = R(rng);
    const double g = G_eval(q, r);
    CHECK(g <= 1e-12);
    CHECK(g >= q * (q - 1) - 1e-12);
    CHECK(G_eval(q, r + 1) == doctest::Approx(g).epsilon(1e-9));
  }
  for (int k = -3; k <= 3; ++k) CHECK(std::abs(G_eval(0.37, k)) <= 1e-13);
  // G is the antiderivative of q - H
  const double q = 0.37, r = 2.61, h = 1e-7;
  CHECK((G_eval(q, r + h) - G_eval(q, r - h)) / (2 * h) == doctest::Approx(q - H_eval(q, r)).epsilon(1e-6));
}

TEST_CASE("cube grid covers the domain and its bumps sum to one") {
  auto mesh = testing::unit_disk(0.05);
  auto th = interpolate_centroids(mesh, [](const Point& x) { return 0.5 * (1 + std::tanh(4 * x.x())); });
  auto u = interpolate_nodal(mesh, [](const Point& x) { return (1 - x.squaredNorm()) * (1 + 0.3 * x.y()); });
  auto spec = make_laminate_spec(th, u, 0.3, 0.02);
  CHECK(spec.nx * spec.delta >= 2.0 - 1e-12);
  CHECK(spec.ny * spec.delta >= 2.0 - 1e-12);
  for (int i = 0; i < spec.num_cubes(); ++i) {
    CHECK(spec.q[i] >= 0.0);
    CHECK(spec.q[i] <= 1.0);
    CHECK(spec.zeta[i].norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int k = 0; k < 500; ++k) {
    const Point x(U(rng), U(rng));
    double sum = 0.0;
    for (int i = 0; i < spec.num_cubes(); ++i) {
      const double v = spec.psi(i, x);
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  // every centroid lies in the cube it is assigned to
  for (int e = 0; e < mesh->num_elements(); ++e) {
    const Point c = mesh->centroid(e), q = spec.cube_center(spec.cube_of(c));
    CHECK(std::abs(c.x() - q.x()) <= 0.5 * spec.delta + 1e-12);
    CHECK(std::abs(c.y() - q.y()) <= 0.5 * spec.delta + 1e-12);
  }
}

TEST_CASE("zero gradient cubes use the fallback direction") {
  auto mesh = square(1.0, 16);
  auto th = ScalarField::constant(mesh, Storage::element, 0.5);
  auto spec = make_laminate_spec(th, ScalarField::zeros(mesh, Storage::nodal), 0.5, 0.1, Point(0, 3));
  for (const auto& z : spec.zeta) CHECK((z - Point(0, 1)).norm() <= 1e-15);
}

TEST_CASE("pure phases leave u unchanged") {
  MaterialModel m{1, 3, 2, 0.5};
  auto mesh = square(0.5, 128);
  auto u = affine(mesh, Point(1.0, 0.5));
  for (double q : {0.0, 1.0}) {
    auto lam = build_laminate(make_laminate_spec(ScalarField::constant(mesh, Storage::element, q), u, 0.25, 0.05),
                              u, m);
    CHECK(lam.chi.values().minCoeff() == q);
    CHECK(lam.chi.values().maxCoeff() == q);
    CHECK((lam.u_corr.values() - u.values()).cwiseAbs().maxCoeff() <= 1e-15);
  }
  auto chi0 = ScalarField::zeros(mesh, Storage::element);
  CHECK(laminate_energy(chi0, u, m) == doctest::Approx(3.0 * 1.25 * 0.25));
}

TEST_CASE("corrector stays within C eps") {
  MaterialModel m{1, 3, 2.5, 0.5};
  auto mesh = square(1.0, 256);
  auto u = interpolate_nodal(mesh, [](const Point& x) { return std::sin(3 * x.x()) + x.y() * x.y(); });
  auto th = interpolate_centroids(mesh, [](const Point& x) { return 0.2 + 0.6 * x.x() * x.y(); });
  const double a = 1.0 / (1.0 - m.p);
  for (double eps : {0.1, 0.05}) {
    auto spec = make_laminate_spec(th, u, 0.25, eps);
    auto lam = build_laminate(spec, u, m);
    double C = 0.0;
    for (int i = 0; i < spec.num_cubes(); ++i) {
      const double q = spec.q[i];
      const double k = (std::pow(m.beta, a) - std::pow(m.alpha, a)) / (std::pow(m.alpha, a) * q + std::pow(m.beta, a) * (1 - q));
      C = std::max(C, spec.xi[i].norm() * std::abs(k) * q * (1 - q));
    }
    CHECK((lam.u_corr.values() - u.values()).cwiseAbs().maxCoeff() <= C * eps * (1 + 1e-12));
  }
}

TEST_CASE("cube means of chi approach q at rate eps / delta") {
  MaterialModel m{1, 3, 2, 0.5};
  const double delta = 0.5;
  auto mesh = square(1.0, 512);
  auto u = affine(mesh, Point(std::cos(0.4), std::sin(0.4)));
  auto th = interpolate_centroids(mesh, [](const Point& x) { return x.x() < 0.5 ? 0.3 : 0.65; });
  double prev = INFINITY;
  for (double eps : {delta / 4, delta / 8, delta / 16}) {
    auto spec = make_laminate_spec(th, u, delta, eps);
    auto lam = build_laminate(spec, u, m);
    std::vector<double> mass(spec.num_cubes(), 0.0), area(spec.num_cubes(), 0.0);
    for (int e = 0; e < mesh->num_elements(); ++e) {
      const int i = spec.cube_of(mesh->centroid(e));
      mass[i] += mesh->area(e) * lam.chi[e];
      area[i] += mesh->area(e);
    }
    double worst = 0.0;
    for (int i = 0; i < spec.num_cubes(); ++i) worst = std::max(worst, std::abs(mass[i] / area[i] - spec.q[i]));
    CHECK(worst <= 2 * eps / delta);
    CHECK(worst <= prev * 1.01);
    prev = worst;
  }
}

TEST_CASE("laminate volume stays below the budget when theta does") {
  MaterialModel m{1, 3, 2, 0.45};
  auto mesh = square(1.0, 384);
  auto u = interpolate_nodal(mesh, [](const Point& x) { return x.x() * (1 - x.x()) * x.y(); });
  auto th = interpolate_centroids(mesh, [](const Point& x) { return 0.4 * (x.x() + x.y()) / 2 + 0.2; });
  REQUIRE(integrate(th) < m.kappa);
  auto lam = build_laminate(make_laminate_spec(th, u, 0.25, 0.25 / 8), u, m);
  CHECK(integrate(lam.chi) < m.kappa);
}

TEST_CASE("aligned affine cube reproduces the harmonic mean exactly") {
  MaterialModel m{1, 3, 2, 0.5};
  const double delta = 0.25, eps = delta / 8;
  auto mesh = square(delta, 8 * 16);  // h = eps / 16, grid lines on every interface
  const Point xi(2, 0);
  auto u = affine(mesh, xi);
  auto th = ScalarField::constant(mesh, Storage::element, 0.5);
  auto lam = build_laminate(make_laminate_spec(th, u, delta, eps), u, m);
  const double E = laminate_energy(lam.chi, lam.u_corr, m) / (delta * delta);
  CHECK(std::abs(E - 1.5 * xi.squaredNorm()) <= 1e-10 * 1.5 * xi.squaredNorm());
  CHECK(homogenized_energy(th, u, m) / (delta * delta) == doctest::Approx(1.5 * 4));
}

TEST_CASE("coarse meshes are rejected with the required size") {
  MaterialModel m{1, 3, 2, 0.5};
  auto mesh = square(1.0, 16);
  auto u = affine(mesh, Point(1, 0));
  auto spec = make_laminate_spec(ScalarField::constant(mesh, Storage::element, 0.5), u, 0.5, 0.1);
  try {
    build_laminate(spec, u, m);
    FAIL("expected InvalidInput");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("0.0125") != std::string::npos);
  }
  CHECK(laminate_max_h(0.1) == doctest::Approx(0.0125));
}

TEST_CASE("nested transfer keeps u and theta") {
  auto mesh = square(1.0, 4);
  auto u = interpolate_nodal(mesh, [](const Point& x) { return x.x() * (1 - x.x()); });
  auto th = interpolate_centroids(mesh, [](const Point& x) { return x.y(); });
  auto t = refine_until(th, u, 0.05);
  CHECK(t.levels == 3);
  CHECK(t.u.mesh()->max_edge_length() <= 0.05);
  CHECK(integrate(t.theta) == doctest::Approx(integrate(th)).epsilon(1e-13));
  CHECK(homogenized_energy(t.theta, t.u, MaterialModel{1, 3, 2, 0.5}) ==
        doctest::Approx(homogenized_energy(th, u, MaterialModel{1, 3, 2, 0.5})).epsilon(1e-12));
}

TEST_CASE("table rows are ordered and written with a fixed header") {
  auto mesh = square(1.0, 8);
  auto u = interpolate_nodal(mesh, [](const Point& x) { return x.x() * (1 - x.x()) * x.y() * (1 - x.y()); });
  auto th = ScalarField::constant(mesh, Storage::element, 0.4);
  auto rows = laminate_table(th, u, MaterialModel{1, 3, 2, 0.5}, {0.25, 0.5}, {0.05, 0.1});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].delta == 0.5);
  CHECK(rows[0].epsilon == 0.1);
  CHECK(rows[3].delta == 0.25);
  CHECK(rows[3].epsilon == 0.05);
  for (const auto& r : rows) CHECK(r.gap == doctest::Approx(std::abs(r.laminate_energy - r.homogenized_energy) / r.homogenized_energy));
  const auto path = std::filesystem::temp_directory_path() / "pdesign_lam_test.csv";
  write_laminate_table(rows, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "delta,epsilon,laminate_energy,homogenized_energy,gap");
}

}
