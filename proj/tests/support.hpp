#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "pdesign/fields.hpp"

namespace testing {

inline pdesign::MeshPtr unit_square(double h) {
  pdesign::DomainSpec d{pdesign::Rectangle{0, 1, 0, 1}, h};
  return std::make_shared<const pdesign::Mesh>(pdesign::build_mesh(d));
}

inline pdesign::MeshPtr unit_disk(double h) {
  pdesign::DomainSpec d{pdesign::Disk{0, 0, 1}, h};
  return std::make_shared<const pdesign::Mesh>(pdesign::build_mesh(d));
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
