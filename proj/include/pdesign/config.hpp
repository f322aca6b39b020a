#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pdesign/design_opt.hpp"
#include "pdesign/geometry.hpp"
#include "pdesign/material.hpp"

namespace pdesign {

/// Load f: a constant or an expression in x and y, sampled at nodes.
struct LoadSpec {
  bool is_constant = true;
  double value = 1.0;
  std::string expression;

  std::function<double(const Point&)> function() const;
  std::string to_string() const;
};

struct RunConfig {
  MaterialModel model;
  DomainSpec domain;
  LoadSpec load;
  DesignConfig design;
  int restarts = 3;
  int levels = 3;
  std::vector<double> deltas{0.25};
  std::vector<double> epsilons{0.05, 0.025};
  double band = 0.01;
  double r_exp = 0.0;
  std::string out = "out";
  std::uint64_t seed = 0;
  int threads = 1;
  bool restart_fluxes = false;
  bool iteration_log = false;

  /// Checks everything that does not need a mesh.
  void validate() const;
  /// Every key in a fixed order, one `key = value` per line; parses back to
  /// the same config.
  std::string to_text() const;
};

/// Parses `key = value` lines with `#` comments. Unknown or repeated keys,
/// missing required keys (alpha, beta, p, kappa, domain, h, f) and values
/// that break a constraint are errors naming the key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace pdesign
