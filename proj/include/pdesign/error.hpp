#pragma once

#include <stdexcept>
#include <string>

namespace pdesign {

/// Input that violates a documented precondition (bad domain, alpha >= beta, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace pdesign
