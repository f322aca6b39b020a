#pragma once

#include <functional>
#include <memory>
#include <string>

#include "pdesign/geometry.hpp"

namespace pdesign {

/// Compiled scalar expression in x and y.
///
/// Grammar: + - * / ^ (right associative), unary minus, parentheses, numbers,
/// the variables x, y, the constant pi and the functions sin, cos, tan, exp,
/// log, sqrt, abs.
class Expression {
 public:
  /// Throws InvalidInput with the offending position on a syntax error.
  explicit Expression(const std::string& text);

  double operator()(const Point& p) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace pdesign
