#include "pdesign/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include "pdesign/error.hpp"

namespace pdesign {

struct Expression::Node {
  enum class Kind { number, var_x, var_y, neg, add, sub, mul, div, pow, call } kind;
  double value = 0.0;
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> a, b;

  double eval(const Point& p) const {
    switch (kind) {
      case Kind::number: return value;
      case Kind::var_x: return p.x();
      case Kind::var_y: return p.y();
      case Kind::neg: return -a->eval(p);
      case Kind::add: return a->eval(p) + b->eval(p);
      case Kind::sub: return a->eval(p) - b->eval(p);
      case Kind::mul: return a->eval(p) * b->eval(p);
      case Kind::div: return a->eval(p) / b->eval(p);
      case Kind::pow: return std::pow(a->eval(p), b->eval(p));
      case Kind::call: return fn(a->eval(p));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidInput("expression: " + what + " at position " + std::to_string(pos_) + " in \"" + s_ + "\"");
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (eat('+')) n = make(Kind::add, n, term());
      else if (eat('-')) n = make(Kind::sub, n, term());
      else return n;
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*')) n = make(Kind::mul, n, unary());
      else if (eat('/')) n = make(Kind::div, n, unary());
      else return n;
    }
  }

  NodePtr unary() {
    if (eat('-')) return make(Kind::neg, unary());
    if (eat('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (eat('^')) return make(Kind::pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (eat('(')) {
      NodePtr n = expr();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return word();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    double v = 0.0;
    const char* begin = s_.data() + pos_;
    auto [end, ec] = std::from_chars(begin, s_.data() + s_.size(), v);
    if (ec != std::errc()) fail("bad number");
    pos_ += static_cast<std::size_t>(end - begin);
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::number;
    n->value = v;
    return n;
  }

  NodePtr word() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string w = s_.substr(start, pos_ - start);
    if (w == "x") return make(Kind::var_x);
    if (w == "y") return make(Kind::var_y);
    if (w == "pi") {
      auto n = std::make_shared<Expression::Node>();
      n->kind = Kind::number;
      n->value = std::numbers::pi;
      return n;
    }
    static const std::vector<std::pair<std::string, double (*)(double)>> fns = {
        {"sin", [](double v) { return std::sin(v); }},   {"cos", [](double v) { return std::cos(v); }},
        {"tan", [](double v) { return std::tan(v); }},   {"exp", [](double v) { return std::exp(v); }},
        {"log", [](double v) { return std::log(v); }},   {"sqrt", [](double v) { return std::sqrt(v); }},
        {"abs", [](double v) { return std::abs(v); }}};
    for (const auto& [name, f] : fns)
      if (w == name) {
        if (!eat('(')) fail("expected '(' after " + name);
        auto n = std::make_shared<Expression::Node>();
        n->kind = Kind::call;
        n->fn = f;
        n->a = expr();
        if (!eat(')')) fail("expected ')'");
        return n;
      }
    pos_ = start;
    fail("unknown name '" + w + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression(const std::string& text) : text_(text), root_(Parser(text_).parse()) {}

double Expression::operator()(const Point& p) const { return root_->eval(p); }

}  // namespace pdesign
