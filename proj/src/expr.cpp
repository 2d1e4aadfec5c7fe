#include "ldp/expr.hpp"

#include <cctype>
#include <cmath>
#include <memory>
#include <vector>

#include "ldp/errors.hpp"

namespace ldp {
namespace {

struct Node {
  enum class Kind { Const, Var, Unary, Binary } kind;
  double value = 0.0;
  char op = 0;                       // binary: + - * / ^
  double (*fn)(double) = nullptr;    // unary
  std::unique_ptr<Node> lhs, rhs;

  double eval(double x) const {
    switch (kind) {
      case Kind::Const: return value;
      case Kind::Var: return x;
      case Kind::Unary: return fn(lhs->eval(x));
      case Kind::Binary: {
        const double a = lhs->eval(x);
        const double b = rhs->eval(x);
        switch (op) {
          case '+': return a + b;
          case '-': return a - b;
          case '*': return a * b;
          case '/': return a / b;
          default: return std::pow(a, b);
        }
      }
    }
    return 0.0;
  }
};

using NodePtr = std::unique_ptr<Node>;

NodePtr make_const(double v) {
  auto n = std::make_unique<Node>();
  n->kind = Node::Kind::Const;
  n->value = v;
  return n;
}

NodePtr make_binary(char op, NodePtr a, NodePtr b) {
  auto n = std::make_unique<Node>();
  n->kind = Node::Kind::Binary;
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

double neg(double v) { return -v; }

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  NodePtr parse() {
    auto n = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("expression error at position " +
                          std::to_string(pos_) + ": " + what + " in \"" +
                          text_ + "\"");
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_sum() {
    auto lhs = parse_product();
    for (;;) {
      if (consume('+')) lhs = make_binary('+', std::move(lhs), parse_product());
      else if (consume('-')) lhs = make_binary('-', std::move(lhs), parse_product());
      else return lhs;
    }
  }

  NodePtr parse_product() {
    auto lhs = parse_unary();
    for (;;) {
      if (consume('*')) lhs = make_binary('*', std::move(lhs), parse_unary());
      else if (consume('/')) lhs = make_binary('/', std::move(lhs), parse_unary());
      else return lhs;
    }
  }

  NodePtr parse_unary() {
    if (consume('-')) {
      auto n = std::make_unique<Node>();
      n->kind = Node::Kind::Unary;
      n->fn = &neg;
      n->lhs = parse_unary();
      return n;
    }
    (void)consume('+');
    return parse_power();
  }

  NodePtr parse_power() {
    auto base = parse_atom();
    if (consume('^')) return make_binary('^', std::move(base), parse_unary());
    return base;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto n = parse_sum();
      if (!consume(')')) fail("missing ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(text_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      return make_const(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t end = pos_;
      while (end < text_.size() && std::isalpha(static_cast<unsigned char>(text_[end]))) ++end;
      const std::string name = text_.substr(pos_, end - pos_);
      pos_ = end;
      if (name == "x") {
        auto n = std::make_unique<Node>();
        n->kind = Node::Kind::Var;
        return n;
      }
      if (name == "pi") return make_const(M_PI);
      double (*fn)(double) = nullptr;
      if (name == "sin") fn = std::sin;
      else if (name == "cos") fn = std::cos;
      else if (name == "tan") fn = std::tan;
      else if (name == "exp") fn = std::exp;
      else if (name == "log") fn = std::log;
      else if (name == "sqrt") fn = std::sqrt;
      else if (name == "tanh") fn = std::tanh;
      else if (name == "abs") fn = std::fabs;
      else fail("unknown identifier '" + name + "'");
      if (!consume('(')) fail("expected '(' after function name");
      auto arg = parse_sum();
      if (!consume(')')) fail("missing ')'");
      auto n = std::make_unique<Node>();
      n->kind = Node::Kind::Unary;
      n->fn = fn;
      n->lhs = std::move(arg);
      return n;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  const std::string& text_;
  size_t pos_ = 0;
};

}  // namespace

std::function<double(double)> compile_expression(const std::string& text) {
  Parser parser(text);
  std::shared_ptr<Node> root{parser.parse().release()};
  return [root](double x) { return root->eval(x); };
}

}  // namespace ldp
