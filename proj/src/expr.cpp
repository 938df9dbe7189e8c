#include "ngeo/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

namespace ngeo {

class ExprParser {
 public:
  ExprParser(std::string_view text, const std::vector<std::string>& variables,
             const std::map<std::string, double>& parameters, Expression& out)
      : text_(text), variables_(variables), parameters_(parameters), out_(out) {}

  int parse() {
    const int root = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character");
    return root;
  }

 private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("expression '" + std::string(text_) + "': " + what + " at offset " +
                     std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int add(Expression::Node n) {
    out_.nodes_.push_back(n);
    return static_cast<int>(out_.nodes_.size()) - 1;
  }

  int binary(Op op, int lhs, int rhs) {
    Expression::Node n;
    n.op = op;
    n.lhs = lhs;
    n.rhs = rhs;
    return add(n);
  }

  int parse_sum() {
    int lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = binary(Op::Add, lhs, parse_product());
      } else if (accept('-')) {
        lhs = binary(Op::Sub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  int parse_product() {
    int lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = binary(Op::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = binary(Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    if (accept('-')) return binary(Op::Neg, parse_unary(), -1);
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  // Right-associative; binds tighter than unary minus on its left operand.
  int parse_power() {
    const int base = parse_primary();
    if (accept('^')) return binary(Op::Pow, base, parse_unary());
    return base;
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      const int inner = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  int parse_number() {
    const std::string rest(text_.substr(pos_));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(rest, &used);
    } catch (const std::exception&) {
      fail("malformed number");
    }
    pos_ += used;
    Expression::Node n;
    n.value = v;
    return add(n);
  }

  int parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name(text_.substr(start, pos_ - start));

    static const std::map<std::string, Op> functions = {
        {"sin", Op::Sin}, {"cos", Op::Cos}, {"tan", Op::Tan},
        {"exp", Op::Exp}, {"log", Op::Log}, {"sqrt", Op::Sqrt}};
    if (auto f = functions.find(name); f != functions.end()) {
      if (!accept('(')) fail("expected '(' after " + name);
      const int arg = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return binary(f->second, arg, -1);
    }
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      if (variables_[i] == name) {
        Expression::Node n;
        n.op = Op::Var;
        n.var = static_cast<int>(i);
        return add(n);
      }
    }
    Expression::Node n;
    if (name == "pi") {
      n.value = std::numbers::pi;
      return add(n);
    }
    if (auto p = parameters_.find(name); p != parameters_.end()) {
      n.value = p->second;
      return add(n);
    }
    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  const std::vector<std::string>& variables_;
  const std::map<std::string, double>& parameters_;
  Expression& out_;
};

Expression Expression::parse(std::string_view text, const std::vector<std::string>& variables,
                             const std::map<std::string, double>& parameters) {
  Expression e;
  e.source_ = std::string(text);
  ExprParser parser(text, variables, parameters, e);
  e.root_ = parser.parse();
  return e;
}

}  // namespace ngeo
