#pragma once

// Small arithmetic expression language used by custom metric files and
// graph surfaces:  + - * / ^, unary minus, parentheses, the functions
// sin cos tan exp log sqrt, numeric literals, the constant pi, named
// variables and named parameters.

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ngeo/dual.hpp"
#include "ngeo/error.hpp"

namespace ngeo {

class Expression {
 public:
  /// Parses `text`. Identifiers are resolved against `variables` first
  /// (bound positionally at evaluation time), then `parameters` (bound to
  /// constants now). Unknown identifiers raise ParseError.
  static Expression parse(std::string_view text, const std::vector<std::string>& variables,
                          const std::map<std::string, double>& parameters = {});

  template <class T>
  T eval(const T* vars) const {
    return eval_node<T>(root_, vars);
  }

  const std::string& source() const { return source_; }

 private:
  enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Tan, Exp, Log, Sqrt };
  struct Node {
    Op op = Op::Const;
    double value = 0.0;
    int var = -1;
    int lhs = -1;
    int rhs = -1;
  };

  friend class ExprParser;

  template <class T>
  T eval_node(int id, const T* vars) const {
    const Node& n = nodes_[id];
    switch (n.op) {
      case Op::Const: return T(n.value);
      case Op::Var: return vars[n.var];
      case Op::Add: return eval_node(n.lhs, vars) + eval_node(n.rhs, vars);
      case Op::Sub: return eval_node(n.lhs, vars) - eval_node(n.rhs, vars);
      case Op::Mul: return eval_node(n.lhs, vars) * eval_node(n.rhs, vars);
      case Op::Div: return eval_node(n.lhs, vars) / eval_node(n.rhs, vars);
      case Op::Pow: {
        const Node& e = nodes_[n.rhs];
        // Integer exponents stay exact (and defined) at a zero base.
        if (e.op == Op::Const && e.value == static_cast<int>(e.value))
          return ipow(eval_node(n.lhs, vars), static_cast<int>(e.value));
        if (e.op != Op::Const)
          return exp(eval_node(n.rhs, vars) * log(eval_node(n.lhs, vars)));
        return pow(eval_node(n.lhs, vars), e.value);
      }
      case Op::Neg: return -eval_node(n.lhs, vars);
      case Op::Sin: return sin(eval_node(n.lhs, vars));
      case Op::Cos: return cos(eval_node(n.lhs, vars));
      case Op::Tan: return tan(eval_node(n.lhs, vars));
      case Op::Exp: return exp(eval_node(n.lhs, vars));
      case Op::Log: return log(eval_node(n.lhs, vars));
      case Op::Sqrt: return sqrt(eval_node(n.lhs, vars));
    }
    return T(0.0);
  }

  std::vector<Node> nodes_;
  int root_ = -1;
  std::string source_;
};

}  // namespace ngeo
