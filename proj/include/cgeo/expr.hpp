#pragma once

// Scalar expression language for metric components and conformal factors.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          (right associative)
//   primary := number | 'x'<index> | func '(' expr ')' | '(' expr ')'
//   func    := exp | log | sin | cos | sqrt | tanh
//
// Variables are 1-based: x1 .. xd.

#include "cgeo/jet.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace cgeo {

class Expr {
 public:
  enum class Op { Number, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };
  enum class Func { Exp, Log, Sin, Cos, Sqrt, Tanh };

  struct Node {
    Op op = Op::Number;
    double number = 0.0;
    int variable = 0;  // 1-based
    Func func = Func::Exp;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };

  // Throws SyntaxError (with byte offset), or Error with UnknownIdentifier /
  // VariableOutOfRange.
  static Expr parse(std::string_view src, int dim);

  static Expr constant(double c, int dim);

  int dim() const { return dim_; }
  const Node& root() const { return *root_; }

  double eval(const Vec& x) const;
  Jet2 eval_jet2(const Vec& x) const;

  // Fully parenthesised source text that parses back to the same tree.
  std::string unparse() const;

  bool structurally_equal(const Expr& other) const;

 private:
  Expr(std::shared_ptr<const Node> root, int dim)
      : root_(std::move(root)), dim_(dim) {}

  std::shared_ptr<const Node> root_;
  int dim_ = 0;
};

std::string_view func_name(Expr::Func f);

}  // namespace cgeo
