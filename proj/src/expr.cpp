#include "cgeo/expr.hpp"

#include "cgeo/error.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace cgeo {

std::string_view func_name(Expr::Func f) {
  switch (f) {
    case Expr::Func::Exp: return "exp";
    case Expr::Func::Log: return "log";
    case Expr::Func::Sin: return "sin";
    case Expr::Func::Cos: return "cos";
    case Expr::Func::Sqrt: return "sqrt";
    case Expr::Func::Tanh: return "tanh";
  }
  return "?";
}

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

constexpr int kMaxDepth = 200;

NodePtr make_number(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Expr::Op::Number;
  n->number = v;
  return n;
}

NodePtr make_binary(Expr::Op op, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr make_unary(Expr::Op op, NodePtr arg) {
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->lhs = std::move(arg);
  return n;
}

class Parser {
 public:
  Parser(std::string_view src, int dim) : src_(src), dim_(dim) {}

  NodePtr parse_all() {
    NodePtr e = parse_expr();
    skip_space();
    if (pos_ != src_.size()) fail("unexpected character");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw SyntaxError(pos_, what);
  }

  void skip_space() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_]))) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p(p) {
      if (++p.depth_ > kMaxDepth) p.fail("expression nested too deeply");
    }
    ~DepthGuard() { --p.depth_; }
    Parser& p;
  };

  NodePtr parse_expr() {
    DepthGuard guard(*this);
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(Expr::Op::Add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = make_binary(Expr::Op::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(Expr::Op::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = make_binary(Expr::Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    DepthGuard guard(*this);
    if (accept('-')) return make_unary(Expr::Op::Neg, parse_unary());
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) return make_binary(Expr::Op::Pow, base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return parse_number();
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    fail("unexpected character");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t mantissa = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) fail("malformed number");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) {
        ++pos_;
      }
      if (digits() == 0) fail("malformed exponent");
    }
    double v = 0.0;
    const char* first = src_.data() + start;
    const char* last = src_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
      pos_ = start;
      fail("number out of range");
    }
    return make_number(v);
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           std::isalnum(static_cast<unsigned char>(src_[pos_]))) {
      ++pos_;
    }
    const std::string_view name = src_.substr(start, pos_ - start);

    if (name.size() >= 2 && name[0] == 'x' &&
        std::isdigit(static_cast<unsigned char>(name[1]))) {
      int index = 0;
      auto [ptr, ec] =
          std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (ec != std::errc() || ptr != name.data() + name.size()) {
        throw Error(Errc::UnknownIdentifier, std::string(name));
      }
      if (index < 1 || index > dim_) {
        throw Error(Errc::VariableOutOfRange,
                    std::string(name) + " with dimension " +
                        std::to_string(dim_));
      }
      auto n = std::make_shared<Expr::Node>();
      n->op = Expr::Op::Variable;
      n->variable = index;
      return n;
    }

    static constexpr std::array<Expr::Func, 6> kFuncs = {
        Expr::Func::Exp, Expr::Func::Log,  Expr::Func::Sin,
        Expr::Func::Cos, Expr::Func::Sqrt, Expr::Func::Tanh};
    for (Expr::Func f : kFuncs) {
      if (name == func_name(f)) {
        if (!accept('(')) fail("expected '(' after function name");
        NodePtr arg = parse_expr();
        if (!accept(')')) fail("expected ')'");
        auto n = std::make_shared<Expr::Node>();
        n->op = Expr::Op::Call;
        n->func = f;
        n->lhs = std::move(arg);
        return n;
      }
    }
    throw Error(Errc::UnknownIdentifier, std::string(name));
  }

  std::string_view src_;
  int dim_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

[[noreturn]] void eval_domain(const char* what, double v) {
  throw Error(Errc::EvalDomainError,
              std::string(what) + " undefined at " + std::to_string(v));
}

double eval_node(const Expr::Node& n, const Vec& x) {
  switch (n.op) {
    case Expr::Op::Number: return n.number;
    case Expr::Op::Variable: return x(n.variable - 1);
    case Expr::Op::Neg: return -eval_node(*n.lhs, x);
    case Expr::Op::Add: return eval_node(*n.lhs, x) + eval_node(*n.rhs, x);
    case Expr::Op::Sub: return eval_node(*n.lhs, x) - eval_node(*n.rhs, x);
    case Expr::Op::Mul: return eval_node(*n.lhs, x) * eval_node(*n.rhs, x);
    case Expr::Op::Div: {
      const double den = eval_node(*n.rhs, x);
      if (den == 0.0) eval_domain("division", den);
      return eval_node(*n.lhs, x) / den;
    }
    case Expr::Op::Pow: {
      const double b = eval_node(*n.lhs, x);
      const double e = eval_node(*n.rhs, x);
      if (b == 0.0 && e == 0.0) return 1.0;
      if (b < 0.0 && std::floor(e) != e) eval_domain("pow", b);
      if (b == 0.0 && e < 0.0) eval_domain("pow", b);
      return std::pow(b, e);
    }
    case Expr::Op::Call: {
      const double a = eval_node(*n.lhs, x);
      switch (n.func) {
        case Expr::Func::Exp: return std::exp(a);
        case Expr::Func::Log:
          if (!(a > 0.0)) eval_domain("log", a);
          return std::log(a);
        case Expr::Func::Sin: return std::sin(a);
        case Expr::Func::Cos: return std::cos(a);
        case Expr::Func::Sqrt:
          if (a < 0.0) eval_domain("sqrt", a);
          return std::sqrt(a);
        case Expr::Func::Tanh: return std::tanh(a);
      }
    }
  }
  return 0.0;
}

Jet2 jet_node(const Expr::Node& n, const Vec& x) {
  const int d = static_cast<int>(x.size());
  switch (n.op) {
    case Expr::Op::Number: return Jet2::constant(n.number, d);
    case Expr::Op::Variable:
      return Jet2::variable(x(n.variable - 1), n.variable - 1, d);
    case Expr::Op::Neg: return -jet_node(*n.lhs, x);
    case Expr::Op::Add: return jet_node(*n.lhs, x) + jet_node(*n.rhs, x);
    case Expr::Op::Sub: return jet_node(*n.lhs, x) - jet_node(*n.rhs, x);
    case Expr::Op::Mul: return jet_node(*n.lhs, x) * jet_node(*n.rhs, x);
    case Expr::Op::Div: return jet_node(*n.lhs, x) / jet_node(*n.rhs, x);
    case Expr::Op::Pow: return pow(jet_node(*n.lhs, x), jet_node(*n.rhs, x));
    case Expr::Op::Call: {
      Jet2 a = jet_node(*n.lhs, x);
      switch (n.func) {
        case Expr::Func::Exp: return exp(a);
        case Expr::Func::Log: return log(a);
        case Expr::Func::Sin: return sin(a);
        case Expr::Func::Cos: return cos(a);
        case Expr::Func::Sqrt: return sqrt(a);
        case Expr::Func::Tanh: return tanh(a);
      }
    }
  }
  return Jet2::constant(0.0, d);
}

void unparse_node(const Expr::Node& n, std::string& out) {
  switch (n.op) {
    case Expr::Op::Number: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n.number);
      out += buf;
      return;
    }
    case Expr::Op::Variable:
      out += 'x';
      out += std::to_string(n.variable);
      return;
    case Expr::Op::Neg:
      out += "(-";
      unparse_node(*n.lhs, out);
      out += ')';
      return;
    case Expr::Op::Call:
      out += func_name(n.func);
      out += '(';
      unparse_node(*n.lhs, out);
      out += ')';
      return;
    default: break;
  }
  char op = '+';
  switch (n.op) {
    case Expr::Op::Sub: op = '-'; break;
    case Expr::Op::Mul: op = '*'; break;
    case Expr::Op::Div: op = '/'; break;
    case Expr::Op::Pow: op = '^'; break;
    default: break;
  }
  out += '(';
  unparse_node(*n.lhs, out);
  out += ' ';
  out += op;
  out += ' ';
  unparse_node(*n.rhs, out);
  out += ')';
}

bool equal_nodes(const Expr::Node* a, const Expr::Node* b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->op != b->op) return false;
  switch (a->op) {
    case Expr::Op::Number: return a->number == b->number;
    case Expr::Op::Variable: return a->variable == b->variable;
    case Expr::Op::Call:
      return a->func == b->func && equal_nodes(a->lhs.get(), b->lhs.get());
    default:
      return equal_nodes(a->lhs.get(), b->lhs.get()) &&
             equal_nodes(a->rhs.get(), b->rhs.get());
  }
}

}  // namespace

Expr Expr::parse(std::string_view src, int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw Error(Errc::InvalidArgument,
                "expression dimension " + std::to_string(dim));
  }
  Parser p(src, dim);
  return Expr(p.parse_all(), dim);
}

Expr Expr::constant(double c, int dim) { return Expr(make_number(c), dim); }

double Expr::eval(const Vec& x) const {
  if (x.size() != dim_) {
    throw Error(Errc::InvalidArgument, "point dimension does not match");
  }
  return eval_node(*root_, x);
}

Jet2 Expr::eval_jet2(const Vec& x) const {
  if (x.size() != dim_) {
    throw Error(Errc::InvalidArgument, "point dimension does not match");
  }
  return jet_node(*root_, x);
}

std::string Expr::unparse() const {
  std::string out;
  unparse_node(*root_, out);
  return out;
}

bool Expr::structurally_equal(const Expr& other) const {
  return dim_ == other.dim_ && equal_nodes(root_.get(), other.root_.get());
}

}  // namespace cgeo
