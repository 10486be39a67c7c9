#include "mrf/expr.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>

namespace mrf {

namespace {

struct FnInfo {
  ExprFn fn;
  int arity;
};

const std::map<std::string_view, FnInfo>& fn_table() {
  static const std::map<std::string_view, FnInfo> table = {
      {"sin", {ExprFn::Sin, 1}},   {"cos", {ExprFn::Cos, 1}},
      {"tan", {ExprFn::Tan, 1}},   {"atan", {ExprFn::Atan, 1}},
      {"sqrt", {ExprFn::Sqrt, 1}}, {"abs", {ExprFn::Abs, 1}},
      {"exp", {ExprFn::Exp, 1}},   {"log", {ExprFn::Log, 1}},
      {"sign", {ExprFn::Sign, 1}}, {"atan2", {ExprFn::Atan2, 2}},
      {"min", {ExprFn::Min, 2}},   {"max", {ExprFn::Max, 2}}};
  return table;
}

std::string_view fn_name(ExprFn fn) {
  switch (fn) {
    case ExprFn::Sin: return "sin";
    case ExprFn::Cos: return "cos";
    case ExprFn::Tan: return "tan";
    case ExprFn::Atan: return "atan";
    case ExprFn::Sqrt: return "sqrt";
    case ExprFn::Abs: return "abs";
    case ExprFn::Exp: return "exp";
    case ExprFn::Log: return "log";
    case ExprFn::Sign: return "sign";
    case ExprFn::Atan2: return "atan2";
    case ExprFn::Min: return "min";
    case ExprFn::Max: return "max";
  }
  return "?";
}

ExprNodePtr make_node(ExprNode node) {
  return std::make_shared<const ExprNode>(std::move(node));
}

class Parser {
 public:
  Parser(std::string_view text, int n, int m) : text_(text), n_(n), m_(m) {}

  ExprNodePtr run() {
    auto e = parse_expr();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::size_t at) {
    throw ParseError(what + " at position " + std::to_string(at), at);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool peek_is(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool consume(char c) {
    if (peek_is(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    skip_ws();
    if (!consume(c)) fail(std::string("expected '") + c + "'", pos_);
  }

  ExprNodePtr parse_expr() {
    auto lhs = parse_term();
    for (;;) {
      if (consume('+')) {
        auto rhs = parse_term();
        lhs = make_node({.kind = ExprKind::Add, .args = {lhs, rhs}});
      } else if (consume('-')) {
        auto rhs = parse_term();
        lhs = make_node({.kind = ExprKind::Sub, .args = {lhs, rhs}});
      } else {
        return lhs;
      }
    }
  }

  ExprNodePtr parse_term() {
    auto lhs = parse_unary();
    for (;;) {
      if (consume('*')) {
        auto rhs = parse_unary();
        lhs = make_node({.kind = ExprKind::Mul, .args = {lhs, rhs}});
      } else if (consume('/')) {
        auto rhs = parse_unary();
        lhs = make_node({.kind = ExprKind::Div, .args = {lhs, rhs}});
      } else {
        return lhs;
      }
    }
  }

  ExprNodePtr parse_unary() {
    if (consume('-')) {
      auto arg = parse_unary();
      return make_node({.kind = ExprKind::Neg, .args = {arg}});
    }
    return parse_power();
  }

  ExprNodePtr parse_power() {
    auto base = parse_atom();
    if (consume('^')) {
      auto exponent = parse_unary();  // right-associative, allows x^-2
      return make_node({.kind = ExprKind::Pow, .args = {base, exponent}});
    }
    return base;
  }

  ExprNodePtr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression", pos_);
    char c = text_[pos_];
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return parse_ident();
    if (c == '(') {
      ++pos_;
      auto e = parse_expr();
      expect(')');
      return e;
    }
    fail(std::string("unexpected character '") + c + "'", pos_);
  }

  ExprNodePtr parse_number() {
    std::size_t start = pos_;
    double value = 0.0;
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr == begin) fail("malformed number", start);
    pos_ += static_cast<std::size_t>(ptr - begin);
    return make_node({.kind = ExprKind::Constant, .value = value});
  }

  ExprNodePtr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           ((text_[pos_] >= 'a' && text_[pos_] <= 'z') ||
            (text_[pos_] >= 'A' && text_[pos_] <= 'Z') ||
            (text_[pos_] >= '0' && text_[pos_] <= '9') || text_[pos_] == '_'))
      ++pos_;
    std::string_view name = text_.substr(start, pos_ - start);

    if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'u')) {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        digits = digits && name[i] >= '0' && name[i] <= '9';
      if (digits) {
        int idx = std::atoi(std::string(name.substr(1)).c_str());
        int limit = name[0] == 'x' ? n_ : m_;
        if (idx < 1 || idx > limit)
          fail("variable '" + std::string(name) + "' out of range (1.." +
                   std::to_string(limit) + ")",
               start);
        return make_node({.kind = name[0] == 'x' ? ExprKind::StateVar
                                                 : ExprKind::ControlVar,
                          .index = idx - 1});
      }
    }

    if (name == "inf")
      return make_node({.kind = ExprKind::Constant,
                        .value = std::numeric_limits<double>::infinity()});
    if (name == "pi")
      return make_node({.kind = ExprKind::Constant, .value = std::acos(-1.0)});

    auto it = fn_table().find(name);
    if (it == fn_table().end())
      fail("unknown identifier '" + std::string(name) + "'", start);
    expect('(');
    std::vector<ExprNodePtr> args;
    args.push_back(parse_expr());
    while (consume(',')) args.push_back(parse_expr());
    expect(')');
    if (static_cast<int>(args.size()) != it->second.arity)
      fail("function '" + std::string(name) + "' expects " +
               std::to_string(it->second.arity) + " argument(s)",
           start);
    return make_node(
        {.kind = ExprKind::Call, .fn = it->second.fn, .args = std::move(args)});
  }

  std::string_view text_;
  int n_;
  int m_;
  std::size_t pos_ = 0;
};

double check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw EvalError(std::string(what) + " produced a non-finite value");
  return v;
}

double eval_node(const ExprNode& node, std::span<const double> x,
                 std::span<const double> u) {
  switch (node.kind) {
    case ExprKind::Constant:
      return node.value;
    case ExprKind::StateVar:
      return x[static_cast<std::size_t>(node.index)];
    case ExprKind::ControlVar:
      return u[static_cast<std::size_t>(node.index)];
    case ExprKind::Neg:
      return -eval_node(*node.args[0], x, u);
    case ExprKind::Add:
      return check_finite(eval_node(*node.args[0], x, u) + eval_node(*node.args[1], x, u), "addition");
    case ExprKind::Sub:
      return check_finite(eval_node(*node.args[0], x, u) - eval_node(*node.args[1], x, u), "subtraction");
    case ExprKind::Mul:
      return check_finite(eval_node(*node.args[0], x, u) * eval_node(*node.args[1], x, u), "multiplication");
    case ExprKind::Div: {
      double num = eval_node(*node.args[0], x, u);
      double den = eval_node(*node.args[1], x, u);
      if (den == 0.0) throw EvalError("division by zero");
      return check_finite(num / den, "division");
    }
    case ExprKind::Pow: {
      double base = eval_node(*node.args[0], x, u);
      double exponent = eval_node(*node.args[1], x, u);
      if (base < 0.0 && exponent != std::floor(exponent))
        throw EvalError("negative base raised to a non-integer power");
      if (base == 0.0 && exponent < 0.0)
        throw EvalError("zero raised to a negative power");
      return check_finite(std::pow(base, exponent), "power");
    }
    case ExprKind::Call: {
      double a = eval_node(*node.args[0], x, u);
      switch (node.fn) {
        case ExprFn::Sin: return check_finite(std::sin(a), "sin");
        case ExprFn::Cos: return check_finite(std::cos(a), "cos");
        case ExprFn::Tan: return check_finite(std::tan(a), "tan");
        case ExprFn::Atan: return std::atan(a);
        case ExprFn::Sqrt:
          if (a < 0.0) throw EvalError("sqrt of a negative value");
          return std::sqrt(a);
        case ExprFn::Abs: return std::fabs(a);
        case ExprFn::Exp: return check_finite(std::exp(a), "exp");
        case ExprFn::Log:
          if (a <= 0.0) throw EvalError("log of a non-positive value");
          return check_finite(std::log(a), "log");
        case ExprFn::Sign: return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
        case ExprFn::Atan2:
          return std::atan2(a, eval_node(*node.args[1], x, u));
        case ExprFn::Min:
          return std::fmin(a, eval_node(*node.args[1], x, u));
        case ExprFn::Max:
          return std::fmax(a, eval_node(*node.args[1], x, u));
      }
      throw EvalError("unknown function");
    }
  }
  throw EvalError("corrupt expression node");
}

// Printing precedence levels; parenthesization rules restore the exact tree.
int precedence(ExprKind k) {
  switch (k) {
    case ExprKind::Add:
    case ExprKind::Sub: return 1;
    case ExprKind::Mul:
    case ExprKind::Div: return 2;
    case ExprKind::Neg: return 3;
    case ExprKind::Pow: return 4;
    default: return 5;
  }
}

void print_node(const ExprNode& node, std::string& out);

void print_child(const ExprNode& child, bool need_parens, std::string& out) {
  if (need_parens) {
    out += '(';
    print_node(child, out);
    out += ')';
  } else {
    print_node(child, out);
  }
}

void print_node(const ExprNode& node, std::string& out) {
  switch (node.kind) {
    case ExprKind::Constant:
      out += format_double(node.value);
      return;
    case ExprKind::StateVar:
      out += 'x';
      out += std::to_string(node.index + 1);
      return;
    case ExprKind::ControlVar:
      out += 'u';
      out += std::to_string(node.index + 1);
      return;
    case ExprKind::Neg:
      out += '-';
      // unary minus binds looser than * / ^, so those children stay bare
      print_child(*node.args[0], precedence(node.args[0]->kind) < 3, out);
      return;
    case ExprKind::Add:
    case ExprKind::Sub: {
      const int p = 1;
      print_child(*node.args[0], precedence(node.args[0]->kind) < p, out);
      out += node.kind == ExprKind::Add ? " + " : " - ";
      // right operand at equal precedence needs parens to keep left-assoc shape
      print_child(*node.args[1], precedence(node.args[1]->kind) <= p, out);
      return;
    }
    case ExprKind::Mul:
    case ExprKind::Div: {
      const int p = 2;
      print_child(*node.args[0], precedence(node.args[0]->kind) < p, out);
      out += node.kind == ExprKind::Mul ? "*" : "/";
      print_child(*node.args[1], precedence(node.args[1]->kind) <= p, out);
      return;
    }
    case ExprKind::Pow: {
      // base must be an atom or tighter; exponent slot accepts any unary
      print_child(*node.args[0], precedence(node.args[0]->kind) <= 4, out);
      out += '^';
      print_child(*node.args[1], precedence(node.args[1]->kind) < 3, out);
      return;
    }
    case ExprKind::Call: {
      out += fn_name(node.fn);
      out += '(';
      for (std::size_t i = 0; i < node.args.size(); ++i) {
        if (i) out += ", ";
        print_node(*node.args[i], out);
      }
      out += ')';
      return;
    }
  }
}

bool nodes_equal(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprKind::Constant:
      return a.value == b.value ||
             (std::isnan(a.value) && std::isnan(b.value));
    case ExprKind::StateVar:
    case ExprKind::ControlVar:
      return a.index == b.index;
    case ExprKind::Call:
      if (a.fn != b.fn) return false;
      break;
    default:
      break;
  }
  if (a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!nodes_equal(*a.args[i], *b.args[i])) return false;
  return true;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), ptr);
}

ScalarExpr ScalarExpr::parse(std::string_view text, int n, int m) {
  if (n < 0 || m < 0) throw std::invalid_argument("negative dimension");
  Parser parser(text, n, m);
  return ScalarExpr(parser.run(), n, m);
}

double ScalarExpr::eval(std::span<const double> x,
                        std::span<const double> u) const {
  if (!root_) throw EvalError("evaluating an empty expression");
  if (static_cast<int>(x.size()) < n_ || static_cast<int>(u.size()) < m_)
    throw EvalError("argument vector shorter than the bound dimension");
  return check_finite(eval_node(*root_, x, u), "expression");
}

std::string ScalarExpr::str() const {
  if (!root_) return "";
  std::string out;
  print_node(*root_, out);
  return out;
}

bool ScalarExpr::equals(const ScalarExpr& other) const {
  if (!root_ || !other.root_) return root_ == other.root_;
  return nodes_equal(*root_, *other.root_);
}

}  // namespace mrf
