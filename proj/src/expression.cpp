#include "mscap/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "mscap/error.hpp"

namespace mscap {

namespace {

using Kind = Expression::Kind;
using Var = Expression::Var;
using Func = Expression::Func;
using Node = Expression::Node;
using NodePtr = Expression::NodePtr;

NodePtr make(Kind k, std::vector<NodePtr> args = {}) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->args = std::move(args);
  return n;
}

class Parser {
 public:
  Parser(std::string_view text, int line, int col0) : s_(text), line_(line), col0_(col0) {}

  NodePtr run() {
    NodePtr e = expr();
    skip();
    if (pos_ < s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::string where = line_ > 0 ? "line " + std::to_string(line_) + ", " : "";
    where += "column " + std::to_string(col0_ + static_cast<int>(pos_) + 1);
    throw Error(ErrorCode::kParseError, where + ": " + what);
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
    NodePtr lhs = term();
    for (;;) {
      if (eat('+')) lhs = make(Kind::kAdd, {lhs, term()});
      else if (eat('-')) lhs = make(Kind::kSub, {lhs, term()});
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (eat('*')) lhs = make(Kind::kMul, {lhs, unary()});
      else if (eat('/')) lhs = make(Kind::kDiv, {lhs, unary()});
      else return lhs;
    }
  }

  NodePtr unary() {
    if (eat('-')) return make(Kind::kNegate, {unary()});
    if (eat('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (eat('^')) return make(Kind::kPow, {base, unary()});
    return base;
  }

  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return name();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
      ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      if (q < s_.size() && (s_[q] == '+' || s_[q] == '-')) ++q;
      if (q < s_.size() && std::isdigit(static_cast<unsigned char>(s_[q]))) {
        pos_ = q;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    const auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != s_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::kNumber;
    n->value = v;
    return n;
  }

  NodePtr name() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    const std::string_view id = s_.substr(start, pos_ - start);
    static const std::pair<std::string_view, Var> vars[] = {
        {"x1", Var::kX1}, {"y1", Var::kY1}, {"x2", Var::kX2}, {"y2", Var::kY2},
        {"r", Var::kR},   {"r1", Var::kR1}, {"r2", Var::kR2}};
    for (const auto& [vn, v] : vars) {
      if (id == vn) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::kVariable;
        n->var = v;
        return n;
      }
    }
    static const std::pair<std::string_view, Func> funcs[] = {{"min", Func::kMin},
                                                              {"max", Func::kMax},
                                                              {"exp", Func::kExp},
                                                              {"log", Func::kLog},
                                                              {"abs", Func::kAbs}};
    for (const auto& [fname, f] : funcs) {
      if (id != fname) continue;
      if (!eat('(')) fail("expected '(' after " + std::string(id));
      std::vector<NodePtr> args{expr()};
      while (eat(',')) args.push_back(expr());
      if (!eat(')')) fail("expected ')' closing " + std::string(id));
      const bool variadic = f == Func::kMin || f == Func::kMax;
      if (variadic ? args.size() < 2 : args.size() != 1) {
        fail(std::string(id) + (variadic ? " takes two or more arguments" : " takes one argument"));
      }
      auto n = std::make_shared<Node>();
      n->kind = Kind::kCall;
      n->func = f;
      n->args = std::move(args);
      return n;
    }
    pos_ = start;
    fail("unknown name '" + std::string(id) + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
  int col0_;
};

// Binding strength used by the printer.
int precedence(const Node& n) {
  switch (n.kind) {
    case Kind::kAdd:
    case Kind::kSub: return 1;
    case Kind::kMul:
    case Kind::kDiv: return 2;
    case Kind::kNegate: return 3;
    case Kind::kPow: return 4;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Shortest representation that still round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char tmp[32];
    std::snprintf(tmp, sizeof tmp, "%.*g", prec, v);
    if (std::strtod(tmp, nullptr) == v) return tmp;
  }
  return buf;
}

const char* var_name(Var v) {
  switch (v) {
    case Var::kX1: return "x1";
    case Var::kY1: return "y1";
    case Var::kX2: return "x2";
    case Var::kY2: return "y2";
    case Var::kR: return "r";
    case Var::kR1: return "r1";
    case Var::kR2: return "r2";
  }
  return "?";
}

const char* func_name(Func f) {
  switch (f) {
    case Func::kMin: return "min";
    case Func::kMax: return "max";
    case Func::kExp: return "exp";
    case Func::kLog: return "log";
    case Func::kAbs: return "abs";
  }
  return "?";
}

void print_node(const Node& n, std::string& out) {
  auto child = [&](const Node& c, bool paren) {
    if (paren) out += '(';
    print_node(c, out);
    if (paren) out += ')';
  };
  const int pr = precedence(n);
  switch (n.kind) {
    case Kind::kNumber: out += format_number(n.value); return;
    case Kind::kVariable: out += var_name(n.var); return;
    case Kind::kNegate:
      out += '-';
      child(*n.args[0], precedence(*n.args[0]) < 3 || n.args[0]->kind == Kind::kNegate);
      return;
    case Kind::kPow:
      child(*n.args[0], precedence(*n.args[0]) <= 4);
      out += '^';
      child(*n.args[1], precedence(*n.args[1]) < 3);
      return;
    case Kind::kCall:
      out += func_name(n.func);
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        print_node(*n.args[i], out);
      }
      out += ')';
      return;
    default: {
      const char* op = n.kind == Kind::kAdd ? " + " : n.kind == Kind::kSub ? " - "
                     : n.kind == Kind::kMul ? "*" : "/";
      child(*n.args[0], precedence(*n.args[0]) < pr);
      out += op;
      child(*n.args[1], precedence(*n.args[1]) <= pr);
      return;
    }
  }
}

bool equal_nodes(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
    case Kind::kNumber:
      if (!(a.value == b.value || (std::isnan(a.value) && std::isnan(b.value)))) return false;
      break;
    case Kind::kVariable:
      if (a.var != b.var) return false;
      break;
    case Kind::kCall:
      if (a.func != b.func) return false;
      break;
    default: break;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!equal_nodes(*a.args[i], *b.args[i])) return false;
  return true;
}

[[noreturn]] void guard(const std::string& what) { throw Error(ErrorCode::kEvalGuard, what); }

double eval_node(const Node& n, const Point& z) {
  switch (n.kind) {
    case Kind::kNumber: return n.value;
    case Kind::kVariable:
      switch (n.var) {
        case Var::kX1: return z[0];
        case Var::kY1: return z[1];
        case Var::kX2: return z[2];
        case Var::kY2: return z[3];
        case Var::kR: return std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2] + z[3] * z[3]);
        case Var::kR1: return std::hypot(z[0], z[1]);
        case Var::kR2: return std::hypot(z[2], z[3]);
      }
      return 0.0;
    case Kind::kNegate: return -eval_node(*n.args[0], z);
    case Kind::kAdd: return eval_node(*n.args[0], z) + eval_node(*n.args[1], z);
    case Kind::kSub: return eval_node(*n.args[0], z) - eval_node(*n.args[1], z);
    case Kind::kMul: return eval_node(*n.args[0], z) * eval_node(*n.args[1], z);
    case Kind::kDiv: {
      const double den = eval_node(*n.args[1], z);
      if (den == 0.0) guard("division by zero");
      return eval_node(*n.args[0], z) / den;
    }
    case Kind::kPow: {
      const double v = std::pow(eval_node(*n.args[0], z), eval_node(*n.args[1], z));
      if (!std::isfinite(v)) guard("power is not a finite real number");
      return v;
    }
    case Kind::kCall: {
      if (n.func == Func::kMin || n.func == Func::kMax) {
        double v = eval_node(*n.args[0], z);
        for (std::size_t i = 1; i < n.args.size(); ++i) {
          const double w = eval_node(*n.args[i], z);
          v = n.func == Func::kMin ? std::min(v, w) : std::max(v, w);
        }
        return v;
      }
      const double a = eval_node(*n.args[0], z);
      if (n.func == Func::kExp) {
        const double v = std::exp(a);
        if (!std::isfinite(v)) guard("exp overflow");
        return v;
      }
      if (n.func == Func::kAbs) return std::abs(a);
      if (!(a > 0.0)) guard("log of a non-positive value");
      return std::log(a);
    }
  }
  return 0.0;
}

bool has_variable(const Node& n, const std::function<bool(Var)>& pred) {
  if (n.kind == Kind::kVariable) return pred(n.var);
  for (const auto& a : n.args)
    if (has_variable(*a, pred)) return true;
  return false;
}

}  // namespace

Expression::Expression() : root_(make(Kind::kNumber)), source_("0") {}

Expression Expression::parse(std::string_view text, int line, int column_offset) {
  Expression e;
  e.root_ = Parser(text, line, column_offset).run();
  e.source_ = std::string(text);
  return e;
}

Expression Expression::constant(double v) {
  Expression e;
  auto n = std::make_shared<Node>();
  n->kind = Kind::kNumber;
  n->value = std::abs(v);
  e.root_ = v < 0.0 ? make(Kind::kNegate, {n}) : NodePtr(n);
  e.source_ = e.print();
  return e;
}

std::string Expression::print() const {
  std::string out;
  print_node(*root_, out);
  return out;
}

double Expression::evaluate(const Point& z) const {
  const double v = eval_node(*root_, z);
  if (!std::isfinite(v)) guard("non-finite value");
  return v;
}

bool Expression::is_constant(double* value) const {
  if (has_variable(*root_, [](Var) { return true; })) return false;
  if (value) *value = eval_node(*root_, Point{});
  return true;
}

bool Expression::uses_second_variable() const {
  return has_variable(*root_, [](Var v) { return v == Var::kX2 || v == Var::kY2 || v == Var::kR2; });
}

bool Expression::operator==(const Expression& other) const {
  return equal_nodes(*root_, *other.root_);
}

}  // namespace mscap
