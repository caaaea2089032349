#pragma once

// Tiny expression trees for field data given in text form (vector potentials,
// scalar potentials, metric entries). Variables are x1..x4. The point of
// rolling our own instead of binding a CAS: we need exact derivatives of
// exactly this grammar, nothing more, and the trees stay small enough that a
// shared_ptr DAG with constant folding is plenty.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>
#include <string_view>

#include "magweyl/types.hpp"

namespace magweyl {

class Expr {
  enum class K { num, var, add, sub, mul, div, pow, neg, sin, cos, exp };

  struct Node {
    K k;
    double value = 0;          // num
    int var = -1;              // var, 0-based
    std::shared_ptr<const Node> a, b;
  };
  using P = std::shared_ptr<const Node>;

  P n_;
  explicit Expr(P n) : n_(std::move(n)) {}

  static Expr make(K k, Expr a, Expr b = Expr()) {
    auto n = std::make_shared<Node>();
    n->k = k;
    n->a = a.n_;
    n->b = b.n_;
    return Expr(std::move(n));
  }

 public:
  Expr() = default;
  bool empty() const { return !n_; }

  static Expr constant(double v) {
    auto n = std::make_shared<Node>();
    n->k = K::num;
    n->value = v;
    return Expr(std::move(n));
  }
  static Expr variable(int idx) {
    if (idx < 0 || idx > 3) throw Error(ErrorKind::usage, "variable index out of range");
    auto n = std::make_shared<Node>();
    n->k = K::var;
    n->var = idx;
    return Expr(std::move(n));
  }

  bool is_const(double v) const { return n_ && n_->k == K::num && n_->value == v; }
  bool is_const() const { return n_ && n_->k == K::num; }
  double const_value() const { return n_->value; }

  // smart constructors fold constants so derivatives stay readable and cheap
  friend Expr operator+(Expr a, Expr b) {
    if (a.is_const(0)) return b;
    if (b.is_const(0)) return a;
    if (a.is_const() && b.is_const()) return constant(a.const_value() + b.const_value());
    return make(K::add, std::move(a), std::move(b));
  }
  friend Expr operator-(Expr a, Expr b) {
    if (b.is_const(0)) return a;
    if (a.is_const() && b.is_const()) return constant(a.const_value() - b.const_value());
    if (a.is_const(0)) return -std::move(b);
    return make(K::sub, std::move(a), std::move(b));
  }
  friend Expr operator*(Expr a, Expr b) {
    if (a.is_const(0) || b.is_const(0)) return constant(0);
    if (a.is_const(1)) return b;
    if (b.is_const(1)) return a;
    if (a.is_const() && b.is_const()) return constant(a.const_value() * b.const_value());
    return make(K::mul, std::move(a), std::move(b));
  }
  friend Expr operator/(Expr a, Expr b) {
    if (a.is_const(0)) return constant(0);
    if (b.is_const(1)) return a;
    if (a.is_const() && b.is_const()) return constant(a.const_value() / b.const_value());
    return make(K::div, std::move(a), std::move(b));
  }
  friend Expr operator-(Expr a) {
    if (a.is_const()) return constant(-a.const_value());
    return make(K::neg, std::move(a));
  }
  static Expr pow(Expr base, Expr expo) {
    if (expo.is_const(1)) return base;
    if (expo.is_const(0)) return constant(1);
    if (base.is_const() && expo.is_const())
      return constant(std::pow(base.const_value(), expo.const_value()));
    return make(K::pow, std::move(base), std::move(expo));
  }
  static Expr sin(Expr a) {
    if (a.is_const()) return constant(std::sin(a.const_value()));
    return make(K::sin, std::move(a));
  }
  static Expr cos(Expr a) {
    if (a.is_const()) return constant(std::cos(a.const_value()));
    return make(K::cos, std::move(a));
  }
  static Expr exp(Expr a) {
    if (a.is_const()) return constant(std::exp(a.const_value()));
    return make(K::exp, std::move(a));
  }

  double eval(const Vec& x) const {
    if (!n_) return 0.0;
    return eval_(n_.get(), x);
  }

  Expr diff(int idx) const {
    if (!n_) return constant(0);
    return diff_(n_.get(), idx);
  }

  bool depends_on_any() const { return n_ && depends_(n_.get()); }

  // --- parsing -------------------------------------------------------------

  static Expr parse(std::string_view src) {
    Parser p{src, 0};
    Expr e = p.expr();
    p.skip_ws();
    if (p.pos != src.size())
      throw Error(ErrorKind::usage,
                  "trailing characters in expression at offset " + std::to_string(p.pos));
    return e;
  }

 private:
  static double eval_(const Node* n, const Vec& x) {
    switch (n->k) {
      case K::num: return n->value;
      case K::var:
        if (n->var >= x.size())
          throw Error(ErrorKind::usage,
                      "expression uses x" + std::to_string(n->var + 1) + " beyond dimension");
        return x[n->var];
      case K::add: return eval_(n->a.get(), x) + eval_(n->b.get(), x);
      case K::sub: return eval_(n->a.get(), x) - eval_(n->b.get(), x);
      case K::mul: return eval_(n->a.get(), x) * eval_(n->b.get(), x);
      case K::div: return eval_(n->a.get(), x) / eval_(n->b.get(), x);
      case K::pow: return std::pow(eval_(n->a.get(), x), eval_(n->b.get(), x));
      case K::neg: return -eval_(n->a.get(), x);
      case K::sin: return std::sin(eval_(n->a.get(), x));
      case K::cos: return std::cos(eval_(n->a.get(), x));
      case K::exp: return std::exp(eval_(n->a.get(), x));
    }
    return 0;
  }

  static bool depends_(const Node* n) {
    if (n->k == K::var) return true;
    if (n->k == K::num) return false;
    if (n->a && depends_(n->a.get())) return true;
    return n->b && depends_(n->b.get());
  }

  static Expr diff_(const Node* n, int idx) {
    const Expr A(n->a), B(n->b);
    switch (n->k) {
      case K::num: return constant(0);
      case K::var: return constant(n->var == idx ? 1 : 0);
      case K::add: return A.diff(idx) + B.diff(idx);
      case K::sub: return A.diff(idx) - B.diff(idx);
      case K::mul: return A.diff(idx) * B + A * B.diff(idx);
      case K::div: return (A.diff(idx) * B - A * B.diff(idx)) / (B * B);
      case K::pow: {
        // only constant exponents are differentiable in this grammar
        if (!B.is_const())
          throw Error(ErrorKind::domain, "cannot differentiate a non-constant exponent");
        const double p = B.const_value();
        return constant(p) * pow(A, constant(p - 1)) * A.diff(idx);
      }
      case K::neg: return -A.diff(idx);
      case K::sin: return cos(A) * A.diff(idx);
      case K::cos: return -(sin(A) * A.diff(idx));
      case K::exp: return exp(A) * A.diff(idx);
    }
    return constant(0);
  }

  struct Parser {
    std::string_view s;
    size_t pos;

    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip_ws();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    char peek() {
      skip_ws();
      return pos < s.size() ? s[pos] : '\0';
    }

    Expr expr() {
      Expr e = term();
      for (;;) {
        if (eat('+')) e = e + term();
        else if (eat('-')) e = e - term();
        else return e;
      }
    }
    Expr term() {
      Expr e = unary();
      for (;;) {
        if (eat('*')) e = e * unary();
        else if (eat('/')) e = e / unary();
        else return e;
      }
    }
    Expr unary() {
      if (eat('-')) return -unary();
      return power();
    }
    Expr power() {
      Expr base = atom();
      if (eat('^')) return Expr::pow(std::move(base), unary());  // right-assoc
      return base;
    }
    Expr atom() {
      skip_ws();
      if (pos >= s.size()) throw Error(ErrorKind::usage, "unexpected end of expression");
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = s.data() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        pos += static_cast<size_t>(end - begin);
        return Expr::constant(v);
      }
      if (c == '(') {
        ++pos;
        Expr e = expr();
        if (!eat(')')) throw Error(ErrorKind::usage, "missing ')'");
        return e;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t start = pos;
        while (pos < s.size() &&
               (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
          ++pos;
        std::string_view id = s.substr(start, pos - start);
        if (id.size() == 2 && id[0] == 'x' && id[1] >= '1' && id[1] <= '4')
          return Expr::variable(id[1] - '1');
        if (id == "pi") return Expr::constant(M_PI);
        if (!eat('(')) throw Error(ErrorKind::usage, "unknown name '" + std::string(id) + "'");
        Expr arg = expr();
        if (!eat(')')) throw Error(ErrorKind::usage, "missing ')' after argument");
        if (id == "sin") return Expr::sin(std::move(arg));
        if (id == "cos") return Expr::cos(std::move(arg));
        if (id == "exp") return Expr::exp(std::move(arg));
        throw Error(ErrorKind::usage, "unknown function '" + std::string(id) + "'");
      }
      throw Error(ErrorKind::usage, std::string("unexpected character '") + c + "'");
    }
  };
};

}  // namespace magweyl
