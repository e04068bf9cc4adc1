#pragma once
// Closed-form scalar expressions over coordinates x1..xd, parsed with Boost.Spirit X3 and
// evaluated for double or forward-mode autodiff scalars.
//
// Grammar: + - * / ^ (right associative), unary minus, parentheses, numbers, the
// constants pi and e, named parameters, and sin cos tan exp log sqrt abs tanh sinh cosh.
// Coordinates are x1, x2, ...; x, y, z alias x1, x2, x3.

#include "lorentz/common.hpp"

#include <boost/fusion/include/adapt_struct.hpp>
#include <boost/math/differentiation/autodiff.hpp>
#include <boost/optional.hpp>
#include <boost/spirit/home/x3.hpp>
#include <boost/spirit/home/x3/support/ast/variant.hpp>

#include <list>
#include <map>
#include <memory>
#include <string>

namespace lorentz::expr {

namespace syntax {
namespace x3 = boost::spirit::x3;

struct signed_;
struct expression;
struct named;

struct operand : x3::variant<double, x3::forward_ast<signed_>, x3::forward_ast<expression>, x3::forward_ast<named>> {
  using base_type::base_type;
  using base_type::operator=;
};

struct signed_ {
  char sign;
  operand operand_;
};

struct operation {
  char operator_;
  operand operand_;
};

struct expression {
  operand first;
  std::list<operation> rest;
};

struct named {
  std::string name;
  boost::optional<std::list<expression>> args;
};
}  // namespace syntax
}  // namespace lorentz::expr

BOOST_FUSION_ADAPT_STRUCT(lorentz::expr::syntax::signed_, sign, operand_)
BOOST_FUSION_ADAPT_STRUCT(lorentz::expr::syntax::operation, operator_, operand_)
BOOST_FUSION_ADAPT_STRUCT(lorentz::expr::syntax::expression, first, rest)
BOOST_FUSION_ADAPT_STRUCT(lorentz::expr::syntax::named, name, args)

namespace lorentz::expr {

namespace grammar {
namespace x3 = boost::spirit::x3;
using x3::alnum;
using x3::alpha;
using x3::char_;
using x3::double_;
using x3::lexeme;

x3::rule<class additive, syntax::expression> const additive = "additive";
x3::rule<class multiplicative, syntax::expression> const multiplicative = "multiplicative";
x3::rule<class power, syntax::expression> const power = "power";
x3::rule<class unary, syntax::operand> const unary = "unary";
x3::rule<class primary, syntax::operand> const primary = "primary";
x3::rule<class named_, syntax::named> const named_ = "named";
x3::rule<class identifier, std::string> const identifier = "identifier";
x3::rule<class arglist, std::list<syntax::expression>> const arglist = "arglist";

auto const identifier_def = lexeme[(alpha | char_('_')) >> *(alnum | char_('_'))];
auto const arglist_def = '(' >> (additive % ',') >> ')';
auto const named__def = identifier >> -arglist;
auto const primary_def = double_ | named_ | ('(' >> additive >> ')');
auto const unary_def = (char_("-+") >> unary) | power;
auto const power_def = primary >> *(char_('^') >> unary);
auto const multiplicative_def = unary >> *(char_("*/") >> unary);
auto const additive_def = multiplicative >> *(char_("+-") >> multiplicative);

BOOST_SPIRIT_DEFINE(additive, multiplicative, power, unary, primary, named_, identifier, arglist)
}  // namespace grammar

// ---------------------------------------------------------------------------
// lowered tree

enum class Op { constant, variable, neg, add, sub, mul, div, pow, sin, cos, tan, exp, log, sqrt, abs, tanh, sinh, cosh };

struct Node {
  Op op = Op::constant;
  double value = 0.0;
  int index = 0;
  std::shared_ptr<const Node> a, b;
};
using NodePtr = std::shared_ptr<const Node>;

namespace detail {

inline NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

inline NodePtr constant(double v) {
  auto n = std::make_shared<Node>();
  n->value = v;
  return n;
}

struct Lowering {
  int dim;
  const std::map<std::string, double>& params;
  int max_index = 0;

  int coordinate(const std::string& s) const {
    if (s == "x") return 0;
    if (s == "y") return 1;
    if (s == "z") return 2;
    if (s.size() >= 2 && s[0] == 'x' && std::all_of(s.begin() + 1, s.end(), ::isdigit)) {
      const int k = std::stoi(s.substr(1));
      if (k >= 1) return k - 1;
    }
    return -1;
  }

  NodePtr operator()(double v) { return constant(v); }
  NodePtr operator()(const syntax::signed_& s) {
    NodePtr o = boost::apply_visitor(*this, s.operand_);
    return s.sign == '-' ? make(Op::neg, o) : o;
  }
  NodePtr operator()(const syntax::named& n) {
    if (!n.args) {
      if (n.name == "pi") return constant(M_PI);
      if (n.name == "e") return constant(M_E);
      if (auto it = params.find(n.name); it != params.end()) return constant(it->second);
      const int k = coordinate(n.name);
      if (k < 0) throw Error(Errc::invalid_input, "unknown name '" + n.name + "' in expression");
      if (k >= dim) throw Error(Errc::invalid_input, "coordinate '" + n.name + "' exceeds dimension " + std::to_string(dim));
      auto v = std::make_shared<Node>();
      v->op = Op::variable;
      v->index = k;
      max_index = std::max(max_index, k + 1);
      return v;
    }
    static const std::map<std::string, Op> fns{{"sin", Op::sin},   {"cos", Op::cos},   {"tan", Op::tan},
                                               {"exp", Op::exp},   {"log", Op::log},   {"sqrt", Op::sqrt},
                                               {"abs", Op::abs},   {"tanh", Op::tanh}, {"sinh", Op::sinh},
                                               {"cosh", Op::cosh}};
    auto it = fns.find(n.name);
    if (it == fns.end()) throw Error(Errc::invalid_input, "unknown function '" + n.name + "'");
    if (n.args->size() != 1) throw Error(Errc::invalid_input, "function '" + n.name + "' takes one argument");
    return make(it->second, (*this)(n.args->front()));
  }
  NodePtr operator()(const syntax::expression& e) {
    // '^' is the only right-associative operator and never mixes with the others in one list
    std::vector<NodePtr> terms{boost::apply_visitor(*this, e.first)};
    std::vector<char> ops;
    for (auto& o : e.rest) {
      ops.push_back(o.operator_);
      terms.push_back(boost::apply_visitor(*this, o.operand_));
    }
    if (!ops.empty() && ops.front() == '^') {
      NodePtr acc = terms.back();
      for (std::size_t i = terms.size() - 1; i-- > 0;) acc = make(Op::pow, terms[i], acc);
      return acc;
    }
    NodePtr acc = terms.front();
    for (std::size_t i = 0; i < ops.size(); ++i) {
      const Op op = ops[i] == '+' ? Op::add : ops[i] == '-' ? Op::sub : ops[i] == '*' ? Op::mul : Op::div;
      acc = make(op, acc, terms[i + 1]);
    }
    return acc;
  }
};

}  // namespace detail

template <class T>
T evaluate(const Node& n, const T* x) {
  using std::abs, std::cos, std::cosh, std::exp, std::log, std::pow, std::sin, std::sinh, std::sqrt, std::tan,
      std::tanh;
  switch (n.op) {
    case Op::constant: return T(n.value);
    case Op::variable: return x[n.index];
    case Op::neg: return -evaluate(*n.a, x);
    case Op::add: return evaluate(*n.a, x) + evaluate(*n.b, x);
    case Op::sub: return evaluate(*n.a, x) - evaluate(*n.b, x);
    case Op::mul: return evaluate(*n.a, x) * evaluate(*n.b, x);
    case Op::div: return evaluate(*n.a, x) / evaluate(*n.b, x);
    case Op::pow: {
      if (n.b->op == Op::constant) return pow(evaluate(*n.a, x), n.b->value);
      return exp(evaluate(*n.b, x) * log(evaluate(*n.a, x)));
    }
    case Op::sin: return sin(evaluate(*n.a, x));
    case Op::cos: return cos(evaluate(*n.a, x));
    case Op::tan: return tan(evaluate(*n.a, x));
    case Op::exp: return exp(evaluate(*n.a, x));
    case Op::log: return log(evaluate(*n.a, x));
    case Op::sqrt: return sqrt(evaluate(*n.a, x));
    case Op::abs: return abs(evaluate(*n.a, x));
    case Op::tanh: return tanh(evaluate(*n.a, x));
    case Op::sinh: return sinh(evaluate(*n.a, x));
    case Op::cosh: return cosh(evaluate(*n.a, x));
  }
  return T(0);
}

/// A named closed-form function of the coordinates.
class Expression {
 public:
  Expression() = default;

  static Expression parse(const std::string& text, int dim, const std::map<std::string, double>& params = {}) {
    namespace x3 = boost::spirit::x3;
    syntax::expression tree;
    auto first = text.begin();
    const bool ok = x3::phrase_parse(first, text.end(), grammar::additive, x3::space, tree);
    if (!ok || first != text.end())
      throw Error(Errc::invalid_input, "cannot parse expression '" + text + "' near position " +
                                           std::to_string(first - text.begin()));
    detail::Lowering low{dim, params};
    Expression e;
    e.root_ = low(tree);
    e.text_ = text;
    e.dim_ = dim;
    return e;
  }

  static Expression constant(double c, int dim) {
    Expression e;
    e.root_ = detail::constant(c);
    e.text_ = std::to_string(c);
    e.dim_ = dim;
    return e;
  }

  bool valid() const { return root_ != nullptr; }
  const std::string& text() const { return text_; }
  int dim() const { return dim_; }

  double operator()(const Vec& x) const { return evaluate<double>(*root_, x.data()); }

  /// d/dt f(x + t v) at t = 0.
  double directional_derivative(const Vec& x, const Vec& v) const {
    using boost::math::differentiation::make_fvar;
    using F = boost::math::differentiation::autodiff_v1::detail::fvar<double, 1>;
    const F t = make_fvar<double, 1>(0.0);
    std::vector<F> xs;
    xs.reserve(x.size());
    for (int i = 0; i < x.size(); ++i) xs.push_back(x(i) + v(i) * t);
    return evaluate<F>(*root_, xs.data()).derivative(1);
  }

  /// Expression scaled by a constant factor.
  Expression scaled(double c) const {
    Expression e = *this;
    e.root_ = detail::make(Op::mul, detail::constant(c), root_);
    e.text_ = std::to_string(c) + "*(" + text_ + ")";
    return e;
  }

 private:
  NodePtr root_;
  std::string text_;
  int dim_ = 0;
};

}  // namespace lorentz::expr
