#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fm/diagnostic.hpp"

namespace fm {

enum class ScalarType { Int, Dec, Str, Bool };

inline const char* type_name(ScalarType t) {
  switch (t) {
    case ScalarType::Int: return "int";
    case ScalarType::Dec: return "dec";
    case ScalarType::Str: return "str";
    case ScalarType::Bool: return "bool";
  }
  return "?";
}

using Value = std::variant<std::int64_t, double, std::string, bool>;

inline ScalarType type_of(const Value& v) { return static_cast<ScalarType>(v.index()); }

/// Decimal text that reads back to the same double.
inline std::string format_decimal(double d) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string quote_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + '"';
}

/// Source-form rendering of a literal.
inline std::string format_value(const Value& v) {
  switch (type_of(v)) {
    case ScalarType::Int: return std::to_string(std::get<std::int64_t>(v));
    case ScalarType::Dec: return format_decimal(std::get<double>(v));
    case ScalarType::Str: return quote_string(std::get<std::string>(v));
    case ScalarType::Bool: return std::get<bool>(v) ? "true" : "false";
  }
  return {};
}

enum class Op { Eq, Ne, Lt, Le, Gt, Ge, And, Or, Not, Add, Sub, Mul, Div, Neg };

inline const char* op_text(Op op) {
  switch (op) {
    case Op::Eq: return "=";
    case Op::Ne: return "!=";
    case Op::Lt: return "<";
    case Op::Le: return "<=";
    case Op::Gt: return ">";
    case Op::Ge: return ">=";
    case Op::And: return "and";
    case Op::Or: return "or";
    case Op::Not: return "not";
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Neg: return "-";
  }
  return "?";
}

/// Guard, spawn and assign expressions over the attributes of one thing.
struct Expr {
  enum class Kind { Literal, Attr, Unary, Binary };
  Kind kind = Kind::Literal;
  Value literal{std::int64_t{0}};
  std::string attr;
  Op op = Op::Eq;
  std::vector<Expr> args;
  SourceSpan span;

  static Expr lit(Value v) {
    Expr e;
    e.literal = std::move(v);
    return e;
  }
  static Expr ref(std::string name) {
    Expr e;
    e.kind = Kind::Attr;
    e.attr = std::move(name);
    return e;
  }
  static Expr unary(Op op, Expr a) {
    Expr e;
    e.kind = Kind::Unary;
    e.op = op;
    e.args.push_back(std::move(a));
    return e;
  }
  static Expr binary(Op op, Expr a, Expr b) {
    Expr e;
    e.kind = Kind::Binary;
    e.op = op;
    e.args.push_back(std::move(a));
    e.args.push_back(std::move(b));
    return e;
  }
};

/// Fully parenthesised source text; reparses to the same tree.
inline std::string to_source(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Literal: return format_value(e.literal);
    case Expr::Kind::Attr: return e.attr;
    case Expr::Kind::Unary:
      return e.op == Op::Not ? "(not " + to_source(e.args[0]) + ")" : "(-" + to_source(e.args[0]) + ")";
    case Expr::Kind::Binary:
      return "(" + to_source(e.args[0]) + " " + op_text(e.op) + " " + to_source(e.args[1]) + ")";
  }
  return {};
}

using AttrTypes = std::map<std::string, ScalarType, std::less<>>;
using AttrMap = std::map<std::string, Value, std::less<>>;

/// Static type of `e` against an attribute schema, or an error message.
inline std::variant<ScalarType, std::string> type_check(const Expr& e, const AttrTypes& attrs) {
  using R = std::variant<ScalarType, std::string>;
  auto numeric = [](ScalarType t) { return t == ScalarType::Int || t == ScalarType::Dec; };
  switch (e.kind) {
    case Expr::Kind::Literal: return type_of(e.literal);
    case Expr::Kind::Attr: {
      auto it = attrs.find(e.attr);
      if (it == attrs.end()) return R{"unknown attribute '" + e.attr + "'"};
      return it->second;
    }
    case Expr::Kind::Unary: {
      auto a = type_check(e.args[0], attrs);
      if (auto* err = std::get_if<std::string>(&a)) return *err;
      ScalarType t = std::get<ScalarType>(a);
      if (e.op == Op::Not) {
        if (t != ScalarType::Bool) return R{"'not' needs a bool operand"};
        return ScalarType::Bool;
      }
      if (!numeric(t)) return R{"unary '-' needs a numeric operand"};
      return t;
    }
    case Expr::Kind::Binary: {
      auto a = type_check(e.args[0], attrs);
      if (auto* err = std::get_if<std::string>(&a)) return *err;
      auto b = type_check(e.args[1], attrs);
      if (auto* err = std::get_if<std::string>(&b)) return *err;
      ScalarType l = std::get<ScalarType>(a), r = std::get<ScalarType>(b);
      switch (e.op) {
        case Op::And:
        case Op::Or:
          if (l != ScalarType::Bool || r != ScalarType::Bool)
            return R{std::string("'") + op_text(e.op) + "' needs bool operands"};
          return ScalarType::Bool;
        case Op::Eq:
        case Op::Ne:
          if (l == r || (numeric(l) && numeric(r))) return ScalarType::Bool;
          return R{std::string("cannot compare ") + type_name(l) + " with " + type_name(r)};
        case Op::Lt:
        case Op::Le:
        case Op::Gt:
        case Op::Ge:
          if ((numeric(l) && numeric(r)) || (l == ScalarType::Str && r == ScalarType::Str)) return ScalarType::Bool;
          return R{std::string("cannot order ") + type_name(l) + " against " + type_name(r)};
        default:
          if (!numeric(l) || !numeric(r)) return R{std::string("'") + op_text(e.op) + "' needs numeric operands"};
          return (l == ScalarType::Dec || r == ScalarType::Dec) ? ScalarType::Dec : ScalarType::Int;
      }
    }
  }
  return R{"malformed expression"};
}

struct EvalError {
  std::string message;
};

using EvalResult = std::variant<Value, EvalError>;

namespace detail {

inline double as_double(const Value& v) {
  return type_of(v) == ScalarType::Int ? static_cast<double>(std::get<std::int64_t>(v)) : std::get<double>(v);
}

inline int compare_values(const Value& a, const Value& b) {
  if (type_of(a) == ScalarType::Int && type_of(b) == ScalarType::Int) {
    auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  if (type_of(a) == ScalarType::Str) {
    int c = std::get<std::string>(a).compare(std::get<std::string>(b));
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  if (type_of(a) == ScalarType::Bool) return static_cast<int>(std::get<bool>(a)) - static_cast<int>(std::get<bool>(b));
  double x = as_double(a), y = as_double(b);
  return x < y ? -1 : (x > y ? 1 : 0);
}

}  // namespace detail

/// Evaluates a type-checked expression. Division by zero and missing
/// attributes are reported as EvalError, never thrown.
inline EvalResult evaluate(const Expr& e, const AttrMap& attrs) {
  switch (e.kind) {
    case Expr::Kind::Literal: return e.literal;
    case Expr::Kind::Attr: {
      auto it = attrs.find(e.attr);
      if (it == attrs.end()) return EvalError{"attribute '" + e.attr + "' not set"};
      return it->second;
    }
    case Expr::Kind::Unary: {
      auto a = evaluate(e.args[0], attrs);
      if (auto* err = std::get_if<EvalError>(&a)) return *err;
      const Value& v = std::get<Value>(a);
      if (e.op == Op::Not) {
        if (type_of(v) != ScalarType::Bool) return EvalError{"type mismatch in 'not'"};
        return Value{!std::get<bool>(v)};
      }
      if (type_of(v) == ScalarType::Int) return Value{-std::get<std::int64_t>(v)};
      if (type_of(v) == ScalarType::Dec) return Value{-std::get<double>(v)};
      return EvalError{"type mismatch in unary '-'"};
    }
    case Expr::Kind::Binary: break;
  }

  auto a = evaluate(e.args[0], attrs);
  if (auto* err = std::get_if<EvalError>(&a)) return *err;
  const Value& l = std::get<Value>(a);
  if (e.op == Op::And || e.op == Op::Or) {
    if (type_of(l) != ScalarType::Bool) return EvalError{"type mismatch in boolean operator"};
    bool lv = std::get<bool>(l);
    if (e.op == Op::And && !lv) return Value{false};
    if (e.op == Op::Or && lv) return Value{true};
  }
  auto b = evaluate(e.args[1], attrs);
  if (auto* err = std::get_if<EvalError>(&b)) return *err;
  const Value& r = std::get<Value>(b);

  auto numeric = [](const Value& v) { return type_of(v) == ScalarType::Int || type_of(v) == ScalarType::Dec; };
  switch (e.op) {
    case Op::And:
    case Op::Or:
      if (type_of(r) != ScalarType::Bool) return EvalError{"type mismatch in boolean operator"};
      return Value{std::get<bool>(r)};
    case Op::Eq:
    case Op::Ne:
    case Op::Lt:
    case Op::Le:
    case Op::Gt:
    case Op::Ge: {
      if (type_of(l) != type_of(r) && !(numeric(l) && numeric(r))) return EvalError{"type mismatch in comparison"};
      int c = detail::compare_values(l, r);
      bool res = e.op == Op::Eq   ? c == 0
                 : e.op == Op::Ne ? c != 0
                 : e.op == Op::Lt ? c < 0
                 : e.op == Op::Le ? c <= 0
                 : e.op == Op::Gt ? c > 0
                                  : c >= 0;
      return Value{res};
    }
    default: break;
  }
  if (!numeric(l) || !numeric(r)) return EvalError{"type mismatch in arithmetic"};
  if (type_of(l) == ScalarType::Int && type_of(r) == ScalarType::Int) {
    std::int64_t x = std::get<std::int64_t>(l), y = std::get<std::int64_t>(r);
    switch (e.op) {
      case Op::Add: return Value{x + y};
      case Op::Sub: return Value{x - y};
      case Op::Mul: return Value{x * y};
      case Op::Div:
        if (y == 0) return EvalError{"division by zero"};
        return Value{x / y};
      default: break;
    }
  }
  double x = detail::as_double(l), y = detail::as_double(r);
  switch (e.op) {
    case Op::Add: return Value{x + y};
    case Op::Sub: return Value{x - y};
    case Op::Mul: return Value{x * y};
    case Op::Div:
      if (y == 0.0) return EvalError{"division by zero"};
      return Value{x / y};
    default: break;
  }
  return EvalError{"unsupported operator"};
}

/// Convenience for guards: true/false, or nullopt on evaluation failure.
inline std::optional<bool> eval_guard(const Expr& guard, const AttrMap& attrs) {
  auto r = evaluate(guard, attrs);
  if (std::holds_alternative<EvalError>(r)) return std::nullopt;
  const Value& v = std::get<Value>(r);
  if (type_of(v) != ScalarType::Bool) return std::nullopt;
  return std::get<bool>(v);
}

/// Coerces an int into a dec slot; other mismatches are left for type checks.
inline Value coerce(Value v, ScalarType target) {
  if (target == ScalarType::Dec && type_of(v) == ScalarType::Int)
    return Value{static_cast<double>(std::get<std::int64_t>(v))};
  return v;
}

}  // namespace fm
