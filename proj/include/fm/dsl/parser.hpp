#pragma once

#include <cstdint>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fm/dsl/lexer.hpp"
#include "fm/model.hpp"

namespace fm::dsl {

struct ParseResult {
  Model model;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return !has_errors(diagnostics); }
};

inline constexpr std::size_t kUnresolvedKind = std::numeric_limits<std::size_t>::max();

namespace detail {

struct SyntaxError {
  Diagnostic diag;
};

struct PendingArc {
  Arc arc;
  std::string from_text, to_text;
  SourceSpan from_span, to_span;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::vector<Diagnostic>& diags) : toks_(std::move(toks)), diags_(diags) {}

  Model run() {
    while (!at(Tok::End)) {
      std::size_t from = i_;
      try {
        item();
      } catch (const SyntaxError& e) {
        diags_.push_back(e.diag);
        sync(from, {"thing", "sphere", "event", "behavior"});
        if (at(Tok::RBrace)) ++i_;
      }
    }
    resolve();
    return std::move(model_);
  }

 private:
  // -- token helpers --------------------------------------------------------
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(i_ + ahead, toks_.size() - 1)];
  }
  bool at(Tok k) const { return peek().kind == k; }
  bool at_word(std::string_view w) const { return at(Tok::Ident) && peek().text == w; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError{make_error("E_SYNTAX", msg, peek().span)};
  }

  const Token& expect(Tok k, const char* what = nullptr) {
    if (!at(k)) {
      std::string found = at(Tok::End) ? "end of input" : "'" + peek().text + "'";
      fail(std::string("expected ") + (what ? what : tok_name(k)) + ", found " + found);
    }
    return toks_[i_++];
  }

  void expect_word(std::string_view w) {
    if (!at_word(w)) fail("expected '" + std::string(w) + "'");
    ++i_;
  }

  bool accept(Tok k) {
    if (!at(k)) return false;
    ++i_;
    return true;
  }

  bool accept_word(std::string_view w) {
    if (!at_word(w)) return false;
    ++i_;
    return true;
  }

  // Error recovery: skips past whatever the failed construct (which began at
  // token `from`) left open, then to the next keyword in `keywords` or the
  // closing brace of the enclosing block. Always makes progress.
  void sync(std::size_t from, std::initializer_list<std::string_view> keywords) {
    int depth = 0;
    for (std::size_t k = from; k < i_ && k < toks_.size(); ++k) {
      if (toks_[k].kind == Tok::LBrace) ++depth;
      if (toks_[k].kind == Tok::RBrace && depth > 0) --depth;
    }
    if (i_ == from) ++i_;
    while (!at(Tok::End)) {
      if (depth == 0) {
        if (at(Tok::RBrace)) return;
        if (at(Tok::Ident))
          for (auto k : keywords)
            if (peek().text == k) return;
      }
      if (at(Tok::LBrace)) ++depth;
      if (at(Tok::RBrace)) --depth;
      ++i_;
    }
  }

  static SourceSpan join(const SourceSpan& a, const SourceSpan& b) { return {a.file, a.start, b.end}; }
  SourceSpan prev_span() const { return toks_[i_ == 0 ? 0 : i_ - 1].span; }

  // -- items ----------------------------------------------------------------
  void item() {
    if (at_word("thing")) return kind_decl();
    if (at_word("sphere")) {
      model_.spheres.push_back(sphere(""));
      return;
    }
    if (at_word("event")) return event_decl();
    if (at_word("behavior")) return behavior_decl();
    fail("expected 'thing', 'sphere', 'event' or 'behavior'");
  }

  ScalarType scalar_type() {
    const Token& t = expect(Tok::Ident, "attribute type");
    if (t.text == "int") return ScalarType::Int;
    if (t.text == "dec") return ScalarType::Dec;
    if (t.text == "str") return ScalarType::Str;
    if (t.text == "bool") return ScalarType::Bool;
    --i_;
    fail("unknown attribute type '" + t.text + "' (expected int, dec, str or bool)");
  }

  Value literal() {
    bool neg = false;
    if (at(Tok::Minus)) {
      neg = true;
      ++i_;
    }
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Int:
      case Tok::Dec:
        try {
          Value v = t.kind == Tok::Int ? Value{neg ? -std::stoll(t.text) : std::stoll(t.text)}
                                       : Value{neg ? -std::stod(t.text) : std::stod(t.text)};
          ++i_;
          return v;
        } catch (const std::out_of_range&) {
          fail("numeric literal out of range");
        }
      case Tok::String:
        if (neg) break;
        ++i_;
        return Value{t.text};
      case Tok::Ident:
        if (neg) break;
        if (t.text == "true" || t.text == "false") {
          ++i_;
          return Value{t.text == "true"};
        }
        break;
      default: break;
    }
    fail("expected a literal");
  }

  void kind_decl() {
    ++i_;
    ThingKind k;
    const Token& name = expect(Tok::Ident, "kind name");
    k.name = name.text;
    k.span = name.span;
    if (accept(Tok::LBrace)) {
      while (!accept(Tok::RBrace)) {
        const Token& attr = expect(Tok::Ident, "attribute name");
        expect(Tok::Colon);
        AttrDecl a{attr.text, scalar_type(), std::nullopt};
        if (accept(Tok::Eq)) {
          Value v = literal();
          a.default_value = coerce(std::move(v), a.type);
          if (type_of(*a.default_value) != a.type)
            diags_.push_back(make_error("E_SYNTAX", "default for '" + a.name + "' does not match its type", prev_span()));
        }
        if (k.find(a.name))
          diags_.push_back(make_error("E_DUPNAME", "attribute '" + a.name + "' declared twice in '" + k.name + "'", attr.span));
        else
          k.attrs.push_back(std::move(a));
        accept(Tok::Comma);
      }
    }
    if (model_.find_kind(k.name))
      diags_.push_back(make_error("E_DUPNAME", "thing kind '" + k.name + "' declared twice", k.span));
    else
      model_.kinds.push_back(std::move(k));
  }

  Sphere sphere(const std::string& parent) {
    ++i_;
    Sphere s;
    const Token& name = expect(Tok::Ident, "sphere name");
    s.name = name.text;
    s.span = name.span;
    std::string path = parent.empty() ? s.name : parent + "/" + s.name;
    expect(Tok::LBrace);
    while (!accept(Tok::RBrace)) {
      if (at(Tok::End)) fail("unterminated sphere '" + s.name + "'");
      std::size_t from = i_;
      try {
        if (at_word("sphere"))
          s.children.push_back(sphere(path));
        else if (at_word("machine"))
          s.machines.push_back(machine(path));
        else if (at_word("flow") || at_word("trigger"))
          arc(path);
        else
          fail("expected 'sphere', 'machine', 'flow' or 'trigger'");
      } catch (const SyntaxError& e) {
        diags_.push_back(e.diag);
        sync(from, {"sphere", "machine", "flow", "trigger"});
      }
    }
    return s;
  }

  std::size_t machine(const std::string& sphere_path) {
    ++i_;
    Machine m;
    const Token& name = expect(Tok::Ident, "machine name");
    m.name = name.text;
    m.span = name.span;
    m.sphere_path = sphere_path;
    expect(Tok::Colon);
    const Token& kind = expect(Tok::Ident, "thing kind");
    m.kind_name = kind.text;
    SourceSpan kind_span = kind.span;
    expect(Tok::LBrace);
    while (!accept(Tok::RBrace)) {
      if (at_word("assign")) {
        ++i_;
        expect(Tok::LBrace);
        while (!accept(Tok::RBrace)) {
          const Token& attr = expect(Tok::Ident, "attribute name");
          expect(Tok::Eq);
          m.assigns.push_back({attr.text, expr()});
          accept(Tok::Comma);
        }
        continue;
      }
      bool implicit = accept_word("implicit");
      const Token& st = expect(Tok::Ident, "stage name");
      auto stage = parse_stage(st.text);
      if (!stage) {
        --i_;
        fail("'" + st.text + "' is not a stage (create, process, release, transfer, receive)");
      }
      if (m.stages().contains(*stage))
        diags_.push_back(make_error("E_DUPNAME", "stage '" + st.text + "' declared twice on '" + m.name + "'", st.span));
      (implicit ? m.implicit : m.declared).insert(*stage);
    }
    model_.machines.push_back(std::move(m));
    kind_spans_.push_back(kind_span);
    return model_.machines.size() - 1;
  }

  std::string endpoint(SourceSpan& span) {
    const Token& first = expect(Tok::Ident, "endpoint");
    std::string text = first.text;
    while (accept(Tok::Slash)) text += "/" + expect(Tok::Ident, "sphere or machine name").text;
    expect(Tok::Dot, "'.' before the stage");
    text += "." + expect(Tok::Ident, "stage name").text;
    span = join(first.span, prev_span());
    return text;
  }

  std::string label() {
    std::string text = expect(Tok::Ident, "label").text;
    while (at(Tok::Dot) && peek(1).kind == Tok::Int) {
      ++i_;
      text += "." + toks_[i_++].text;
    }
    return text;
  }

  void arc(const std::string& sphere_path) {
    PendingArc p;
    SourceSpan start = peek().span;
    bool trigger = at_word("trigger");
    ++i_;
    p.arc.kind = trigger ? ArcKind::Trigger : ArcKind::Flow;
    p.arc.decl_sphere = sphere_path;
    p.from_text = endpoint(p.from_span);
    expect(trigger ? Tok::FatArrow : Tok::Arrow, trigger ? "'=>' (triggers use '=>')" : "'->' (flows use '->')");
    p.to_text = endpoint(p.to_span);
    if (trigger && accept_word("spawn")) {
      expect(Tok::LBrace);
      while (!accept(Tok::RBrace)) {
        const Token& attr = expect(Tok::Ident, "attribute name");
        expect(Tok::Eq);
        p.arc.spawn.push_back({attr.text, expr()});
        accept(Tok::Comma);
      }
    }
    if (trigger && accept_word("consuming")) p.arc.consuming = true;
    if (accept_word("when")) p.arc.guard = expr();
    ++arc_counter_;
    if (accept(Tok::Hash))
      p.arc.label = label();
    else
      p.arc.label = "_" + std::to_string(arc_counter_);
    p.arc.span = join(start, prev_span());
    pending_.push_back(std::move(p));
  }

  void event_decl() {
    ++i_;
    EventDecl e;
    const Token& name = expect(Tok::Ident, "event name");
    e.name = name.text;
    e.span = name.span;
    expect(Tok::LBrace);
    expect_word("region");
    expect(Tok::LBrace);
    while (accept(Tok::Hash)) e.labels.push_back(label());
    expect(Tok::RBrace);
    expect(Tok::RBrace);
    for (const auto& other : model_.events)
      if (other.name == e.name) diags_.push_back(make_error("E_DUPNAME", "event '" + e.name + "' declared twice", e.span));
    model_.events.push_back(std::move(e));
  }

  void behavior_decl() {
    ++i_;
    BehaviorDecl b;
    const Token& name = expect(Tok::Ident, "behavior name");
    b.name = name.text;
    b.span = name.span;
    expect(Tok::LBrace);
    b.program = chrono(0);
    expect(Tok::RBrace);
    if (model_.find_behavior(b.name))
      diags_.push_back(make_error("E_DUPNAME", "behavior '" + b.name + "' declared twice", b.span));
    model_.behaviors.push_back(std::move(b));
  }

  Chrono chrono(int depth) {
    if (depth > 200) fail("chronology nested too deeply");
    const Token& head = expect(Tok::Ident, "event name or chronology operator");
    using K = Chrono::Kind;
    K kind;
    if (head.text == "seq") kind = K::Seq;
    else if (head.text == "choice") kind = K::Choice;
    else if (head.text == "par") kind = K::Par;
    else if (head.text == "repeat") kind = K::Repeat;
    else if (head.text == "interrupt") kind = K::Interrupt;
    else {
      Chrono c = Chrono::event(head.text);
      c.span = head.span;
      return c;
    }
    if (!at(Tok::LParen)) {
      Chrono c = Chrono::event(head.text);
      c.span = head.span;
      return c;
    }
    ++i_;
    Chrono c;
    c.kind = kind;
    c.children.push_back(chrono(depth + 1));
    while (accept(Tok::Comma)) c.children.push_back(chrono(depth + 1));
    expect(Tok::RParen);
    c.span = join(head.span, prev_span());
    if (kind == K::Repeat) {
      if (c.children.size() != 1) throw SyntaxError{make_error("E_SYNTAX", "repeat takes exactly one operand", c.span)};
      c.possible = accept_word("possible");
    } else if (kind == K::Interrupt) {
      if (c.children.size() != 3)
        throw SyntaxError{make_error("E_SYNTAX", "interrupt takes (watcher, handler, body)", c.span)};
    } else if (c.children.size() < 2) {
      throw SyntaxError{make_error("E_SYNTAX", head.text + " needs at least two operands", c.span)};
    }
    return c;
  }

  // -- expressions ------------------------------------------------------------
  Expr expr() { return or_expr(0); }

  Expr or_expr(int d) {
    Expr e = and_expr(d);
    while (at_word("or")) {
      ++i_;
      e = spanned(Expr::binary(Op::Or, std::move(e), and_expr(d)));
    }
    return e;
  }
  Expr and_expr(int d) {
    Expr e = not_expr(d);
    while (at_word("and")) {
      ++i_;
      e = spanned(Expr::binary(Op::And, std::move(e), not_expr(d)));
    }
    return e;
  }
  Expr not_expr(int d) {
    if (at_word("not")) {
      SourceSpan s = peek().span;
      ++i_;
      Expr e = Expr::unary(Op::Not, not_expr(d + 1));
      e.span = join(s, prev_span());
      return e;
    }
    return cmp_expr(d);
  }
  Expr cmp_expr(int d) {
    Expr e = add_expr(d);
    static constexpr std::pair<Tok, Op> kCmp[] = {{Tok::Eq, Op::Eq}, {Tok::Ne, Op::Ne}, {Tok::Lt, Op::Lt},
                                                  {Tok::Le, Op::Le}, {Tok::Gt, Op::Gt}, {Tok::Ge, Op::Ge}};
    for (auto [tok, op] : kCmp)
      if (at(tok)) {
        ++i_;
        return spanned(Expr::binary(op, std::move(e), add_expr(d)));
      }
    return e;
  }
  Expr add_expr(int d) {
    Expr e = mul_expr(d);
    while (at(Tok::Plus) || at(Tok::Minus)) {
      Op op = at(Tok::Plus) ? Op::Add : Op::Sub;
      ++i_;
      e = spanned(Expr::binary(op, std::move(e), mul_expr(d)));
    }
    return e;
  }
  Expr mul_expr(int d) {
    Expr e = unary_expr(d);
    while (at(Tok::Star) || at(Tok::Slash)) {
      Op op = at(Tok::Star) ? Op::Mul : Op::Div;
      ++i_;
      e = spanned(Expr::binary(op, std::move(e), unary_expr(d)));
    }
    return e;
  }
  Expr unary_expr(int d) {
    if (d > 200) fail("expression nested too deeply");
    if (at(Tok::Minus)) {
      SourceSpan s = peek().span;
      ++i_;
      Expr e = Expr::unary(Op::Neg, unary_expr(d + 1));
      e.span = join(s, prev_span());
      return e;
    }
    return primary(d);
  }
  Expr primary(int d) {
    const Token& t = peek();
    if (accept(Tok::LParen)) {
      Expr e = or_expr(d + 1);
      expect(Tok::RParen);
      return e;
    }
    if (t.kind == Tok::Ident && t.text != "true" && t.text != "false") {
      static const std::set<std::string, std::less<>> kReserved = {"and", "or", "not", "when", "spawn", "consuming"};
      if (kReserved.count(t.text)) fail("expected an expression, found '" + t.text + "'");
      ++i_;
      Expr e = Expr::ref(t.text);
      e.span = t.span;
      return e;
    }
    SourceSpan s = t.span;
    Expr e = Expr::lit(literal());
    e.span = join(s, prev_span());
    return e;
  }

  Expr spanned(Expr e) const {
    e.span = join(e.args.front().span, e.args.back().span);
    return e;
  }

  // -- name resolution --------------------------------------------------------
  void resolve() {
    for (std::size_t i = 0; i < model_.machines.size(); ++i) {
      Machine& m = model_.machines[i];
      if (auto k = model_.find_kind(m.kind_name)) {
        m.kind = *k;
      } else {
        m.kind = kUnresolvedKind;
        diags_.push_back(make_error("E_UNRESOLVED", "unknown thing kind '" + m.kind_name + "'", kind_spans_[i]));
      }
    }
    for (auto& p : pending_) {
      bool ok = true;
      auto bind = [&](const std::string& text, const SourceSpan& span, Endpoint& out) {
        auto r = resolve_endpoint(model_, text);
        if (auto* err = std::get_if<ResolutionError>(&r)) {
          diags_.push_back(make_error("E_UNRESOLVED", err->message() + " in '" + text + "'", span));
          ok = false;
        } else {
          out = std::get<Endpoint>(r);
        }
      };
      bind(p.from_text, p.from_span, p.arc.from);
      bind(p.to_text, p.to_span, p.arc.to);
      if (ok) model_.arcs.push_back(std::move(p.arc));
    }
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  std::vector<Diagnostic>& diags_;
  Model model_;
  std::vector<PendingArc> pending_;
  std::vector<SourceSpan> kind_spans_;
  int arc_counter_ = 0;
};

}  // namespace detail

/// Parses FM source text. Never throws; every failure is a diagnostic.
inline ParseResult parse(std::string_view source, const std::string& file = "<input>") {
  ParseResult result;
  try {
    auto toks = lex(source, file, result.diagnostics);
    result.model = detail::Parser(std::move(toks), result.diagnostics).run();
  } catch (const std::exception& e) {
    result.diagnostics.push_back(make_error("E_SYNTAX", std::string("internal parser failure: ") + e.what(),
                                            SourceSpan{file, {1, 1}, {1, 1}}));
  }
  return result;
}

}  // namespace fm::dsl
