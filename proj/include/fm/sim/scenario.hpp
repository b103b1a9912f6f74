#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fm/dsl/lexer.hpp"
#include "fm/model.hpp"

namespace fm {

/// Places a new thing at a Create stage at the start of `tick`.
struct Injection {
  std::string kind;
  Endpoint at;
  std::int64_t tick = 0;
  AttrMap attrs;  // complete: defaults already filled in
  SourceSpan span;
};

struct Scenario {
  std::vector<Injection> injections;
};

struct ScenarioResult {
  Scenario scenario;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return !has_errors(diagnostics); }
};

namespace detail {

class ScenarioParser {
 public:
  ScenarioParser(const Model& model, std::vector<dsl::Token> toks, std::vector<Diagnostic>& diags)
      : model_(model), toks_(std::move(toks)), diags_(diags) {}

  Scenario run() {
    Scenario s;
    while (peek().kind != dsl::Tok::End) {
      std::size_t start = i_;
      if (!injection(s)) {
        // skip to the next `inject`
        if (i_ == start) ++i_;
        while (peek().kind != dsl::Tok::End && !(peek().kind == dsl::Tok::Ident && peek().text == "inject")) ++i_;
      }
    }
    return s;
  }

 private:
  const dsl::Token& peek() const { return toks_[i_]; }
  bool at(dsl::Tok k) const { return peek().kind == k; }

  bool err(const SourceSpan& span, std::string msg) {
    diags_.push_back(make_error("E_SCENARIO", std::move(msg), span));
    return false;
  }

  bool word(std::string_view w) {
    if (at(dsl::Tok::Ident) && peek().text == w) {
      ++i_;
      return true;
    }
    return err(peek().span, "expected '" + std::string(w) + "'");
  }

  std::optional<Value> literal() {
    bool neg = false;
    if (at(dsl::Tok::Minus)) {
      neg = true;
      ++i_;
    }
    const dsl::Token& t = peek();
    try {
      if (t.kind == dsl::Tok::Int) {
        ++i_;
        return Value{neg ? -std::stoll(t.text) : std::stoll(t.text)};
      }
      if (t.kind == dsl::Tok::Dec) {
        ++i_;
        return Value{neg ? -std::stod(t.text) : std::stod(t.text)};
      }
    } catch (const std::out_of_range&) {
      err(t.span, "numeric literal out of range");
      return std::nullopt;
    }
    if (!neg && t.kind == dsl::Tok::String) {
      ++i_;
      return Value{t.text};
    }
    if (!neg && t.kind == dsl::Tok::Ident && (t.text == "true" || t.text == "false")) {
      ++i_;
      return Value{t.text == "true"};
    }
    err(t.span, "expected a literal");
    return std::nullopt;
  }

  bool injection(Scenario& s) {
    const SourceSpan head = peek().span;
    if (!word("inject")) return false;
    if (!at(dsl::Tok::Ident)) return err(peek().span, "expected a thing kind");
    Injection inj;
    inj.span = head;
    inj.kind = toks_[i_++].text;
    if (!word("at")) return false;
    const SourceSpan ep_span = peek().span;
    std::string ep;
    if (!at(dsl::Tok::Ident)) return err(peek().span, "expected an endpoint");
    ep = toks_[i_++].text;
    while (at(dsl::Tok::Slash) || at(dsl::Tok::Dot)) {
      ep += toks_[i_++].text;
      if (!at(dsl::Tok::Ident)) return err(peek().span, "malformed endpoint");
      ep += toks_[i_++].text;
    }
    if (!word("tick")) return false;
    if (!at(dsl::Tok::Int)) return err(peek().span, "expected a tick number");
    try {
      inj.tick = std::stoll(toks_[i_++].text);
    } catch (const std::out_of_range&) {
      return err(toks_[i_ - 1].span, "tick out of range");
    }
    std::vector<std::pair<dsl::Token, Value>> given;
    if (at(dsl::Tok::LBrace)) {
      ++i_;
      while (!at(dsl::Tok::RBrace)) {
        if (!at(dsl::Tok::Ident)) return err(peek().span, "expected an attribute name");
        dsl::Token name = toks_[i_++];
        if (!at(dsl::Tok::Eq)) return err(peek().span, "expected '='");
        ++i_;
        auto v = literal();
        if (!v) return false;
        given.emplace_back(std::move(name), std::move(*v));
        if (at(dsl::Tok::Comma)) ++i_;
      }
      ++i_;
    }

    bool ok = true;
    auto kind_idx = model_.find_kind(inj.kind);
    if (!kind_idx) return err(head, "unknown thing kind '" + inj.kind + "'");
    const ThingKind& kind = model_.kinds[*kind_idx];
    auto r = resolve_endpoint(model_, ep);
    if (auto* e = std::get_if<ResolutionError>(&r)) return err(ep_span, e->message() + " in '" + ep + "'");
    inj.at = std::get<Endpoint>(r);
    if (inj.at.stage != Stage::Create) ok = err(ep_span, "things can only be injected at a create stage, not '" + ep + "'");
    if (model_.machines[inj.at.machine].kind != *kind_idx)
      ok = err(ep_span, "machine '" + model_.machines[inj.at.machine].path() + "' handles '" +
                            model_.machines[inj.at.machine].kind_name + "', not '" + inj.kind + "'");
    for (auto& [name, v] : given) {
      const AttrDecl* decl = kind.find(name.text);
      if (!decl) {
        ok = err(name.span, "'" + inj.kind + "' has no attribute '" + name.text + "'");
        continue;
      }
      Value c = coerce(v, decl->type);
      if (type_of(c) != decl->type) {
        ok = err(name.span, "attribute '" + name.text + "' expects " + type_name(decl->type));
        continue;
      }
      if (!inj.attrs.emplace(name.text, std::move(c)).second) ok = err(name.span, "attribute '" + name.text + "' given twice");
    }
    for (const auto& a : kind.attrs) {
      if (inj.attrs.count(a.name)) continue;
      if (a.default_value) inj.attrs.emplace(a.name, *a.default_value);
      else ok = err(head, "injection of '" + inj.kind + "' does not set '" + a.name + "', which has no default");
    }
    if (inj.tick < 0) ok = err(head, "tick must not be negative");
    if (ok) s.injections.push_back(std::move(inj));
    return true;
  }

  const Model& model_;
  std::vector<dsl::Token> toks_;
  std::size_t i_ = 0;
  std::vector<Diagnostic>& diags_;
};

}  // namespace detail

/// Parses a scenario: lines of
///   inject <kind> at <sphere/.../machine.create> tick <n> { attr = literal, ... }
inline ScenarioResult parse_scenario(std::string_view source, const Model& model, const std::string& file = "<scenario>") {
  ScenarioResult r;
  auto toks = dsl::lex(source, file, r.diagnostics);
  r.scenario = detail::ScenarioParser(model, std::move(toks), r.diagnostics).run();
  return r;
}

}  // namespace fm
