#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fm/model.hpp"

namespace fm {

struct ModelStats {
  std::size_t spheres = 0;
  std::size_t machines = 0;
  std::size_t flows = 0;
  std::size_t triggers = 0;
  friend bool operator==(const ModelStats&, const ModelStats&) = default;
};

struct ValidationReport {
  std::vector<Diagnostic> diagnostics;
  ModelStats stats;
  bool ok = true;
};

namespace detail {

inline bool machine_ok(const Model& m, std::size_t idx) { return idx < m.machines.size() && m.machines[idx].kind < m.kinds.size(); }

inline bool endpoint_ok(const Model& m, const Endpoint& ep) {
  return ep.machine < m.machines.size() && m.machines[ep.machine].has_stage(ep.stage);
}

inline std::string arc_text(const Model& m, const Arc& a) {
  return "'" + a.label + "' (" + m.endpoint_text(a.from) + (a.is_flow() ? " -> " : " => ") + m.endpoint_text(a.to) + ")";
}

}  // namespace detail

/// Arc shape: every flow is in the legality table and preserves its kind.
inline std::vector<Diagnostic> check_legality(const Model& model) {
  std::vector<Diagnostic> out;
  for (const Arc& a : model.arcs) {
    if (!detail::endpoint_ok(model, a.from) || !detail::endpoint_ok(model, a.to)) continue;
    if (a.is_flow()) {
      bool same = a.from.machine == a.to.machine;
      bool legal = same ? legal_intra(a.from.stage, a.to.stage) : legal_inter(a.from.stage, a.to.stage);
      if (!legal)
        out.push_back(make_error("E_LEGAL",
                                 "flow " + detail::arc_text(model, a) + ": " + std::string(stage_name(a.from.stage)) +
                                     " -> " + std::string(stage_name(a.to.stage)) +
                                     (same ? " is not a legal step inside a machine" : " is not a legal step between machines"),
                                 a.span));
      const auto& mf = model.machines[a.from.machine];
      const auto& mt = model.machines[a.to.machine];
      if (mf.kind != mt.kind)
        out.push_back(make_error("E_KIND",
                                 "flow " + detail::arc_text(model, a) + " moves a '" + mf.kind_name + "' into a '" +
                                     mt.kind_name + "' machine; use a trigger to change kind",
                                 a.span));
    } else if (a.to.stage == Stage::Release || a.to.stage == Stage::Transfer) {
      out.push_back(make_warning("W_UNUSUAL_TRIGGER",
                                 "trigger " + detail::arc_text(model, a) + " targets " +
                                     std::string(stage_name(a.to.stage)),
                                 a.span));
    }
  }
  return out;
}

namespace detail {

inline void check_siblings(const Model& model, const std::vector<Sphere>& spheres, const std::string& where,
                           std::vector<Diagnostic>& out) {
  std::set<std::string> names;
  for (const Sphere& s : spheres)
    if (!names.insert(s.name).second)
      out.push_back(make_error("E_DUPNAME", "duplicate sphere name '" + s.name + "'" + where, s.span));
  for (const Sphere& s : spheres) {
    std::set<std::string> local;
    for (const Sphere& c : s.children) local.insert(c.name);
    for (std::size_t idx : s.machines) {
      if (idx >= model.machines.size()) continue;
      const Machine& m = model.machines[idx];
      if (!local.insert(m.name).second)
        out.push_back(make_error("E_DUPNAME", "duplicate name '" + m.name + "' in sphere '" + s.name + "'", m.span));
    }
    check_siblings(model, s.children, " in sphere '" + s.name + "'", out);
  }
}

inline void check_expr(const Expr& e, const ThingKind& kind, const std::string& what, const SourceSpan& span,
                       std::optional<ScalarType> want, std::vector<Diagnostic>& out) {
  auto t = type_check(e, kind.schema());
  if (auto* err = std::get_if<std::string>(&t)) {
    out.push_back(make_error("E_GUARD", what + ": " + *err + " (on kind '" + kind.name + "')", span));
    return;
  }
  ScalarType got = std::get<ScalarType>(t);
  if (want && got != *want && !(*want == ScalarType::Dec && got == ScalarType::Int))
    out.push_back(make_error("E_GUARD",
                             what + ": expected " + type_name(*want) + ", expression has type " + type_name(got), span));
}

inline void check_chrono(const Model& model, const Chrono& c, const std::string& behavior, std::vector<Diagnostic>& out) {
  using K = Chrono::Kind;
  if (c.kind == K::Ref) {
    bool found = false;
    for (const auto& e : model.events) found = found || e.name == c.ref;
    if (!found)
      out.push_back(make_error("E_BEHAVIOR", "behavior '" + behavior + "' refers to unknown event '" + c.ref + "'", c.span));
    return;
  }
  if (c.kind == K::Interrupt && !c.children.empty() && c.children[0].kind != K::Ref)
    out.push_back(make_error("E_BEHAVIOR", "interrupt watcher in '" + behavior + "' must be a single event", c.span));
  for (const auto& child : c.children) check_chrono(model, child, behavior, out);
}

}  // namespace detail

/// Names, references, labels, expressions and isolated machines.
inline std::vector<Diagnostic> check_structure(const Model& model) {
  std::vector<Diagnostic> out;
  detail::check_siblings(model, model.spheres, "", out);

  for (const Machine& m : model.machines) {
    if (m.kind >= model.kinds.size()) {
      out.push_back(make_error("E_UNRESOLVED", "machine '" + m.path() + "' has unknown kind '" + m.kind_name + "'", m.span));
      continue;
    }
    const ThingKind& kind = model.kinds[m.kind];
    for (const auto& a : m.assigns) {
      const AttrDecl* decl = kind.find(a.attr);
      if (!decl) {
        out.push_back(make_error("E_GUARD", "assign to unknown attribute '" + a.attr + "' on '" + m.path() + "'", m.span));
        continue;
      }
      detail::check_expr(a.value, kind, "assign '" + a.attr + "' on '" + m.path() + "'", a.value.span, decl->type, out);
    }
    if (!m.assigns.empty() && !m.has_stage(Stage::Process))
      out.push_back(make_error("E_GUARD", "machine '" + m.path() + "' has assignments but no process stage", m.span));
  }

  std::map<std::string, const Arc*> labels;
  std::vector<bool> touched(model.machines.size(), false);
  for (const Arc& a : model.arcs) {
    if (!labels.emplace(a.label, &a).second)
      out.push_back(make_error("E_DUPLABEL", "label '" + a.label + "' is used by more than one arc", a.span));
    bool from_ok = detail::endpoint_ok(model, a.from), to_ok = detail::endpoint_ok(model, a.to);
    if (!from_ok || !to_ok) {
      out.push_back(make_error("E_UNRESOLVED", "arc '" + a.label + "' has an unresolved endpoint", a.span));
      continue;
    }
    touched[a.from.machine] = touched[a.to.machine] = true;
    if (!detail::machine_ok(model, a.from.machine) || !detail::machine_ok(model, a.to.machine)) continue;
    const ThingKind& src = model.kind_of(a.from.machine);
    const ThingKind& dst = model.kind_of(a.to.machine);
    if (a.guard) {
      if (a.is_flow() && a.from.stage != Stage::Process)
        out.push_back(make_error("E_GUARD", "guard on flow '" + a.label + "' which does not leave a process stage", a.span));
      detail::check_expr(*a.guard, src, "guard of '" + a.label + "'", a.guard->span, ScalarType::Bool, out);
    }
    if (a.is_flow()) continue;
    if (!a.spawn.empty() && a.to.stage != Stage::Create)
      out.push_back(make_error("E_SPAWN", "trigger '" + a.label + "' has spawn attributes but does not target create", a.span));
    std::set<std::string> given;
    for (const auto& sp : a.spawn) {
      given.insert(sp.attr);
      const AttrDecl* decl = dst.find(sp.attr);
      if (!decl) {
        out.push_back(make_error("E_SPAWN", "trigger '" + a.label + "' sets unknown attribute '" + sp.attr + "' of '" +
                                                dst.name + "'",
                                 sp.value.span));
        continue;
      }
      detail::check_expr(sp.value, src, "spawn '" + sp.attr + "' of '" + a.label + "'", sp.value.span, decl->type, out);
    }
    if (a.to.stage == Stage::Create)
      for (const auto& attr : dst.attrs)
        if (!attr.default_value && !given.count(attr.name))
          out.push_back(make_error("E_SPAWN", "trigger '" + a.label + "' does not set '" + attr.name + "' of '" +
                                                  dst.name + "', which has no default",
                                   a.span));
  }

  for (std::size_t i = 0; i < model.machines.size(); ++i)
    if (!touched[i] && !model.machines[i].stages().empty())
      out.push_back(make_warning("W_ISOLATED", "machine '" + model.machines[i].path() + "' has no arcs", model.machines[i].span));

  for (const EventDecl& e : model.events) {
    if (e.labels.empty()) out.push_back(make_error("E_EVENT", "event '" + e.name + "' has an empty region", e.span));
    for (const auto& l : e.labels) {
      bool found = false;
      for (const Arc& a : model.arcs) found = found || label_matches(a.label, l);
      if (!found) out.push_back(make_error("E_EVENT", "event '" + e.name + "' names unknown label '" + l + "'", e.span));
    }
  }
  for (const BehaviorDecl& b : model.behaviors) detail::check_chrono(model, b.program, b.name, out);
  return out;
}

/// Stages that no thing can ever reach along flows.
inline std::vector<Diagnostic> check_reachability(const Model& model) {
  std::vector<Diagnostic> out;
  std::set<Endpoint> reached;
  std::vector<Endpoint> work;
  auto seed = [&](const Endpoint& ep) {
    if (reached.insert(ep).second) work.push_back(ep);
  };
  for (std::size_t i = 0; i < model.machines.size(); ++i)
    if (model.machines[i].has_stage(Stage::Create)) seed({i, Stage::Create});
  for (const Arc& a : model.arcs) {
    if (!detail::endpoint_ok(model, a.from) || !detail::endpoint_ok(model, a.to)) continue;
    if (!a.is_flow() || (a.from.machine != a.to.machine && a.to.stage == Stage::Transfer &&
                         a.from.stage == Stage::Transfer))
      seed(a.to);
  }
  while (!work.empty()) {
    Endpoint cur = work.back();
    work.pop_back();
    for (const Arc& a : model.arcs)
      if (a.is_flow() && a.from == cur && detail::endpoint_ok(model, a.to)) seed(a.to);
  }
  for (std::size_t i = 0; i < model.machines.size(); ++i)
    for (Stage s : kAllStages)
      if (model.machines[i].has_stage(s) && !reached.count(Endpoint{i, s}))
        out.push_back(make_warning("W_UNREACHABLE",
                                   "stage " + model.endpoint_text({i, s}) + " is not reachable from any create, inbound transfer or trigger",
                                   model.machines[i].span));
  return out;
}

inline ModelStats model_stats(const Model& model) {
  return {count_spheres(model.spheres), model.machines.size(), model.flow_count(), model.trigger_count()};
}

inline ValidationReport validate(const Model& model) {
  ValidationReport r;
  for (auto* check : {&check_structure, &check_legality, &check_reachability})
    for (auto& d : (*check)(model)) r.diagnostics.push_back(std::move(d));
  r.stats = model_stats(model);
  r.ok = !has_errors(r.diagnostics);
  return r;
}

inline nlohmann::ordered_json to_json(const Diagnostic& d) {
  return {{"severity", d.severity == Severity::Error ? "error" : "warning"},
          {"code", d.code},
          {"message", d.message},
          {"file", d.span.file},
          {"line", d.span.start.line},
          {"col", d.span.start.col}};
}

inline nlohmann::ordered_json to_json(const ValidationReport& r) {
  nlohmann::ordered_json diags = nlohmann::ordered_json::array();
  for (const auto& d : r.diagnostics) diags.push_back(to_json(d));
  return {{"diagnostics", diags},
          {"stats",
           {{"spheres", r.stats.spheres}, {"machines", r.stats.machines}, {"flows", r.stats.flows}, {"triggers", r.stats.triggers}}},
          {"ok", r.ok}};
}

}  // namespace fm
