#pragma once

#include <string>

#include "fm/model.hpp"

namespace fm::dsl {

namespace detail {

inline void print_sphere(const Model& m, const Sphere& s, const std::string& parent, int depth, std::string& out) {
  std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  std::string path = parent.empty() ? s.name : parent + "/" + s.name;
  out += pad + "sphere " + s.name + " {\n";
  for (std::size_t idx : s.machines) {
    const Machine& mc = m.machines[idx];
    out += pad + "  machine " + mc.name + ": " + mc.kind_name + " {";
    for (Stage st : kAllStages) {
      if (mc.declared.contains(st)) out += " " + std::string(stage_name(st));
      else if (mc.implicit.contains(st)) out += " implicit " + std::string(stage_name(st));
    }
    if (!mc.assigns.empty()) {
      out += " assign {";
      for (const auto& a : mc.assigns) out += " " + a.attr + " = " + to_source(a.value);
      out += " }";
    }
    out += " }\n";
  }
  for (const Sphere& child : s.children) print_sphere(m, child, path, depth + 1, out);
  for (const Arc& a : m.arcs) {
    if (a.decl_sphere != path) continue;
    out += pad + "  " + (a.is_flow() ? "flow " : "trigger ") + m.endpoint_text(a.from) + (a.is_flow() ? " -> " : " => ") +
           m.endpoint_text(a.to);
    if (!a.spawn.empty()) {
      out += " spawn {";
      for (const auto& sp : a.spawn) out += " " + sp.attr + " = " + to_source(sp.value);
      out += " }";
    }
    if (a.consuming) out += " consuming";
    if (a.guard) out += " when " + to_source(*a.guard);
    out += " #" + a.label + "\n";
  }
  out += pad + "}\n";
}

}  // namespace detail

/// Source text for `model`. Implicit stages carry the `implicit` marker so the
/// text reparses to an isomorphic model.
inline std::string print(const Model& model) {
  std::string out;
  for (const ThingKind& k : model.kinds) {
    out += "thing " + k.name;
    if (!k.attrs.empty()) {
      out += " {";
      for (const auto& a : k.attrs) {
        out += " " + a.name + ": " + type_name(a.type);
        if (a.default_value) out += " = " + format_value(*a.default_value);
      }
      out += " }";
    }
    out += "\n";
  }
  for (const Sphere& s : model.spheres) detail::print_sphere(model, s, "", 0, out);
  for (const EventDecl& e : model.events) {
    out += "event " + e.name + " { region {";
    for (const auto& l : e.labels) out += " #" + l;
    out += " } }\n";
  }
  for (const BehaviorDecl& b : model.behaviors) out += "behavior " + b.name + " { " + to_source(b.program) + " }\n";
  return out;
}

}  // namespace fm::dsl
