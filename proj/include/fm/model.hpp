#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fm/diagnostic.hpp"
#include "fm/expr.hpp"
#include "fm/stage.hpp"

namespace fm {

struct AttrDecl {
  std::string name;
  ScalarType type = ScalarType::Int;
  std::optional<Value> default_value;
};

struct ThingKind {
  std::string name;
  std::vector<AttrDecl> attrs;
  SourceSpan span;

  const AttrDecl* find(std::string_view attr) const {
    for (const auto& a : attrs)
      if (a.name == attr) return &a;
    return nullptr;
  }
  AttrTypes schema() const {
    AttrTypes out;
    for (const auto& a : attrs) out.emplace(a.name, a.type);
    return out;
  }
};

struct Assignment {
  std::string attr;
  Expr value;
};

struct Machine {
  std::string name;
  std::string kind_name;
  std::size_t kind = 0;       // index into Model::kinds
  std::string sphere_path;    // "a/b"; empty never happens for parsed models
  StageSet declared;
  StageSet implicit;          // inserted by canonicalization
  std::vector<Assignment> assigns;  // applied on entry to Process
  SourceSpan span;

  std::string path() const { return sphere_path.empty() ? name : sphere_path + "/" + name; }
  StageSet stages() const { return declared | implicit; }
  bool has_stage(Stage s) const { return stages().contains(s); }
};

struct Sphere {
  std::string name;
  std::vector<Sphere> children;
  std::vector<std::size_t> machines;  // indices into Model::machines
  SourceSpan span;
};

struct Endpoint {
  std::size_t machine = 0;
  Stage stage = Stage::Create;
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

enum class ArcKind { Flow, Trigger };

struct SpawnAttr {
  std::string attr;
  Expr value;
};

struct Arc {
  ArcKind kind = ArcKind::Flow;
  Endpoint from;
  Endpoint to;
  std::optional<Expr> guard;
  std::vector<SpawnAttr> spawn;
  bool consuming = false;
  std::string label;
  std::string decl_sphere;  // sphere the arc was written in, for printing
  SourceSpan span;

  bool is_flow() const { return kind == ArcKind::Flow; }
};

/// The user label an arc was derived from: "f23.2" -> "f23".
inline std::string_view base_label(std::string_view label) {
  auto dot = label.find('.');
  return dot == std::string_view::npos ? label : label.substr(0, dot);
}

struct Chrono {
  enum class Kind { Seq, Choice, Par, Repeat, Interrupt, Ref };
  Kind kind = Kind::Ref;
  std::vector<Chrono> children;  // Interrupt: {watcher, handler, body}
  bool possible = false;         // Repeat only
  std::string ref;               // Ref only
  SourceSpan span;

  static Chrono event(std::string name) {
    Chrono c;
    c.ref = std::move(name);
    return c;
  }
  static Chrono node(Kind k, std::vector<Chrono> kids, bool possible = false) {
    Chrono c;
    c.kind = k;
    c.children = std::move(kids);
    c.possible = possible;
    return c;
  }
};

inline std::string to_source(const Chrono& c) {
  auto list = [&](const char* head) {
    std::string out = std::string(head) + "(";
    for (std::size_t i = 0; i < c.children.size(); ++i) out += (i ? ", " : "") + to_source(c.children[i]);
    return out + ")";
  };
  switch (c.kind) {
    case Chrono::Kind::Seq: return list("seq");
    case Chrono::Kind::Choice: return list("choice");
    case Chrono::Kind::Par: return list("par");
    case Chrono::Kind::Interrupt: return list("interrupt");
    case Chrono::Kind::Repeat: return list("repeat") + (c.possible ? " possible" : "");
    case Chrono::Kind::Ref: return c.ref;
  }
  return {};
}

struct EventDecl {
  std::string name;
  std::vector<std::string> labels;
  SourceSpan span;
};

struct BehaviorDecl {
  std::string name;
  Chrono program;
  SourceSpan span;
};

struct Model {
  std::vector<ThingKind> kinds;
  std::vector<Sphere> spheres;  // roots
  std::vector<Machine> machines;
  std::vector<Arc> arcs;        // flows and triggers
  std::vector<EventDecl> events;
  std::vector<BehaviorDecl> behaviors;
  bool canonical = false;

  std::optional<std::size_t> find_kind(std::string_view name) const {
    for (std::size_t i = 0; i < kinds.size(); ++i)
      if (kinds[i].name == name) return i;
    return std::nullopt;
  }
  std::optional<std::size_t> find_machine(std::string_view path) const {
    for (std::size_t i = 0; i < machines.size(); ++i)
      if (machines[i].path() == path) return i;
    return std::nullopt;
  }
  std::optional<std::size_t> find_arc(std::string_view label) const {
    for (std::size_t i = 0; i < arcs.size(); ++i)
      if (arcs[i].label == label) return i;
    return std::nullopt;
  }
  const BehaviorDecl* find_behavior(std::string_view name) const {
    for (const auto& b : behaviors)
      if (b.name == name) return &b;
    return nullptr;
  }
  const ThingKind& kind_of(std::size_t machine) const { return kinds[machines[machine].kind]; }

  std::string endpoint_text(const Endpoint& ep) const {
    return machines[ep.machine].path() + "." + std::string(stage_name(ep.stage));
  }

  std::size_t flow_count() const {
    return static_cast<std::size_t>(std::count_if(arcs.begin(), arcs.end(), [](const Arc& a) { return a.is_flow(); }));
  }
  std::size_t trigger_count() const { return arcs.size() - flow_count(); }
};

inline std::size_t count_spheres(const std::vector<Sphere>& spheres) {
  std::size_t n = 0;
  for (const auto& s : spheres) n += 1 + count_spheres(s.children);
  return n;
}

inline std::size_t sphere_depth(const std::vector<Sphere>& spheres) {
  std::size_t d = 0;
  for (const auto& s : spheres) d = std::max(d, 1 + sphere_depth(s.children));
  return d;
}

// ---------------------------------------------------------------------------
// Endpoint resolution

struct ResolutionError {
  enum class Code { UnknownSphere, UnknownMachine, StageNotDeclared, Malformed };
  Code code;
  std::string segment;

  std::string message() const {
    switch (code) {
      case Code::UnknownSphere: return "unknown sphere '" + segment + "'";
      case Code::UnknownMachine: return "unknown machine '" + segment + "'";
      case Code::StageNotDeclared: return "stage '" + segment + "' is not declared";
      case Code::Malformed: return "malformed endpoint '" + segment + "'";
    }
    return {};
  }
};

/// Resolves "sphere/.../machine.stage" against the sphere tree.
inline std::variant<Endpoint, ResolutionError> resolve_endpoint(const Model& model, std::string_view text) {
  using E = ResolutionError;
  auto dot = text.rfind('.');
  if (dot == std::string_view::npos || dot == 0) return E{E::Code::Malformed, std::string(text)};
  std::string_view path = text.substr(0, dot);
  std::string_view stage_text = text.substr(dot + 1);

  std::vector<std::string_view> segments;
  for (std::size_t pos = 0;;) {
    auto slash = path.find('/', pos);
    segments.push_back(path.substr(pos, slash - pos));
    if (slash == std::string_view::npos) break;
    pos = slash + 1;
  }
  if (segments.size() < 2) return E{E::Code::UnknownSphere, std::string(segments.front())};

  const std::vector<Sphere>* level = &model.spheres;
  const Sphere* current = nullptr;
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    auto it = std::find_if(level->begin(), level->end(), [&](const Sphere& s) { return s.name == segments[i]; });
    if (it == level->end()) return E{E::Code::UnknownSphere, std::string(segments[i])};
    current = &*it;
    level = &it->children;
  }
  std::optional<std::size_t> machine;
  for (std::size_t idx : current->machines)
    if (model.machines[idx].name == segments.back()) {
      machine = idx;
      break;
    }
  if (!machine) return E{E::Code::UnknownMachine, std::string(segments.back())};
  auto stage = parse_stage(stage_text);
  if (!stage || !model.machines[*machine].has_stage(*stage)) return E{E::Code::StageNotDeclared, std::string(stage_text)};
  return Endpoint{*machine, *stage};
}

// ---------------------------------------------------------------------------
// Regions

struct Region {
  std::vector<std::size_t> arcs;  // sorted indices into Model::arcs
  std::vector<Endpoint> stages;   // sorted, unique

  bool empty() const { return arcs.empty(); }
};

struct UnknownLabels {
  std::vector<std::string> labels;
};

/// Arcs carrying `label` itself or derived from it by canonicalization.
inline bool label_matches(std::string_view arc_label, std::string_view label) {
  if (arc_label == label) return true;
  return arc_label.size() > label.size() && arc_label.substr(0, label.size()) == label &&
         arc_label[label.size()] == '.';
}

/// The subdiagram made of the arcs named by `labels` and their endpoint stages.
inline std::variant<Region, UnknownLabels> subdiagram(const Model& model, const std::set<std::string>& labels) {
  Region region;
  UnknownLabels missing;
  std::set<std::size_t> arcs;
  std::set<Endpoint> stages;
  for (const auto& label : labels) {
    bool found = false;
    for (std::size_t i = 0; i < model.arcs.size(); ++i) {
      if (!label_matches(model.arcs[i].label, label)) continue;
      found = true;
      arcs.insert(i);
      stages.insert(model.arcs[i].from);
      stages.insert(model.arcs[i].to);
    }
    if (!found) missing.labels.push_back(label);
  }
  if (!missing.labels.empty()) return missing;
  region.arcs.assign(arcs.begin(), arcs.end());
  region.stages.assign(stages.begin(), stages.end());
  return region;
}

}  // namespace fm
