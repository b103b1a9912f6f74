#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "fm/behavior/automaton.hpp"
#include "fm/model.hpp"

namespace fm {

struct DotOptions {
  bool show_implicit = false;
};

namespace detail {

inline std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

// "sphere.sub.machine.stage"
inline std::string dot_node(const Model& m, const Endpoint& ep) {
  std::string path = m.machines[ep.machine].path();
  for (char& c : path)
    if (c == '/') c = '.';
  return path + "." + std::string(stage_name(ep.stage));
}

inline void dot_sphere(const Model& m, const Sphere& s, int depth, const DotOptions& opt, int& cluster, std::string& out) {
  std::string pad(static_cast<std::size_t>(depth) * 2 + 2, ' ');
  out += pad + "subgraph cluster_" + std::to_string(cluster++) + " {\n";
  out += pad + "  label=" + dot_quote(s.name) + ";\n";
  std::map<std::string, std::string> nodes;  // sorted by id
  for (std::size_t idx : s.machines) {
    const Machine& mc = m.machines[idx];
    for (Stage st : kAllStages) {
      bool implicit = mc.implicit.contains(st) && !mc.declared.contains(st);
      if (!mc.has_stage(st) || (implicit && !opt.show_implicit)) continue;
      nodes[dot_node(m, {idx, st})] = " [label=" + dot_quote(mc.name + "." + std::string(stage_name(st))) +
                                      (implicit ? ", style=dotted" : "") + "];\n";
    }
  }
  for (const auto& [id, attrs] : nodes) out += pad + "  " + dot_quote(id) + attrs;
  for (const Sphere& c : s.children) dot_sphere(m, c, depth + 1, opt, cluster, out);
  out += pad + "}\n";
}

// Label prefix of an arc created by shorthand expansion ("f23.2" -> "f23"),
// or empty if the arc is authored.
inline std::string chain_prefix(const std::string& label, const std::set<std::string>& all) {
  auto dot = label.rfind('.');
  if (dot == std::string::npos) return {};
  std::string prefix = label.substr(0, dot);
  if (all.count(prefix) || (!all.count(prefix + ".1") || !all.count(prefix + ".2"))) return {};
  return prefix;
}

}  // namespace detail

/// Spheres become nested clusters, stages nodes, flows solid edges and
/// triggers dashed edges. Without show_implicit, implicit stages are hidden
/// and expanded chains are drawn as the single shorthand edge they came from.
inline std::string model_to_dot(const Model& model, const DotOptions& opt = {}) {
  std::string out = "digraph fm {\n  rankdir=LR;\n  node [shape=box];\n";
  int cluster = 0;
  for (const Sphere& s : model.spheres) detail::dot_sphere(model, s, 0, opt, cluster, out);

  auto edge = [&](const Endpoint& from, const Endpoint& to, const std::string& label, bool trigger) {
    out += "  " + detail::dot_quote(detail::dot_node(model, from)) + " -> " + detail::dot_quote(detail::dot_node(model, to)) +
           " [label=" + detail::dot_quote(label) + (trigger ? ", style=dashed" : "") + "];\n";
  };
  std::set<std::string> labels;
  for (const Arc& a : model.arcs) labels.insert(a.label);
  std::set<std::string> drawn;
  for (const Arc& a : model.arcs) {
    std::string prefix = opt.show_implicit || !a.is_flow() ? std::string() : detail::chain_prefix(a.label, labels);
    if (prefix.empty()) {
      edge(a.from, a.to, a.label, !a.is_flow());
      continue;
    }
    if (!drawn.insert(prefix).second) continue;
    Endpoint to = a.to;
    for (int k = 2;; ++k) {
      auto next = model.find_arc(prefix + "." + std::to_string(k));
      if (!next) break;
      to = model.arcs[*next].to;
    }
    edge(model.arcs[*model.find_arc(prefix + ".1")].from, to, prefix, false);
  }
  return out + "}\n";
}

/// States are nodes (start bold, accepting ones doubled), event edges are
/// labelled, epsilon edges unlabelled grey, interrupt edges dashed.
inline std::string behavior_to_dot(const Automaton& a) {
  std::string out = "digraph behavior {\n  rankdir=LR;\n  node [shape=circle];\n";
  for (std::size_t s = 0; s < a.states; ++s) {
    std::string attrs;
    if (a.accepting.count(s)) attrs = "shape=doublecircle";
    if (s == a.start) attrs += std::string(attrs.empty() ? "" : ", ") + "style=bold";
    out += "  s" + std::to_string(s) + (attrs.empty() ? "" : " [" + attrs + "]") + ";\n";
  }
  for (const auto& e : a.edges) {
    out += "  s" + std::to_string(e.from) + " -> s" + std::to_string(e.to);
    switch (e.kind) {
      case AutEdge::Kind::Eps: out += " [label=\"\", color=gray];\n"; break;
      case AutEdge::Kind::Event: out += " [label=" + detail::dot_quote(e.event) + "];\n"; break;
      case AutEdge::Kind::Interrupt: out += " [label=" + detail::dot_quote(e.event) + ", style=dashed];\n"; break;
    }
  }
  return out + "}\n";
}

}  // namespace fm
