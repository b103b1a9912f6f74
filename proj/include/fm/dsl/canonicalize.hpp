#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fm/model.hpp"

namespace fm::dsl {

/// The stage-by-stage chain realising a flow from `from` to `to`, or nullopt
/// if no legal chain exists. An already legal single hop returns itself.
inline std::optional<std::vector<Endpoint>> expand_flow(const Endpoint& from, const Endpoint& to) {
  if (to.stage == Stage::Create) return std::nullopt;
  std::vector<Endpoint> chain;
  if (from.machine == to.machine) {
    auto stages = shortest_intra_path(from.stage, to.stage);
    if (stages.empty()) return std::nullopt;
    for (Stage s : stages) chain.push_back({from.machine, s});
    return chain;
  }
  // Leave through Transfer, cross, enter through Transfer.
  std::vector<Stage> out = from.stage == Stage::Transfer ? std::vector<Stage>{Stage::Transfer}
                                                          : shortest_intra_path(from.stage, Stage::Transfer);
  std::vector<Stage> in = to.stage == Stage::Transfer ? std::vector<Stage>{Stage::Transfer}
                                                       : shortest_intra_path(Stage::Transfer, to.stage);
  if (out.empty() || in.empty()) return std::nullopt;
  for (Stage s : out) chain.push_back({from.machine, s});
  for (Stage s : in) chain.push_back({to.machine, s});
  return chain;
}

struct CanonicalResult {
  Model model;
  std::vector<Diagnostic> diagnostics;  // E_NO_EXPANSION
  bool ok() const { return !has_errors(diagnostics); }
};

/// Replaces every shorthand flow by its minimal legal chain. Stages the chain
/// passes through that a machine does not declare are added as implicit.
/// Derived arcs are labelled "<label>.1" .. "<label>.n"; the first arc keeps
/// the guard. Triggers are left untouched. Idempotent.
inline CanonicalResult canonicalize(Model model) {
  CanonicalResult result;
  std::vector<Arc> arcs;
  arcs.reserve(model.arcs.size());
  for (Arc& arc : model.arcs) {
    if (!arc.is_flow()) {
      arcs.push_back(std::move(arc));
      continue;
    }
    auto chain = expand_flow(arc.from, arc.to);
    if (!chain) {
      result.diagnostics.push_back(make_error(
          "E_NO_EXPANSION",
          "no legal stage chain from " + model.endpoint_text(arc.from) + " to " + model.endpoint_text(arc.to) +
              (arc.to.stage == Stage::Create ? " (nothing flows into create; use a trigger)" : ""),
          arc.span));
      arcs.push_back(std::move(arc));
      continue;
    }
    if (chain->size() == 2) {
      arcs.push_back(std::move(arc));
      continue;
    }
    for (std::size_t k = 1; k + 1 < chain->size(); ++k) {
      const Endpoint& ep = (*chain)[k];
      Machine& m = model.machines[ep.machine];
      if (!m.declared.contains(ep.stage)) m.implicit.insert(ep.stage);
    }
    for (std::size_t k = 0; k + 1 < chain->size(); ++k) {
      Arc hop;
      hop.kind = ArcKind::Flow;
      hop.from = (*chain)[k];
      hop.to = (*chain)[k + 1];
      if (k == 0) hop.guard = arc.guard;
      hop.label = arc.label + "." + std::to_string(k + 1);
      hop.decl_sphere = arc.decl_sphere;
      hop.span = arc.span;
      arcs.push_back(std::move(hop));
    }
  }
  model.arcs = std::move(arcs);
  model.canonical = result.ok();
  result.model = std::move(model);
  return result;
}

}  // namespace fm::dsl
