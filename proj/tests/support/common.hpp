#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "fm/fm.hpp"

#ifndef FM_CORPUS_DIR
#error "FM_CORPUS_DIR must point at the corpus directory"
#endif

namespace fmtest {

inline std::string corpus_path(std::string_view rel) { return std::string(FM_CORPUS_DIR) + "/" + std::string(rel); }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string diag_text(const std::vector<fm::Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) out += fm::format_diagnostic(d) + "\n";
  return out;
}

/// Parsed and canonicalized, not validated. Throws on errors.
inline fm::Model canonical_from_source(std::string_view src, const std::string& file = "<test>") {
  auto parsed = fm::dsl::parse(src, file);
  if (!parsed.ok()) throw std::runtime_error(diag_text(parsed.diagnostics));
  auto canon = fm::dsl::canonicalize(std::move(parsed.model));
  if (!canon.ok()) throw std::runtime_error(diag_text(canon.diagnostics));
  return std::move(canon.model);
}

inline fm::Model load_corpus_model(std::string_view rel) {
  std::string path = corpus_path(rel);
  return canonical_from_source(slurp(path), path);
}

inline fm::Scenario scenario_from_source(const fm::Model& model, std::string_view src) {
  auto r = fm::parse_scenario(src, model, "<scenario>");
  if (!r.ok()) throw std::runtime_error(diag_text(r.diagnostics));
  return std::move(r.scenario);
}

inline fm::Scenario load_corpus_scenario(const fm::Model& model, std::string_view rel) {
  return scenario_from_source(model, slurp(corpus_path(rel)));
}

struct Program {
  std::vector<fm::EventDef> events;
  fm::Automaton automaton;
};

inline Program load_program(const fm::Model& model, std::string_view behavior) {
  auto events = fm::build_events(model);
  if (auto* e = std::get_if<fm::EventError>(&events)) throw std::runtime_error(e->message);
  const fm::BehaviorDecl* decl = model.find_behavior(behavior);
  if (!decl) throw std::runtime_error("no behavior " + std::string(behavior));
  std::set<std::string> names;
  for (const auto& e : std::get<std::vector<fm::EventDef>>(events)) names.insert(e.name);
  auto a = fm::compile(decl->program, names);
  if (auto* e = std::get_if<fm::CompileError>(&a)) throw std::runtime_error(e->message);
  return {std::get<std::vector<fm::EventDef>>(std::move(events)), std::get<fm::Automaton>(std::move(a))};
}

inline const char* const kTvmScenarios[] = {"tvm_happy", "tvm_insufficient", "tvm_topup", "tvm_cancel",
                                            "tvm_card",  "tvm_card_declined", "tvm_out_of_order"};

}  // namespace fmtest
