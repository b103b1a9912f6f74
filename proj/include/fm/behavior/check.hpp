#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fm/behavior/automaton.hpp"
#include "fm/behavior/event.hpp"
#include "fm/sim/trace.hpp"

namespace fm {

struct Violation {
  std::int64_t tick = 0;
  std::set<std::string> expected;
  std::string observed;  // empty: the trace ended before the program could
};

struct Verdict {
  bool conforms = true;
  std::optional<Violation> first_violation;
  std::vector<Occurrence> occurrences;
};

/// Offline conformance. Occurrences are fed in start order. When a watcher's
/// occurrence takes an interrupt edge, body occurrences that started before
/// the watcher ended were in flight and are cancelled, so they are skipped.
/// Events the program never mentions are ignored. A trace with no
/// occurrences at all conforms.
inline Verdict check(const Trace& trace, const std::vector<EventDef>& events, const Automaton& program) {
  Verdict v;
  auto alphabet = program.alphabet();
  for (auto& o : detect_occurrences(trace, events))
    if (alphabet.count(o.event)) v.occurrences.push_back(std::move(o));
  struct Filter {
    std::set<std::string> events;
    std::int64_t until;
  };
  std::vector<Filter> filters;
  Automaton::Config config = program.initial();
  for (const Occurrence& o : v.occurrences) {
    bool skipped = false;
    for (const auto& f : filters) skipped = skipped || (f.events.count(o.event) && o.start <= f.until);
    if (skipped) continue;
    auto r = program.step(config, o.event);
    if (r.next.empty()) {
      v.conforms = false;
      v.first_violation = Violation{o.start, program.allowed(config), o.event};
      return v;
    }
    for (std::size_t i : r.interrupts_taken) filters.push_back({program.interrupts[i].cancelled(), o.end});
    config = std::move(r.next);
  }
  if (!v.occurrences.empty() && !program.accepts(config)) {
    v.conforms = false;
    v.first_violation = Violation{trace.last_tick(), program.allowed(config), ""};
  }
  return v;
}

inline nlohmann::ordered_json to_json(const Verdict& v) {
  nlohmann::ordered_json j;
  j["conforms"] = v.conforms;
  if (v.first_violation) {
    j["first_violation"] = {{"tick", v.first_violation->tick},
                            {"expected", v.first_violation->expected},
                            {"observed", v.first_violation->observed}};
  } else {
    j["first_violation"] = nullptr;
  }
  auto occ = nlohmann::ordered_json::array();
  for (const auto& o : v.occurrences)
    occ.push_back({{"event", o.event}, {"start", o.start}, {"end", o.end}, {"thing", o.thing}});
  j["occurrences"] = occ;
  return j;
}

}  // namespace fm
