#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "fm/model.hpp"
#include "fm/sim/trace.hpp"

namespace fm {

/// A named region of a canonical model.
struct EventDef {
  std::string name;
  Region region;
  std::set<std::string> labels;          // every arc label in the region
  std::set<std::string> flow_labels;     // must all be traversed by one thing
  std::set<std::string> trigger_labels;
};

struct EventError {
  enum class Code { UnknownLabel, EmptyRegion, UnknownEvent };
  Code code;
  std::string message;
};

inline std::variant<EventDef, EventError> build_event(const Model& model, const EventDecl& decl) {
  if (decl.labels.empty()) return EventError{EventError::Code::EmptyRegion, "event '" + decl.name + "' has an empty region"};
  auto r = subdiagram(model, std::set<std::string>(decl.labels.begin(), decl.labels.end()));
  if (auto* missing = std::get_if<UnknownLabels>(&r)) {
    std::string msg = "event '" + decl.name + "' names unknown label";
    for (const auto& l : missing->labels) msg += " '" + l + "'";
    return EventError{EventError::Code::UnknownLabel, msg};
  }
  EventDef e;
  e.name = decl.name;
  e.region = std::get<Region>(std::move(r));
  for (std::size_t i : e.region.arcs) {
    const Arc& a = model.arcs[i];
    e.labels.insert(a.label);
    (a.is_flow() ? e.flow_labels : e.trigger_labels).insert(a.label);
  }
  return e;
}

/// All events of the model, in declaration order.
inline std::variant<std::vector<EventDef>, EventError> build_events(const Model& model) {
  std::vector<EventDef> out;
  for (const auto& d : model.events) {
    auto e = build_event(model, d);
    if (auto* err = std::get_if<EventError>(&e)) return *err;
    out.push_back(std::get<EventDef>(std::move(e)));
  }
  return out;
}

struct Occurrence {
  std::string event;
  std::int64_t start = 0;
  std::int64_t end = 0;
  ThingId thing = 0;
  std::size_t event_index = 0;  // position in the event list; orders same-tick ties
  friend bool operator==(const Occurrence&, const Occurrence&) = default;
};

inline bool occurrence_before(const Occurrence& a, const Occurrence& b) {
  if (a.start != b.start) return a.start < b.start;
  if (a.end != b.end) return a.end < b.end;
  if (a.event_index != b.event_index) return a.event_index < b.event_index;
  return a.thing < b.thing;
}

/// Online occurrence detection. An occurrence of E opens with the first
/// spawn or move of a thing along one of E's arcs and closes once that same
/// thing has traversed every flow arc of E. Regions made only of triggers
/// occur at the tick the trigger fires.
class OccurrenceDetector {
 public:
  struct Partial {
    std::int64_t start = 0;
    std::set<std::string> traversed;
  };
  using Key = std::pair<std::size_t, ThingId>;  // event index, thing

  explicit OccurrenceDetector(const std::vector<EventDef>& events) : events_(&events) {
    for (std::size_t i = 0; i < events.size(); ++i)
      for (const auto& l : events[i].labels) by_label_[l].push_back(i);
  }

  const std::vector<std::size_t>& events_for(const std::string& label) const {
    static const std::vector<std::size_t> none;
    auto it = by_label_.find(label);
    return it == by_label_.end() ? none : it->second;
  }

  const std::map<Key, Partial>& partials() const { return partials_; }

  /// Occurrences completed by `e`.
  std::vector<Occurrence> feed(const TraceEvent& e) {
    std::vector<Occurrence> done;
    if (e.action == Action::Consume) {
      for (auto it = partials_.begin(); it != partials_.end();)
        it = it->first.second == e.thing ? partials_.erase(it) : std::next(it);
      return done;
    }
    if (!e.arc) return done;
    for (std::size_t ev : events_for(*e.arc)) {
      const EventDef& def = (*events_)[ev];
      if (def.flow_labels.empty()) {
        if (e.action == Action::TriggerFired) done.push_back({def.name, e.tick, e.tick, e.thing, ev});
        continue;
      }
      if (e.action != Action::Spawn && e.action != Action::Move) continue;
      auto [it, fresh] = partials_.try_emplace(Key{ev, e.thing});
      if (fresh) it->second.start = e.tick;
      if (def.flow_labels.count(*e.arc)) it->second.traversed.insert(*e.arc);
      if (it->second.traversed.size() == def.flow_labels.size()) {
        done.push_back({def.name, it->second.start, e.tick, e.thing, ev});
        partials_.erase(it);
      }
    }
    return done;
  }

 private:
  const std::vector<EventDef>* events_;
  std::map<std::string, std::vector<std::size_t>> by_label_;
  std::map<Key, Partial> partials_;
};

/// Completed occurrences of `events` in `trace`, ordered by start tick, then
/// end tick, then event declaration order.
inline std::vector<Occurrence> detect_occurrences(const Trace& trace, const std::vector<EventDef>& events) {
  OccurrenceDetector det(events);
  std::vector<Occurrence> out;
  for (const auto& e : trace.events)
    for (auto& o : det.feed(e)) out.push_back(std::move(o));
  std::stable_sort(out.begin(), out.end(), occurrence_before);
  return out;
}

}  // namespace fm
