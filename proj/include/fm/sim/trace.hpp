#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fm {

enum class Action { Spawn, Move, Consume, TriggerFired, Blocked };

inline const char* action_name(Action a) {
  switch (a) {
    case Action::Spawn: return "spawn";
    case Action::Move: return "move";
    case Action::Consume: return "consume";
    case Action::TriggerFired: return "trigger-fired";
    case Action::Blocked: return "blocked";
  }
  return "?";
}

inline std::optional<Action> parse_action(std::string_view s) {
  for (Action a : {Action::Spawn, Action::Move, Action::Consume, Action::TriggerFired, Action::Blocked})
    if (s == action_name(a)) return a;
  return std::nullopt;
}

using ThingId = std::uint64_t;

/// One record. `at` is the endpoint the thing is at after the action (the
/// source endpoint for trigger-fired, consume and blocked). `arc` is empty for
/// injected spawns.
struct TraceEvent {
  std::int64_t tick = 0;
  Action action = Action::Spawn;
  ThingId thing = 0;
  std::string kind;
  std::string at;
  std::optional<std::string> arc;
  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct TraceEnd {
  std::int64_t tick = 0;
  bool quiescent = true;
  friend bool operator==(const TraceEnd&, const TraceEnd&) = default;
};

struct Trace {
  std::vector<TraceEvent> events;
  std::optional<TraceEnd> end;
  friend bool operator==(const Trace&, const Trace&) = default;

  std::int64_t last_tick() const {
    if (end) return end->tick;
    return events.empty() ? 0 : events.back().tick;
  }
};

}  // namespace fm
