#pragma once

#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "fm/sim/trace.hpp"

namespace fm {

/// One JSON object per line: {tick, action, thing, kind, at, arc}. A finished
/// run adds a last line {tick, action} with action "quiescent" or "halted".
inline std::string write_trace(const Trace& t) {
  std::string out;
  for (const auto& e : t.events) {
    nlohmann::ordered_json j{{"tick", e.tick},
                             {"action", action_name(e.action)},
                             {"thing", e.thing},
                             {"kind", e.kind},
                             {"at", e.at},
                             {"arc", e.arc ? nlohmann::ordered_json(*e.arc) : nlohmann::ordered_json(nullptr)}};
    out += j.dump() + "\n";
  }
  if (t.end) {
    nlohmann::ordered_json j{{"tick", t.end->tick}, {"action", t.end->quiescent ? "quiescent" : "halted"}};
    out += j.dump() + "\n";
  }
  return out;
}

struct TraceParseError {
  std::size_t line = 0;
  std::string message;
  std::string what() const { return "line " + std::to_string(line) + ": " + message; }
};

inline std::variant<Trace, TraceParseError> read_trace(std::string_view text) {
  Trace t;
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    auto fail = [&](std::string msg) { return TraceParseError{lineno, std::move(msg)}; };
    if (t.end) return fail("record after the end marker");
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return fail("not a JSON object");
    auto tick = j.find("tick");
    if (tick == j.end() || !tick->is_number_integer()) return fail("missing integer field 'tick'");
    auto action = j.find("action");
    if (action == j.end() || !action->is_string()) return fail("missing string field 'action'");
    std::string act = action->get<std::string>();
    if (act == "quiescent" || act == "halted") {
      t.end = TraceEnd{tick->get<std::int64_t>(), act == "quiescent"};
      continue;
    }
    auto a = parse_action(act);
    if (!a) return fail("unknown action '" + act + "'");
    TraceEvent e;
    e.tick = tick->get<std::int64_t>();
    e.action = *a;
    auto thing = j.find("thing");
    if (thing == j.end() || !thing->is_number_unsigned()) return fail("missing non-negative integer field 'thing'");
    e.thing = thing->get<ThingId>();
    for (auto [key, out] : {std::pair{"kind", &e.kind}, {"at", &e.at}}) {
      auto it = j.find(key);
      if (it == j.end() || !it->is_string()) return fail(std::string("missing string field '") + key + "'");
      *out = it->get<std::string>();
    }
    auto arc = j.find("arc");
    if (arc == j.end()) return fail("missing field 'arc'");
    if (arc->is_string()) e.arc = arc->get<std::string>();
    else if (!arc->is_null()) return fail("field 'arc' must be a string or null");
    t.events.push_back(std::move(e));
  }
  return t;
}

}  // namespace fm
