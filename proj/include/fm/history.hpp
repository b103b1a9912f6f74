#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace fm::history {

/// Seconds since the Unix epoch, UTC.
using Seconds = std::int64_t;

/// Parses "YYYY-MM-DDTHH:MM:SS" followed by "Z" or "+00:00".
inline std::optional<Seconds> parse_time(std::string_view s) {
  int y, mo, d, h, mi, se, n = 0;
  std::string buf(s);
  if (std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &se, &n) != 6 || n != 19) return std::nullopt;
  std::string_view zone = s.substr(19);
  if (zone != "Z" && zone != "+00:00") return std::nullopt;
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 59 || h < 0 || mi < 0 || se < 0) return std::nullopt;
  return static_cast<Seconds>(sys_days{ymd}.time_since_epoch().count()) * 86400 + h * 3600 + mi * 60 + se;
}

inline std::string format_time(Seconds t) {
  using namespace std::chrono;
  Seconds days = t >= 0 ? t / 86400 : (t - 86399) / 86400;
  Seconds rest = t - days * 86400;
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(rest / 3600),
                static_cast<int>(rest / 60 % 60), static_cast<int>(rest % 60));
  return buf;
}

enum class Action { Receive, Install, Remove };

inline const char* action_name(Action a) {
  switch (a) {
    case Action::Receive: return "receive";
    case Action::Install: return "install";
    case Action::Remove: return "remove";
  }
  return "?";
}

inline std::optional<Action> parse_action(std::string_view s) {
  for (Action a : {Action::Receive, Action::Install, Action::Remove})
    if (s == action_name(a)) return a;
  return std::nullopt;
}

struct Record {
  std::string slot;
  std::string unit;
  Action action = Action::Receive;
  Seconds at = 0;
  std::string performer;
  std::string contractor;
  std::optional<std::string> note;
  friend bool operator==(const Record&, const Record&) = default;
};

struct Error {
  std::string code;  // E_ORDER, E_OCCUPIED, E_DUP, E_FORMAT, E_UNKNOWN_SLOT
  std::string message;
};

/// Append-only replacement log over any number of slots.
class Log {
 public:
  const std::vector<Record>& records() const { return records_; }

  /// Accepts `r` only if every slot timeline stays valid; a rejected record
  /// leaves the log untouched.
  std::optional<Error> append(Record r) {
    if (r.slot.empty()) return Error{"E_FORMAT", "record has an empty slot"};
    if (r.unit.empty()) return Error{"E_FORMAT", "record has an empty unit serial"};
    for (const auto& x : records_)
      if (x == r) return Error{"E_DUP", "identical record already in the log"};
    std::vector<Record> tl = timeline_of(r.slot);
    auto pos = tl.begin();
    while (pos != tl.end() && pos->at <= r.at) ++pos;
    tl.insert(pos, r);
    if (auto err = validate(tl)) return err;
    records_.push_back(std::move(r));
    return std::nullopt;
  }

  bool has_slot(std::string_view slot) const {
    for (const auto& r : records_)
      if (r.slot == slot) return true;
    return false;
  }

  /// Records of `slot` in time order; ties keep insertion order.
  std::variant<std::vector<Record>, Error> timeline(std::string_view slot) const {
    if (!has_slot(slot)) return Error{"E_UNKNOWN_SLOT", "no records for slot '" + std::string(slot) + "'"};
    return timeline_of(slot);
  }

  /// The unit installed in `slot` at `t` (install <= t < remove).
  std::variant<std::optional<std::string>, Error> installed_at(std::string_view slot, Seconds t) const {
    if (!has_slot(slot)) return Error{"E_UNKNOWN_SLOT", "no records for slot '" + std::string(slot) + "'"};
    std::optional<std::string> cur;
    for (const auto& r : timeline_of(slot)) {
      if (r.at > t) break;
      if (r.action == Action::Install) cur = r.unit;
      else if (r.action == Action::Remove && cur == r.unit) cur.reset();
    }
    return cur;
  }

 private:
  std::vector<Record> timeline_of(std::string_view slot) const {
    std::vector<Record> out;
    for (const auto& r : records_)
      if (r.slot == slot) out.push_back(r);
    std::stable_sort(out.begin(), out.end(), [](const Record& a, const Record& b) { return a.at < b.at; });
    return out;
  }

  // Per unit: receive, install, remove, then again receive or install.
  // At most one unit installed at a time.
  static std::optional<Error> validate(const std::vector<Record>& tl) {
    std::map<std::string, Action> last;
    std::optional<std::string> installed;
    for (const auto& r : tl) {
      auto it = last.find(r.unit);
      std::optional<Action> prev = it == last.end() ? std::nullopt : std::optional<Action>(it->second);
      auto order = [&](const char* what) {
        return Error{"E_ORDER", std::string(what) + " of '" + r.unit + "' at " + format_time(r.at)};
      };
      switch (r.action) {
        case Action::Receive:
          if (prev && *prev != Action::Remove) return order("receive while already received");
          break;
        case Action::Install:
          if (!prev || *prev == Action::Install) return order("install before receive");
          if (installed)
            return Error{"E_OCCUPIED", "install of '" + r.unit + "' at " + format_time(r.at) + " while '" + *installed +
                                           "' is installed in '" + r.slot + "'"};
          installed = r.unit;
          break;
        case Action::Remove:
          if (prev != Action::Install) return order("remove before install");
          installed.reset();
          break;
      }
      last[r.unit] = r.action;
    }
    return std::nullopt;
  }

  std::vector<Record> records_;
};

inline std::string to_line(const Record& r) {
  nlohmann::ordered_json j{{"slot", r.slot},
                           {"unit", r.unit},
                           {"action", action_name(r.action)},
                           {"at", format_time(r.at)},
                           {"performer", r.performer},
                           {"contractor", r.contractor}};
  if (r.note) j["note"] = *r.note;
  return j.dump();
}

inline std::variant<Record, Error> parse_line(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return Error{"E_FORMAT", "not a JSON object"};
  Record r;
  auto str = [&](const char* key, std::string& out) -> bool {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) return false;
    out = it->get<std::string>();
    return true;
  };
  std::string action, at;
  for (auto [key, out] : {std::pair{"slot", &r.slot}, {"unit", &r.unit}, {"action", &action}, {"at", &at},
                          {"performer", &r.performer}, {"contractor", &r.contractor}})
    if (!str(key, *out)) return Error{"E_FORMAT", std::string("missing or non-string field '") + key + "'"};
  auto a = parse_action(action);
  if (!a) return Error{"E_FORMAT", "unknown action '" + action + "'"};
  r.action = *a;
  auto t = parse_time(at);
  if (!t) return Error{"E_FORMAT", "bad timestamp '" + at + "'"};
  r.at = *t;
  if (auto it = j.find("note"); it != j.end()) {
    if (!it->is_string()) return Error{"E_FORMAT", "field 'note' must be a string"};
    r.note = it->get<std::string>();
  }
  return r;
}

/// Replays a .fmh file. Errors name the offending line.
inline std::variant<Log, Error> load(std::string_view text) {
  Log log;
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    auto r = parse_line(line);
    if (auto* e = std::get_if<Error>(&r)) return Error{e->code, "line " + std::to_string(lineno) + ": " + e->message};
    if (auto e = log.append(std::get<Record>(std::move(r))))
      return Error{e->code, "line " + std::to_string(lineno) + ": " + e->message};
  }
  return log;
}

inline std::string dump(const Log& log) {
  std::string out;
  for (const auto& r : log.records()) out += to_line(r) + "\n";
  return out;
}

}  // namespace fm::history
