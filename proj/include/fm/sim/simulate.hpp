#pragma once

#include <algorithm>
#include <charconv>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fm/model.hpp"
#include "fm/sim/scenario.hpp"
#include "fm/sim/trace.hpp"

namespace fm {

/// Runtime side of an enforced behavior. The simulator asks before every
/// trigger firing and every move, and reports every record it emits.
class GateState {
 public:
  virtual ~GateState() = default;
  virtual std::unique_ptr<GateState> clone() const = 0;
  virtual bool permit(const std::string& arc_label, ThingId thing, bool trigger) const = 0;
  virtual void observe(const TraceEvent& e) = 0;
};

class BehaviorGate {
 public:
  virtual ~BehaviorGate() = default;
  virtual std::unique_ptr<GateState> start() const = 0;
};

struct SimConfig {
  std::int64_t max_ticks = 1000;
  std::int64_t stage_dwell = 1;  // ticks a thing stays at a stage before it may act; at least 1
  std::shared_ptr<const BehaviorGate> gate;  // null: observe only
};

struct Thing {
  ThingId id = 0;
  std::size_t kind = 0;
  AttrMap attrs;
  Endpoint loc;
  std::int64_t born_tick = 0;
  std::int64_t enter_tick = 0;
  std::optional<Endpoint> came_from;      // previous location; empty after a spawn
  std::optional<std::size_t> via;         // arc of the last move
  std::set<std::string> fired;            // triggers fired during this visit
  std::set<std::string> reported_blocked; // arcs already reported blocked this visit
};

struct SimState {
  std::int64_t tick = 0;
  ThingId next_id = 1;
  std::map<ThingId, Thing> things;
  std::vector<std::pair<Endpoint, std::int64_t>> enables;  // endpoint, first tick it may be used
  std::unique_ptr<GateState> gate;

  SimState() = default;
  SimState(SimState&&) = default;
  SimState& operator=(SimState&&) = default;
  SimState(const SimState& o)
      : tick(o.tick), next_id(o.next_id), things(o.things), enables(o.enables), gate(o.gate ? o.gate->clone() : nullptr) {}
  SimState& operator=(const SimState& o) {
    if (this != &o) *this = SimState(o);
    return *this;
  }
};

class Simulator {
 public:
  /// `model` must be canonical and outlive the simulator.
  Simulator(const Model& model, Scenario scenario, SimConfig config = {})
      : model_(model), scenario_(std::move(scenario)), config_(std::move(config)) {
    if (!model_.canonical) throw std::invalid_argument("simulation needs a canonical model");
    if (config_.stage_dwell < 1) config_.stage_dwell = 1;
    for (std::size_t i = 0; i < model_.arcs.size(); ++i) {
      const Arc& a = model_.arcs[i];
      (a.is_flow() ? flows_ : triggers_)[a.from].push_back(i);
    }
    auto by_label = [&](std::size_t x, std::size_t y) { return model_.arcs[x].label < model_.arcs[y].label; };
    for (auto& [_, v] : flows_) std::sort(v.begin(), v.end(), by_label);
    for (auto& [_, v] : triggers_) std::sort(v.begin(), v.end(), by_label);
    // "f23.2" continues with "f23.3" when that arc starts where f23.2 ends.
    std::map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < model_.arcs.size(); ++i) index.emplace(model_.arcs[i].label, i);
    chain_next_.resize(model_.arcs.size());
    for (std::size_t i = 0; i < model_.arcs.size(); ++i) {
      const std::string& l = model_.arcs[i].label;
      auto dot = l.rfind('.');
      if (dot == std::string::npos) continue;
      long long k = 0;
      auto [end, ec] = std::from_chars(l.data() + dot + 1, l.data() + l.size(), k);
      if (ec != std::errc() || end != l.data() + l.size()) continue;
      std::string next = l.substr(0, dot + 1) + std::to_string(k + 1);
      auto it = index.find(next);
      if (it != index.end() && model_.arcs[it->second].from == model_.arcs[i].to) chain_next_[i] = it->second;
    }
  }

  const Model& model() const { return model_; }
  const SimConfig& config() const { return config_; }

  SimState initial() const {
    SimState s;
    if (config_.gate) s.gate = config_.gate->start();
    return s;
  }

  /// Runs one tick and returns its records.
  std::vector<TraceEvent> step(SimState& s) const {
    std::vector<TraceEvent> out;
    const std::int64_t T = s.tick;
    auto emit = [&](TraceEvent e) {
      if (s.gate) s.gate->observe(e);
      out.push_back(std::move(e));
    };
    auto record = [&](Action act, const Thing& t, const Endpoint& at, const std::string* arc) {
      TraceEvent e{T, act, t.id, model_.kinds[t.kind].name, model_.endpoint_text(at), std::nullopt};
      if (arc) e.arc = *arc;
      emit(std::move(e));
    };
    auto dwell_done = [&](const Thing& t) { return T - t.enter_tick >= config_.stage_dwell; };
    // Evaluates a guard; an evaluation error is reported once per visit and counts as false.
    auto guard_ok = [&](Thing& t, const Arc& a) {
      if (!a.guard) return true;
      auto g = eval_guard(*a.guard, t.attrs);
      if (g) return *g;
      if (t.reported_blocked.insert(a.label).second) record(Action::Blocked, t, t.loc, &a.label);
      return false;
    };

    for (const Injection& inj : scenario_.injections) {
      if (inj.tick != T) continue;
      Thing t;
      t.id = s.next_id++;
      t.kind = model_.machines[inj.at.machine].kind;
      t.attrs = inj.attrs;
      t.loc = inj.at;
      t.born_tick = t.enter_tick = T;
      auto [it, _] = s.things.emplace(t.id, std::move(t));
      record(Action::Spawn, it->second, it->second.loc, nullptr);
    }

    // Triggers.
    std::vector<ThingId> ids;
    for (const auto& [id, _] : s.things) ids.push_back(id);
    for (ThingId id : ids) {
      auto it = s.things.find(id);
      if (it == s.things.end() || !dwell_done(it->second)) continue;
      auto trig = triggers_.find(it->second.loc);
      if (trig == triggers_.end()) continue;
      for (std::size_t ai : trig->second) {
        Thing& t = s.things.at(id);
        const Arc& a = model_.arcs[ai];
        if (t.fired.count(a.label) || !guard_ok(t, a)) continue;
        std::optional<Thing> child;
        if (a.to.stage == Stage::Create) {
          child = spawn_from(t, a);
          if (!child) {
            if (t.reported_blocked.insert(a.label).second) record(Action::Blocked, t, t.loc, &a.label);
            continue;
          }
        }
        if (s.gate && !s.gate->permit(a.label, t.id, true)) continue;
        t.fired.insert(a.label);
        record(Action::TriggerFired, t, t.loc, &a.label);
        if (child) {
          child->id = s.next_id++;
          child->born_tick = child->enter_tick = T;
          auto [cit, _] = s.things.emplace(child->id, std::move(*child));
          record(Action::Spawn, cit->second, cit->second.loc, &a.label);
        } else {
          s.enables.emplace_back(a.to, T + 1);
        }
        if (a.consuming) {
          Thing& src = s.things.at(id);
          record(Action::Consume, src, src.loc, &a.label);
          s.things.erase(id);
          break;
        }
      }
    }

    // Moves.
    struct Candidate {
      const std::string* label;
      ThingId thing;
      std::size_t arc;
    };
    std::vector<Candidate> cands;
    auto add_candidates = [&](Thing& t) {
      bool any = false;
      if (t.via && chain_next_[*t.via]) {
        std::size_t ai = *chain_next_[*t.via];
        if (!guard_ok(t, model_.arcs[ai])) return false;
        cands.push_back({&model_.arcs[ai].label, t.id, ai});
        return true;
      }
      if (auto f = flows_.find(t.loc); f != flows_.end())
        for (std::size_t ai : f->second)
          if (direction_ok(t, model_.arcs[ai], f->second) && guard_ok(t, model_.arcs[ai])) {
            cands.push_back({&model_.arcs[ai].label, t.id, ai});
            any = true;
          }
      return any;
    };
    for (auto& [id, t] : s.things)
      if (t.enter_tick != T && dwell_done(t)) add_candidates(t);
    // An enable lets the lowest-id thing still dwelling at its stage move now.
    // It stays pending until such a thing actually moves.
    std::map<ThingId, std::size_t> enabled_by;
    for (std::size_t i = 0; i < s.enables.size(); ++i) {
      const auto& [ep, from] = s.enables[i];
      if (from > T) continue;
      for (auto& [id, t] : s.things) {
        if (t.loc != ep || t.enter_tick == T || dwell_done(t) || enabled_by.count(id)) continue;
        if (add_candidates(t)) {
          enabled_by.emplace(id, i);
          break;
        }
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
      if (*x.label != *y.label) return *x.label < *y.label;
      return x.thing < y.thing;
    });
    std::set<ThingId> moved;
    for (const Candidate& c : cands) {
      if (moved.count(c.thing)) continue;
      const Arc& a = model_.arcs[c.arc];
      if (s.gate && !s.gate->permit(a.label, c.thing, false)) continue;
      Thing& t = s.things.at(c.thing);
      moved.insert(t.id);
      t.came_from = t.loc;
      t.via = c.arc;
      t.loc = a.to;
      t.enter_tick = T;
      t.fired.clear();
      t.reported_blocked.clear();
      if (a.to.stage == Stage::Process) apply_assigns(t);
      record(Action::Move, t, t.loc, &a.label);
    }

    std::set<std::size_t> used;
    for (const auto& [id, i] : enabled_by)
      if (moved.count(id)) used.insert(i);
    for (auto it = used.rbegin(); it != used.rend(); ++it) s.enables.erase(s.enables.begin() + static_cast<std::ptrdiff_t>(*it));
    ++s.tick;
    return out;
  }

  /// True when no record can ever be produced again from `s`.
  bool quiescent(const SimState& s) const {
    for (const auto& inj : scenario_.injections)
      if (inj.tick >= s.tick) return false;
    for (const auto& [_, t] : s.things)
      if (s.tick - t.enter_tick < config_.stage_dwell) return false;
    SimState probe = s;
    return step(probe).empty();
  }

  Trace run() const {
    SimState s = initial();
    return run(s);
  }

  Trace run(SimState& s) const {
    Trace trace;
    for (;;) {
      if (quiescent(s)) {
        trace.end = TraceEnd{s.tick, true};
        break;
      }
      if (s.tick >= config_.max_ticks) {
        trace.end = TraceEnd{s.tick, false};
        break;
      }
      for (auto& e : step(s)) trace.events.push_back(std::move(e));
    }
    return trace;
  }

 private:
  // A thing partway along an expanded shorthand arrow finishes it: the route
  // was chosen where the guard sits, on the first hop. Outside a chain, the
  // Transfer rule below applies.
  //
  // A Transfer stage carries traffic both ways. A thing that came from its
  // own Release leaves the machine; a thing that arrived from another machine
  // enters Receive, or is passed on if the machine has no Receive.
  bool direction_ok(const Thing& t, const Arc& a, const std::vector<std::size_t>& out) const {
    if (t.loc.stage != Stage::Transfer) return true;
    bool leaving = a.to.machine != t.loc.machine;
    if (t.came_from && t.came_from->machine == t.loc.machine) return leaving;
    bool can_enter = false;
    for (std::size_t i : out) can_enter = can_enter || model_.arcs[i].to.machine == t.loc.machine;
    return can_enter ? !leaving : leaving;
  }

  // The thing a Create-targeting trigger would spawn, or nullopt if a spawn
  // expression fails to evaluate.
  std::optional<Thing> spawn_from(const Thing& src, const Arc& a) const {
    Thing t;
    t.kind = model_.machines[a.to.machine].kind;
    t.loc = a.to;
    const ThingKind& kind = model_.kinds[t.kind];
    for (const auto& sp : a.spawn) {
      auto v = evaluate(sp.value, src.attrs);
      if (std::holds_alternative<EvalError>(v)) return std::nullopt;
      const AttrDecl* decl = kind.find(sp.attr);
      t.attrs.insert_or_assign(sp.attr, decl ? coerce(std::get<Value>(v), decl->type) : std::get<Value>(v));
    }
    for (const auto& attr : kind.attrs)
      if (!t.attrs.count(attr.name) && attr.default_value) t.attrs.emplace(attr.name, *attr.default_value);
    return t;
  }

  // Assignments run in declaration order; each sees the previous ones.
  void apply_assigns(Thing& t) const {
    const Machine& m = model_.machines[t.loc.machine];
    const ThingKind& kind = model_.kinds[t.kind];
    for (const auto& as : m.assigns) {
      auto v = evaluate(as.value, t.attrs);
      if (std::holds_alternative<EvalError>(v)) continue;
      const AttrDecl* decl = kind.find(as.attr);
      t.attrs.insert_or_assign(as.attr, decl ? coerce(std::get<Value>(v), decl->type) : std::get<Value>(v));
    }
  }

  const Model& model_;
  Scenario scenario_;
  SimConfig config_;
  std::map<Endpoint, std::vector<std::size_t>> flows_;
  std::map<Endpoint, std::vector<std::size_t>> triggers_;
  std::vector<std::optional<std::size_t>> chain_next_;
};

}  // namespace fm
