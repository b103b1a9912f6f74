#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "fm/behavior/automaton.hpp"
#include "fm/behavior/event.hpp"
#include "fm/sim/simulate.hpp"

namespace fm {

/// Enforcement of a chronology program during simulation.
///
/// An arc outside every event region is always permitted. Otherwise, for each
/// event E whose region holds the arc:
///  - E cancelled by an interrupt: refused, so the thing freezes;
///  - the move continues the thing's open occurrence of E: permitted;
///  - anything else opens a new occurrence, which needs E to be allowed by the
///    program now and no other open occurrence (watchers may overlap others,
///    but not themselves);
///  - if the arc would complete E, every open watcher must still be allowed
///    afterwards, otherwise completion waits until the watcher has fired.
/// The program advances when an occurrence completes.
class EnforceGate : public BehaviorGate {
 public:
  /// Events the program does not mention are not enforced.
  EnforceGate(std::vector<EventDef> events, Automaton program) {
    auto alphabet = program.alphabet();
    std::erase_if(events, [&](const EventDef& e) { return !alphabet.count(e.name); });
    shared_ = std::make_shared<Shared>(Shared{std::move(events), std::move(program), {}});
    shared_->watchers = shared_->program.watchers();
  }

  std::unique_ptr<GateState> start() const override { return std::make_unique<State>(shared_); }

 private:
  struct Shared {
    std::vector<EventDef> events;
    Automaton program;
    std::set<std::string> watchers;
  };

  class State : public GateState {
   public:
    explicit State(std::shared_ptr<const Shared> s)
        : s_(std::move(s)), detector_(s_->events), config_(s_->program.initial()) {}
    State(const State& o) : s_(o.s_), detector_(o.detector_), config_(o.config_), cancelled_(o.cancelled_) {}

    std::unique_ptr<GateState> clone() const override { return std::make_unique<State>(*this); }

    bool permit(const std::string& label, ThingId thing, bool trigger) const override {
      for (std::size_t ev : detector_.events_for(label)) {
        const EventDef& def = s_->events[ev];
        if (cancelled_.count(def.name)) return false;
        bool flow = def.flow_labels.count(label) > 0;
        bool completes = false;
        bool continues = false;
        if (def.flow_labels.empty()) {
          if (!trigger) continue;
          completes = true;
        } else if (!trigger) {
          auto it = detector_.partials().find({ev, thing});
          std::size_t done = it == detector_.partials().end() ? 0 : it->second.traversed.size();
          if (flow && (it == detector_.partials().end() || !it->second.traversed.count(label))) ++done;
          continues = it != detector_.partials().end();
          completes = done == def.flow_labels.size();
        }
        if (!continues) {
          if (!s_->program.allowed(config_).count(def.name)) return false;
          bool watcher = s_->watchers.count(def.name) > 0;
          for (const auto& [key, _] : detector_.partials()) {
            const std::string& other = s_->events[key.first].name;
            if (cancelled_.count(other)) continue;
            if (watcher ? other == def.name : !s_->watchers.count(other)) return false;
          }
        }
        if (completes) {
          auto next = s_->program.step(config_, def.name).next;
          if (next.empty()) return false;
          for (const auto& [key, _] : detector_.partials()) {
            const std::string& other = s_->events[key.first].name;
            if (other == def.name || cancelled_.count(other) || !s_->watchers.count(other)) continue;
            if (s_->program.step(next, other).next.empty()) return false;
          }
        }
      }
      return true;
    }

    void observe(const TraceEvent& e) override {
      for (const Occurrence& o : detector_.feed(e)) {
        auto r = s_->program.step(config_, o.event);
        if (r.next.empty()) continue;  // cannot happen for permitted records
        for (std::size_t i : r.interrupts_taken)
          for (const auto& name : s_->program.interrupts[i].cancelled()) cancelled_.insert(name);
        config_ = std::move(r.next);
      }
    }

   private:
    std::shared_ptr<const Shared> s_;
    OccurrenceDetector detector_;
    Automaton::Config config_;
    std::set<std::string> cancelled_;
  };

  std::shared_ptr<Shared> shared_;
};

/// A gate for `program` over the events of canonical `model`.
inline std::variant<std::shared_ptr<const BehaviorGate>, std::string> enforce(const Model& model, const Chrono& program) {
  auto events = build_events(model);
  if (auto* err = std::get_if<EventError>(&events)) return err->message;
  auto& evs = std::get<std::vector<EventDef>>(events);
  std::set<std::string> names;
  for (const auto& e : evs) names.insert(e.name);
  auto a = compile(program, names);
  if (auto* err = std::get_if<CompileError>(&a)) return err->message;
  return std::shared_ptr<const BehaviorGate>(std::make_shared<EnforceGate>(std::move(evs), std::get<Automaton>(std::move(a))));
}

}  // namespace fm
