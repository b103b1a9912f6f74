#pragma once

#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "fm/model.hpp"

namespace fm {

struct AutEdge {
  enum class Kind { Eps, Event, Interrupt };
  std::size_t from = 0;
  std::size_t to = 0;
  Kind kind = Kind::Eps;
  std::string event;          // Event and Interrupt edges
  std::size_t interrupt = 0;  // Interrupt edges: index into Automaton::interrupts
};

struct InterruptInfo {
  std::string watcher;
  std::set<std::string> body;     // events the watcher cancels...
  std::set<std::string> handler;  // ...unless the handler uses them too
  std::set<std::string> cancelled() const {
    std::set<std::string> out;
    for (const auto& e : body)
      if (!handler.count(e)) out.insert(e);
    return out;
  }
};

/// Nondeterministic automaton over event names with epsilon moves.
/// Simulated on state sets, so choices resolve on whichever branch the
/// occurrences follow.
struct Automaton {
  std::size_t states = 0;
  std::size_t start = 0;
  std::set<std::size_t> accepting;
  std::vector<AutEdge> edges;
  std::vector<InterruptInfo> interrupts;

  using Config = std::set<std::size_t>;

  struct StepResult {
    Config next;
    std::set<std::size_t> interrupts_taken;
  };

  Config closure(Config c) const {
    std::vector<std::size_t> work(c.begin(), c.end());
    while (!work.empty()) {
      std::size_t s = work.back();
      work.pop_back();
      for (const auto& e : edges)
        if (e.from == s && e.kind == AutEdge::Kind::Eps && c.insert(e.to).second) work.push_back(e.to);
    }
    return c;
  }

  Config initial() const { return closure({start}); }

  StepResult step(const Config& from, const std::string& event) const {
    StepResult r;
    Config c = closure(from);
    for (const auto& e : edges) {
      if (e.kind == AutEdge::Kind::Eps || e.event != event || !c.count(e.from)) continue;
      r.next.insert(e.to);
      if (e.kind == AutEdge::Kind::Interrupt) r.interrupts_taken.insert(e.interrupt);
    }
    r.next = closure(std::move(r.next));
    return r;
  }

  std::set<std::string> allowed(const Config& from) const {
    std::set<std::string> out;
    Config c = closure(from);
    for (const auto& e : edges)
      if (e.kind != AutEdge::Kind::Eps && c.count(e.from)) out.insert(e.event);
    return out;
  }

  bool accepts(const Config& c) const {
    for (std::size_t s : closure(c))
      if (accepting.count(s)) return true;
    return false;
  }

  bool accepts(const std::vector<std::string>& word) const {
    Config c = initial();
    for (const auto& w : word) {
      c = step(c, w).next;
      if (c.empty()) return false;
    }
    return accepts(c);
  }

  std::set<std::string> alphabet() const {
    std::set<std::string> out;
    for (const auto& e : edges)
      if (e.kind != AutEdge::Kind::Eps) out.insert(e.event);
    return out;
  }

  std::set<std::string> watchers() const {
    std::set<std::string> out;
    for (const auto& i : interrupts) out.insert(i.watcher);
    return out;
  }
};

struct CompileError {
  std::string message;
};

namespace detail {

inline void collect_refs(const Chrono& c, std::set<std::string>& out) {
  if (c.kind == Chrono::Kind::Ref) out.insert(c.ref);
  for (const auto& k : c.children) collect_refs(k, out);
}

class AutomatonBuilder {
 public:
  explicit AutomatonBuilder(Automaton& a) : a_(a) {}

  std::size_t fresh() { return a_.states++; }
  void eps(std::size_t f, std::size_t t) { a_.edges.push_back({f, t, AutEdge::Kind::Eps, {}, 0}); }

  // Compiles `c` starting at state `entry`; returns its exit state.
  std::size_t build(const Chrono& c, std::size_t entry) {
    using K = Chrono::Kind;
    switch (c.kind) {
      case K::Ref: {
        std::size_t x = fresh();
        a_.edges.push_back({entry, x, AutEdge::Kind::Event, c.ref, 0});
        return x;
      }
      case K::Seq: {
        std::size_t cur = entry;
        for (const auto& k : c.children) cur = build(k, cur);
        return cur;
      }
      case K::Choice: {
        std::vector<std::size_t> exits;
        for (const auto& k : c.children) exits.push_back(build(k, entry));
        std::size_t x = fresh();
        for (std::size_t e : exits) eps(e, x);
        return x;
      }
      case K::Repeat: {
        std::size_t h = fresh();
        eps(entry, h);
        std::size_t e = build(c.children[0], h);
        std::size_t x = fresh();
        eps(e, h);
        eps(e, x);
        if (c.possible) eps(h, x);
        return x;
      }
      case K::Interrupt: {
        const Chrono& watcher = c.children[0];
        const Chrono& handler = c.children[1];
        const Chrono& body = c.children[2];
        std::size_t b0 = fresh();
        eps(entry, b0);
        std::size_t be = build(body, b0);
        std::size_t body_end = a_.states;
        std::size_t hs = fresh();
        std::size_t he = build(handler, hs);
        std::size_t x = fresh();
        eps(be, x);
        eps(he, x);
        InterruptInfo info;
        info.watcher = watcher.ref;
        collect_refs(body, info.body);
        collect_refs(handler, info.handler);
        std::size_t id = a_.interrupts.size();
        a_.interrupts.push_back(std::move(info));
        for (std::size_t s = b0; s < body_end; ++s)
          a_.edges.push_back({s, hs, AutEdge::Kind::Interrupt, watcher.ref, id});
        return x;
      }
      case K::Par: return build_par(c, entry);
    }
    return entry;
  }

 private:
  // Free interleaving: product of the children's automata.
  std::size_t build_par(const Chrono& c, std::size_t entry) {
    std::vector<Automaton> parts;
    for (const auto& k : c.children) {
      Automaton p;
      AutomatonBuilder b(p);
      p.start = b.fresh();
      p.accepting.insert(b.build(k, p.start));
      parts.push_back(std::move(p));
    }
    std::vector<std::map<std::size_t, std::vector<const AutEdge*>>> adj(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i)
      for (const auto& e : parts[i].edges) adj[i][e.from].push_back(&e);
    // interrupt indices of each part are shifted into ours
    std::vector<std::size_t> offset;
    for (const auto& p : parts) {
      offset.push_back(a_.interrupts.size());
      for (const auto& info : p.interrupts) a_.interrupts.push_back(info);
    }

    using Tuple = std::vector<std::size_t>;
    std::map<Tuple, std::size_t> ids;
    std::vector<Tuple> work;
    auto id_of = [&](const Tuple& t) {
      auto [it, fresh_tuple] = ids.try_emplace(t, 0);
      if (fresh_tuple) {
        it->second = fresh();
        work.push_back(t);
      }
      return it->second;
    };
    Tuple init;
    for (const auto& p : parts) init.push_back(p.start);
    eps(entry, id_of(init));
    std::size_t x = fresh();
    while (!work.empty()) {
      Tuple t = work.back();
      work.pop_back();
      std::size_t from = ids.at(t);
      bool done = true;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        done = done && parts[i].accepting.count(t[i]);
        auto it = adj[i].find(t[i]);
        if (it == adj[i].end()) continue;
        for (const AutEdge* e : it->second) {
          Tuple n = t;
          n[i] = e->to;
          std::size_t to = id_of(n);
          a_.edges.push_back({from, to, e->kind, e->event, e->interrupt + offset[i]});
        }
      }
      if (done) eps(from, x);
    }
    return x;
  }

  Automaton& a_;
};

}  // namespace detail

/// Compiles a chronology program. `known` lists the event names a Ref may
/// name.
inline std::variant<Automaton, CompileError> compile(const Chrono& program, const std::set<std::string>& known) {
  std::set<std::string> refs;
  detail::collect_refs(program, refs);
  for (const auto& r : refs)
    if (!known.count(r)) return CompileError{"unknown event '" + r + "'"};
  std::vector<const Chrono*> stack{&program};
  while (!stack.empty()) {
    const Chrono* c = stack.back();
    stack.pop_back();
    if (c->kind == Chrono::Kind::Interrupt && (c->children.size() != 3 || c->children[0].kind != Chrono::Kind::Ref))
      return CompileError{"interrupt watcher must be a single event"};
    if (c->kind == Chrono::Kind::Repeat && c->children.size() != 1) return CompileError{"repeat takes one operand"};
    if ((c->kind == Chrono::Kind::Seq || c->kind == Chrono::Kind::Choice || c->kind == Chrono::Kind::Par) &&
        c->children.size() < 2)
      return CompileError{"seq, choice and par need at least two operands"};
    for (const auto& k : c->children) stack.push_back(&k);
  }
  Automaton a;
  detail::AutomatonBuilder b(a);
  a.start = b.fresh();
  a.accepting.insert(b.build(program, a.start));
  return a;
}

}  // namespace fm
