#include <gtest/gtest.h>

#include <random>

#include "fm/fm.hpp"
#include "support/chrono_ref.hpp"
#include "support/common.hpp"
#include "support/synth.hpp"

namespace {

using K = fm::Chrono::Kind;
using fm::Chrono;

Chrono ev(const char* n) { return Chrono::event(n); }

fm::Automaton compiled(const Chrono& c, std::set<std::string> known = {"A", "B", "C", "D"}) {
  auto r = fm::compile(c, known);
  if (auto* e = std::get_if<fm::CompileError>(&r)) throw std::runtime_error(e->message);
  return std::get<fm::Automaton>(std::move(r));
}

using Word = std::vector<std::string>;

// Random programs over A..D. Interrupt watchers are plain events.
class ProgGen {
 public:
  explicit ProgGen(std::uint32_t seed) : rng_(seed) {}

  Chrono program(int depth) {
    int pick = depth <= 0 ? 0 : uniform(0, 6);
    switch (pick) {
      case 0:
      case 1: return ev(name());
      case 2: return Chrono::node(K::Seq, kids(depth));
      case 3: return Chrono::node(K::Choice, kids(depth));
      case 4: return Chrono::node(K::Par, kids(depth, 2));
      case 5: return Chrono::node(K::Repeat, {program(depth - 1)}, uniform(0, 1) == 1);
      default: return Chrono::node(K::Interrupt, {ev(name()), program(depth - 1), program(depth - 1)});
    }
  }

  Word word() {
    Word w;
    int n = uniform(0, 5);
    for (int i = 0; i < n; ++i) w.push_back(name());
    return w;
  }

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

 private:
  const char* name() { return std::array{"A", "B", "C", "D"}[static_cast<std::size_t>(uniform(0, 3))]; }
  std::vector<Chrono> kids(int depth, int max = 3) {
    std::vector<Chrono> out;
    int n = uniform(2, max);
    for (int i = 0; i < n; ++i) out.push_back(program(depth - 1));
    return out;
  }
  std::mt19937 rng_;
};

struct Tvm {
  fm::Model model = fmtest::load_corpus_model("tvm.fm");
  fmtest::Program prog = fmtest::load_program(model, "cash_sale");
  const fm::Chrono& chrono() const { return model.find_behavior("cash_sale")->program; }
};

const Tvm& tvm() {
  static const Tvm t;
  return t;
}

fm::Trace run_tvm(const std::string& stem, bool enforce_gate = false) {
  const auto& m = tvm().model;
  auto sc = fmtest::load_corpus_scenario(m, "scenarios/" + stem + ".fms");
  fm::SimConfig cfg;
  if (enforce_gate) cfg.gate = std::get<std::shared_ptr<const fm::BehaviorGate>>(fm::enforce(m, tvm().chrono()));
  return fm::Simulator(m, sc, cfg).run();
}

std::vector<std::string> names(const std::vector<fm::Occurrence>& occs, bool program_only = true) {
  std::set<std::string> alpha = tvm().prog.automaton.alphabet();
  std::vector<std::string> out;
  for (const auto& o : occs)
    if (!program_only || alpha.count(o.event)) out.push_back(o.event);
  return out;
}

// check() and the reference must agree on the verdict, tick, observed event
// and expected set.
void expect_same_verdict(const fm::Trace& t, const std::string& what) {
  auto v = fm::check(t, tvm().prog.events, tvm().prog.automaton);
  auto r = fmtest::ref::first_violation(tvm().chrono(), v.occurrences, t.last_tick());
  ASSERT_EQ(v.conforms, !r.has_value()) << what;
  if (!r) return;
  ASSERT_TRUE(v.first_violation.has_value()) << what;
  EXPECT_EQ(v.first_violation->tick, r->tick) << what;
  EXPECT_EQ(v.first_violation->observed, r->observed) << what;
  EXPECT_EQ(v.first_violation->expected, r->expected) << what;
}

}  // namespace

TEST(Compile, Operators) {
  auto seq = compiled(Chrono::node(K::Seq, {ev("A"), ev("B")}));
  EXPECT_TRUE(seq.accepts(Word{"A", "B"}));
  EXPECT_FALSE(seq.accepts(Word{"B", "A"}));
  EXPECT_FALSE(seq.accepts(Word{"A"}));

  auto choice = compiled(Chrono::node(K::Choice, {ev("A"), ev("B")}));
  EXPECT_TRUE(choice.accepts(Word{"A"}));
  EXPECT_TRUE(choice.accepts(Word{"B"}));
  EXPECT_FALSE(choice.accepts(Word{"A", "B"}));

  auto plus = compiled(Chrono::node(K::Repeat, {ev("A")}));
  EXPECT_FALSE(plus.accepts(Word{}));
  EXPECT_TRUE(plus.accepts(Word{"A", "A", "A"}));
  auto star = compiled(Chrono::node(K::Repeat, {ev("A")}, true));
  EXPECT_TRUE(star.accepts(Word{}));

  auto par = compiled(Chrono::node(K::Par, {Chrono::node(K::Seq, {ev("A"), ev("B")}), ev("C")}));
  for (Word w : {Word{"A", "B", "C"}, Word{"A", "C", "B"}, Word{"C", "A", "B"}}) EXPECT_TRUE(par.accepts(w));
  EXPECT_FALSE(par.accepts(Word{"B", "A", "C"}));
  EXPECT_FALSE(par.accepts(Word{"A", "B"}));
}

TEST(Compile, InterruptLeavesTheBody) {
  auto intr = compiled(Chrono::node(K::Interrupt, {ev("D"), ev("C"), Chrono::node(K::Seq, {ev("A"), ev("B")})}));
  EXPECT_TRUE(intr.accepts(Word{"A", "B"}));
  EXPECT_TRUE(intr.accepts(Word{"A", "D", "C"}));
  EXPECT_TRUE(intr.accepts(Word{"D", "C"}));
  EXPECT_FALSE(intr.accepts(Word{"A", "D", "B"}));
  // the watcher stays armed until the whole program ends
  EXPECT_TRUE(intr.accepts(Word{"A", "B", "D", "C"}));
  EXPECT_FALSE(intr.accepts(Word{"A", "B", "D"}));
  ASSERT_EQ(intr.interrupts.size(), 1u);
  EXPECT_EQ(intr.interrupts[0].cancelled(), (std::set<std::string>{"A", "B"}));
  EXPECT_EQ(intr.watchers(), std::set<std::string>{"D"});
}

TEST(Compile, RejectsUnknownEvents) {
  auto r = fm::compile(Chrono::node(K::Seq, {ev("A"), ev("Z")}), {"A"});
  EXPECT_TRUE(std::holds_alternative<fm::CompileError>(r));
}

TEST(Compile, AgreesWithReferenceOnRandomWords) {
  int checked = 0;
  for (std::uint32_t seed = 1; seed <= 400; ++seed) {
    ProgGen g(seed);
    Chrono p = g.program(3);
    auto a = compiled(p);
    for (int i = 0; i < 40; ++i) {
      Word w = g.word();
      ASSERT_EQ(a.accepts(w), fmtest::ref::accepts(p, w)) << fm::to_source(p) << " on " << ::testing::PrintToString(w);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 16000);
}

TEST(Events, TvmRegions) {
  const auto& evs = tvm().prog.events;
  auto find = [&](const char* n) {
    for (const auto& e : evs)
      if (e.name == n) return e;
    throw std::runtime_error(n);
  };
  EXPECT_EQ(find("V2").flow_labels, (std::set<std::string>{"f23.1", "f23.2", "f23.3"}));
  EXPECT_EQ(find("V5").trigger_labels, std::set<std::string>{"f27"});
  EXPECT_EQ(find("V6").trigger_labels, std::set<std::string>{"f29"});
  auto bad = fm::dsl::parse(fmtest::slurp(fmtest::corpus_path("tvm.fm")) + "event X { region { #nope } }\n");
  auto canon = fm::dsl::canonicalize(std::move(bad.model));
  EXPECT_TRUE(std::holds_alternative<fm::EventError>(fm::build_events(canon.model)));
}

TEST(Events, OccurrencesOfTheHappyPath) {
  auto v = fm::check(run_tvm("tvm_happy"), tvm().prog.events, tvm().prog.automaton);
  EXPECT_EQ(names(v.occurrences), (std::vector<std::string>{"V1", "V2", "V3", "V5"}));
  auto all = fm::detect_occurrences(run_tvm("tvm_happy"), tvm().prog.events);
  EXPECT_EQ(names(all, false).front(), "start");
  EXPECT_EQ(names(all), names(v.occurrences));
  for (const auto& o : v.occurrences) EXPECT_LE(o.start, o.end);
  EXPECT_TRUE(std::is_sorted(v.occurrences.begin(), v.occurrences.end(), fm::occurrence_before));
}

TEST(Events, TriggerOnlyRegionOccursAtFiring) {
  fm::Trace t;
  t.events.push_back({5, fm::Action::TriggerFired, 3, "cash", "tvm/cash.process", "f27"});
  auto occ = fm::detect_occurrences(t, tvm().prog.events);
  ASSERT_EQ(occ.size(), 0u) << "V5 also needs its flow f28";
  auto m = fmtest::canonical_from_source(
      "thing w\nsphere s {\n machine a: w { create process }\n machine b: w { create }\n"
      " flow s/a.create -> s/a.process #x\n trigger s/a.process => s/b.create #t\n}\n"
      "event T { region { #t } }\n");
  auto events = std::get<std::vector<fm::EventDef>>(fm::build_events(m));
  auto sc = fmtest::scenario_from_source(m, "inject w at s/a.create tick 0\n");
  occ = fm::detect_occurrences(fm::Simulator(m, sc).run(), events);
  ASSERT_EQ(occ.size(), 1u);
  EXPECT_EQ(occ[0].event, "T");
  EXPECT_EQ(occ[0].start, 2);
  EXPECT_EQ(occ[0].end, 2);
}

TEST(Check, TvmScenariosObserved) {
  struct Want {
    const char* stem;
    bool conforms;
    std::vector<std::string> seq;
  };
  for (const Want& w : {Want{"tvm_happy", true, {"V1", "V2", "V3", "V5"}},
                        Want{"tvm_insufficient", true, {"V1", "V2", "V3", "V4"}},
                        Want{"tvm_topup", true, {"V1", "V2", "V3", "V4", "V2", "V3", "V5"}},
                        Want{"tvm_cancel", true, {"V1", "V2", "V6", "V3", "V7"}},
                        Want{"tvm_card_declined", true, {}}}) {
    auto t = run_tvm(w.stem);
    auto v = fm::check(t, tvm().prog.events, tvm().prog.automaton);
    EXPECT_EQ(v.conforms, w.conforms) << w.stem;
    EXPECT_EQ(names(v.occurrences), w.seq) << w.stem;
    expect_same_verdict(t, w.stem);
  }
}

TEST(Check, NonConformingScenarios) {
  for (const char* stem : {"tvm_card", "tvm_out_of_order"}) {
    auto t = run_tvm(stem);
    auto v = fm::check(t, tvm().prog.events, tvm().prog.automaton);
    EXPECT_FALSE(v.conforms) << stem;
    EXPECT_TRUE(v.first_violation.has_value()) << stem;
    expect_same_verdict(t, stem);
  }
}

TEST(Check, CancelSkipsInFlightBodyEvents) {
  // V3 started before the withdraw signal finished, so it was in flight and
  // does not count against the handler.
  auto v = fm::check(run_tvm("tvm_cancel"), tvm().prog.events, tvm().prog.automaton);
  EXPECT_TRUE(v.conforms);
  std::int64_t v6_end = -1, v3_start = -1;
  for (const auto& o : v.occurrences) {
    if (o.event == "V6") v6_end = o.end;
    if (o.event == "V3") v3_start = o.start;
  }
  ASSERT_GE(v6_end, 0);
  EXPECT_LE(v3_start, v6_end);
}

TEST(Check, MutationsAreRejectedAtTheRightTick) {
  using P = std::vector<fmtest::Planned>;
  const P happy{{"V1", 0}, {"V2", 10}, {"V3", 20}, {"V5", 30}};
  struct Mutation {
    const char* name;
    P plan;
  };
  std::vector<Mutation> ms{
      {"swap V1 V2", {{"V2", 0}, {"V1", 10}, {"V3", 20}, {"V5", 30}}},
      {"swap V2 V3", {{"V1", 0}, {"V3", 10}, {"V2", 20}, {"V5", 30}}},
      {"swap V3 V5", {{"V1", 0}, {"V2", 10}, {"V5", 20}, {"V3", 30}}},
      {"drop V1", {{"V2", 10}, {"V3", 20}, {"V5", 30}}},
      {"drop V2", {{"V1", 0}, {"V3", 20}, {"V5", 30}}},
      {"drop V5", {{"V1", 0}, {"V2", 10}, {"V3", 20}}},
      {"duplicate V1", {{"V1", 0}, {"V1", 5}, {"V2", 10}, {"V3", 20}, {"V5", 30}}},
      {"duplicate V5", {{"V1", 0}, {"V2", 10}, {"V3", 20}, {"V5", 30}, {"V5", 40}}},
  };
  auto base = fmtest::synthesize(tvm().model, tvm().prog.events, happy);
  EXPECT_TRUE(fm::check(base, tvm().prog.events, tvm().prog.automaton).conforms);
  for (const auto& m : ms) {
    auto t = fmtest::synthesize(tvm().model, tvm().prog.events, m.plan);
    auto v = fm::check(t, tvm().prog.events, tvm().prog.automaton);
    EXPECT_FALSE(v.conforms) << m.name;
    expect_same_verdict(t, m.name);
  }
  auto dropped = fmtest::synthesize(tvm().model, tvm().prog.events, ms[5].plan);
  auto v = fm::check(dropped, tvm().prog.events, tvm().prog.automaton);
  ASSERT_TRUE(v.first_violation.has_value());
  EXPECT_EQ(v.first_violation->observed, "") << "the trace ended early";
  EXPECT_EQ(v.first_violation->tick, dropped.last_tick());
}

TEST(Check, RandomPlansAgreeWithReference) {
  std::mt19937 rng(7);
  const std::vector<std::string> pool{"V1", "V2", "V3", "V4", "V5", "V6", "V7", "start"};
  int rejected = 0;
  for (int i = 0; i < 400; ++i) {
    std::vector<fmtest::Planned> plan;
    int n = std::uniform_int_distribution<int>(0, 8)(rng);
    std::int64_t tick = 0;
    for (int k = 0; k < n; ++k) {
      plan.push_back({pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)], tick});
      tick += std::uniform_int_distribution<int>(0, 6)(rng);
    }
    auto t = fmtest::synthesize(tvm().model, tvm().prog.events, plan);
    auto v = fm::check(t, tvm().prog.events, tvm().prog.automaton);
    rejected += !v.conforms;
    expect_same_verdict(t, "plan " + std::to_string(i));
  }
  EXPECT_GT(rejected, 100) << "the generator should produce plenty of violations";
}

TEST(Check, EmptyTraceConformsVacuously) {
  fm::Trace t;
  t.end = fm::TraceEnd{0, true};
  EXPECT_TRUE(fm::check(t, tvm().prog.events, tvm().prog.automaton).conforms);
}

TEST(Enforce, AllTvmScenariosConform) {
  for (const char* stem : fmtest::kTvmScenarios) {
    auto t = run_tvm(stem, true);
    auto v = fm::check(t, tvm().prog.events, tvm().prog.automaton);
    EXPECT_TRUE(v.conforms) << stem << " at tick " << (v.first_violation ? v.first_violation->tick : -1);
    ASSERT_TRUE(t.end.has_value());
  }
}

TEST(Enforce, GateLeavesConformingRunsAlone) {
  for (const char* stem : {"tvm_happy", "tvm_insufficient", "tvm_topup"})
    EXPECT_EQ(run_tvm(stem, true), run_tvm(stem, false)) << stem;
}

TEST(Enforce, UnknownEventIsReported) {
  auto r = fm::enforce(tvm().model, Chrono::node(K::Seq, {ev("V1"), ev("nope")}));
  EXPECT_TRUE(std::holds_alternative<std::string>(r));
}

// A gate only blocks moves. Cash injected mid-process with cancel unset can
// take the refund's place, so the run stops short of V7; the occurrences seen
// so far are still in order.
TEST(Enforce, StrayCashCanLeaveTheProgramUnfinished) {
  const auto& m = tvm().model;
  auto sc = fmtest::scenario_from_source(
      m, "inject request at passenger/request.create tick 26 { fare = 6, pay = 22, topup = 2, cancel = true }\n"
         "inject cash at passenger/cash.create tick 20 { amount = 3, due = 13 }\n");
  fm::SimConfig cfg;
  cfg.gate = std::get<std::shared_ptr<const fm::BehaviorGate>>(fm::enforce(m, tvm().chrono()));
  auto t = fm::Simulator(m, sc, cfg).run();
  auto v = fm::check(t, tvm().prog.events, tvm().prog.automaton);
  ASSERT_FALSE(v.conforms);
  EXPECT_EQ(v.first_violation->observed, "");
  EXPECT_EQ(v.first_violation->tick, t.last_tick());
  EXPECT_EQ(v.first_violation->expected, std::set<std::string>{"V7"});
  EXPECT_EQ(names(v.occurrences), (std::vector<std::string>{"V1", "V2", "V3", "V6"}));
}
