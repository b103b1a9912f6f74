#include <gtest/gtest.h>

#include <random>

#include "fm/fm.hpp"
#include "support/common.hpp"

namespace h = fm::history;

namespace {

h::Seconds at(const char* s) {
  auto t = h::parse_time(s);
  if (!t) throw std::runtime_error(std::string("bad time ") + s);
  return *t;
}

h::Record rec(const char* unit, h::Action a, const char* when, const char* slot = "S1") {
  return {slot, unit, a, at(when), "tech", "contractor", std::nullopt};
}

h::Log pump() {
  auto r = h::load(fmtest::slurp(fmtest::corpus_path("pump.fmh")));
  if (auto* e = std::get_if<h::Error>(&r)) throw std::runtime_error(e->message);
  return std::get<h::Log>(std::move(r));
}

std::optional<std::string> installed(const h::Log& log, const char* slot, const char* when) {
  return std::get<std::optional<std::string>>(log.installed_at(slot, at(when)));
}

}  // namespace

TEST(History, PumpQueries) {
  auto log = pump();
  EXPECT_EQ(log.records().size(), 5u);
  EXPECT_EQ(installed(log, "P101", "2020-01-01T00:00:00Z"), "pump-1");
  EXPECT_EQ(installed(log, "P101", "2022-01-01T00:00:00Z"), "pump-2");
  EXPECT_EQ(installed(log, "P101", "2019-01-01T00:00:00Z"), std::nullopt);
  EXPECT_EQ(installed(log, "P101", "2021-06-14T14:00:00Z"), std::nullopt) << "between removal and the next install";
  auto unknown = log.installed_at("P999", 0);
  ASSERT_TRUE(std::holds_alternative<h::Error>(unknown));
  EXPECT_EQ(std::get<h::Error>(unknown).code, "E_UNKNOWN_SLOT");
}

TEST(History, IntervalIsHalfOpen) {
  auto log = pump();
  EXPECT_EQ(installed(log, "P101", "2019-03-02T09:30:00Z"), "pump-1");
  EXPECT_EQ(installed(log, "P101", "2019-03-02T09:29:59Z"), std::nullopt);
  EXPECT_EQ(installed(log, "P101", "2021-06-14T12:59:59Z"), "pump-1");
  EXPECT_EQ(installed(log, "P101", "2021-06-14T13:00:00Z"), std::nullopt);
}

TEST(History, Timeline) {
  auto log = pump();
  auto tl = std::get<std::vector<h::Record>>(log.timeline("P101"));
  ASSERT_EQ(tl.size(), 5u);
  for (std::size_t i = 0; i + 1 < tl.size(); ++i) EXPECT_LE(tl[i].at, tl[i + 1].at);
  EXPECT_EQ(tl[2].note, "seal failure");
  EXPECT_EQ(std::get<h::Error>(log.timeline("nope")).code, "E_UNKNOWN_SLOT");
}

TEST(History, OrderErrors) {
  using A = h::Action;
  h::Log log;
  EXPECT_EQ(log.append(rec("u", A::Install, "2020-01-01T00:00:00Z"))->code, "E_ORDER") << "install before receive";
  EXPECT_EQ(log.append(rec("u", A::Remove, "2020-01-01T00:00:00Z"))->code, "E_ORDER") << "remove before install";
  ASSERT_FALSE(log.append(rec("u", A::Receive, "2020-01-01T00:00:00Z")));
  EXPECT_EQ(log.append(rec("u", A::Receive, "2020-01-02T00:00:00Z"))->code, "E_ORDER") << "received twice";
  ASSERT_FALSE(log.append(rec("u", A::Install, "2020-01-03T00:00:00Z")));
  EXPECT_EQ(log.append(rec("u", A::Install, "2020-01-04T00:00:00Z"))->code, "E_ORDER") << "installed twice";
  // a record in the past that would break the existing order
  EXPECT_EQ(log.append(rec("u", A::Remove, "2019-12-31T00:00:00Z"))->code, "E_ORDER");
  EXPECT_EQ(log.records().size(), 2u) << "rejected records leave the log untouched";
}

TEST(History, OccupiedSlot) {
  using A = h::Action;
  h::Log log;
  for (auto r : {rec("a", A::Receive, "2020-01-01T00:00:00Z"), rec("a", A::Install, "2020-01-02T00:00:00Z"),
                 rec("b", A::Receive, "2020-01-03T00:00:00Z")})
    ASSERT_FALSE(log.append(r));
  EXPECT_EQ(log.append(rec("b", A::Install, "2020-01-04T00:00:00Z"))->code, "E_OCCUPIED");
  ASSERT_FALSE(log.append(rec("c", A::Receive, "2020-01-03T00:00:00Z", "S2")));
  ASSERT_FALSE(log.append(rec("c", A::Install, "2020-01-04T00:00:00Z", "S2"))) << "other slots are independent";
  ASSERT_FALSE(log.append(rec("a", A::Remove, "2020-01-05T00:00:00Z")));
  EXPECT_FALSE(log.append(rec("b", A::Install, "2020-01-06T00:00:00Z"))) << "free again";
}

TEST(History, Duplicates) {
  h::Log log;
  auto r = rec("a", h::Action::Receive, "2020-01-01T00:00:00Z");
  ASSERT_FALSE(log.append(r));
  EXPECT_EQ(log.append(r)->code, "E_DUP");
}

TEST(History, ReinstallAfterRemoval) {
  using A = h::Action;
  h::Log log;
  for (auto r : {rec("a", A::Receive, "2020-01-01T00:00:00Z"), rec("a", A::Install, "2020-01-02T00:00:00Z"),
                 rec("a", A::Remove, "2020-01-03T00:00:00Z"), rec("a", A::Install, "2020-01-04T00:00:00Z"),
                 rec("a", A::Remove, "2020-01-05T00:00:00Z"), rec("a", A::Receive, "2020-02-01T00:00:00Z")})
    ASSERT_FALSE(log.append(r)) << h::to_line(r);
  EXPECT_EQ(installed(log, "S1", "2020-01-04T12:00:00Z"), "a");
  EXPECT_EQ(installed(log, "S1", "2020-01-03T12:00:00Z"), std::nullopt);
}

TEST(History, FormatErrorsNameTheLine) {
  auto text = fmtest::slurp(fmtest::corpus_path("pump.fmh"));
  auto r = h::load(text + "{\"slot\":\"P101\"}\n");
  ASSERT_TRUE(std::holds_alternative<h::Error>(r));
  EXPECT_EQ(std::get<h::Error>(r).code, "E_FORMAT");
  EXPECT_NE(std::get<h::Error>(r).message.find("line 6"), std::string::npos);
  for (const char* bad : {"not json", "[1,2]",
                          R"({"slot":"S","unit":"u","action":"fix","at":"2020-01-01T00:00:00Z","performer":"p","contractor":"c"})",
                          R"({"slot":"S","unit":"u","action":"receive","at":"2020-13-01T00:00:00Z","performer":"p","contractor":"c"})",
                          R"({"slot":"S","unit":"u","action":"receive","at":"2020-01-01T00:00:00Z","performer":"p","contractor":"c","note":3})"})
    EXPECT_EQ(std::get<h::Error>(h::parse_line(bad)).code, "E_FORMAT") << bad;
  h::Log log;
  EXPECT_EQ(log.append({"", "u", h::Action::Receive, 0, "", "", {}})->code, "E_FORMAT");
}

TEST(History, DumpLoadRoundTrip) {
  auto log = pump();
  std::string text = h::dump(log);
  EXPECT_EQ(text, fmtest::slurp(fmtest::corpus_path("pump.fmh")));
  auto again = std::get<h::Log>(h::load(text));
  EXPECT_EQ(again.records(), log.records());
}

TEST(History, TimeParsing) {
  EXPECT_EQ(h::parse_time("1970-01-01T00:00:00Z"), 0);
  EXPECT_EQ(h::parse_time("1970-01-02T00:00:01+00:00"), 86401);
  EXPECT_FALSE(h::parse_time("2020-02-30T00:00:00Z"));
  EXPECT_FALSE(h::parse_time("2020-01-01T24:00:00Z"));
  EXPECT_FALSE(h::parse_time("2020-01-01T00:00:00+01:00"));
  EXPECT_FALSE(h::parse_time("2020-01-01"));
  EXPECT_TRUE(h::parse_time("2024-02-29T23:59:59Z"));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    h::Seconds t = std::uniform_int_distribution<h::Seconds>(-2'000'000'000, 4'000'000'000)(rng);
    ASSERT_EQ(h::parse_time(h::format_time(t)), t) << h::format_time(t);
  }
}

// Random append sequences: whatever the log accepts must keep at most one
// unit installed per slot, and installed_at must match a direct replay.
TEST(History, RandomAppendsKeepInvariants) {
  std::mt19937 rng(11);
  for (int round = 0; round < 60; ++round) {
    h::Log log;
    const char* units[] = {"u1", "u2", "u3"};
    for (int i = 0; i < 40; ++i) {
      h::Record r{"S", units[rng() % 3], static_cast<h::Action>(rng() % 3), static_cast<h::Seconds>(rng() % 100),
                  "p", "c", std::nullopt};
      auto before = log.records();
      if (log.append(r)) EXPECT_EQ(log.records(), before);
    }
    if (!log.has_slot("S")) continue;
    auto tl = std::get<std::vector<h::Record>>(log.timeline("S"));
    for (h::Seconds t = 0; t <= 100; ++t) {
      std::set<std::string> in;
      for (const auto& r : tl) {
        if (r.at > t) break;
        if (r.action == h::Action::Install) in.insert(r.unit);
        if (r.action == h::Action::Remove) in.erase(r.unit);
      }
      ASSERT_LE(in.size(), 1u) << "round " << round << " t " << t;
      auto q = std::get<std::optional<std::string>>(log.installed_at("S", t));
      EXPECT_EQ(q, in.empty() ? std::nullopt : std::optional<std::string>(*in.begin()));
    }
  }
}
