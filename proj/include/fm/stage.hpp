#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace fm {

enum class Stage : std::uint8_t { Create, Process, Release, Transfer, Receive };

inline constexpr std::array<Stage, 5> kAllStages = {Stage::Create, Stage::Process, Stage::Release,
                                                    Stage::Transfer, Stage::Receive};

inline constexpr std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Create: return "create";
    case Stage::Process: return "process";
    case Stage::Release: return "release";
    case Stage::Transfer: return "transfer";
    case Stage::Receive: return "receive";
  }
  return "?";
}

inline std::optional<Stage> parse_stage(std::string_view text) {
  for (Stage s : kAllStages)
    if (stage_name(s) == text) return s;
  return std::nullopt;
}

/// Small bitset over the five stages.
class StageSet {
 public:
  constexpr StageSet() = default;
  constexpr bool contains(Stage s) const { return bits_ & bit(s); }
  constexpr void insert(Stage s) { bits_ |= bit(s); }
  constexpr void erase(Stage s) { bits_ &= static_cast<std::uint8_t>(~bit(s)); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t raw() const { return bits_; }
  std::size_t size() const {
    std::size_t n = 0;
    for (Stage s : kAllStages) n += contains(s) ? 1 : 0;
    return n;
  }
  constexpr StageSet operator|(StageSet o) const { return StageSet(bits_ | o.bits_); }
  friend constexpr bool operator==(StageSet, StageSet) = default;

 private:
  constexpr explicit StageSet(int b) : bits_(static_cast<std::uint8_t>(b)) {}
  static constexpr std::uint8_t bit(Stage s) { return static_cast<std::uint8_t>(1u << static_cast<int>(s)); }
  std::uint8_t bits_ = 0;
};

// Arrow topology of a single flow machine. Nothing flows into Create; the only
// edge between two machines is Transfer -> Transfer.
inline constexpr bool legal_intra(Stage from, Stage to) {
  using enum Stage;
  switch (from) {
    case Create: return to == Process || to == Release;
    case Receive: return to == Process || to == Release;
    case Process: return to == Release;
    case Release: return to == Transfer;
    case Transfer: return to == Receive;
  }
  return false;
}

inline constexpr bool legal_inter(Stage from, Stage to) {
  return from == Stage::Transfer && to == Stage::Transfer;
}

/// Shortest chain of intra-machine stages from `from` to `to`, inclusive of
/// both ends. Empty when unreachable or when from == to.
inline std::vector<Stage> shortest_intra_path(Stage from, Stage to) {
  if (from == to) return {};
  std::array<int, 5> prev;
  prev.fill(-1);
  std::array<bool, 5> seen{};
  std::vector<Stage> queue{from};
  seen[static_cast<int>(from)] = true;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    Stage cur = queue[i];
    for (Stage nxt : kAllStages) {
      if (!legal_intra(cur, nxt) || seen[static_cast<int>(nxt)]) continue;
      seen[static_cast<int>(nxt)] = true;
      prev[static_cast<int>(nxt)] = static_cast<int>(cur);
      queue.push_back(nxt);
    }
  }
  if (!seen[static_cast<int>(to)]) return {};
  std::vector<Stage> path{to};
  for (int at = static_cast<int>(to); prev[at] != -1; at = prev[at]) path.push_back(static_cast<Stage>(prev[at]));
  return {path.rbegin(), path.rend()};
}

}  // namespace fm
