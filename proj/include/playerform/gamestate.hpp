#pragma once

// Game state and the token alphabet built from state-to-state deltas.
//
// A pre-pitch GameState is (count, base occupancy, outs, scores). A
// GamestateDelta describes what one pitch did: the count after the pitch, the
// base occupancy after, outs recorded on the play, and runs scored on the
// play. The at-bat ended exactly when the post-pitch count is (0,0); mid
// at-bat counts always have a ball or strike on the board, so the encoding is
// unambiguous.
//
// The legal-transition set is generated from a bounded event model:
//   - balls / strikes / fouls (fouls never advance the count past two strikes)
//   - steals and caught-stealing, combined with live ball/strike pitches only
//   - walks (ball four) and hit-by-pitch at any count, forced advances only
//   - strikeouts, optionally combined with a steal or caught-stealing
//   - batter reaching on contact (single..home run) with runner advances that
//     keep runner order, advance at most batter-bases + 1, and optionally one
//     runner (or the batter) thrown out on the bases
//   - batter out on contact: runners hold or tag one base, double plays,
//     triple plays
// One deliberate simplification: no run ever scores on a play that records
// the third out, and any transition reaching three outs is canonicalized to
// count (0,0), bases empty, zero runs.

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "playerform/common.hpp"

namespace playerform::gamestate {

struct GameState {
  int balls = 0;    // 0..3
  int strikes = 0;  // 0..2
  std::array<bool, 3> bases{false, false, false};  // first, second, third
  int outs = 0;     // 0..2 pre-pitch
  int batting_score = 0;
  int fielding_score = 0;

  bool valid_prepitch() const {
    return balls >= 0 && balls <= 3 && strikes >= 0 && strikes <= 2 && outs >= 0 && outs <= 2 &&
           batting_score >= 0 && fielding_score >= 0;
  }

  int base_mask() const { return (bases[0] ? 1 : 0) | (bases[1] ? 2 : 0) | (bases[2] ? 4 : 0); }

  // key over the fields legality depends on (scores excluded): 288 states
  int pack_key() const { return ((balls * 3 + strikes) * 8 + base_mask()) * 3 + outs; }

  static constexpr int kNumKeys = 4 * 3 * 8 * 3;
  static GameState from_key(int key);

  friend bool operator==(const GameState&, const GameState&) = default;
};

struct GamestateDelta {
  int balls_after = 0;
  int strikes_after = 0;
  std::array<bool, 3> bases_after{false, false, false};
  int outs_gained = 0;   // 0..3
  int runs_scored = 0;   // 0..4

  bool ends_atbat() const { return balls_after == 0 && strikes_after == 0; }

  int base_mask() const {
    return (bases_after[0] ? 1 : 0) | (bases_after[1] ? 2 : 0) | (bases_after[2] ? 4 : 0);
  }

  // dense key for table lookups; 12 * 8 * 4 * 5 = 1920 slots
  int pack() const {
    return (((balls_after * 3 + strikes_after) * 8 + base_mask()) * 4 + outs_gained) * 5 +
           runs_scored;
  }
  static constexpr int kNumPacked = 4 * 3 * 8 * 4 * 5;
  static GamestateDelta unpack(int key);

  // canonical text form, e.g. "21:100:0:0" = count 2-1, runner on first,
  // no outs recorded, no runs scored
  std::string token() const;
  static GamestateDelta parse_token(std::string_view s);  // throws ParseError

  friend bool operator==(const GamestateDelta&, const GamestateDelta&) = default;
  friend auto operator<=>(const GamestateDelta& a, const GamestateDelta& b) {
    return a.sort_key() <=> b.sort_key();
  }

 private:
  std::tuple<int, int, int, int, int> sort_key() const {
    return {balls_after, strikes_after, base_mask(), outs_gained, runs_scored};
  }
};

// All legal transitions out of a pre-pitch state, deduplicated and sorted.
// Enumerates the event model directly; no caching.
std::vector<GamestateDelta> legal_deltas_from(const GameState& state);

// Table-backed membership test over the 288 x 1920 (state, delta) space.
bool is_legal(const GameState& state, const GamestateDelta& delta);

// Applies a legal delta; throws IllegalDelta otherwise. Resulting outs may be
// 3 (the half-inning is over; the caller resets for the next one).
GameState apply_delta(const GameState& state, const GamestateDelta& delta);

// Recovers the delta bridging two snapshots. `atbat_ended` tells whether the
// pitch ended the at-bat (from at-bat numbering); throws InconsistentStates
// when the snapshots cannot be bridged by any legal delta or the ended flag
// disagrees with the count.
GamestateDelta compute_delta(const GameState& before, const GameState& after, bool atbat_ended);

// ---------------------------------------------------------------------------
// Vocabulary: union of legal deltas over every reachable pre-pitch state,
// sorted canonically so ids are stable. Ids are dense 0..V-1; [MASK] = V and
// [CLS] = V+1 are reserved and never appear in the serialized file.
// ---------------------------------------------------------------------------

class DeltaVocabulary {
 public:
  static DeltaVocabulary enumerate();  // deterministic

  int size() const { return static_cast<int>(tokens_.size()); }
  int mask_id() const { return size(); }
  int cls_id() const { return size() + 1; }
  int size_with_reserved() const { return size() + 2; }

  const GamestateDelta& delta(int id) const;
  int id(const GamestateDelta& d) const;        // throws IdOutOfRange if absent
  int find(const GamestateDelta& d) const;      // -1 if absent
  const std::vector<GamestateDelta>& tokens() const { return tokens_; }

  // one token per line; line number == id
  void save(const std::filesystem::path& path) const;
  static DeltaVocabulary load(const std::filesystem::path& path);

  friend bool operator==(const DeltaVocabulary&, const DeltaVocabulary&) = default;

 private:
  void rebuild_index();
  std::vector<GamestateDelta> tokens_;
  std::unordered_map<int, int> id_by_packed_;
};

}  // namespace playerform::gamestate
