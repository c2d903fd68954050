#include "playerform/gamestate.hpp"

#include <algorithm>
#include <bit>
#include <bitset>
#include <fstream>
#include <set>

namespace playerform::gamestate {

namespace {

// base occupancy as a bitmask; bit r-1 set means a runner on base r
using Mask = int;

bool occ_has(Mask m, int base) { return (m >> (base - 1)) & 1; }
Mask occ_add(Mask m, int base) { return m | (1 << (base - 1)); }
Mask occ_del(Mask m, int base) { return m & ~(1 << (base - 1)); }

std::array<bool, 3> to_bases(Mask m) {
  return {occ_has(m, 1), occ_has(m, 2), occ_has(m, 3)};
}

// All ways a set of runners can each advance exactly one base on a live ball:
// a runner's target must be empty after the move, i.e. if the next base is
// occupied that runner must advance too. Third base steals home (one run).
// Returns (occupancy after, runs) per valid subset.
std::vector<std::pair<Mask, int>> one_base_advances(Mask occ, bool allow_empty) {
  std::vector<std::pair<Mask, int>> out;
  for (Mask s = 0; s < 8; ++s) {
    if ((s & occ) != s) continue;
    if (!allow_empty && s == 0) continue;
    bool ok = true;
    for (int r = 1; r <= 3 && ok; ++r) {
      if (!occ_has(s, r)) continue;
      int target = r + 1;
      if (target <= 3 && occ_has(occ, target) && !occ_has(s, target)) ok = false;
    }
    if (!ok) continue;
    Mask after = occ & ~s;
    int runs = 0;
    for (int r = 1; r <= 3; ++r) {
      if (!occ_has(s, r)) continue;
      if (r == 3) runs = 1;
      else after = occ_add(after, r + 1);
    }
    out.emplace_back(after, runs);
  }
  return out;
}

// walk / hit-by-pitch: batter takes first, runners advance only when forced
std::pair<Mask, int> forced_advance(Mask occ) {
  int free_base = 1;
  while (free_base <= 3 && occ_has(occ, free_base)) ++free_base;
  if (free_base == 4) return {occ, 1};  // bases loaded, a run walks in
  return {occ_add(occ, free_base), 0};
}

struct Emitter {
  int outs_before;
  std::set<GamestateDelta>& out;

  void operator()(int balls_after, int strikes_after, Mask occ_after, int outs_gained, int runs) {
    int outs_post = outs_before + outs_gained;
    if (outs_post > 3) return;
    if (outs_post == 3) {
      // no run scores on the play recording the third out; the half-inning
      // terminal shape is always count (0,0), bases empty
      if (runs > 0) return;
      out.insert(GamestateDelta{0, 0, {false, false, false}, outs_gained, 0});
      return;
    }
    out.insert(GamestateDelta{balls_after, strikes_after, to_bases(occ_after), outs_gained, runs});
  }
};

}  // namespace

GameState GameState::from_key(int key) {
  GameState st;
  st.outs = key % 3;
  key /= 3;
  int mask = key % 8;
  key /= 8;
  st.strikes = key % 3;
  st.balls = key / 3;
  st.bases = to_bases(mask);
  return st;
}

GamestateDelta GamestateDelta::unpack(int key) {
  GamestateDelta d;
  d.runs_scored = key % 5;
  key /= 5;
  d.outs_gained = key % 4;
  key /= 4;
  int mask = key % 8;
  key /= 8;
  d.strikes_after = key % 3;
  d.balls_after = key / 3;
  d.bases_after = to_bases(mask);
  return d;
}

std::string GamestateDelta::token() const {
  std::string s;
  s.reserve(10);
  s.push_back(static_cast<char>('0' + balls_after));
  s.push_back(static_cast<char>('0' + strikes_after));
  s.push_back(':');
  for (bool b : bases_after) s.push_back(b ? '1' : '0');
  s.push_back(':');
  s.push_back(static_cast<char>('0' + outs_gained));
  s.push_back(':');
  s.push_back(static_cast<char>('0' + runs_scored));
  return s;
}

GamestateDelta GamestateDelta::parse_token(std::string_view s) {
  auto bad = [&]() -> ParseError { return ParseError("bad delta token: '" + std::string(s) + "'"); };
  if (s.size() != 10 || s[2] != ':' || s[6] != ':' || s[8] != ':') throw bad();
  auto digit = [&](char c, int lo, int hi) {
    if (c < '0' || c > '9') throw bad();
    int v = c - '0';
    if (v < lo || v > hi) throw bad();
    return v;
  };
  GamestateDelta d;
  d.balls_after = digit(s[0], 0, 3);
  d.strikes_after = digit(s[1], 0, 2);
  d.bases_after = {s[3] == '1', s[4] == '1', s[5] == '1'};
  for (int i = 3; i <= 5; ++i)
    if (s[i] != '0' && s[i] != '1') throw bad();
  d.outs_gained = digit(s[7], 0, 3);
  d.runs_scored = digit(s[9], 0, 4);
  return d;
}

std::vector<GamestateDelta> legal_deltas_from(const GameState& state) {
  if (!state.valid_prepitch())
    throw IllegalDelta("not a valid pre-pitch state: count " + std::to_string(state.balls) + "-" +
                       std::to_string(state.strikes) + ", outs " + std::to_string(state.outs));
  const int b = state.balls;
  const int s = state.strikes;
  const Mask occ = state.base_mask();
  const int o = state.outs;

  std::set<GamestateDelta> acc;
  Emitter emit{o, acc};

  // pitches that keep the at-bat alive. A ball or a non-terminal strike is a
  // live ball (runners may steal, a runner may be thrown out); a foul is dead.
  struct CountPath {
    int b2, s2;
    bool live;
  };
  std::vector<CountPath> paths;
  if (b < 3) paths.push_back({b + 1, s, true});
  if (s < 2) paths.push_back({b, s + 1, true});  // strike; a foul reaches the same count
  if (s == 2) paths.push_back({b, 2, false});    // foul holding a two-strike count
  for (const auto& p : paths) {
    emit(p.b2, p.s2, occ, 0, 0);
    if (p.live && occ != 0) {
      for (auto [after, runs] : one_base_advances(occ, false)) emit(p.b2, p.s2, after, 0, runs);
      for (int victim = 1; victim <= 3; ++victim) {
        if (!occ_has(occ, victim)) continue;
        Mask rest = occ_del(occ, victim);
        for (auto [after, runs] : one_base_advances(rest, true)) emit(p.b2, p.s2, after, 1, runs);
      }
    }
  }

  // ball four / hit by pitch (any count): forced advances only
  {
    auto [after, runs] = forced_advance(occ);
    emit(0, 0, after, 0, runs);
  }

  // strikeout family
  if (s == 2) {
    emit(0, 0, occ, 1, 0);
    if (o <= 1 && occ != 0) {
      for (auto [after, runs] : one_base_advances(occ, false)) emit(0, 0, after, 1, runs);
      for (int victim = 1; victim <= 3; ++victim) {
        if (!occ_has(occ, victim)) continue;
        Mask rest = occ_del(occ, victim);
        for (auto [after, runs] : one_base_advances(rest, true)) emit(0, 0, after, 2, runs);
      }
    }
  }

  // batter reaches on contact. Destinations keep runner order: processed from
  // the lead runner down, each stays strictly ahead of the next (ties only at
  // home), ends ahead of the batter, and advances at most d+1 bases.
  {
    std::vector<int> runners;  // descending, lead first
    for (int r = 3; r >= 1; --r)
      if (occ_has(occ, r)) runners.push_back(r);

    for (int d = 1; d <= 4; ++d) {
      if (d == 4) {
        emit(0, 0, 0, 0, std::popcount(static_cast<unsigned>(occ)) + 1);
        continue;
      }
      std::vector<int> dest(runners.size(), 0);
      auto consider = [&](const std::vector<int>& dests) {
        int runs = 0;
        Mask after = occ_add(0, d);
        for (int t : dests) {
          if (t == 4) ++runs;
          else after = occ_add(after, t);
        }
        emit(0, 0, after, 0, runs);
        // one man thrown out trying for more
        for (std::size_t i = 0; i < dests.size(); ++i) {
          if (dests[i] == 4) emit(0, 0, after, 1, runs - 1);
          else emit(0, 0, occ_del(after, dests[i]), 1, runs);
        }
        emit(0, 0, occ_del(after, d), 1, runs);  // batter out stretching
      };
      auto rec = [&](auto&& self, std::size_t i, int bound) -> void {
        if (i == runners.size()) {
          consider(dest);
          return;
        }
        int r = runners[i];
        int hi = std::min(r + d + 1, 4);
        for (int t = r; t <= hi; ++t) {
          if (t == 4) {
            if (bound < 4) continue;  // cannot pass the runner ahead
          } else {
            if (t >= bound || t <= d) continue;
          }
          dest[i] = t;
          self(self, i + 1, t);
        }
      };
      rec(rec, 0, 5);
    }
  }

  // batter out on contact
  emit(0, 0, occ, 1, 0);
  if (o <= 1 && occ != 0) {
    for (auto [after, runs] : one_base_advances(occ, false)) emit(0, 0, after, 1, runs);
    for (int victim = 1; victim <= 3; ++victim) {
      if (!occ_has(occ, victim)) continue;
      emit(0, 0, occ_del(occ, victim), 2, 0);
      if (o == 0 && occ_has(occ, 3) && victim != 3)
        emit(0, 0, occ_del(occ_del(occ, victim), 3), 2, 1);
    }
    if (o == 0 && std::popcount(static_cast<unsigned>(occ)) >= 2) emit(0, 0, 0, 3, 0);
  }

  return std::vector<GamestateDelta>(acc.begin(), acc.end());
}

namespace {

const std::vector<std::bitset<GamestateDelta::kNumPacked>>& legal_table() {
  static const auto table = [] {
    std::vector<std::bitset<GamestateDelta::kNumPacked>> t(GameState::kNumKeys);
    for (int key = 0; key < GameState::kNumKeys; ++key) {
      GameState st = GameState::from_key(key);
      for (const GamestateDelta& d : legal_deltas_from(st)) t[key].set(d.pack());
    }
    return t;
  }();
  return table;
}

bool delta_in_range(const GamestateDelta& d) {
  return d.balls_after >= 0 && d.balls_after <= 3 && d.strikes_after >= 0 &&
         d.strikes_after <= 2 && d.outs_gained >= 0 && d.outs_gained <= 3 && d.runs_scored >= 0 &&
         d.runs_scored <= 4;
}

}  // namespace

bool is_legal(const GameState& state, const GamestateDelta& delta) {
  if (!state.valid_prepitch() || !delta_in_range(delta)) return false;
  return legal_table()[state.pack_key()].test(delta.pack());
}

GameState apply_delta(const GameState& state, const GamestateDelta& delta) {
  if (!is_legal(state, delta))
    throw IllegalDelta("delta " + delta.token() + " is not legal from count " +
                       std::to_string(state.balls) + "-" + std::to_string(state.strikes) +
                       ", bases " + std::to_string(state.base_mask()) + ", outs " +
                       std::to_string(state.outs));
  GameState next = state;
  next.balls = delta.balls_after;
  next.strikes = delta.strikes_after;
  next.bases = delta.bases_after;
  next.outs = state.outs + delta.outs_gained;
  next.batting_score = state.batting_score + delta.runs_scored;
  return next;
}

GamestateDelta compute_delta(const GameState& before, const GameState& after, bool atbat_ended) {
  if (after.fielding_score != before.fielding_score)
    throw InconsistentStates("fielding team score changed across a pitch");
  int outs_gained = after.outs - before.outs;
  int runs = after.batting_score - before.batting_score;
  if (outs_gained < 0 || outs_gained > 3)
    throw InconsistentStates("outs went from " + std::to_string(before.outs) + " to " +
                             std::to_string(after.outs));
  if (runs < 0 || runs > 4)
    throw InconsistentStates("batting score went from " + std::to_string(before.batting_score) +
                             " to " + std::to_string(after.batting_score));
  GamestateDelta d;
  d.balls_after = after.balls;
  d.strikes_after = after.strikes;
  d.bases_after = after.bases;
  d.outs_gained = outs_gained;
  d.runs_scored = runs;
  if (d.ends_atbat() != atbat_ended)
    throw InconsistentStates(std::string("at-bat boundary flag disagrees with the count: token ") +
                             d.token() + (atbat_ended ? " with ended=true" : " with ended=false"));
  if (!is_legal(before, d))
    throw InconsistentStates("no legal transition " + d.token() + " from count " +
                             std::to_string(before.balls) + "-" + std::to_string(before.strikes) +
                             ", bases " + std::to_string(before.base_mask()) + ", outs " +
                             std::to_string(before.outs));
  return d;
}

DeltaVocabulary DeltaVocabulary::enumerate() {
  std::set<GamestateDelta> all;
  for (int key = 0; key < GameState::kNumKeys; ++key) {
    GameState st = GameState::from_key(key);
    for (const GamestateDelta& d : legal_deltas_from(st)) all.insert(d);
  }
  DeltaVocabulary v;
  v.tokens_.assign(all.begin(), all.end());
  v.rebuild_index();
  return v;
}

void DeltaVocabulary::rebuild_index() {
  id_by_packed_.clear();
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!id_by_packed_.emplace(tokens_[i].pack(), static_cast<int>(i)).second)
      throw ParseError("duplicate token in vocabulary: " + tokens_[i].token());
  }
}

const GamestateDelta& DeltaVocabulary::delta(int id) const {
  if (id < 0 || id >= size())
    throw IdOutOfRange("token id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(size()));
  return tokens_[static_cast<std::size_t>(id)];
}

int DeltaVocabulary::id(const GamestateDelta& d) const {
  int found = find(d);
  if (found < 0) throw IdOutOfRange("delta " + d.token() + " is not in the vocabulary");
  return found;
}

int DeltaVocabulary::find(const GamestateDelta& d) const {
  auto it = id_by_packed_.find(d.pack());
  return it == id_by_packed_.end() ? -1 : it->second;
}

void DeltaVocabulary::save(const std::filesystem::path& path) const {
  std::string out;
  for (const GamestateDelta& d : tokens_) {
    out += d.token();
    out.push_back('\n');
  }
  write_text_file_atomic(path, out);
}

DeltaVocabulary DeltaVocabulary::load(const std::filesystem::path& path) {
  std::string content = read_text_file(path);
  DeltaVocabulary v;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= content.size(); ++i) {
    if (i == content.size() || content[i] == '\n') {
      if (i > start) v.tokens_.push_back(GamestateDelta::parse_token(
          std::string_view(content).substr(start, i - start)));
      start = i + 1;
    }
  }
  if (v.tokens_.empty()) throw ParseError("empty vocabulary file: " + path.string());
  v.rebuild_index();
  return v;
}

}  // namespace playerform::gamestate
