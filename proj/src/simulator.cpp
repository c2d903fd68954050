#include "playerform/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "playerform/ingest.hpp"

namespace playerform::gamestate {

namespace {

using Mask = int;
bool occ_has(Mask m, int base) { return (m >> (base - 1)) & 1; }
Mask occ_add(Mask m, int base) { return m | (1 << (base - 1)); }
Mask occ_del(Mask m, int base) { return m & ~(1 << (base - 1)); }
int occ_count(Mask m) { return std::popcount(static_cast<unsigned>(m)); }

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }
double round1(double v) { return std::round(v * 10.0) / 10.0; }

const char* kPitchTypes[5] = {"FF", "SI", "SL", "CH", "CU"};
const double kPitchSpeed[5] = {94.2, 92.6, 85.8, 84.1, 78.9};
const double kPitchSpin[5] = {2260.0, 2120.0, 2430.0, 1760.0, 2540.0};

struct AtBatCtx {
  const BatterArchetype* bat;
  const PitcherArchetype* pit;
  std::int64_t game_pk;
  int ab_number;
  std::int64_t batter_id, pitcher_id, stadium_id;
  int inning;
  Half half;
};

enum class AtBatEnd { Completed, Truncated };

struct PitchPhysics {
  int type_idx;
  double release_speed, plate_x, plate_z, spin_rate;
};

PitchPhysics sample_pitch(Rng& rng, const PitcherArchetype& pit) {
  PitchPhysics p;
  p.type_idx = rng.categorical(pit.pitch_type_probs);
  p.release_speed = round3(kPitchSpeed[p.type_idx] + pit.velocity_shift + rng.normal(0.0, 1.2));
  p.spin_rate = round3(kPitchSpin[p.type_idx] + rng.normal(0.0, 110.0));
  p.plate_x = round3(std::clamp(rng.normal(0.0, 0.62), -2.2, 2.2));
  p.plate_z = round3(std::clamp(rng.normal(2.45, 0.55), 0.2, 4.6));
  return p;
}

void emit_pitch(std::vector<PitchEvent>& out, const AtBatCtx& ctx, const GameState& pre,
                int pitch_number, const PitchPhysics& phys, const double* launch3) {
  PitchEvent e;
  e.game_pk = ctx.game_pk;
  e.ab_number = ctx.ab_number;
  e.pitch_number = pitch_number;
  e.batter_id = ctx.batter_id;
  e.pitcher_id = ctx.pitcher_id;
  e.stadium_id = ctx.stadium_id;
  e.pitch_type = kPitchTypes[phys.type_idx];
  e.release_speed = phys.release_speed;
  e.plate_x = phys.plate_x;
  e.plate_z = phys.plate_z;
  e.spin_rate = phys.spin_rate;
  if (launch3) {
    e.launch_speed = launch3[0];
    e.launch_angle = launch3[1];
    e.hit_distance = launch3[2];
  }
  e.state = pre;
  e.inning = ctx.inning;
  e.half = ctx.half;
  out.push_back(std::move(e));
}

// batted-ball numbers conditioned on the at-bat outcome
std::array<double, 3> sample_launch(Rng& rng, Outcome oc, const BatterArchetype& bat) {
  double sm, ss, am, as;
  switch (oc) {
    case Outcome::HomeRun: sm = 104.5; ss = 2.8; am = 28.0; as = 3.5; break;
    case Outcome::Triple: sm = 100.5; ss = 3.5; am = 17.0; as = 4.0; break;
    case Outcome::Double: sm = 98.5; ss = 4.5; am = 19.0; as = 6.0; break;
    case Outcome::Single: sm = 89.0; ss = 6.5; am = 8.0; as = 7.0; break;
    default: sm = 85.0; ss = 10.0; am = 14.0; as = 16.0; break;
  }
  double speed = std::max(35.0, rng.normal(sm + bat.launch_speed_shift, ss));
  double angle = std::clamp(rng.normal(am, as), -70.0, 80.0);
  double rad = angle * 0.017453292519943295;
  double dist = std::max(0.0, speed * 4.6 * std::sin(2.0 * rad) + rng.normal(0.0, 14.0));
  return {round3(speed), round3(angle), round1(dist)};
}

// single-runner steals and chained double steals the rules allow
std::vector<Mask> steal_set_candidates(Mask occ) {
  std::vector<Mask> out;
  for (int r = 3; r >= 1; --r) {
    if (!occ_has(occ, r)) continue;
    if (r == 3 || !occ_has(occ, r + 1)) out.push_back(occ_add(0, r));
  }
  // chain: every runner moves up one
  if (occ_count(occ) >= 2) out.push_back(occ);
  return out;
}

std::pair<Mask, int> apply_steal_set(Mask occ, Mask s) {
  Mask after = occ & ~s;
  int runs = 0;
  for (int r = 1; r <= 3; ++r) {
    if (!occ_has(s, r)) continue;
    if (r == 3) runs = 1;
    else after = occ_add(after, r + 1);
  }
  return {after, runs};
}

// destination assignments for runners when the batter reaches d bases
struct HitVariant {
  Mask after;
  int runs;
  double weight;
  std::vector<int> dests;  // aligned with runners (descending)
};

void hit_variants_rec(const std::vector<int>& runners, int d, std::size_t i, int bound,
                      std::vector<int>& dest, std::vector<HitVariant>& out) {
  if (i == runners.size()) {
    HitVariant v;
    v.after = occ_add(0, d);
    v.runs = 0;
    v.weight = 1.0;
    v.dests = dest;
    for (std::size_t k = 0; k < runners.size(); ++k) {
      int r = runners[k], t = dest[k];
      if (t == 4) ++v.runs;
      else v.after = occ_add(v.after, t);
      int standard = std::min(r + d, 4);
      if (t == standard) v.weight *= 10.0;
      else if (t == 4) v.weight *= 3.0;
      else if (t > standard) v.weight *= 0.7;
      else v.weight *= 2.0;
    }
    out.push_back(std::move(v));
    return;
  }
  int r = runners[i];
  int hi = std::min(r + d + 1, 4);
  for (int t = r; t <= hi; ++t) {
    if (t == 4) {
      if (bound < 4) continue;
    } else if (t >= bound || t <= d) {
      continue;
    }
    dest[i] = t;
    hit_variants_rec(runners, d, i + 1, t, dest, out);
  }
}

std::vector<HitVariant> hit_variants(Mask occ, int d) {
  std::vector<int> runners;
  for (int r = 3; r >= 1; --r)
    if (occ_has(occ, r)) runners.push_back(r);
  std::vector<HitVariant> out;
  std::vector<int> dest(runners.size(), 0);
  hit_variants_rec(runners, d, 0, 5, dest, out);
  return out;
}

class GameSim {
 public:
  explicit GameSim(Rng rng) : rng_(rng) {}

  // simulates one at-bat starting from st (count zeroed by the previous
  // terminal delta); st carries bases/outs/scores forward
  AtBatEnd run_atbat(const AtBatCtx& ctx, GameState& st, std::vector<PitchEvent>& out) {
    const BatterArchetype& bat = *ctx.bat;
    const PitcherArchetype& pit = *ctx.pit;
    std::array<double, kNumOutcomes> probs;
    for (int i = 0; i < kNumOutcomes; ++i)
      probs[static_cast<std::size_t>(i)] = bat.outcome_probs[static_cast<std::size_t>(i)] *
                                           pit.outcome_mult[static_cast<std::size_t>(i)];
    Outcome oc = static_cast<Outcome>(rng_.categorical(probs));

    // pre-final count targets
    int pre_balls, pre_strikes;
    switch (oc) {
      case Outcome::Strikeout: {
        const std::array<double, 4> w{0.35, 0.3, 0.2, 0.15};
        pre_balls = rng_.categorical(w);
        pre_strikes = 2;
        break;
      }
      case Outcome::Walk: {
        const std::array<double, 3> w{0.3, 0.35, 0.35};
        pre_balls = 3;
        pre_strikes = rng_.categorical(w);
        break;
      }
      default: {
        const std::array<double, 4> wb{0.3, 0.3, 0.25, 0.15};
        const std::array<double, 3> ws{0.35, 0.4, 0.25};
        pre_balls = rng_.categorical(wb);
        pre_strikes = rng_.categorical(ws);
        break;
      }
    }

    std::vector<char> seq;
    for (int i = 0; i < pre_balls; ++i) seq.push_back('B');
    for (int i = 0; i < pre_strikes; ++i) seq.push_back('S');
    rng_.shuffle(seq);

    int pitch_number = 0;
    auto throw_one = [&](const GamestateDelta& d, bool contact, Outcome launch_oc) {
      PitchPhysics phys = sample_pitch(rng_, pit);
      GameState pre = st;
      ++pitch_number;
      if (contact) {
        auto l = sample_launch(rng_, launch_oc, bat);
        emit_pitch(out, ctx, pre, pitch_number, phys, l.data());
      } else {
        emit_pitch(out, ctx, pre, pitch_number, phys, nullptr);
      }
      st = apply_delta(st, d);
    };

    // non-final pitches; batted-ball fields appear only on the final in-play
    // pitch, so everything here emits without launch data
    for (std::size_t idx = 0; idx < seq.size(); ++idx) {
      // fouls hold a two-strike count indefinitely
      while (st.strikes == 2 && rng_.bernoulli(0.25)) {
        GamestateDelta d{st.balls, 2, st.bases, 0, 0};
        throw_one(d, false, Outcome::InPlayOut);
      }
      char e = seq[idx];
      int b2 = e == 'B' ? st.balls + 1 : st.balls;
      int s2 = e == 'B' ? st.strikes : st.strikes + 1;
      Mask occ = st.base_mask();
      bool did_event = false;
      if (occ != 0 && rng_.bernoulli(bat.mid_event_rate)) {
        if (rng_.bernoulli(0.72)) {
          auto cands = steal_set_candidates(occ);
          if (!cands.empty()) {
            Mask s = cands[static_cast<std::size_t>(rng_.uniform_int(static_cast<int>(cands.size())))];
            auto [after, runs] = apply_steal_set(occ, s);
            GamestateDelta d{b2, s2, {occ_has(after, 1), occ_has(after, 2), occ_has(after, 3)},
                             0, runs};
            if (is_legal(st, d)) {
              throw_one(d, false, oc);
              did_event = true;
            }
          }
        } else {
          // caught stealing / picked off: one runner erased, others hold
          std::vector<int> rs;
          for (int r = 1; r <= 3; ++r)
            if (occ_has(occ, r)) rs.push_back(r);
          int victim = rs[static_cast<std::size_t>(rng_.uniform_int(static_cast<int>(rs.size())))];
          Mask after = occ_del(occ, victim);
          GamestateDelta d{b2, s2, {occ_has(after, 1), occ_has(after, 2), occ_has(after, 3)}, 1, 0};
          if (st.outs + 1 >= 3) d = GamestateDelta{0, 0, {false, false, false}, 1, 0};
          if (is_legal(st, d)) {
            throw_one(d, false, oc);
            did_event = true;
            if (st.outs >= 3) return AtBatEnd::Truncated;
          }
        }
      }
      if (!did_event) {
        GamestateDelta d{b2, s2, st.bases, 0, 0};
        throw_one(d, false, oc);
      }
    }
    while (st.strikes == 2 && rng_.bernoulli(0.25)) {
      GamestateDelta d{st.balls, 2, st.bases, 0, 0};
      throw_one(d, false, Outcome::InPlayOut);
    }

    // final pitch
    Mask occ = st.base_mask();
    GamestateDelta fin;
    bool contact = false;
    switch (oc) {
      case Outcome::Strikeout: {
        fin = GamestateDelta{0, 0, st.bases, 1, 0};
        if (st.outs <= 1 && occ != 0 && rng_.bernoulli(bat.mid_event_rate)) {
          if (rng_.bernoulli(0.5)) {
            auto cands = steal_set_candidates(occ);
            Mask s = cands[static_cast<std::size_t>(rng_.uniform_int(static_cast<int>(cands.size())))];
            auto [after, runs] = apply_steal_set(occ, s);
            GamestateDelta d{0, 0, {occ_has(after, 1), occ_has(after, 2), occ_has(after, 3)}, 1,
                             runs};
            if (is_legal(st, d)) fin = d;
          } else {
            std::vector<int> rs;
            for (int r = 1; r <= 3; ++r)
              if (occ_has(occ, r)) rs.push_back(r);
            int victim = rs[static_cast<std::size_t>(rng_.uniform_int(static_cast<int>(rs.size())))];
            Mask after = occ_del(occ, victim);
            GamestateDelta d{0, 0, {occ_has(after, 1), occ_has(after, 2), occ_has(after, 3)}, 2, 0};
            if (st.outs + 2 >= 3) d = GamestateDelta{0, 0, {false, false, false}, 2, 0};
            if (is_legal(st, d)) fin = d;
          }
        }
        if (st.outs + fin.outs_gained >= 3) fin = GamestateDelta{0, 0, {false, false, false},
                                                                 fin.outs_gained, 0};
        break;
      }
      case Outcome::Walk:
      case Outcome::HitByPitch: {
        auto [after, runs] = [&] {
          Mask m = occ;
          int free_base = 1;
          while (free_base <= 3 && occ_has(m, free_base)) ++free_base;
          if (free_base == 4) return std::pair<Mask, int>{m, 1};
          return std::pair<Mask, int>{occ_add(m, free_base), 0};
        }();
        fin = GamestateDelta{0, 0, {occ_has(after, 1), occ_has(after, 2), occ_has(after, 3)}, 0,
                             runs};
        break;
      }
      case Outcome::Single:
      case Outcome::Double:
      case Outcome::Triple:
      case Outcome::HomeRun: {
        contact = true;
        int d = static_cast<int>(oc) - static_cast<int>(Outcome::Single) + 1;
        if (d == 4) {
          fin = GamestateDelta{0, 0, {false, false, false}, 0, occ_count(occ) + 1};
          break;
        }
        auto vars = hit_variants(occ, d);
        std::vector<double> w(vars.size());
        for (std::size_t i = 0; i < vars.size(); ++i) w[i] = vars[i].weight;
        const HitVariant& v = vars[static_cast<std::size_t>(
            rng_.categorical(w.data(), static_cast<int>(w.size())))];
        fin = GamestateDelta{0, 0, {occ_has(v.after, 1), occ_has(v.after, 2), occ_has(v.after, 3)},
                             0, v.runs};
        if (rng_.bernoulli(0.04)) {
          // someone thrown out on the bases; keep it only if legal here
          GamestateDelta alt = fin;
          std::vector<int> victims;
          for (int t : v.dests)
            if (t < 4) victims.push_back(t);
          victims.push_back(d);  // batter stretching
          int pick = victims[static_cast<std::size_t>(
              rng_.uniform_int(static_cast<int>(victims.size())))];
          Mask after = occ_del(v.after, pick);
          alt = GamestateDelta{0, 0, {occ_has(after, 1), occ_has(after, 2), occ_has(after, 3)}, 1,
                               v.runs};
          if (st.outs + 1 >= 3)
            alt = v.runs == 0 ? GamestateDelta{0, 0, {false, false, false}, 1, 0} : fin;
          if (is_legal(st, alt)) fin = alt;
        }
        break;
      }
      case Outcome::InPlayOut:
      default: {
        contact = true;
        fin = GamestateDelta{0, 0, st.bases, 1, 0};
        double r = rng_.uniform();
        if (st.outs == 0 && occ_count(occ) >= 2 && r < 0.004) {
          fin = GamestateDelta{0, 0, {false, false, false}, 3, 0};
        } else if (st.outs <= 1 && occ_has(occ, 1) && r < 0.33) {
          Mask after = occ_del(occ, 1);
          GamestateDelta d{0, 0, {occ_has(after, 1), occ_has(after, 2), occ_has(after, 3)}, 2, 0};
          if (st.outs == 0 && occ_has(occ, 3) && rng_.bernoulli(0.3)) {
            Mask a2 = occ_del(after, 3);
            d = GamestateDelta{0, 0, {occ_has(a2, 1), occ_has(a2, 2), occ_has(a2, 3)}, 2, 1};
          }
          if (st.outs + 2 >= 3) d = GamestateDelta{0, 0, {false, false, false}, 2, 0};
          if (is_legal(st, d)) fin = d;
        } else if (st.outs <= 1 && occ_has(occ, 3) && r >= 0.33 && r < 0.48) {
          // sacrifice fly
          Mask after = occ_del(occ, 3);
          GamestateDelta d{0, 0, {occ_has(after, 1), occ_has(after, 2), occ_has(after, 3)}, 1, 1};
          if (is_legal(st, d)) fin = d;
        }
        if (st.outs + fin.outs_gained >= 3 && fin.runs_scored == 0)
          fin = GamestateDelta{0, 0, {false, false, false}, fin.outs_gained, 0};
        break;
      }
    }
    if (st.outs + fin.outs_gained >= 3)
      fin = GamestateDelta{0, 0, {false, false, false}, fin.outs_gained, 0};
    throw_one(fin, contact, oc);
    return AtBatEnd::Completed;
  }

  Rng& rng() { return rng_; }

 private:
  Rng rng_;
};

}  // namespace

void SimConfig::validate() const {
  if (n_games <= 0) throw Error("simulate: n_games must be positive");
  if (n_teams < 2) throw Error("simulate: need at least two teams");
  if (innings <= 0) throw Error("simulate: innings must be positive");
  if (batters_per_team < 1 || pitchers_per_team < 1)
    throw Error("simulate: rosters must be non-empty");
  if (games_per_season <= 0) throw Error("simulate: games_per_season must be positive");
}

std::vector<BatterArchetype> default_batter_archetypes() {
  // Outcome order: K, BB, HBP, 1B, 2B, 3B, HR, in-play out
  return {
      {"contact", {0.12, 0.08, 0.01, 0.20, 0.05, 0.008, 0.012, 0.52}, -2.0, 0.02},
      {"power", {0.27, 0.10, 0.01, 0.11, 0.05, 0.004, 0.046, 0.41}, 4.0, 0.015},
      {"patient", {0.17, 0.15, 0.01, 0.14, 0.045, 0.005, 0.02, 0.46}, 0.0, 0.02},
      {"balanced", {0.21, 0.085, 0.01, 0.15, 0.047, 0.006, 0.025, 0.467}, 0.0, 0.02},
      {"speed", {0.15, 0.07, 0.01, 0.19, 0.04, 0.015, 0.01, 0.515}, -3.0, 0.05},
  };
}

std::vector<PitcherArchetype> default_pitcher_archetypes() {
  return {
      {"ace", {1.35, 0.8, 1.0, 0.85, 0.85, 0.85, 0.8, 1.0},
       {0.45, 0.10, 0.25, 0.10, 0.10}, 1.5},
      {"finesse", {0.8, 0.9, 1.0, 1.1, 1.0, 1.0, 0.9, 1.1},
       {0.30, 0.25, 0.15, 0.20, 0.10}, -1.5},
      {"wild", {1.0, 1.5, 2.0, 1.0, 1.0, 1.0, 1.0, 0.95},
       {0.50, 0.10, 0.20, 0.05, 0.15}, 0.5},
      {"sinker", {0.9, 0.9, 1.0, 1.05, 0.9, 0.9, 0.7, 1.15},
       {0.20, 0.45, 0.15, 0.15, 0.05}, -0.5},
  };
}

SimResult simulate_corpus(const SimConfig& config) {
  config.validate();
  SimConfig cfg = config;
  if (cfg.batter_archetypes.empty()) cfg.batter_archetypes = default_batter_archetypes();
  if (cfg.pitcher_archetypes.empty()) cfg.pitcher_archetypes = default_pitcher_archetypes();

  SimResult res;

  // rosters
  std::vector<std::vector<std::int64_t>> lineup(static_cast<std::size_t>(cfg.n_teams));
  std::vector<std::vector<std::int64_t>> staff(static_cast<std::size_t>(cfg.n_teams));
  std::unordered_map<std::int64_t, const BatterArchetype*> bat_by_id;
  std::unordered_map<std::int64_t, const PitcherArchetype*> pit_by_id;
  for (int t = 0; t < cfg.n_teams; ++t) {
    for (int i = 0; i < cfg.batters_per_team; ++i) {
      std::int64_t id = 1000 + t * 100 + i;
      const BatterArchetype& a =
          cfg.batter_archetypes[static_cast<std::size_t>((t * cfg.batters_per_team + i) %
                                                         static_cast<int>(cfg.batter_archetypes.size()))];
      lineup[static_cast<std::size_t>(t)].push_back(id);
      bat_by_id[id] = &a;
      res.players.push_back({id, t, Role::Batter, a.name});
    }
    for (int i = 0; i < cfg.pitchers_per_team; ++i) {
      std::int64_t id = 5000 + t * 100 + i;
      const PitcherArchetype& a =
          cfg.pitcher_archetypes[static_cast<std::size_t>((t * cfg.pitchers_per_team + i) %
                                                          static_cast<int>(cfg.pitcher_archetypes.size()))];
      staff[static_cast<std::size_t>(t)].push_back(id);
      pit_by_id[id] = &a;
      res.players.push_back({id, t, Role::Pitcher, a.name});
    }
  }
  std::sort(res.players.begin(), res.players.end(),
            [](const PlayerInfo& a, const PlayerInfo& b) { return a.player_id < b.player_id; });

  // schedule: cycle through all ordered (away, home) pairs
  std::vector<std::pair<int, int>> matches;
  for (int i = 0; i < cfg.n_teams; ++i)
    for (int j = 0; j < cfg.n_teams; ++j)
      if (i != j) matches.emplace_back(i, j);

  std::vector<int> starts(static_cast<std::size_t>(cfg.n_teams), 0);

  for (int g = 0; g < cfg.n_games; ++g) {
    auto [away, home] = matches[static_cast<std::size_t>(g) % matches.size()];
    std::int64_t game_pk = 100000 + g;
    std::int64_t stadium = 10 + home;
    GameSim sim(Rng(Rng::mix(cfg.seed, static_cast<std::uint64_t>(g))));

    std::int64_t home_sp = staff[static_cast<std::size_t>(home)]
        [static_cast<std::size_t>(starts[static_cast<std::size_t>(home)] % cfg.pitchers_per_team)];
    std::int64_t away_sp = staff[static_cast<std::size_t>(away)]
        [static_cast<std::size_t>(starts[static_cast<std::size_t>(away)] % cfg.pitchers_per_team)];
    ++starts[static_cast<std::size_t>(home)];
    ++starts[static_cast<std::size_t>(away)];

    int score[2] = {0, 0};  // away, home
    int lineup_pos[2] = {0, 0};
    int ab_number = 0;

    for (int inning = 1; inning <= cfg.innings; ++inning) {
      for (int h = 0; h < 2; ++h) {
        Half half = h == 0 ? Half::Top : Half::Bottom;
        int batting_team = h == 0 ? away : home;
        int batting_side = h;  // 0 = away bats (top)
        std::int64_t pitcher = h == 0 ? home_sp : away_sp;
        GameState st;
        st.batting_score = score[batting_side];
        st.fielding_score = score[1 - batting_side];
        while (st.outs < 3) {
          std::int64_t batter =
              lineup[static_cast<std::size_t>(batting_team)][static_cast<std::size_t>(
                  lineup_pos[batting_side] % cfg.batters_per_team)];
          ++ab_number;
          AtBatCtx ctx{bat_by_id.at(batter), pit_by_id.at(pitcher), game_pk, ab_number,
                       batter, pitcher, stadium, inning, half};
          AtBatEnd end = sim.run_atbat(ctx, st, res.events);
          if (end == AtBatEnd::Completed) ++lineup_pos[batting_side];
          // a truncated at-bat leaves the same batter due up next inning
        }
        score[batting_side] = st.batting_score;
      }
    }

    GameInfo gi;
    gi.game_pk = game_pk;
    gi.season = 1 + g / cfg.games_per_season;
    gi.stadium_id = stadium;
    gi.away_team = away;
    gi.home_team = home;
    gi.final_away_score = score[0];
    gi.final_home_score = score[1];
    res.games.push_back(gi);
  }
  return res;
}

void write_corpus_csv(const SimResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  ingest::write_events_csv(result.events, dir / "events.csv");
  ingest::write_games_csv(result.games, dir / "games.csv");
  ingest::write_players_csv(result.players, dir / "players.csv");
}

}  // namespace playerform::gamestate
