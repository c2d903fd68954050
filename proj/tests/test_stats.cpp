#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "playerform/simulator.hpp"
#include "playerform/stats.hpp"

using namespace playerform;
using namespace playerform::stats;
using gamestate::DeltaVocabulary;
using gamestate::SimConfig;
using ingest::AtBat;
using ingest::Corpus;
using ingest::PaOutcome;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "playerform_stats_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path spec_path(const char* name) {
  return std::filesystem::path(PF_SOURCE_DIR) / "specs" / name;
}

AtBat ab(std::int64_t game_pk, int ab_number, std::int64_t batter, std::int64_t pitcher,
         int season, PaOutcome outcome, int tb = 0, int outs = 0, int runs = 0) {
  AtBat a;
  a.game_pk = game_pk;
  a.ab_number = ab_number;
  a.batter_id = batter;
  a.pitcher_id = pitcher;
  a.season = season;
  a.outcome = outcome;
  a.total_bases = tb;
  a.outs_recorded = outs;
  a.runs_scored = runs;
  a.n_pitches = 1;
  return a;
}

// at-bat level corpus for stat math; events stay empty
Corpus synth(std::vector<AtBat> atbats, std::vector<std::pair<std::int64_t, int>> games) {
  Corpus c;
  for (auto [pk, season] : games) {
    GameInfo g;
    g.game_pk = pk;
    g.season = season;
    c.games.push_back(g);
  }
  c.atbats = std::move(atbats);
  for (std::size_t i = 0; i < c.atbats.size(); ++i) {
    c.atbats[i].first_event = i;  // keep first_event strictly increasing
    c.batter_atbats[c.atbats[i].batter_id].push_back(i);
    c.pitcher_atbats[c.atbats[i].pitcher_id].push_back(i);
  }
  return c;
}

const Corpus& sim_corpus() {
  static Corpus corpus = [] {
    SimConfig cfg;
    cfg.seed = 424242;
    cfg.n_games = 60;
    auto sim = simulate_corpus(cfg);
    return ingest::build_corpus(sim.events, sim.games, sim.players, DeltaVocabulary::enumerate());
  }();
  return corpus;
}

bool is_hit(PaOutcome o) {
  return o == PaOutcome::Single || o == PaOutcome::Double || o == PaOutcome::Triple ||
         o == PaOutcome::HomeRun;
}

bool strictly_before(const AtBat& a, AsOf as_of) {
  if (a.game_pk != as_of.game_pk) return a.game_pk < as_of.game_pk;
  return a.ab_number < as_of.ab_number;
}

Corpus truncate_at(const Corpus& c, AsOf as_of) {
  Corpus t;
  t.games = c.games;
  t.players = c.players;
  t.vocab = c.vocab;
  t.pitch_types = c.pitch_types;
  t.stadiums = c.stadiums;
  for (const AtBat& a : c.atbats) {
    if (!strictly_before(a, as_of)) break;
    t.atbats.push_back(a);
  }
  std::size_t ev_end = t.atbats.empty()
                           ? 0
                           : t.atbats.back().first_event +
                                 static_cast<std::size_t>(t.atbats.back().n_pitches);
  t.events.assign(c.events.begin(), c.events.begin() + static_cast<std::ptrdiff_t>(ev_end));
  t.deltas.assign(c.deltas.begin(), c.deltas.begin() + static_cast<std::ptrdiff_t>(ev_end));
  t.delta_ids.assign(c.delta_ids.begin(),
                     c.delta_ids.begin() + static_cast<std::ptrdiff_t>(ev_end));
  for (std::size_t i = 0; i < t.atbats.size(); ++i) {
    t.batter_atbats[t.atbats[i].batter_id].push_back(i);
    t.pitcher_atbats[t.atbats[i].pitcher_id].push_back(i);
  }
  return t;
}

}  // namespace

TEST_CASE("desk spec has 57 slots in the documented block order") {
  StatSpec spec = StatSpec::desk_default();
  CHECK(spec.total_size() == 57);
  REQUIRE(spec.blocks().size() == StatSpec::kNumBlocks);
  CHECK(spec.blocks()[0].entity == Entity::Batter);
  CHECK(spec.blocks()[0].scale == Scale::Career);
  CHECK(spec.blocks()[10].entity == Entity::Matchup);
  CHECK(spec.blocks()[10].scale == Scale::ThisGame);
  CHECK(spec.block_offset(4) == 24);   // pitcher career after four batter blocks
  CHECK(spec.block_offset(8) == 48);   // matchup career after the pitcher blocks
  CHECK(spec.block(Entity::Batter, Scale::Last15).stats[0] == "AVG");
  CHECK_THROWS_AS(spec.block(Entity::Matchup, Scale::Last15), Error);

  // matchup slots in the clustering baseline drop only this_game: 57 - 15
  CHECK(baseline_slots(spec).size() == 42);
  CHECK(baseline_slots(spec)[0] == 0);

  StatSpec reparsed = StatSpec::parse(spec.serialize());
  CHECK(reparsed == spec);
}

TEST_CASE("spec files on disk parse to the expected widths") {
  StatSpec desk = StatSpec::load(spec_path("desk.statspec"));
  CHECK(desk == StatSpec::desk_default());

  StatSpec full = StatSpec::load(spec_path("paper_full.statspec"));
  CHECK(full.total_size() == 1541);
  const std::vector<int> want = {167, 137, 137, 137, 141, 137, 137, 137, 137, 137, 137};
  REQUIRE(full.blocks().size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CAPTURE(i);
    CHECK(full.blocks()[i].size() == want[i]);
  }
  CHECK(baseline_slots(full).size() == 1541 - 137 - 137 - 137);
}

TEST_CASE("malformed specs are rejected") {
  CHECK_THROWS_AS(StatSpec::parse(""), ParseError);
  CHECK_THROWS_AS(StatSpec::parse("statspec 2\n"), ParseError);
  // wrong block order
  std::string swapped = StatSpec::desk_default().serialize();
  auto a = swapped.find("block batter career");
  swapped.replace(a, 19, "block batter season");
  CHECK_THROWS_AS(StatSpec::parse(swapped), ParseError);
  // unknown stat
  std::string bad_stat = StatSpec::desk_default().serialize();
  a = bad_stat.find("stat AVG");
  bad_stat.replace(a, 8, "stat WAR");
  CHECK_THROWS_AS(StatSpec::parse(bad_stat), ParseError);
  // stat after reserve
  CHECK_THROWS_AS(StatSpec::parse("statspec 1\nblock batter career\nreserve 3\nstat AVG\n"),
                  ParseError);
  // matchup must not declare last15 (order check catches the extra block)
  std::string extra = StatSpec::desk_default().serialize();
  extra += "block matchup last15\nstat AVG\n";
  CHECK_THROWS_AS(StatSpec::parse(extra), ParseError);
}

TEST_CASE("statistic formulas match hand arithmetic") {
  Tally t;
  t.pa = 10;
  t.ab = 8;
  t.hits = 3;
  t.walks = 2;
  t.strikeouts = 4;
  t.home_runs = 1;
  t.total_bases = 7;
  t.runs = 5;
  t.outs = 9;

  double v = 0.0;
  CHECK(eval_stat("AVG", t, &v));
  CHECK(v == 3.0 / 8.0);
  CHECK(eval_stat("OBP", t, &v));
  CHECK(v == 0.5);
  CHECK(eval_stat("SLG", t, &v));
  CHECK(v == 7.0 / 8.0);
  CHECK(eval_stat("OPS", t, &v));
  CHECK(v == 0.5 + 7.0 / 8.0);
  CHECK(eval_stat("K_RATE", t, &v));
  CHECK(v == 0.4);
  CHECK(eval_stat("BB_RATE", t, &v));
  CHECK(v == 0.2);
  CHECK(eval_stat("HR_RATE", t, &v));
  CHECK(v == 0.1);
  CHECK(eval_stat("RUNS_PER_AB", t, &v));
  CHECK(v == 0.5);
  CHECK(eval_stat("WHIP", t, &v));
  CHECK(v == 15.0 / 9.0);
  CHECK(eval_stat("OPP_AVG", t, &v));
  CHECK(v == 3.0 / 8.0);
  CHECK(eval_stat("AB_COUNT", t, &v));
  CHECK(v == 10.0);

  Tally zero;
  for (const char* name : {"AVG", "OBP", "SLG", "OPS", "K_RATE", "BB_RATE", "HR_RATE",
                           "RUNS_PER_AB", "WHIP", "OPP_AVG", "AB_COUNT"}) {
    CAPTURE(name);
    CHECK_FALSE(eval_stat(name, zero, &v));
    CHECK(v == 0.0);
  }
  CHECK_THROWS_AS(eval_stat("WAR", t, &v), Error);

  // walks count toward the plate but not the at-bat
  AtBat walk = ab(1, 1, 1, 2, 1, PaOutcome::Walk);
  Tally wt = tally_atbat(walk);
  CHECK(wt.pa == 1);
  CHECK(wt.ab == 0);
  CHECK(wt.walks == 1);
  AtBat hr = ab(1, 2, 1, 2, 1, PaOutcome::HomeRun, 4, 0, 2);
  Tally ht = tally_atbat(hr);
  CHECK(ht.hits == 1);
  CHECK(ht.home_runs == 1);
  CHECK(ht.total_bases == 4);
  CHECK(ht.runs == 2);
  AtBat trunc = ab(1, 3, 1, 2, 1, PaOutcome::Truncated, 0, 1, 0);
  Tally tt = tally_atbat(trunc);
  CHECK(tt.pa == 0);
  CHECK(tt.outs == 1);
}

TEST_CASE("a batter with 3 hits in 10 prior at-bats carries a .300 recent average") {
  std::vector<AtBat> abs;
  for (int i = 1; i <= 10; ++i)
    abs.push_back(ab(100, i, 1, 5, 1, i <= 3 ? PaOutcome::Single : PaOutcome::InPlayOut,
                     i <= 3 ? 1 : 0, i <= 3 ? 0 : 1));
  abs.push_back(ab(100, 11, 1, 5, 1, PaOutcome::InPlayOut, 0, 1));
  Corpus c = synth(std::move(abs), {{100, 1}});
  StatsEngine engine(c, StatSpec::desk_default());

  StatValues sv = engine.compute_split_stats(1, Role::Batter, {100, 11}, Scale::Last15);
  REQUIRE(sv.values.size() == 6);
  CHECK(sv.present[0] == 1);
  CHECK(sv.values[0] == 0.3);  // AVG
  CHECK(sv.values[1] == 0.3);  // OBP, no walks
  CHECK(sv.values[4] == 0.0);  // K_RATE
}

TEST_CASE("the recent window holds exactly the last 15 appearances") {
  std::vector<AtBat> abs;
  for (int i = 1; i <= 20; ++i)
    abs.push_back(ab(100, i, 1, 5, 1, i <= 5 ? PaOutcome::Single : PaOutcome::InPlayOut,
                     i <= 5 ? 1 : 0, i <= 5 ? 0 : 1));
  Corpus c = synth(std::move(abs), {{100, 1}});
  StatsEngine engine(c, StatSpec::desk_default());

  AsOf as_of{100, 21};
  StatValues career = engine.compute_split_stats(1, Role::Batter, as_of, Scale::Career);
  CHECK(career.values[0] == 0.25);  // 5 of 20
  StatValues recent = engine.compute_split_stats(1, Role::Batter, as_of, Scale::Last15);
  CHECK(recent.values[0] == 0.0);  // hits fell out of the window
  CHECK(recent.present[0] == 1);
}

TEST_CASE("a first career appearance reports all-absent statistics") {
  Corpus c = synth({ab(100, 1, 7, 5, 1, PaOutcome::Single, 1)}, {{100, 1}});
  StatsEngine engine(c, StatSpec::desk_default());
  for (Scale s : {Scale::Career, Scale::Season, Scale::Last15, Scale::ThisGame}) {
    CAPTURE(scale_name(s));
    StatValues sv = engine.compute_split_stats(7, Role::Batter, {100, 1}, s);
    for (std::size_t i = 0; i < sv.values.size(); ++i) {
      CHECK(sv.values[i] == 0.0);
      CHECK(sv.present[i] == 0);
    }
  }
  CHECK_THROWS_AS(engine.compute_split_stats(999, Role::Batter, {100, 1}, Scale::Career),
                  UnknownPlayer);
  CHECK_THROWS_AS(engine.compute_split_stats(7, Role::Pitcher, {100, 1}, Scale::Career),
                  UnknownPlayer);
}

TEST_CASE("season and game scales window the history correctly") {
  std::vector<AtBat> abs;
  // season 1, game 100: two singles, two outs
  abs.push_back(ab(100, 1, 1, 5, 1, PaOutcome::Single, 1));
  abs.push_back(ab(100, 2, 1, 5, 1, PaOutcome::InPlayOut, 0, 1));
  abs.push_back(ab(100, 3, 1, 5, 1, PaOutcome::Single, 1));
  abs.push_back(ab(100, 4, 1, 5, 1, PaOutcome::InPlayOut, 0, 1));
  // season 2, game 200: one out, then the anchor
  abs.push_back(ab(200, 1, 1, 5, 2, PaOutcome::InPlayOut, 0, 1));
  abs.push_back(ab(200, 2, 1, 5, 2, PaOutcome::InPlayOut, 0, 1));
  Corpus c = synth(std::move(abs), {{100, 1}, {200, 2}});
  StatsEngine engine(c, StatSpec::desk_default());

  AsOf as_of{200, 2};
  CHECK(engine.compute_split_stats(1, Role::Batter, as_of, Scale::Career).values[0] == 0.4);
  CHECK(engine.compute_split_stats(1, Role::Batter, as_of, Scale::Season).values[0] == 0.0);
  CHECK(engine.compute_split_stats(1, Role::Batter, as_of, Scale::Season).present[0] == 1);
  CHECK(engine.compute_split_stats(1, Role::Batter, as_of, Scale::ThisGame).values[0] == 0.0);

  // anchored at the start of season 2 the season block is empty
  StatValues fresh = engine.compute_split_stats(1, Role::Batter, {200, 1}, Scale::Season);
  CHECK(fresh.present[0] == 0);
}

TEST_CASE("matchup statistics cover only the pair's shared history") {
  std::vector<AtBat> abs;
  abs.push_back(ab(100, 1, 1, 5, 1, PaOutcome::Single, 1));
  abs.push_back(ab(100, 2, 1, 6, 1, PaOutcome::HomeRun, 4, 0, 1));
  abs.push_back(ab(100, 3, 1, 5, 1, PaOutcome::InPlayOut, 0, 1));
  Corpus c = synth(std::move(abs), {{100, 1}});
  StatsEngine engine(c, StatSpec::desk_default());

  AsOf as_of{100, 4};
  StatValues vs5 = engine.matchup_stats(1, 5, as_of, Scale::Career);
  REQUIRE(vs5.values.size() == 3);
  CHECK(vs5.values[0] == 2.0);  // AB_COUNT
  CHECK(vs5.values[1] == 0.5);  // AVG
  StatValues vs9 = engine.matchup_stats(1, 9, as_of, Scale::Career);
  for (std::size_t i = 0; i < vs9.values.size(); ++i) {
    CHECK(vs9.values[i] == 0.0);
    CHECK(vs9.present[i] == 0);
  }
  CHECK_THROWS_AS(engine.matchup_stats(1, 5, as_of, Scale::Last15), Error);
}

TEST_CASE("engine values match a brute-force recount over the simulated corpus") {
  const Corpus& c = sim_corpus();
  StatsEngine engine(c, StatSpec::desk_default());
  Rng rng(20240815);
  REQUIRE(c.atbats.size() > 400);

  for (int trial = 0; trial < 8; ++trial) {
    std::size_t pick = 200 + rng.below(c.atbats.size() - 200);
    const AtBat& anchor = c.atbats[pick];
    AsOf as_of{anchor.game_pk, anchor.ab_number};
    CAPTURE(trial);
    CAPTURE(anchor.game_pk);
    CAPTURE(anchor.ab_number);

    // batter season OBP
    {
      int season = c.season_of(as_of.game_pk);
      int hits = 0, walks = 0, pa = 0;
      for (const AtBat& a : c.atbats) {
        if (a.batter_id != anchor.batter_id || !strictly_before(a, as_of)) continue;
        if (a.season != season || !a.counts_pa()) continue;
        pa += 1;
        if (is_hit(a.outcome)) hits += 1;
        if (a.outcome == PaOutcome::Walk) walks += 1;
      }
      StatValues sv =
          engine.compute_split_stats(anchor.batter_id, Role::Batter, as_of, Scale::Season);
      if (pa == 0) {
        CHECK(sv.present[1] == 0);
      } else {
        CHECK(sv.present[1] == 1);
        CHECK(sv.values[1] == static_cast<double>(hits + walks) / pa);
      }
    }

    // pitcher career WHIP: walks and hits per three outs recorded
    {
      int hits = 0, walks = 0, outs = 0;
      for (const AtBat& a : c.atbats) {
        if (a.pitcher_id != anchor.pitcher_id || !strictly_before(a, as_of)) continue;
        outs += a.outs_recorded;
        if (!a.counts_pa()) continue;
        if (is_hit(a.outcome)) hits += 1;
        if (a.outcome == PaOutcome::Walk) walks += 1;
      }
      StatValues sv =
          engine.compute_split_stats(anchor.pitcher_id, Role::Pitcher, as_of, Scale::Career);
      if (outs == 0) {
        CHECK(sv.present[1] == 0);
      } else {
        CHECK(sv.values[1] == 3.0 * (hits + walks) / outs);
      }
    }

    // matchup career AVG
    {
      int hits = 0, abs_n = 0;
      for (const AtBat& a : c.atbats) {
        if (a.batter_id != anchor.batter_id || a.pitcher_id != anchor.pitcher_id) continue;
        if (!strictly_before(a, as_of) || !a.counts_pa()) continue;
        if (a.outcome != PaOutcome::Walk) abs_n += 1;
        if (is_hit(a.outcome)) hits += 1;
      }
      StatValues sv = engine.matchup_stats(anchor.batter_id, anchor.pitcher_id, as_of,
                                           Scale::Career);
      if (abs_n == 0) {
        CHECK(sv.present[1] == 0);
      } else {
        CHECK(sv.values[1] == static_cast<double>(hits) / abs_n);
      }
    }
  }
}

TEST_CASE("statistics never depend on events at or after the anchor") {
  const Corpus& c = sim_corpus();
  StatsEngine engine(c, StatSpec::desk_default());
  Rng rng(6061);

  for (int trial = 0; trial < 6; ++trial) {
    std::size_t pick = 300 + rng.below(c.atbats.size() - 300);
    const AtBat& anchor = c.atbats[pick];
    AsOf as_of{anchor.game_pk, anchor.ab_number};
    CAPTURE(anchor.game_pk);
    CAPTURE(anchor.ab_number);

    Corpus cut = truncate_at(c, as_of);
    StatsEngine engine_cut(cut, StatSpec::desk_default());

    SupplementalVector full = engine.assemble_raw(anchor.batter_id, anchor.pitcher_id, as_of);
    SupplementalVector trimmed =
        engine_cut.assemble_raw(anchor.batter_id, anchor.pitcher_id, as_of);
    REQUIRE(full.values.size() == trimmed.values.size());
    for (std::size_t i = 0; i < full.values.size(); ++i) {
      CAPTURE(i);
      REQUIRE(full.values[i] == trimmed.values[i]);
      REQUIRE(full.present[i] == trimmed.present[i]);
    }
  }
}

TEST_CASE("assembled vectors concatenate the blocks in spec order") {
  const Corpus& c = sim_corpus();
  StatsEngine engine(c, StatSpec::desk_default());
  const AtBat& anchor = c.atbats[500];
  AsOf as_of{anchor.game_pk, anchor.ab_number};

  SupplementalVector v = engine.assemble_raw(anchor.batter_id, anchor.pitcher_id, as_of);
  REQUIRE(v.values.size() == 57);

  StatValues bc = engine.compute_split_stats(anchor.batter_id, Role::Batter, as_of, Scale::Career);
  StatValues pc =
      engine.compute_split_stats(anchor.pitcher_id, Role::Pitcher, as_of, Scale::Career);
  StatValues mc = engine.matchup_stats(anchor.batter_id, anchor.pitcher_id, as_of, Scale::Career);
  for (int i = 0; i < 6; ++i) {
    CHECK(v.values[static_cast<std::size_t>(i)] == bc.values[static_cast<std::size_t>(i)]);
    CHECK(v.values[static_cast<std::size_t>(24 + i)] == pc.values[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < 3; ++i)
    CHECK(v.values[static_cast<std::size_t>(48 + i)] == mc.values[static_cast<std::size_t>(i)]);

  // unknown batter propagates
  CHECK_THROWS_AS(engine.assemble_raw(42424242, anchor.pitcher_id, as_of), UnknownPlayer);
}

TEST_CASE("standardization is frozen on the training split") {
  const Corpus& c = sim_corpus();
  StatsEngine engine(c, StatSpec::desk_default());
  std::size_t n_train = default_train_games(c.games.size());
  CHECK(n_train == 48);
  Standardizer st = fit_standardizer(engine, n_train);

  const std::size_t n = static_cast<std::size_t>(engine.spec().total_size());
  REQUIRE(st.mean.size() == n);

  // standardized training population has mean 0 and unit variance, slotwise
  std::int64_t boundary = c.games[n_train - 1].game_pk;
  std::vector<double> sum(n, 0.0), sumsq(n, 0.0);
  std::vector<std::int64_t> count(n, 0);
  for (const AtBat& a : c.atbats) {
    if (a.game_pk > boundary) break;
    SupplementalVector v =
        engine.assemble_supplemental(a.batter_id, a.pitcher_id, {a.game_pk, a.ab_number}, st);
    for (std::size_t i = 0; i < n; ++i) {
      if (!v.present[i]) continue;
      sum[i] += v.values[i];
      sumsq[i] += v.values[i] * v.values[i];
      count[i] += 1;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    CAPTURE(i);
    if (count[i] < 2) continue;
    double mean = sum[i] / static_cast<double>(count[i]);
    double var = sumsq[i] / static_cast<double>(count[i]) - mean * mean;
    CHECK(std::abs(mean) < 1e-9);
    if (var > 1e-18) CHECK(std::abs(var - 1.0) < 1e-6);
  }

  // a different split boundary produces different constants
  Standardizer all = fit_standardizer(engine, c.games.size());
  bool differs = false;
  for (std::size_t i = 0; i < n; ++i)
    if (st.mean[i] != all.mean[i]) differs = true;
  CHECK(differs);

  // physics channel 0 mean equals a direct recount over training pitches
  double speed_sum = 0.0;
  std::int64_t speed_n = 0;
  for (const PitchEvent& e : c.events) {
    if (e.game_pk > boundary) break;
    speed_sum += e.release_speed;
    speed_n += 1;
  }
  CHECK(st.phys_mean[0] == speed_sum / static_cast<double>(speed_n));
  for (std::size_t ch = 0; ch < Standardizer::kPhysicsChannels; ++ch) CHECK(st.phys_std[ch] > 0.0);

  auto dir = scratch_dir("standardizer");
  st.save(dir / "standardizer.txt");
  Standardizer back = Standardizer::load(dir / "standardizer.txt");
  CHECK(back.mean == st.mean);
  CHECK(back.stdev == st.stdev);
  CHECK(back.phys_mean == st.phys_mean);
  CHECK(back.phys_std == st.phys_std);

  CHECK_THROWS_AS(fit_standardizer(engine, 0), Error);
  CHECK_THROWS_AS(fit_standardizer(engine, c.games.size() + 1), Error);
}

TEST_CASE("points on a line project onto the line's direction") {
  Eigen::MatrixXd x(5, 2);
  for (int i = 0; i < 5; ++i) {
    x(i, 0) = i;
    x(i, 1) = 2.0 * i;
  }
  PcaModel m = pca_fit(x, 2);
  CHECK(std::abs(m.components(0, 0) - 1.0 / std::sqrt(5.0)) < 1e-12);
  CHECK(std::abs(m.components(0, 1) - 2.0 / std::sqrt(5.0)) < 1e-12);
  CHECK(m.explained_variance[0] > 0.0);
  CHECK(m.explained_variance[1] < 1e-12);

  Eigen::VectorXd at_mean = pca_transform(m, m.mean);
  CHECK(at_mean.norm() < 1e-12);
}

TEST_CASE("a full-rank projection is lossless") {
  Rng rng(5150);
  Eigen::MatrixXd x(50, 10);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 10; ++j) x(i, j) = rng.normal();

  PcaModel m = pca_fit(x, 10);
  // orthonormal components
  Eigen::MatrixXd gram = m.components * m.components.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-8);
  // explained variance is non-increasing
  for (int i = 1; i < 10; ++i) CHECK(m.explained_variance[i] <= m.explained_variance[i - 1]);

  Eigen::MatrixXd z = pca_transform_all(m, x);
  Eigen::MatrixXd back = (z * m.components).rowwise() + m.mean.transpose();
  CHECK((back - x).cwiseAbs().maxCoeff() < 1e-8);

  // distances survive a dimension-preserving transform
  for (int i = 0; i < 10; ++i) {
    double before = (x.row(i) - x.row(i + 1)).norm();
    double after = (z.row(i) - z.row(i + 1)).norm();
    CHECK(std::abs(before - after) < 1e-8);
  }

  // per-vector and batch transforms agree
  Eigen::VectorXd one = pca_transform(m, x.row(3).transpose());
  CHECK((one.transpose() - z.row(3)).norm() < 1e-12);
}

TEST_CASE("requesting more structure than the samples support fails") {
  Eigen::MatrixXd two_dim(6, 2);
  for (int i = 0; i < 6; ++i) {
    two_dim(i, 0) = i;
    two_dim(i, 1) = i * i;
  }
  CHECK_THROWS_AS(pca_fit(two_dim, 3), RankDeficient);

  Eigen::MatrixXd few(4, 10);
  few.setRandom();
  CHECK_THROWS_AS(pca_fit(few, 5), RankDeficient);

  Eigen::MatrixXd single(1, 4);
  single.setZero();
  CHECK_THROWS_AS(pca_fit(single, 1), RankDeficient);
  CHECK_THROWS_AS(pca_fit(two_dim, 0), Error);
}

TEST_CASE("pca models round-trip through their directory format") {
  Rng rng(911);
  Eigen::MatrixXd x(30, 6);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 6; ++j) x(i, j) = rng.normal() * (j + 1);

  PcaModel m = pca_fit(x, 4);
  auto dir = scratch_dir("pca_model");
  m.save(dir);
  PcaModel back = PcaModel::load(dir);
  CHECK(back.mean == m.mean);
  CHECK(back.components == m.components);
  CHECK(back.explained_variance == m.explained_variance);

  Eigen::VectorXd probe = x.row(7).transpose();
  CHECK(pca_transform(back, probe) == pca_transform(m, probe));

  CHECK_THROWS_AS(pca_transform(m, Eigen::VectorXd::Zero(5)), ShapeMismatch);
}
