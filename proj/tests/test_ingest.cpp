#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "playerform/ingest.hpp"
#include "playerform/simulator.hpp"

using namespace playerform;
using namespace playerform::ingest;
using gamestate::DeltaVocabulary;
using gamestate::GamestateDelta;
using gamestate::SimConfig;
using gamestate::SimResult;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "playerform_ingest_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// One event row in the documented column order. bases is "on1,on2,on3",
// launch is "speed,angle,dist" or ",," for no contact.
std::string ev_row(int ab, int pitch, long long batter, long long pitcher, const char* launch,
                   int balls, int strikes, const char* bases, int outs, int bat, int fld,
                   int inning, const char* half) {
  std::ostringstream s;
  s << "500001," << ab << "," << pitch << "," << batter << "," << pitcher << ",10,FF,92.5,0.2,2.5,2280,"
    << launch << "," << balls << "," << strikes << "," << bases << "," << outs << "," << bat << ","
    << fld << "," << inning << "," << half << "\n";
  return s.str();
}

// One hand-scored game: away 2, home 2.
//   top 1: strikeout, 4-pitch walk, 2-run homer, fly out, ground out
//   bottom 1: single, double (runner to third), single scoring one,
//             sacrifice fly, inning-ending double play
std::vector<std::string> fixture_rows() {
  std::vector<std::string> r;
  r.push_back(ev_row(1, 1, 1001, 5100, ",,", 0, 0, "0,0,0", 0, 0, 0, 1, "top"));
  r.push_back(ev_row(1, 2, 1001, 5100, ",,", 0, 1, "0,0,0", 0, 0, 0, 1, "top"));
  r.push_back(ev_row(1, 3, 1001, 5100, ",,", 0, 2, "0,0,0", 0, 0, 0, 1, "top"));
  r.push_back(ev_row(2, 1, 1002, 5100, ",,", 0, 0, "0,0,0", 1, 0, 0, 1, "top"));
  r.push_back(ev_row(2, 2, 1002, 5100, ",,", 1, 0, "0,0,0", 1, 0, 0, 1, "top"));
  r.push_back(ev_row(2, 3, 1002, 5100, ",,", 2, 0, "0,0,0", 1, 0, 0, 1, "top"));
  r.push_back(ev_row(2, 4, 1002, 5100, ",,", 3, 0, "0,0,0", 1, 0, 0, 1, "top"));
  r.push_back(ev_row(3, 1, 1003, 5100, ",,", 0, 0, "1,0,0", 1, 0, 0, 1, "top"));
  r.push_back(ev_row(3, 2, 1003, 5100, "105.2,27.5,412", 1, 0, "1,0,0", 1, 0, 0, 1, "top"));
  r.push_back(ev_row(4, 1, 1004, 5100, "96.1,35,340", 0, 0, "0,0,0", 1, 2, 0, 1, "top"));
  r.push_back(ev_row(5, 1, 1005, 5100, ",,", 0, 0, "0,0,0", 2, 2, 0, 1, "top"));
  r.push_back(ev_row(5, 2, 1005, 5100, "88,-5,120", 0, 1, "0,0,0", 2, 2, 0, 1, "top"));
  r.push_back(ev_row(6, 1, 1101, 5000, "91.5,12,210", 0, 0, "0,0,0", 0, 0, 2, 1, "bottom"));
  r.push_back(ev_row(7, 1, 1102, 5000, ",,", 0, 0, "1,0,0", 0, 0, 2, 1, "bottom"));
  r.push_back(ev_row(7, 2, 1102, 5000, "99,18,290", 0, 1, "1,0,0", 0, 0, 2, 1, "bottom"));
  r.push_back(ev_row(8, 1, 1103, 5000, "90.2,8,180", 0, 0, "0,1,1", 0, 0, 2, 1, "bottom"));
  r.push_back(ev_row(9, 1, 1104, 5000, "94.7,42,310", 0, 0, "1,0,1", 0, 1, 2, 1, "bottom"));
  r.push_back(ev_row(10, 1, 1105, 5000, "85.3,-10,95", 0, 0, "1,0,0", 1, 2, 2, 1, "bottom"));
  return r;
}

std::string events_header() { return join(kEventColumns, ',') + "\n"; }

std::string fixture_csv() {
  std::string s = events_header();
  for (const auto& r : fixture_rows()) s += r;
  return s;
}

std::vector<GameInfo> fixture_games() {
  GameInfo g;
  g.game_pk = 500001;
  g.season = 2024;
  g.stadium_id = 10;
  g.away_team = 0;
  g.home_team = 1;
  g.final_away_score = 2;
  g.final_home_score = 2;
  return {g};
}

Corpus fixture_corpus() {
  std::istringstream in(fixture_csv());
  ParseResult parsed = parse_pitch_csv(in);
  REQUIRE(parsed.issues.empty());
  return build_corpus(std::move(parsed.events), fixture_games(), {}, DeltaVocabulary::enumerate(),
                      std::move(parsed.issues));
}

const SimResult& shared_sim() {
  static SimResult result = [] {
    SimConfig cfg;
    cfg.seed = 777;
    cfg.n_games = 60;
    return simulate_corpus(cfg);
  }();
  return result;
}

}  // namespace

TEST_CASE("hand-scored game replays with the expected tokens and outcomes") {
  Corpus c = fixture_corpus();
  CHECK(c.issues.empty());
  REQUIRE(c.events.size() == 18);
  REQUIRE(c.deltas.size() == 18);
  REQUIRE(c.delta_ids.size() == 18);

  const std::vector<std::string> want_tokens = {
      "01:000:0:0", "02:000:0:0", "00:000:1:0",                // strikeout
      "10:000:0:0", "20:000:0:0", "30:000:0:0", "00:100:0:0",  // walk
      "10:100:0:0", "00:000:0:2",                              // two-run homer
      "00:000:1:0",                                            // fly out
      "01:000:0:0", "00:000:1:0",                              // ground out, third out
      "00:100:0:0",                                            // single
      "01:100:0:0", "00:011:0:0",                              // double, runner to third
      "00:101:0:1",                                            // single scoring one
      "00:100:1:1",                                            // sacrifice fly
      "00:000:2:0",                                            // double play, third out
  };
  for (std::size_t i = 0; i < want_tokens.size(); ++i) {
    CAPTURE(i);
    CHECK(c.deltas[i].token() == want_tokens[i]);
    CHECK(c.delta_ids[i] == c.vocab.id(c.deltas[i]));
  }

  REQUIRE(c.atbats.size() == 10);
  const std::vector<PaOutcome> want_outcomes = {
      PaOutcome::Strikeout, PaOutcome::Walk,      PaOutcome::HomeRun,  PaOutcome::InPlayOut,
      PaOutcome::InPlayOut, PaOutcome::Single,    PaOutcome::Double,   PaOutcome::Single,
      PaOutcome::InPlayOut, PaOutcome::InPlayOut,
  };
  const std::vector<int> want_tb = {0, 0, 4, 0, 0, 1, 2, 1, 0, 0};
  const std::vector<int> want_runs = {0, 0, 2, 0, 0, 0, 0, 1, 1, 0};
  const std::vector<int> want_outs = {1, 0, 0, 1, 1, 0, 0, 0, 1, 2};
  const std::vector<int> want_pitches = {3, 4, 2, 1, 2, 1, 2, 1, 1, 1};
  for (std::size_t i = 0; i < 10; ++i) {
    CAPTURE(i);
    CHECK(c.atbats[i].outcome == want_outcomes[i]);
    CHECK(c.atbats[i].total_bases == want_tb[i]);
    CHECK(c.atbats[i].runs_scored == want_runs[i]);
    CHECK(c.atbats[i].outs_recorded == want_outs[i]);
    CHECK(c.atbats[i].n_pitches == want_pitches[i]);
    CHECK(c.atbats[i].counts_pa());
    CHECK(c.atbats[i].season == 2024);
    CHECK(c.atbats[i].ab_number == static_cast<int>(i) + 1);
  }
  CHECK(c.atbats[0].batter_id == 1001);
  CHECK(c.atbats[0].pitcher_id == 5100);
  CHECK(c.atbats[5].batter_id == 1101);
  CHECK(c.atbats[5].pitcher_id == 5000);

  CHECK(c.batter_atbats.size() == 10);
  CHECK(c.pitcher_atbats.size() == 2);
  CHECK(c.pitcher_atbats.at(5100).size() == 5);
  CHECK(c.pitcher_atbats.at(5000).size() == 5);
  CHECK(c.pitch_types == std::vector<std::string>{"FF"});
  CHECK(c.stadiums == std::vector<std::int64_t>{10});
  CHECK(c.pitch_type_id("FF") == 0);
  CHECK(c.stadium_dense_id(10) == 0);
  CHECK_THROWS_AS(c.pitch_type_id("SL"), IdOutOfRange);
  CHECK_THROWS_AS(c.stadium_dense_id(11), IdOutOfRange);
  CHECK(c.season_of(500001) == 2024);
  CHECK(c.find_game(999) == nullptr);
  CHECK_THROWS_AS(c.season_of(999), Error);
}

TEST_CASE("outcome names are stable") {
  CHECK(std::string(pa_outcome_name(PaOutcome::Strikeout)) == "strikeout");
  CHECK(std::string(pa_outcome_name(PaOutcome::HomeRun)) == "home_run");
  CHECK(std::string(pa_outcome_name(PaOutcome::Truncated)) == "truncated");
}

TEST_CASE("pitch CSV headers are checked exactly") {
  std::string swapped = fixture_csv();
  auto pos = swapped.find("game_pk,ab_number");
  swapped.replace(pos, 17, "ab_number,game_pk");
  std::istringstream in(swapped);
  CHECK_THROWS_AS(parse_pitch_csv(in), SchemaMismatch);

  std::istringstream empty("");
  CHECK_THROWS_AS(parse_pitch_csv(empty), SchemaMismatch);
}

TEST_CASE("unparseable rows are skipped and logged") {
  auto rows = fixture_rows();
  rows[4] = "500001,2,2,1002,5100,10,FF,not_a_number,0.2,2.5,2280,,,,1,0,0,0,0,1,0,0,1,top\n";
  std::string csv = events_header();
  for (const auto& r : rows) csv += r;
  std::istringstream in(csv);
  ParseResult parsed = parse_pitch_csv(in);
  CHECK(parsed.events.size() == 17);
  REQUIRE(parsed.issues.size() == 1);
  CHECK(parsed.issues[0].key == "500001/2/2");

  // the missing pitch then breaks the bridge out of 2/1 and only the
  // strikeout at-bat survives
  Corpus c = build_corpus(std::move(parsed.events), fixture_games(), {},
                          DeltaVocabulary::enumerate(), std::move(parsed.issues));
  REQUIRE(c.issues.size() == 2);
  CHECK(c.issues[1].key == "500001/2/1");
  CHECK(c.events.size() == 3);
  REQUIRE(c.atbats.size() == 1);
  CHECK(c.atbats[0].outcome == PaOutcome::Strikeout);
}

TEST_CASE("a bad state mid-game keeps the longest replayable prefix") {
  auto rows = fixture_rows();
  // fly out row now claims two outs already gone; the homer cannot bridge to it
  rows[9] = ev_row(4, 1, 1004, 5100, "96.1,35,340", 0, 0, "0,0,0", 2, 2, 0, 1, "top");
  std::string csv = events_header();
  for (const auto& r : rows) csv += r;
  std::istringstream in(csv);
  ParseResult parsed = parse_pitch_csv(in);
  CHECK(parsed.issues.empty());
  Corpus c = build_corpus(std::move(parsed.events), fixture_games(), {},
                          DeltaVocabulary::enumerate(), std::move(parsed.issues));
  REQUIRE(c.issues.size() == 1);
  CHECK(c.issues[0].key == "500001/3/2");
  CHECK(c.events.size() == 8);  // strikeout + walk + first pitch of the homer at-bat
  REQUIRE(c.atbats.size() == 3);
  CHECK(c.atbats[0].outcome == PaOutcome::Strikeout);
  CHECK(c.atbats[1].outcome == PaOutcome::Walk);
  CHECK(c.atbats[2].outcome == PaOutcome::Truncated);
  CHECK_FALSE(c.atbats[2].counts_pa());
  CHECK(c.atbats[2].n_pitches == 1);
}

TEST_CASE("duplicate keys, missing games, and stale finals are reported") {
  SUBCASE("duplicate pitch key") {
    auto rows = fixture_rows();
    rows.push_back(rows[0]);
    std::string csv = events_header();
    for (const auto& r : rows) csv += r;
    std::istringstream in(csv);
    ParseResult parsed = parse_pitch_csv(in);
    CHECK(parsed.events.size() == 19);
    Corpus c = build_corpus(std::move(parsed.events), fixture_games(), {},
                            DeltaVocabulary::enumerate(), std::move(parsed.issues));
    REQUIRE(c.issues.size() == 1);
    CHECK(c.issues[0].key == "500001/1/1");
    CHECK(c.issues[0].message == "duplicate (game, at-bat, pitch) key");
    CHECK(c.events.size() == 18);
    CHECK(c.atbats.size() == 10);
  }
  SUBCASE("game absent from games.csv") {
    std::istringstream in(fixture_csv());
    ParseResult parsed = parse_pitch_csv(in);
    Corpus c = build_corpus(std::move(parsed.events), {}, {}, DeltaVocabulary::enumerate(),
                            std::move(parsed.issues));
    CHECK(c.events.empty());
    CHECK(c.atbats.empty());
    REQUIRE(c.issues.size() == 1);
    CHECK(c.issues[0].key == "500001");
  }
  SUBCASE("first row not a fresh game start") {
    auto rows = fixture_rows();
    rows.erase(rows.begin());
    std::string csv = events_header();
    for (const auto& r : rows) csv += r;
    std::istringstream in(csv);
    ParseResult parsed = parse_pitch_csv(in);
    Corpus c = build_corpus(std::move(parsed.events), fixture_games(), {},
                            DeltaVocabulary::enumerate(), std::move(parsed.issues));
    CHECK(c.events.empty());
    REQUIRE(c.issues.size() == 1);
    CHECK(c.issues[0].key == "500001/1/2");
  }
  SUBCASE("final score disagrees with the last pitch") {
    auto games = fixture_games();
    games[0].final_home_score = 5;
    std::istringstream in(fixture_csv());
    ParseResult parsed = parse_pitch_csv(in);
    Corpus c = build_corpus(std::move(parsed.events), games, {}, DeltaVocabulary::enumerate(),
                            std::move(parsed.issues));
    REQUIRE(c.issues.size() == 1);
    CHECK(c.issues[0].key == "500001/10/1");
    CHECK(c.events.size() == 17);  // final pitch dropped, its at-bat vanishes
    CHECK(c.atbats.size() == 9);
  }
  SUBCASE("duplicate game_pk in games.csv") {
    std::istringstream in(
        "game_pk,season,stadium_id,away_team,home_team,final_away_score,final_home_score\n"
        "500001,2024,10,0,1,2,2\n"
        "500001,2024,10,0,1,2,2\n");
    CHECK_THROWS_AS(parse_games_csv(in), DuplicateKey);
  }
}

TEST_CASE("error report is a two-column TSV") {
  auto dir = scratch_dir("report");
  write_error_report({{"500001/1/1", "bad\tthing\nhappened"}, {"x", "y"}}, dir / "errors.tsv");
  std::string text = read_text_file(dir / "errors.tsv");
  CHECK(text == "key\tmessage\n500001/1/1\tbad thing happened\nx\ty\n");
}

TEST_CASE("simulated corpus survives an export and parse round trip") {
  const SimResult& sim = shared_sim();
  auto dir = scratch_dir("roundtrip");
  write_corpus_csv(sim, dir);

  std::ifstream events_in(dir / "events.csv");
  ParseResult parsed = parse_pitch_csv(events_in);
  CHECK(parsed.issues.empty());
  REQUIRE(parsed.events.size() == sim.events.size());
  for (std::size_t i = 0; i < sim.events.size(); ++i) {
    const PitchEvent& a = sim.events[i];
    const PitchEvent& b = parsed.events[i];
    CAPTURE(i);
    REQUIRE(a.game_pk == b.game_pk);
    REQUIRE(a.ab_number == b.ab_number);
    REQUIRE(a.pitch_number == b.pitch_number);
    REQUIRE(a.batter_id == b.batter_id);
    REQUIRE(a.pitcher_id == b.pitcher_id);
    REQUIRE(a.stadium_id == b.stadium_id);
    REQUIRE(a.pitch_type == b.pitch_type);
    REQUIRE(a.release_speed == b.release_speed);
    REQUIRE(a.plate_x == b.plate_x);
    REQUIRE(a.plate_z == b.plate_z);
    REQUIRE(a.spin_rate == b.spin_rate);
    REQUIRE(a.launch_speed == b.launch_speed);
    REQUIRE(a.launch_angle == b.launch_angle);
    REQUIRE(a.hit_distance == b.hit_distance);
    REQUIRE(a.state == b.state);
    REQUIRE(a.inning == b.inning);
    REQUIRE(a.half == b.half);
  }

  std::ifstream games_in(dir / "games.csv");
  auto games = parse_games_csv(games_in);
  REQUIRE(games.size() == sim.games.size());
  for (std::size_t i = 0; i < games.size(); ++i) {
    CHECK(games[i].game_pk == sim.games[i].game_pk);
    CHECK(games[i].final_away_score == sim.games[i].final_away_score);
    CHECK(games[i].final_home_score == sim.games[i].final_home_score);
  }

  std::ifstream players_in(dir / "players.csv");
  auto players = parse_players_csv(players_in);
  REQUIRE(players.size() == sim.players.size());
}

TEST_CASE("simulated corpus replays with no issues") {
  const SimResult& sim = shared_sim();
  Corpus c = build_corpus(sim.events, sim.games, sim.players, DeltaVocabulary::enumerate());
  CHECK(c.issues.empty());
  REQUIRE(c.events.size() == sim.events.size());

  std::size_t pitch_total = 0;
  std::size_t pa_events = 0;
  std::map<PaOutcome, int> histogram;
  for (std::size_t i = 0; i < c.atbats.size(); ++i) {
    const AtBat& a = c.atbats[i];
    pitch_total += static_cast<std::size_t>(a.n_pitches);
    if (a.counts_pa()) pa_events += static_cast<std::size_t>(a.n_pitches);
    histogram[a.outcome] += 1;
    if (i > 0) CHECK(a.first_event > c.atbats[i - 1].first_event);
    for (int p = 0; p < a.n_pitches; ++p) {
      const PitchEvent& e = c.events[a.first_event + static_cast<std::size_t>(p)];
      REQUIRE(e.game_pk == a.game_pk);
      REQUIRE(e.ab_number == a.ab_number);
      REQUIRE(e.batter_id == a.batter_id);
      REQUIRE(e.pitcher_id == a.pitcher_id);
    }
    // an at-bat that counts ends with an at-bat-ending delta
    const GamestateDelta& last = c.deltas[a.first_event + static_cast<std::size_t>(a.n_pitches) - 1];
    if (a.counts_pa()) CHECK(last.ends_atbat());
  }
  CHECK(pitch_total == c.events.size());
  CHECK(pa_events > 0);

  // every delta is legal from its pre-pitch state and carries its own id
  for (std::size_t i = 0; i < c.events.size(); ++i) {
    REQUIRE(gamestate::is_legal(c.events[i].state, c.deltas[i]));
    REQUIRE(c.delta_ids[i] == c.vocab.id(c.deltas[i]));
  }

  // runs on replayed deltas reproduce the recorded final scores
  std::map<std::int64_t, std::array<int, 2>> totals;
  for (std::size_t i = 0; i < c.events.size(); ++i) {
    auto& t = totals[c.events[i].game_pk];
    t[c.events[i].half == Half::Top ? 0 : 1] += c.deltas[i].runs_scored;
  }
  REQUIRE(totals.size() == c.games.size());
  for (const GameInfo& g : c.games) {
    CAPTURE(g.game_pk);
    CHECK(totals.at(g.game_pk)[0] == g.final_away_score);
    CHECK(totals.at(g.game_pk)[1] == g.final_home_score);
  }

  // a healthy league sees every ordinary outcome
  for (PaOutcome o : {PaOutcome::Strikeout, PaOutcome::Walk, PaOutcome::Single, PaOutcome::Double,
                      PaOutcome::HomeRun, PaOutcome::InPlayOut}) {
    CAPTURE(pa_outcome_name(o));
    CHECK(histogram[o] > 0);
  }

  // player indices cover every at-bat exactly once and stay chronological
  std::size_t covered = 0;
  for (const auto& [batter, idxs] : c.batter_atbats) {
    covered += idxs.size();
    for (std::size_t k = 0; k < idxs.size(); ++k) {
      CHECK(c.atbats[idxs[k]].batter_id == batter);
      if (k > 0) CHECK(idxs[k] > idxs[k - 1]);
    }
  }
  CHECK(covered == c.atbats.size());
  CHECK(c.pitch_types.size() == 5);
  CHECK(std::is_sorted(c.pitch_types.begin(), c.pitch_types.end()));
  CHECK(std::is_sorted(c.stadiums.begin(), c.stadiums.end()));
}

TEST_CASE("a corpus directory loads end to end") {
  const SimResult& sim = shared_sim();
  auto dir = scratch_dir("load_dir");
  write_corpus_csv(sim, dir);
  DeltaVocabulary::enumerate().save(dir / "vocab.txt");

  Corpus c = load_corpus_dir(dir);
  CHECK(c.issues.empty());
  CHECK(c.events.size() == sim.events.size());
  CHECK(c.games.size() == sim.games.size());
  CHECK(c.players.size() == sim.players.size());
  CHECK(c.vocab == DeltaVocabulary::enumerate());

  // without vocab.txt the vocabulary is enumerated fresh
  std::filesystem::remove(dir / "vocab.txt");
  Corpus c2 = load_corpus_dir(dir);
  CHECK(c2.vocab.size() == c.vocab.size());
  CHECK(c2.atbats.size() == c.atbats.size());
}
