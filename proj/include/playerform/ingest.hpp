#pragma once

// CSV ingest and replay. parse_pitch_csv reads the pitch schema below;
// build_corpus orders rows, replays every game through the transition rules,
// attaches a vocabulary token to each pitch, and summarizes at-bats.
//
// events.csv column order (header required, names exact):
//   game_pk, ab_number, pitch_number, batter_id, pitcher_id, stadium_id,
//   pitch_type, release_speed, plate_x, plate_z, spin_rate,
//   launch_speed, launch_angle, hit_distance,
//   balls, strikes, on_1b, on_2b, on_3b, outs,
//   batting_score, fielding_score, inning, half
// launch_* fields are empty unless the ball was put in play. half is
// "top" or "bottom". Scores are from the batting team's perspective.
//
// games.csv: game_pk, season, stadium_id, away_team, home_team,
//   final_away_score, final_home_score. Final scores anchor the runs scored
// on the last pitch of each game, and game_pk order is time order.
//
// Rows that cannot be parsed are skipped and logged. A game that fails
// replay keeps its longest replayable prefix: everything from the first bad
// bridge onward is dropped and logged, and a prefix at-bat left without its
// terminal pitch is marked truncated.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "playerform/events.hpp"
#include "playerform/gamestate.hpp"

namespace playerform::ingest {

struct RowIssue {
  std::string key;      // "game/ab/pitch" or a file-level marker
  std::string message;
};

struct ParseResult {
  std::vector<PitchEvent> events;  // file order
  std::vector<RowIssue> issues;
};

extern const std::vector<std::string> kEventColumns;

ParseResult parse_pitch_csv(std::istream& in);                 // throws SchemaMismatch
std::vector<GameInfo> parse_games_csv(std::istream& in);       // strict; throws
std::vector<PlayerInfo> parse_players_csv(std::istream& in);   // strict; throws

void write_events_csv(const std::vector<PitchEvent>& events, const std::filesystem::path& path);
void write_games_csv(const std::vector<GameInfo>& games, const std::filesystem::path& path);
void write_players_csv(const std::vector<PlayerInfo>& players, const std::filesystem::path& path);
void write_error_report(const std::vector<RowIssue>& issues, const std::filesystem::path& path);

// How a plate appearance ended. Classification is part of the contract:
//  - contact on the final pitch (batted-ball fields present):
//      no outs recorded and the batter reached -> a hit, sized by the
//      batter's base (empty bases plus max runs = home run); any out on the
//      play -> in-play out (fielder's choices and hit-plus-baserunning-out
//      shapes count here, never as hits)
//  - no contact: a two-strike final pitch with an out -> strikeout; the
//      forced-advance shape with no outs -> walk (hit-by-pitch included);
//      an out below two strikes -> the at-bat was truncated by a
//      baserunning out and records no plate appearance
enum class PaOutcome : int {
  Strikeout = 0,
  Walk = 1,
  Single = 2,
  Double = 3,
  Triple = 4,
  HomeRun = 5,
  InPlayOut = 6,
  Truncated = 7,
};

const char* pa_outcome_name(PaOutcome o);

struct AtBat {
  std::int64_t game_pk = 0;
  int ab_number = 0;
  std::int64_t batter_id = 0;
  std::int64_t pitcher_id = 0;
  int season = 0;
  std::size_t first_event = 0;  // index into Corpus::events
  int n_pitches = 0;
  PaOutcome outcome = PaOutcome::Truncated;
  int total_bases = 0;    // batter's bases on a hit
  int outs_recorded = 0;  // over the whole at-bat, baserunning included
  int runs_scored = 0;
  bool counts_pa() const { return outcome != PaOutcome::Truncated; }
};

struct Corpus {
  std::vector<PitchEvent> events;  // replay order: game, at-bat, pitch
  std::vector<gamestate::GamestateDelta> deltas;  // per event
  std::vector<int> delta_ids;                     // per event, into vocab
  std::vector<GameInfo> games;                    // ascending game_pk
  std::vector<PlayerInfo> players;
  gamestate::DeltaVocabulary vocab;
  std::vector<AtBat> atbats;  // chronological
  std::vector<RowIssue> issues;

  // appearance indices into atbats, per player, chronological
  std::map<std::int64_t, std::vector<std::size_t>> batter_atbats;
  std::map<std::int64_t, std::vector<std::size_t>> pitcher_atbats;

  // dense id tables for embeddings, sorted for stability
  std::vector<std::string> pitch_types;
  std::vector<std::int64_t> stadiums;
  int pitch_type_id(const std::string& t) const;  // throws IdOutOfRange
  int stadium_dense_id(std::int64_t stadium) const;

  const GameInfo* find_game(std::int64_t game_pk) const;  // nullptr if absent
  int season_of(std::int64_t game_pk) const;              // throws Error if absent
};

// Orders, replays, tokenizes, and summarizes. Parse-level issues from the
// caller can be passed through so the corpus carries one complete report.
Corpus build_corpus(std::vector<PitchEvent> events, std::vector<GameInfo> games,
                    std::vector<PlayerInfo> players, gamestate::DeltaVocabulary vocab,
                    std::vector<RowIssue> carried_issues = {});

// Reads events.csv + games.csv (+ players.csv, vocab.txt when present;
// the vocabulary is enumerated fresh when absent) and replays everything.
Corpus load_corpus_dir(const std::filesystem::path& dir);

}  // namespace playerform::ingest
