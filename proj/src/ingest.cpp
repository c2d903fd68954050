#include "playerform/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "playerform/csv.hpp"

namespace playerform::ingest {

using gamestate::DeltaVocabulary;
using gamestate::GameState;
using gamestate::GamestateDelta;

const std::vector<std::string> kEventColumns = {
    "game_pk",       "ab_number",    "pitch_number", "batter_id",    "pitcher_id",
    "stadium_id",    "pitch_type",   "release_speed", "plate_x",     "plate_z",
    "spin_rate",     "launch_speed", "launch_angle", "hit_distance", "balls",
    "strikes",       "on_1b",        "on_2b",        "on_3b",        "outs",
    "batting_score", "fielding_score", "inning",     "half"};

namespace {

std::string row_key(std::int64_t game_pk, int ab, int pitch) {
  return std::to_string(game_pk) + "/" + std::to_string(ab) + "/" + std::to_string(pitch);
}

std::string event_key(const PitchEvent& e) {
  return row_key(e.game_pk, e.ab_number, e.pitch_number);
}

std::optional<double> parse_optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_double(s);
}

bool parse_flag(const std::string& s) {
  if (s == "0") return false;
  if (s == "1") return true;
  throw ParseError("base occupancy flag must be 0 or 1, got '" + s + "'");
}

}  // namespace

ParseResult parse_pitch_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw SchemaMismatch("empty pitch CSV");
  CsvHeader header(row);
  header.require_exact(kEventColumns);

  ParseResult out;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;  // stray blank line
    std::string key = "line " + std::to_string(reader.line());
    try {
      if (row.size() != kEventColumns.size())
        throw ParseError("expected " + std::to_string(kEventColumns.size()) + " fields, got " +
                         std::to_string(row.size()));
      PitchEvent e;
      e.game_pk = parse_int(row[0]);
      e.ab_number = static_cast<int>(parse_int(row[1]));
      e.pitch_number = static_cast<int>(parse_int(row[2]));
      key = event_key(e);
      e.batter_id = parse_int(row[3]);
      e.pitcher_id = parse_int(row[4]);
      e.stadium_id = parse_int(row[5]);
      e.pitch_type = row[6];
      e.release_speed = parse_double(row[7]);
      e.plate_x = parse_double(row[8]);
      e.plate_z = parse_double(row[9]);
      e.spin_rate = parse_double(row[10]);
      e.launch_speed = parse_optional(row[11]);
      e.launch_angle = parse_optional(row[12]);
      e.hit_distance = parse_optional(row[13]);
      e.state.balls = static_cast<int>(parse_int(row[14]));
      e.state.strikes = static_cast<int>(parse_int(row[15]));
      e.state.bases = {parse_flag(row[16]), parse_flag(row[17]), parse_flag(row[18])};
      e.state.outs = static_cast<int>(parse_int(row[19]));
      e.state.batting_score = static_cast<int>(parse_int(row[20]));
      e.state.fielding_score = static_cast<int>(parse_int(row[21]));
      e.inning = static_cast<int>(parse_int(row[22]));
      if (row[23] == "top") e.half = Half::Top;
      else if (row[23] == "bottom") e.half = Half::Bottom;
      else throw ParseError("half must be 'top' or 'bottom', got '" + row[23] + "'");
      if (e.pitch_number < 1) throw ParseError("pitch_number must be >= 1");
      if (e.ab_number < 1) throw ParseError("ab_number must be >= 1");
      if (e.inning < 1) throw ParseError("inning must be >= 1");
      if (!e.state.valid_prepitch()) throw ParseError("pre-pitch state out of range");
      out.events.push_back(std::move(e));
    } catch (const ParseError& err) {
      out.issues.push_back({key, err.what()});
    }
  }
  return out;
}

std::vector<GameInfo> parse_games_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw SchemaMismatch("empty games CSV");
  CsvHeader header(row);
  header.require_exact({"game_pk", "season", "stadium_id", "away_team", "home_team",
                        "final_away_score", "final_home_score"});
  std::vector<GameInfo> out;
  std::set<std::int64_t> seen;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 7)
      throw ParseError("games.csv line " + std::to_string(reader.line()) + ": expected 7 fields");
    GameInfo g;
    g.game_pk = parse_int(row[0]);
    g.season = static_cast<int>(parse_int(row[1]));
    g.stadium_id = parse_int(row[2]);
    g.away_team = parse_int(row[3]);
    g.home_team = parse_int(row[4]);
    g.final_away_score = static_cast<int>(parse_int(row[5]));
    g.final_home_score = static_cast<int>(parse_int(row[6]));
    if (!seen.insert(g.game_pk).second)
      throw DuplicateKey("duplicate game_pk in games.csv: " + std::to_string(g.game_pk));
    out.push_back(g);
  }
  std::sort(out.begin(), out.end(),
            [](const GameInfo& a, const GameInfo& b) { return a.game_pk < b.game_pk; });
  return out;
}

std::vector<PlayerInfo> parse_players_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw SchemaMismatch("empty players CSV");
  CsvHeader header(row);
  header.require_exact({"player_id", "team", "role", "archetype"});
  std::vector<PlayerInfo> out;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 4)
      throw ParseError("players.csv line " + std::to_string(reader.line()) + ": expected 4 fields");
    PlayerInfo p;
    p.player_id = parse_int(row[0]);
    p.team = parse_int(row[1]);
    if (row[2] == "batter") p.role = Role::Batter;
    else if (row[2] == "pitcher") p.role = Role::Pitcher;
    else throw ParseError("role must be 'batter' or 'pitcher', got '" + row[2] + "'");
    p.archetype = row[3];
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const PlayerInfo& a, const PlayerInfo& b) { return a.player_id < b.player_id; });
  return out;
}

void write_events_csv(const std::vector<PitchEvent>& events, const std::filesystem::path& path) {
  std::string out = join(kEventColumns, ',') + "\n";
  for (const PitchEvent& e : events) {
    std::vector<std::string> row;
    row.reserve(kEventColumns.size());
    row.push_back(std::to_string(e.game_pk));
    row.push_back(std::to_string(e.ab_number));
    row.push_back(std::to_string(e.pitch_number));
    row.push_back(std::to_string(e.batter_id));
    row.push_back(std::to_string(e.pitcher_id));
    row.push_back(std::to_string(e.stadium_id));
    row.push_back(e.pitch_type);
    row.push_back(fmt_double(e.release_speed));
    row.push_back(fmt_double(e.plate_x));
    row.push_back(fmt_double(e.plate_z));
    row.push_back(fmt_double(e.spin_rate));
    row.push_back(e.launch_speed ? fmt_double(*e.launch_speed) : "");
    row.push_back(e.launch_angle ? fmt_double(*e.launch_angle) : "");
    row.push_back(e.hit_distance ? fmt_double(*e.hit_distance) : "");
    row.push_back(std::to_string(e.state.balls));
    row.push_back(std::to_string(e.state.strikes));
    row.push_back(e.state.bases[0] ? "1" : "0");
    row.push_back(e.state.bases[1] ? "1" : "0");
    row.push_back(e.state.bases[2] ? "1" : "0");
    row.push_back(std::to_string(e.state.outs));
    row.push_back(std::to_string(e.state.batting_score));
    row.push_back(std::to_string(e.state.fielding_score));
    row.push_back(std::to_string(e.inning));
    row.push_back(half_name(e.half));
    out += csv_join(row);
  }
  write_text_file_atomic(path, out);
}

void write_games_csv(const std::vector<GameInfo>& games, const std::filesystem::path& path) {
  std::string out =
      "game_pk,season,stadium_id,away_team,home_team,final_away_score,final_home_score\n";
  for (const GameInfo& g : games) {
    std::vector<std::string> row{std::to_string(g.game_pk),
                                 std::to_string(g.season),
                                 std::to_string(g.stadium_id),
                                 std::to_string(g.away_team),
                                 std::to_string(g.home_team),
                                 std::to_string(g.final_away_score),
                                 std::to_string(g.final_home_score)};
    out += csv_join(row);
  }
  write_text_file_atomic(path, out);
}

void write_players_csv(const std::vector<PlayerInfo>& players, const std::filesystem::path& path) {
  std::string out = "player_id,team,role,archetype\n";
  for (const PlayerInfo& p : players) {
    std::vector<std::string> row{std::to_string(p.player_id), std::to_string(p.team),
                                 role_name(p.role), p.archetype};
    out += csv_join(row);
  }
  write_text_file_atomic(path, out);
}

void write_error_report(const std::vector<RowIssue>& issues, const std::filesystem::path& path) {
  std::string out = "key\tmessage\n";
  for (const RowIssue& i : issues) {
    std::string msg = i.message;
    for (char& c : msg)
      if (c == '\t' || c == '\n') c = ' ';
    out += i.key + "\t" + msg + "\n";
  }
  write_text_file_atomic(path, out);
}

const char* pa_outcome_name(PaOutcome o) {
  switch (o) {
    case PaOutcome::Strikeout: return "strikeout";
    case PaOutcome::Walk: return "walk";
    case PaOutcome::Single: return "single";
    case PaOutcome::Double: return "double";
    case PaOutcome::Triple: return "triple";
    case PaOutcome::HomeRun: return "home_run";
    case PaOutcome::InPlayOut: return "in_play_out";
    case PaOutcome::Truncated: return "truncated";
  }
  return "unknown";
}

namespace {

PaOutcome classify(const PitchEvent& final_pitch, const GamestateDelta& d, int* total_bases) {
  *total_bases = 0;
  if (!d.ends_atbat()) return PaOutcome::Truncated;
  bool contact = final_pitch.launch_speed.has_value();
  if (contact) {
    if (d.outs_gained == 0) {
      if (!d.bases_after[0] && !d.bases_after[1] && !d.bases_after[2]) {
        *total_bases = 4;
        return PaOutcome::HomeRun;
      }
      int base = d.bases_after[0] ? 1 : d.bases_after[1] ? 2 : 3;
      *total_bases = base;
      return base == 1 ? PaOutcome::Single : base == 2 ? PaOutcome::Double : PaOutcome::Triple;
    }
    return PaOutcome::InPlayOut;
  }
  if (d.outs_gained == 0) return PaOutcome::Walk;
  if (final_pitch.state.strikes == 2) return PaOutcome::Strikeout;
  return PaOutcome::Truncated;
}

}  // namespace

int Corpus::pitch_type_id(const std::string& t) const {
  auto it = std::lower_bound(pitch_types.begin(), pitch_types.end(), t);
  if (it == pitch_types.end() || *it != t)
    throw IdOutOfRange("unknown pitch type: '" + t + "'");
  return static_cast<int>(it - pitch_types.begin());
}

int Corpus::stadium_dense_id(std::int64_t stadium) const {
  auto it = std::lower_bound(stadiums.begin(), stadiums.end(), stadium);
  if (it == stadiums.end() || *it != stadium)
    throw IdOutOfRange("unknown stadium id: " + std::to_string(stadium));
  return static_cast<int>(it - stadiums.begin());
}

const GameInfo* Corpus::find_game(std::int64_t game_pk) const {
  auto it = std::lower_bound(games.begin(), games.end(), game_pk,
                             [](const GameInfo& g, std::int64_t pk) { return g.game_pk < pk; });
  if (it == games.end() || it->game_pk != game_pk) return nullptr;
  return &*it;
}

int Corpus::season_of(std::int64_t game_pk) const {
  const GameInfo* g = find_game(game_pk);
  if (g == nullptr) throw Error("unknown game_pk: " + std::to_string(game_pk));
  return g->season;
}

Corpus build_corpus(std::vector<PitchEvent> events, std::vector<GameInfo> games,
                    std::vector<PlayerInfo> players, DeltaVocabulary vocab,
                    std::vector<RowIssue> carried_issues) {
  Corpus c;
  c.games = std::move(games);
  c.players = std::move(players);
  c.vocab = std::move(vocab);
  c.issues = std::move(carried_issues);
  std::sort(c.games.begin(), c.games.end(),
            [](const GameInfo& a, const GameInfo& b) { return a.game_pk < b.game_pk; });

  std::stable_sort(events.begin(), events.end(), [](const PitchEvent& a, const PitchEvent& b) {
    if (a.game_pk != b.game_pk) return a.game_pk < b.game_pk;
    if (a.ab_number != b.ab_number) return a.ab_number < b.ab_number;
    return a.pitch_number < b.pitch_number;
  });

  // drop exact key duplicates
  {
    std::vector<PitchEvent> unique;
    unique.reserve(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (i > 0 && events[i].game_pk == events[i - 1].game_pk &&
          events[i].ab_number == events[i - 1].ab_number &&
          events[i].pitch_number == events[i - 1].pitch_number) {
        c.issues.push_back({event_key(events[i]), "duplicate (game, at-bat, pitch) key"});
        continue;
      }
      unique.push_back(std::move(events[i]));
    }
    events = std::move(unique);
  }

  // replay game by game
  std::size_t i = 0;
  while (i < events.size()) {
    std::size_t begin = i;
    std::int64_t pk = events[begin].game_pk;
    while (i < events.size() && events[i].game_pk == pk) ++i;
    std::size_t end = i;

    const GameInfo* gi = c.find_game(pk);
    if (gi == nullptr) {
      c.issues.push_back({std::to_string(pk), "game missing from games.csv; dropped"});
      continue;
    }

    const PitchEvent& first = events[begin];
    GameState fresh;
    if (first.inning != 1 || first.half != Half::Top || !(first.state == fresh) ||
        first.ab_number != 1 || first.pitch_number != 1) {
      c.issues.push_back({event_key(first), "game does not start from a fresh state; dropped"});
      continue;
    }

    std::size_t kept = begin;  // events [begin, kept) have verified deltas
    std::vector<GamestateDelta> deltas;
    deltas.reserve(end - begin);
    for (std::size_t j = begin; j < end; ++j) {
      const PitchEvent& cur = events[j];
      const PitchEvent* nxt = j + 1 < end ? &events[j + 1] : nullptr;
      bool same_half = nxt != nullptr && nxt->inning == cur.inning && nxt->half == cur.half;
      try {
        GameState after;
        bool ended;
        if (same_half) {
          if (nxt->ab_number == cur.ab_number) {
            if (nxt->pitch_number != cur.pitch_number + 1)
              throw InconsistentStates("gap in pitch numbering");
            ended = false;
          } else if (nxt->ab_number == cur.ab_number + 1) {
            if (nxt->pitch_number != 1)
              throw InconsistentStates("new at-bat does not start at pitch 1");
            ended = true;
          } else {
            throw InconsistentStates("gap in at-bat numbering");
          }
          after = nxt->state;
        } else {
          // this pitch ended the half-inning
          ended = true;
          int batting_final;
          if (nxt != nullptr) {
            bool ok_flip = nxt->inning == cur.inning && cur.half == Half::Top &&
                           nxt->half == Half::Bottom;
            bool ok_next = nxt->inning == cur.inning + 1 && cur.half == Half::Bottom &&
                           nxt->half == Half::Top;
            if (!ok_flip && !ok_next) throw InconsistentStates("half-innings out of order");
            if (nxt->ab_number != cur.ab_number + 1 || nxt->pitch_number != 1)
              throw InconsistentStates("at-bat numbering breaks across the half-inning");
            GameState empty_start;
            empty_start.batting_score = nxt->state.batting_score;
            empty_start.fielding_score = nxt->state.fielding_score;
            if (!(nxt->state == empty_start))
              throw InconsistentStates("next half-inning does not start from a fresh state");
            if (nxt->state.batting_score != cur.state.fielding_score)
              throw InconsistentStates("scores do not swap across the half-inning");
            batting_final = nxt->state.fielding_score;
          } else {
            batting_final = cur.half == Half::Top ? gi->final_away_score : gi->final_home_score;
            int fielding_final =
                cur.half == Half::Top ? gi->final_home_score : gi->final_away_score;
            if (cur.state.fielding_score != fielding_final)
              throw InconsistentStates("fielding score disagrees with the game final");
          }
          after = GameState{};
          after.outs = 3;
          after.batting_score = batting_final;
          after.fielding_score = cur.state.fielding_score;
        }
        deltas.push_back(gamestate::compute_delta(cur.state, after, ended));
        int id = c.vocab.find(deltas.back());
        if (id < 0)
          throw InconsistentStates("delta " + deltas.back().token() + " is not in the vocabulary");
        kept = j + 1;
      } catch (const Error& err) {
        c.issues.push_back({event_key(cur),
                            std::string(err.what()) + "; rest of the game dropped"});
        break;
      }
    }

    // summarize the surviving prefix into at-bats
    std::size_t out_base = c.events.size();
    for (std::size_t j = begin; j < kept; ++j) {
      c.events.push_back(std::move(events[j]));
      c.deltas.push_back(deltas[j - begin]);
      c.delta_ids.push_back(c.vocab.id(deltas[j - begin]));
    }
    std::size_t j = out_base;
    while (j < c.events.size()) {
      std::size_t ab_start = j;
      int ab = c.events[j].ab_number;
      while (j < c.events.size() && c.events[j].ab_number == ab) ++j;
      AtBat a;
      a.game_pk = pk;
      a.ab_number = ab;
      a.batter_id = c.events[ab_start].batter_id;
      a.pitcher_id = c.events[ab_start].pitcher_id;
      a.season = gi->season;
      a.first_event = ab_start;
      a.n_pitches = static_cast<int>(j - ab_start);
      for (std::size_t k = ab_start; k < j; ++k) {
        a.outs_recorded += c.deltas[k].outs_gained;
        a.runs_scored += c.deltas[k].runs_scored;
      }
      a.outcome = classify(c.events[j - 1], c.deltas[j - 1], &a.total_bases);
      c.atbats.push_back(a);
    }
  }

  for (std::size_t a = 0; a < c.atbats.size(); ++a) {
    c.batter_atbats[c.atbats[a].batter_id].push_back(a);
    c.pitcher_atbats[c.atbats[a].pitcher_id].push_back(a);
  }

  {
    std::set<std::string> types;
    std::set<std::int64_t> stadiums;
    for (const PitchEvent& e : c.events) {
      types.insert(e.pitch_type);
      stadiums.insert(e.stadium_id);
    }
    c.pitch_types.assign(types.begin(), types.end());
    c.stadiums.assign(stadiums.begin(), stadiums.end());
  }
  return c;
}

Corpus load_corpus_dir(const std::filesystem::path& dir) {
  std::ifstream events_in(dir / "events.csv");
  if (!events_in) throw Error("missing events.csv in " + dir.string());
  ParseResult parsed = parse_pitch_csv(events_in);

  std::ifstream games_in(dir / "games.csv");
  if (!games_in) throw Error("missing games.csv in " + dir.string());
  std::vector<GameInfo> games = parse_games_csv(games_in);

  std::vector<PlayerInfo> players;
  if (std::filesystem::exists(dir / "players.csv")) {
    std::ifstream players_in(dir / "players.csv");
    players = parse_players_csv(players_in);
  }

  DeltaVocabulary vocab = std::filesystem::exists(dir / "vocab.txt")
                              ? DeltaVocabulary::load(dir / "vocab.txt")
                              : DeltaVocabulary::enumerate();

  return build_corpus(std::move(parsed.events), std::move(games), std::move(players),
                      std::move(vocab), std::move(parsed.issues));
}

}  // namespace playerform::ingest
