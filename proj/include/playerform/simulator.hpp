#pragma once

// Synthetic league simulator. Produces pitch-by-pitch games that are legal
// under the transition rules by construction, with archetype-driven outcome
// tendencies so downstream models have structure to learn.
//
// Determinism: every game draws from its own stream seeded with
// mix(config.seed, game index), so a corpus is reproducible byte for byte.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "playerform/events.hpp"

namespace playerform::gamestate {

// terminal at-bat outcomes the sampler chooses among
enum class Outcome : int {
  Strikeout = 0,
  Walk = 1,
  HitByPitch = 2,
  Single = 3,
  Double = 4,
  Triple = 5,
  HomeRun = 6,
  InPlayOut = 7,
};
inline constexpr int kNumOutcomes = 8;

struct BatterArchetype {
  std::string name;
  // probabilities over Outcome order above; normalized at use
  std::array<double, kNumOutcomes> outcome_probs{};
  double launch_speed_shift = 0.0;  // mph added to batted-ball exit speed
  double mid_event_rate = 0.02;     // per-pitch chance of a baserunning event
};

struct PitcherArchetype {
  std::string name;
  // multiplies the batter's outcome probabilities elementwise
  std::array<double, kNumOutcomes> outcome_mult{};
  std::array<double, 5> pitch_type_probs{};  // FF, SI, SL, CH, CU
  double velocity_shift = 0.0;
};

struct SimConfig {
  std::uint64_t seed = 1;
  int n_games = 10;
  int n_teams = 4;        // >= 2
  int innings = 9;
  int batters_per_team = 9;
  int pitchers_per_team = 2;
  int games_per_season = 50;
  std::vector<BatterArchetype> batter_archetypes;    // empty -> defaults
  std::vector<PitcherArchetype> pitcher_archetypes;  // empty -> defaults

  void validate() const;  // throws Error on nonsense
};

std::vector<BatterArchetype> default_batter_archetypes();
std::vector<PitcherArchetype> default_pitcher_archetypes();

struct SimResult {
  std::vector<PitchEvent> events;   // game, at-bat, pitch order
  std::vector<GameInfo> games;      // ascending game_pk
  std::vector<PlayerInfo> players;  // ascending player_id
};

SimResult simulate_corpus(const SimConfig& config);

// Writes events.csv, games.csv, players.csv into `dir` (creating it).
void write_corpus_csv(const SimResult& result, const std::filesystem::path& dir);

}  // namespace playerform::gamestate
