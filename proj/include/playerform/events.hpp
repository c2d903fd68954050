#pragma once

// Row-level types shared by the simulator (which writes them) and ingest
// (which owns their CSV schema).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "playerform/gamestate.hpp"

namespace playerform {

enum class Half { Top = 0, Bottom = 1 };

inline const char* half_name(Half h) { return h == Half::Top ? "top" : "bottom"; }

// One pitch. The game state fields are the PRE-pitch snapshot from the
// batting team's perspective. Batted-ball fields are present only when the
// ball was put in play.
struct PitchEvent {
  std::int64_t game_pk = 0;
  int ab_number = 0;      // unique within the game, increasing
  int pitch_number = 0;   // 1-based within the at-bat
  std::int64_t batter_id = 0;
  std::int64_t pitcher_id = 0;
  std::int64_t stadium_id = 0;
  std::string pitch_type;       // e.g. "FF"
  double release_speed = 0.0;   // mph
  double plate_x = 0.0;         // feet from plate center
  double plate_z = 0.0;         // feet above ground
  double spin_rate = 0.0;       // rpm
  std::optional<double> launch_speed;
  std::optional<double> launch_angle;
  std::optional<double> hit_distance;
  gamestate::GameState state;   // pre-pitch
  int inning = 1;
  Half half = Half::Top;
};

struct GameInfo {
  std::int64_t game_pk = 0;
  int season = 0;
  std::int64_t stadium_id = 0;
  std::int64_t away_team = 0;
  std::int64_t home_team = 0;
  int final_away_score = 0;
  int final_home_score = 0;
};

enum class Role { Batter = 0, Pitcher = 1 };

inline const char* role_name(Role r) { return r == Role::Batter ? "batter" : "pitcher"; }

struct PlayerInfo {
  std::int64_t player_id = 0;
  std::int64_t team = 0;
  Role role = Role::Batter;
  std::string archetype;
};

}  // namespace playerform
