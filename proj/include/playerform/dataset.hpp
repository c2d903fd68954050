#pragma once

// Windows, paired views, token masking, and fixed-shape batch assembly.
//
// A window is a run of consecutive at-bat appearances for one player:
// 20 for batters, 100 for pitchers, taken at a configurable stride along
// the player's appearance list. Each window yields two overlapping views:
// batter views cover window at-bats [0,15) and [5,20); pitcher views cover
// [0,90) and [10,100).
//
// A view is tensorized pitch by pitch. Slot 0 is a dedicated [CLS] slot;
// every following slot carries one pitch: its delta token id, dense stadium
// and pitch-type ids, a 5x5 plate-zone id, the at-bat ordinal within the
// view, the pitch ordinal within its at-bat, seven standardized physics
// channels with presence flags, and the standardized supplemental vector
// (values then presence) shared by the at-bat's pitches.
//
// assemble_batch stacks 2N masked views padded to max_len. Views are paired
// (0,1),(2,3),...; the pairing map is a fixed-point-free involution. A
// window whose view exceeds max_len is skipped and reported; an all-skipped
// batch raises SequenceOverflow.

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "playerform/common.hpp"
#include "playerform/stats.hpp"

namespace playerform::dataset {

struct WindowSpec {
  int window_len;
  int view_len;
  int default_stride;
};

WindowSpec window_spec(Role role);  // batter {20, 15, 5}; pitcher {100, 90, 10}

struct FormWindow {
  std::int64_t player_id = 0;
  Role role = Role::Batter;
  std::vector<std::size_t> atbats;  // corpus at-bat indices, chronological
};

// Windows at starts 0, stride, 2*stride, ...; a trailing partial window is
// dropped. Throws UnknownPlayer / InsufficientHistory.
std::vector<FormWindow> extract_windows(const ingest::Corpus& corpus, std::int64_t player_id,
                                        Role role, int stride);

// Windows for every player with enough history, ascending player id.
std::vector<FormWindow> extract_all_windows(const ingest::Corpus& corpus, Role role, int stride);

// 5x5 plate grid over x in [-1.5, 1.5], z in [1.0, 4.0]; outside locations
// clamp to the edge cells. id = row*5 + col.
int plate_zone(double plate_x, double plate_z);
inline constexpr int kPlateZones = 25;
inline constexpr int kMaxPitchOrdinal = 31;  // deeper pitches clamp here
inline constexpr std::size_t kPhysicsChannels = stats::Standardizer::kPhysicsChannels;

struct FormView {
  std::int64_t player_id = 0;
  Role role = Role::Batter;
  std::vector<std::size_t> atbats;  // the view's at-bats
  int suppl_dim = 0;                // per-slot supplemental width (values + presence)

  // slot arrays; slot 0 is [CLS]
  std::vector<int> token_ids;
  std::vector<int> stadium_ids;
  std::vector<int> pitch_type_ids;
  std::vector<int> zone_ids;
  std::vector<int> ab_ordinals;
  std::vector<int> pitch_ordinals;
  std::vector<float> physics;       // [slot][7]
  std::vector<float> physics_mask;  // [slot][7]
  std::vector<float> suppl;         // [slot][suppl_dim]

  int length() const { return static_cast<int>(token_ids.size()); }
};

// which = 0 or 1 selects the early or late view of the window.
FormView build_view(const ingest::Corpus& corpus, const stats::StatsEngine& engine,
                    const stats::Standardizer& st, const FormWindow& window, int which);
std::pair<FormView, FormView> make_views(const ingest::Corpus& corpus,
                                         const stats::StatsEngine& engine,
                                         const stats::Standardizer& st,
                                         const FormWindow& window);

// Independent Bernoulli(rate) over the view's token slots (never the [CLS]
// slot); redrawn until at least one slot is masked. rate in (0, 1].
struct MaskResult {
  std::vector<int> positions;  // slot indices, ascending
  std::vector<int> targets;    // original delta ids at those slots
};
MaskResult mask_view(const FormView& view, double rate, Rng& rng);

struct MaskedBatch {
  Role role = Role::Batter;
  int n_views = 0;
  int max_len = 0;
  int suppl_dim = 0;

  // [view][slot] row-major
  std::vector<int> token_ids;
  std::vector<std::uint8_t> attn;  // 1 = real slot
  std::vector<int> stadium_ids;
  std::vector<int> pitch_type_ids;
  std::vector<int> zone_ids;
  std::vector<int> ab_ordinals;
  std::vector<int> pitch_ordinals;
  std::vector<float> physics;       // [view][slot][7]
  std::vector<float> physics_mask;  // [view][slot][7]
  std::vector<float> suppl;         // [view][slot][suppl_dim]

  std::vector<std::size_t> mask_positions;  // flat view*max_len + slot, ascending
  std::vector<int> mask_targets;            // delta ids before masking
  std::vector<int> pairing;                 // j(i); j(j(i)) = i, j(i) != i

  std::vector<std::int64_t> skipped_players;  // windows dropped for length

  std::size_t flat(int view, int slot) const {
    return static_cast<std::size_t>(view) * static_cast<std::size_t>(max_len) +
           static_cast<std::size_t>(slot);
  }
};

MaskedBatch assemble_batch(const ingest::Corpus& corpus, const stats::StatsEngine& engine,
                           const stats::Standardizer& st, const std::vector<FormWindow>& windows,
                           double mask_rate, int max_len, Rng& rng);

// One CSV row per window: player, role, per-player window ordinal, and the
// (game, at-bat) span it covers.
void write_window_manifest(const std::vector<FormWindow>& windows, const ingest::Corpus& corpus,
                           const std::filesystem::path& path);

}  // namespace playerform::dataset
