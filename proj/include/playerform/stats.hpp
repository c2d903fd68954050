#pragma once

// Supplemental statistics over replayed at-bats, plus the PCA used by the
// statistics-only clustering baseline.
//
// A spec file declares eleven blocks in a fixed order:
//   batter  career, season, last15, this_game
//   pitcher career, season, last15, this_game
//   matchup career, season, this_game          (matchup has no last15)
// Each block lists named statistics and may pad itself with `reserve N`
// placeholder slots that always carry value 0 / presence 0. The assembled
// supplemental vector is the concatenation of all blocks; its length is a
// constant of the spec.
//
// Temporal semantics at an as_of = (game_pk, ab_number) anchor:
//   career    every at-bat strictly before the anchor
//   season    prior at-bats in the anchor game's season
//   last15    the 15 most recent prior at-bat appearances (truncated
//             appearances count toward the window)
//   this_game prior at-bats in the anchor game only
// Ratios with a zero denominator report value 0 with presence 0.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "playerform/ingest.hpp"

namespace playerform::stats {

enum class Entity : int { Batter = 0, Pitcher = 1, Matchup = 2 };
enum class Scale : int { Career = 0, Season = 1, Last15 = 2, ThisGame = 3 };

const char* entity_name(Entity e);
const char* scale_name(Scale s);

struct StatBlock {
  Entity entity = Entity::Batter;
  Scale scale = Scale::Career;
  std::vector<std::string> stats;
  int reserved = 0;  // trailing always-absent slots
  int size() const { return static_cast<int>(stats.size()) + reserved; }
  friend bool operator==(const StatBlock&, const StatBlock&) = default;
};

class StatSpec {
 public:
  static constexpr int kNumBlocks = 11;

  static StatSpec desk_default();
  static StatSpec parse(const std::string& text);  // throws ParseError
  static StatSpec load(const std::filesystem::path& path);
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  const std::vector<StatBlock>& blocks() const { return blocks_; }
  int total_size() const;
  int block_offset(int block_index) const;  // first slot of the block
  const StatBlock& block(Entity e, Scale s) const;  // throws Error if absent

  friend bool operator==(const StatSpec&, const StatSpec&) = default;

 private:
  void validate() const;  // block order, known stats, matchup scales
  std::vector<StatBlock> blocks_;
};

// Counting totals over a range of at-bats. Outcome-dependent fields move
// only for at-bats that count as plate appearances; outs and runs also
// accumulate from truncated appearances.
struct Tally {
  int pa = 0;
  int ab = 0;  // plate appearances minus walks
  int hits = 0;
  int walks = 0;
  int strikeouts = 0;
  int home_runs = 0;
  int total_bases = 0;
  int runs = 0;
  int outs = 0;
  Tally& operator+=(const Tally& o);
  Tally operator-(const Tally& o) const;
};

Tally tally_atbat(const ingest::AtBat& a);

// Registry of computable statistics. Any name works for any entity.
//   AVG hits/ab           OBP (hits+walks)/pa   SLG total_bases/ab
//   OPS OBP+SLG           K_RATE k/pa           BB_RATE bb/pa
//   HR_RATE hr/pa         RUNS_PER_AB runs/pa   WHIP 3*(hits+walks)/outs
//   OPP_AVG hits/ab       AB_COUNT pa
// Returns presence; absent statistics report *value = 0.
bool eval_stat(const std::string& name, const Tally& t, double* value);
bool known_stat(const std::string& name);

struct AsOf {
  std::int64_t game_pk = 0;
  int ab_number = 0;
};

struct StatValues {
  std::vector<double> values;
  std::vector<std::uint8_t> present;
};

// Raw (unstandardized) or standardized supplemental vector.
struct SupplementalVector {
  std::vector<double> values;
  std::vector<std::uint8_t> present;
};

// Frozen standardization constants: per supplemental slot and per pitch
// physics channel (release_speed, plate_x, plate_z, spin_rate, launch_speed,
// launch_angle, hit_distance), computed present-only on the training split.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stdev;
  static constexpr std::size_t kPhysicsChannels = 7;
  std::array<double, kPhysicsChannels> phys_mean{};
  std::array<double, kPhysicsChannels> phys_std{};

  void save(const std::filesystem::path& path) const;
  static Standardizer load(const std::filesystem::path& path);
};

class StatsEngine {
 public:
  StatsEngine(const ingest::Corpus& corpus, StatSpec spec);

  const StatSpec& spec() const { return spec_; }
  const ingest::Corpus& corpus() const { return *corpus_; }

  // One block of statistics for one player. Reserved slots come back as
  // value 0 / presence 0. Throws UnknownPlayer for a player with no
  // appearances in the role.
  StatValues compute_split_stats(std::int64_t player_id, Role role, AsOf as_of,
                                 Scale scale) const;

  // Matchup block for a batter/pitcher pair; an unseen pair is all-absent.
  StatValues matchup_stats(std::int64_t batter_id, std::int64_t pitcher_id, AsOf as_of,
                           Scale scale) const;

  SupplementalVector assemble_raw(std::int64_t batter_id, std::int64_t pitcher_id,
                                  AsOf as_of) const;
  SupplementalVector assemble_supplemental(std::int64_t batter_id, std::int64_t pitcher_id,
                                           AsOf as_of, const Standardizer& std) const;

 private:
  struct History {
    std::vector<std::size_t> idxs;   // into corpus atbats, chronological
    std::vector<Tally> prefix;       // prefix[i] = totals of idxs[0..i)
  };

  History build_history(const std::vector<std::size_t>& idxs) const;
  std::size_t pos_before(const History& h, AsOf as_of) const;
  std::size_t scale_start(const History& h, std::size_t pos, Scale scale, AsOf as_of) const;
  StatValues eval_block(const StatBlock& b, const Tally& t) const;
  const History* find_matchup(std::int64_t batter_id, std::int64_t pitcher_id) const;

  const ingest::Corpus* corpus_;
  StatSpec spec_;
  std::map<std::int64_t, History> batters_;
  std::map<std::int64_t, History> pitchers_;
  std::map<std::pair<std::int64_t, std::int64_t>, History> matchups_;
};

// Slot indices that survive into the statistics-only clustering baseline:
// everything outside the this_game blocks.
std::vector<int> baseline_slots(const StatSpec& spec);

// Training split = the first games of the corpus in game_pk order.
std::size_t default_train_games(std::size_t n_games);  // floor(0.8n), min 1

// Present-only mean/std over one assembled vector per training at-bat, plus
// physics channel statistics over training pitches. Slots that are never
// present keep mean 0 / std 1.
Standardizer fit_standardizer(const StatsEngine& engine, std::size_t n_train_games);

// ---------------------------------------------------------------------------
// PCA on row-sample matrices. Components are rows, orthonormal, ordered by
// explained variance (non-increasing). Signs are canonical: each component's
// largest-magnitude entry is positive. RankDeficient when more components
// are requested than min(dim, samples-1) can support; a rank-deficient
// covariance inside that limit is fine and pads with zero-variance
// directions.
// ---------------------------------------------------------------------------

struct PcaModel {
  Eigen::VectorXd mean;                // dim
  Eigen::MatrixXd components;          // n_components x dim
  Eigen::VectorXd explained_variance;  // n_components, non-increasing

  int dim() const { return static_cast<int>(mean.size()); }
  int n_components() const { return static_cast<int>(components.rows()); }

  // CSV matrices plus a manifest in a directory
  void save(const std::filesystem::path& dir) const;
  static PcaModel load(const std::filesystem::path& dir);
};

PcaModel pca_fit(const Eigen::MatrixXd& samples, int n_components);
Eigen::VectorXd pca_transform(const PcaModel& m, const Eigen::VectorXd& x);
Eigen::MatrixXd pca_transform_all(const PcaModel& m, const Eigen::MatrixXd& samples);

}  // namespace playerform::stats
