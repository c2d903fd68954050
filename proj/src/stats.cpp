#include "playerform/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "playerform/csv.hpp"

namespace playerform::stats {

const char* entity_name(Entity e) {
  switch (e) {
    case Entity::Batter: return "batter";
    case Entity::Pitcher: return "pitcher";
    case Entity::Matchup: return "matchup";
  }
  return "unknown";
}

const char* scale_name(Scale s) {
  switch (s) {
    case Scale::Career: return "career";
    case Scale::Season: return "season";
    case Scale::Last15: return "last15";
    case Scale::ThisGame: return "this_game";
  }
  return "unknown";
}

namespace {

bool parse_entity(const std::string& s, Entity* e) {
  if (s == "batter") *e = Entity::Batter;
  else if (s == "pitcher") *e = Entity::Pitcher;
  else if (s == "matchup") *e = Entity::Matchup;
  else return false;
  return true;
}

bool parse_scale(const std::string& s, Scale* out) {
  if (s == "career") *out = Scale::Career;
  else if (s == "season") *out = Scale::Season;
  else if (s == "last15") *out = Scale::Last15;
  else if (s == "this_game") *out = Scale::ThisGame;
  else return false;
  return true;
}

// canonical block order for the assembled vector
const std::vector<std::pair<Entity, Scale>>& canonical_blocks() {
  static const std::vector<std::pair<Entity, Scale>> order = {
      {Entity::Batter, Scale::Career},   {Entity::Batter, Scale::Season},
      {Entity::Batter, Scale::Last15},   {Entity::Batter, Scale::ThisGame},
      {Entity::Pitcher, Scale::Career},  {Entity::Pitcher, Scale::Season},
      {Entity::Pitcher, Scale::Last15},  {Entity::Pitcher, Scale::ThisGame},
      {Entity::Matchup, Scale::Career},  {Entity::Matchup, Scale::Season},
      {Entity::Matchup, Scale::ThisGame}};
  return order;
}

std::string trimmed(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool ratio(double num, int den, double* v) {
  if (den <= 0) {
    *v = 0.0;
    return false;
  }
  *v = num / static_cast<double>(den);
  return true;
}

}  // namespace

bool eval_stat(const std::string& name, const Tally& t, double* value) {
  if (name == "AVG" || name == "OPP_AVG") return ratio(t.hits, t.ab, value);
  if (name == "OBP") return ratio(t.hits + t.walks, t.pa, value);
  if (name == "SLG") return ratio(t.total_bases, t.ab, value);
  if (name == "OPS") {
    double obp = 0.0, slg = 0.0;
    if (!ratio(t.hits + t.walks, t.pa, &obp) || !ratio(t.total_bases, t.ab, &slg)) {
      *value = 0.0;
      return false;
    }
    *value = obp + slg;
    return true;
  }
  if (name == "K_RATE") return ratio(t.strikeouts, t.pa, value);
  if (name == "BB_RATE") return ratio(t.walks, t.pa, value);
  if (name == "HR_RATE") return ratio(t.home_runs, t.pa, value);
  if (name == "RUNS_PER_AB") return ratio(t.runs, t.pa, value);
  if (name == "WHIP") return ratio(3.0 * (t.hits + t.walks), t.outs, value);
  if (name == "AB_COUNT") {
    *value = static_cast<double>(t.pa);
    return t.pa > 0;
  }
  throw Error("unknown statistic: " + name);
}

bool known_stat(const std::string& name) {
  static const std::vector<std::string> names = {"AVG",     "OPP_AVG", "OBP",         "SLG",
                                                 "OPS",     "K_RATE",  "BB_RATE",     "HR_RATE",
                                                 "RUNS_PER_AB", "WHIP", "AB_COUNT"};
  return std::find(names.begin(), names.end(), name) != names.end();
}

// ---------------------------------------------------------------------------
// StatSpec
// ---------------------------------------------------------------------------

void StatSpec::validate() const {
  const auto& order = canonical_blocks();
  if (blocks_.size() != order.size())
    throw ParseError("spec must declare exactly " + std::to_string(order.size()) + " blocks, got " +
                     std::to_string(blocks_.size()));
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const StatBlock& b = blocks_[i];
    if (b.entity != order[i].first || b.scale != order[i].second)
      throw ParseError(std::string("block ") + std::to_string(i + 1) + " must be '" +
                       entity_name(order[i].first) + " " + scale_name(order[i].second) +
                       "', got '" + entity_name(b.entity) + " " + scale_name(b.scale) + "'");
    if (b.size() < 1) throw ParseError("empty block: " + std::string(entity_name(b.entity)) + " " +
                                       scale_name(b.scale));
    if (b.reserved < 0) throw ParseError("negative reserve");
    for (const std::string& s : b.stats)
      if (!known_stat(s)) throw ParseError("unknown statistic: " + s);
  }
}

StatSpec StatSpec::desk_default() {
  const std::vector<std::string> bat = {"AVG", "OBP", "SLG", "OPS", "K_RATE", "BB_RATE"};
  const std::vector<std::string> pit = {"RUNS_PER_AB", "WHIP",    "K_RATE",
                                        "BB_RATE",     "HR_RATE", "OPP_AVG"};
  const std::vector<std::string> mat = {"AB_COUNT", "AVG", "OPS"};
  StatSpec s;
  for (auto [entity, scale] : canonical_blocks()) {
    StatBlock b;
    b.entity = entity;
    b.scale = scale;
    b.stats = entity == Entity::Batter ? bat : entity == Entity::Pitcher ? pit : mat;
    s.blocks_.push_back(std::move(b));
  }
  s.validate();
  return s;
}

StatSpec StatSpec::parse(const std::string& text) {
  StatSpec out;
  std::istringstream in(text);
  std::string line;
  bool saw_version = false;
  while (std::getline(in, line)) {
    line = trimmed(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> parts = split(line, ' ');
    parts.erase(std::remove(parts.begin(), parts.end(), std::string()), parts.end());
    if (!saw_version) {
      if (parts.size() != 2 || parts[0] != "statspec" || parts[1] != "1")
        throw ParseError("spec must start with 'statspec 1'");
      saw_version = true;
      continue;
    }
    if (parts[0] == "block") {
      if (parts.size() != 3) throw ParseError("block needs an entity and a scale: " + line);
      StatBlock b;
      if (!parse_entity(parts[1], &b.entity)) throw ParseError("unknown entity: " + parts[1]);
      if (!parse_scale(parts[2], &b.scale)) throw ParseError("unknown scale: " + parts[2]);
      out.blocks_.push_back(std::move(b));
    } else if (parts[0] == "stat") {
      if (parts.size() != 2) throw ParseError("stat needs one name: " + line);
      if (out.blocks_.empty()) throw ParseError("stat before any block");
      if (out.blocks_.back().reserved > 0) throw ParseError("stat after reserve");
      out.blocks_.back().stats.push_back(parts[1]);
    } else if (parts[0] == "reserve") {
      if (parts.size() != 2) throw ParseError("reserve needs a count: " + line);
      if (out.blocks_.empty()) throw ParseError("reserve before any block");
      long long n = parse_int(parts[1]);
      if (n < 1) throw ParseError("reserve count must be >= 1");
      out.blocks_.back().reserved += static_cast<int>(n);
    } else {
      throw ParseError("unknown spec directive: " + parts[0]);
    }
  }
  if (!saw_version) throw ParseError("empty spec");
  out.validate();
  return out;
}

StatSpec StatSpec::load(const std::filesystem::path& path) {
  return parse(read_text_file(path));
}

std::string StatSpec::serialize() const {
  std::string out = "statspec 1\n";
  for (const StatBlock& b : blocks_) {
    out += std::string("block ") + entity_name(b.entity) + " " + scale_name(b.scale) + "\n";
    for (const std::string& s : b.stats) out += "stat " + s + "\n";
    if (b.reserved > 0) out += "reserve " + std::to_string(b.reserved) + "\n";
  }
  return out;
}

void StatSpec::save(const std::filesystem::path& path) const {
  write_text_file_atomic(path, serialize());
}

int StatSpec::total_size() const {
  int n = 0;
  for (const StatBlock& b : blocks_) n += b.size();
  return n;
}

int StatSpec::block_offset(int block_index) const {
  int n = 0;
  for (int i = 0; i < block_index; ++i) n += blocks_[static_cast<std::size_t>(i)].size();
  return n;
}

const StatBlock& StatSpec::block(Entity e, Scale s) const {
  for (const StatBlock& b : blocks_)
    if (b.entity == e && b.scale == s) return b;
  throw Error(std::string("no block for ") + entity_name(e) + " " + scale_name(s));
}

// ---------------------------------------------------------------------------
// Tallies
// ---------------------------------------------------------------------------

Tally& Tally::operator+=(const Tally& o) {
  pa += o.pa;
  ab += o.ab;
  hits += o.hits;
  walks += o.walks;
  strikeouts += o.strikeouts;
  home_runs += o.home_runs;
  total_bases += o.total_bases;
  runs += o.runs;
  outs += o.outs;
  return *this;
}

Tally Tally::operator-(const Tally& o) const {
  Tally t = *this;
  t.pa -= o.pa;
  t.ab -= o.ab;
  t.hits -= o.hits;
  t.walks -= o.walks;
  t.strikeouts -= o.strikeouts;
  t.home_runs -= o.home_runs;
  t.total_bases -= o.total_bases;
  t.runs -= o.runs;
  t.outs -= o.outs;
  return t;
}

Tally tally_atbat(const ingest::AtBat& a) {
  using ingest::PaOutcome;
  Tally t;
  t.runs = a.runs_scored;
  t.outs = a.outs_recorded;
  if (!a.counts_pa()) return t;
  t.pa = 1;
  switch (a.outcome) {
    case PaOutcome::Walk:
      t.walks = 1;
      return t;
    case PaOutcome::Strikeout:
      t.strikeouts = 1;
      break;
    case PaOutcome::HomeRun:
      t.home_runs = 1;
      [[fallthrough]];
    case PaOutcome::Single:
    case PaOutcome::Double:
    case PaOutcome::Triple:
      t.hits = 1;
      t.total_bases = a.total_bases;
      break;
    default:
      break;
  }
  t.ab = 1;
  return t;
}

// ---------------------------------------------------------------------------
// StatsEngine
// ---------------------------------------------------------------------------

StatsEngine::StatsEngine(const ingest::Corpus& corpus, StatSpec spec)
    : corpus_(&corpus), spec_(std::move(spec)) {
  for (const auto& [id, idxs] : corpus.batter_atbats) batters_.emplace(id, build_history(idxs));
  for (const auto& [id, idxs] : corpus.pitcher_atbats) pitchers_.emplace(id, build_history(idxs));
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> pair_idxs;
  for (std::size_t i = 0; i < corpus.atbats.size(); ++i)
    pair_idxs[{corpus.atbats[i].batter_id, corpus.atbats[i].pitcher_id}].push_back(i);
  for (const auto& [key, idxs] : pair_idxs) matchups_.emplace(key, build_history(idxs));
}

StatsEngine::History StatsEngine::build_history(const std::vector<std::size_t>& idxs) const {
  History h;
  h.idxs = idxs;
  h.prefix.resize(idxs.size() + 1);
  for (std::size_t i = 0; i < idxs.size(); ++i) {
    h.prefix[i + 1] = h.prefix[i];
    h.prefix[i + 1] += tally_atbat(corpus_->atbats[idxs[i]]);
  }
  return h;
}

std::size_t StatsEngine::pos_before(const History& h, AsOf as_of) const {
  auto it = std::partition_point(h.idxs.begin(), h.idxs.end(), [&](std::size_t idx) {
    const ingest::AtBat& a = corpus_->atbats[idx];
    if (a.game_pk != as_of.game_pk) return a.game_pk < as_of.game_pk;
    return a.ab_number < as_of.ab_number;
  });
  return static_cast<std::size_t>(it - h.idxs.begin());
}

std::size_t StatsEngine::scale_start(const History& h, std::size_t pos, Scale scale,
                                     AsOf as_of) const {
  switch (scale) {
    case Scale::Career:
      return 0;
    case Scale::Last15:
      return pos >= 15 ? pos - 15 : 0;
    case Scale::Season: {
      int season = corpus_->season_of(as_of.game_pk);
      auto it = std::partition_point(
          h.idxs.begin(), h.idxs.begin() + static_cast<std::ptrdiff_t>(pos),
          [&](std::size_t idx) { return corpus_->atbats[idx].season < season; });
      return static_cast<std::size_t>(it - h.idxs.begin());
    }
    case Scale::ThisGame: {
      auto it = std::partition_point(
          h.idxs.begin(), h.idxs.begin() + static_cast<std::ptrdiff_t>(pos),
          [&](std::size_t idx) { return corpus_->atbats[idx].game_pk < as_of.game_pk; });
      return static_cast<std::size_t>(it - h.idxs.begin());
    }
  }
  throw Error("bad scale");
}

StatValues StatsEngine::eval_block(const StatBlock& b, const Tally& t) const {
  StatValues out;
  out.values.reserve(static_cast<std::size_t>(b.size()));
  out.present.reserve(static_cast<std::size_t>(b.size()));
  for (const std::string& name : b.stats) {
    double v = 0.0;
    bool p = eval_stat(name, t, &v);
    out.values.push_back(v);
    out.present.push_back(p ? 1 : 0);
  }
  for (int i = 0; i < b.reserved; ++i) {
    out.values.push_back(0.0);
    out.present.push_back(0);
  }
  return out;
}

StatValues StatsEngine::compute_split_stats(std::int64_t player_id, Role role, AsOf as_of,
                                            Scale scale) const {
  const auto& table = role == Role::Batter ? batters_ : pitchers_;
  auto it = table.find(player_id);
  if (it == table.end())
    throw UnknownPlayer(std::string(role_name(role)) + " " + std::to_string(player_id) +
                        " has no appearances");
  const History& h = it->second;
  const StatBlock& b =
      spec_.block(role == Role::Batter ? Entity::Batter : Entity::Pitcher, scale);
  std::size_t pos = pos_before(h, as_of);
  std::size_t start = scale_start(h, pos, scale, as_of);
  return eval_block(b, h.prefix[pos] - h.prefix[start]);
}

const StatsEngine::History* StatsEngine::find_matchup(std::int64_t batter_id,
                                                      std::int64_t pitcher_id) const {
  auto it = matchups_.find({batter_id, pitcher_id});
  return it == matchups_.end() ? nullptr : &it->second;
}

StatValues StatsEngine::matchup_stats(std::int64_t batter_id, std::int64_t pitcher_id, AsOf as_of,
                                      Scale scale) const {
  if (scale == Scale::Last15) throw Error("matchup statistics have no last15 scale");
  const StatBlock& b = spec_.block(Entity::Matchup, scale);
  const History* h = find_matchup(batter_id, pitcher_id);
  if (h == nullptr) return eval_block(b, Tally{});
  std::size_t pos = pos_before(*h, as_of);
  std::size_t start = scale_start(*h, pos, scale, as_of);
  return eval_block(b, h->prefix[pos] - h->prefix[start]);
}

SupplementalVector StatsEngine::assemble_raw(std::int64_t batter_id, std::int64_t pitcher_id,
                                             AsOf as_of) const {
  SupplementalVector out;
  out.values.reserve(static_cast<std::size_t>(spec_.total_size()));
  out.present.reserve(static_cast<std::size_t>(spec_.total_size()));
  for (const StatBlock& b : spec_.blocks()) {
    StatValues sv;
    switch (b.entity) {
      case Entity::Batter:
        sv = compute_split_stats(batter_id, Role::Batter, as_of, b.scale);
        break;
      case Entity::Pitcher:
        sv = compute_split_stats(pitcher_id, Role::Pitcher, as_of, b.scale);
        break;
      case Entity::Matchup:
        sv = matchup_stats(batter_id, pitcher_id, as_of, b.scale);
        break;
    }
    out.values.insert(out.values.end(), sv.values.begin(), sv.values.end());
    out.present.insert(out.present.end(), sv.present.begin(), sv.present.end());
  }
  return out;
}

SupplementalVector StatsEngine::assemble_supplemental(std::int64_t batter_id,
                                                      std::int64_t pitcher_id, AsOf as_of,
                                                      const Standardizer& std_) const {
  SupplementalVector v = assemble_raw(batter_id, pitcher_id, as_of);
  if (std_.mean.size() != v.values.size() || std_.stdev.size() != v.values.size())
    throw ShapeMismatch("standardizer has " + std::to_string(std_.mean.size()) +
                        " slots, spec has " + std::to_string(v.values.size()));
  for (std::size_t i = 0; i < v.values.size(); ++i)
    v.values[i] = v.present[i] ? (v.values[i] - std_.mean[i]) / std_.stdev[i] : 0.0;
  return v;
}

std::vector<int> baseline_slots(const StatSpec& spec) {
  std::vector<int> out;
  int offset = 0;
  for (const StatBlock& b : spec.blocks()) {
    if (b.scale != Scale::ThisGame)
      for (int i = 0; i < b.size(); ++i) out.push_back(offset + i);
    offset += b.size();
  }
  return out;
}

std::size_t default_train_games(std::size_t n_games) {
  return std::max<std::size_t>(1, n_games * 4 / 5);
}

Standardizer fit_standardizer(const StatsEngine& engine, std::size_t n_train_games) {
  const ingest::Corpus& c = engine.corpus();
  if (c.games.empty()) throw EmptyInput("corpus has no games");
  if (n_train_games < 1 || n_train_games > c.games.size())
    throw Error("training split must cover between 1 and " + std::to_string(c.games.size()) +
                " games");
  std::int64_t boundary = c.games[n_train_games - 1].game_pk;

  const std::size_t n = static_cast<std::size_t>(engine.spec().total_size());
  std::vector<double> sum(n, 0.0), sumsq(n, 0.0);
  std::vector<std::int64_t> count(n, 0);
  for (const ingest::AtBat& a : c.atbats) {
    if (a.game_pk > boundary) break;  // atbats are chronological
    SupplementalVector raw =
        engine.assemble_raw(a.batter_id, a.pitcher_id, {a.game_pk, a.ab_number});
    for (std::size_t i = 0; i < n; ++i) {
      if (!raw.present[i]) continue;
      sum[i] += raw.values[i];
      sumsq[i] += raw.values[i] * raw.values[i];
      count[i] += 1;
    }
  }

  Standardizer out;
  out.mean.assign(n, 0.0);
  out.stdev.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (count[i] == 0) continue;
    double m = sum[i] / static_cast<double>(count[i]);
    double var = sumsq[i] / static_cast<double>(count[i]) - m * m;
    double sd = std::sqrt(std::max(var, 0.0));
    out.mean[i] = m;
    out.stdev[i] = sd < 1e-12 ? 1.0 : sd;
  }

  std::array<double, Standardizer::kPhysicsChannels> psum{}, psumsq{};
  std::array<std::int64_t, Standardizer::kPhysicsChannels> pcount{};
  auto add = [&](int ch, double v) {
    psum[static_cast<std::size_t>(ch)] += v;
    psumsq[static_cast<std::size_t>(ch)] += v * v;
    pcount[static_cast<std::size_t>(ch)] += 1;
  };
  for (const PitchEvent& e : c.events) {
    if (e.game_pk > boundary) break;
    add(0, e.release_speed);
    add(1, e.plate_x);
    add(2, e.plate_z);
    add(3, e.spin_rate);
    if (e.launch_speed) add(4, *e.launch_speed);
    if (e.launch_angle) add(5, *e.launch_angle);
    if (e.hit_distance) add(6, *e.hit_distance);
  }
  for (std::size_t ch = 0; ch < Standardizer::kPhysicsChannels; ++ch) {
    if (pcount[ch] == 0) {
      out.phys_mean[ch] = 0.0;
      out.phys_std[ch] = 1.0;
      continue;
    }
    double m = psum[ch] / static_cast<double>(pcount[ch]);
    double var = psumsq[ch] / static_cast<double>(pcount[ch]) - m * m;
    double sd = std::sqrt(std::max(var, 0.0));
    out.phys_mean[ch] = m;
    out.phys_std[ch] = sd < 1e-12 ? 1.0 : sd;
  }
  return out;
}

void Standardizer::save(const std::filesystem::path& path) const {
  std::string out = "standardizer 1\n";
  out += "slots " + std::to_string(mean.size()) + "\n";
  for (std::size_t i = 0; i < mean.size(); ++i)
    out += "slot " + std::to_string(i) + " " + fmt_double(mean[i]) + " " + fmt_double(stdev[i]) +
           "\n";
  for (std::size_t ch = 0; ch < kPhysicsChannels; ++ch)
    out += "physics " + std::to_string(ch) + " " + fmt_double(phys_mean[ch]) + " " +
           fmt_double(phys_std[ch]) + "\n";
  write_text_file_atomic(path, out);
}

Standardizer Standardizer::load(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || trimmed(line) != "standardizer 1")
    throw SchemaMismatch("expected 'standardizer 1' header in " + path.string());
  if (!std::getline(in, line)) throw SchemaMismatch("missing slot count");
  std::vector<std::string> parts = split(trimmed(line), ' ');
  if (parts.size() != 2 || parts[0] != "slots") throw SchemaMismatch("missing slot count");
  std::size_t n = static_cast<std::size_t>(parse_int(parts[1]));
  Standardizer out;
  out.mean.assign(n, 0.0);
  out.stdev.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw SchemaMismatch("truncated standardizer file");
    parts = split(trimmed(line), ' ');
    if (parts.size() != 4 || parts[0] != "slot" ||
        static_cast<std::size_t>(parse_int(parts[1])) != i)
      throw SchemaMismatch("bad slot line: " + line);
    out.mean[i] = parse_double(parts[2]);
    out.stdev[i] = parse_double(parts[3]);
  }
  for (std::size_t ch = 0; ch < kPhysicsChannels; ++ch) {
    if (!std::getline(in, line)) throw SchemaMismatch("truncated standardizer file");
    parts = split(trimmed(line), ' ');
    if (parts.size() != 4 || parts[0] != "physics" ||
        static_cast<std::size_t>(parse_int(parts[1])) != ch)
      throw SchemaMismatch("bad physics line: " + line);
    out.phys_mean[ch] = parse_double(parts[2]);
    out.phys_std[ch] = parse_double(parts[3]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

PcaModel pca_fit(const Eigen::MatrixXd& samples, int n_components) {
  const int n = static_cast<int>(samples.rows());
  const int d = static_cast<int>(samples.cols());
  if (n_components < 1) throw Error("n_components must be >= 1");
  if (n < 2) throw RankDeficient("need at least 2 samples");
  if (n_components > d || n_components > n - 1)
    throw RankDeficient(std::to_string(n_components) + " components requested, but " +
                        std::to_string(n) + " samples of dimension " + std::to_string(d) +
                        " support at most " + std::to_string(std::min(d, n - 1)));

  PcaModel m;
  m.mean = samples.colwise().mean();
  Eigen::MatrixXd centered = samples.rowwise() - m.mean.transpose();
  Eigen::MatrixXd cov = (centered.adjoint() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");

  m.components.resize(n_components, d);
  m.explained_variance.resize(n_components);
  for (int i = 0; i < n_components; ++i) {
    int src = d - 1 - i;  // eigenvalues come back ascending
    Eigen::VectorXd v = es.eigenvectors().col(src);
    int lead = 0;
    for (int j = 1; j < d; ++j)
      if (std::abs(v[j]) > std::abs(v[lead])) lead = j;
    if (v[lead] < 0.0) v = -v;
    m.components.row(i) = v.transpose();
    m.explained_variance[i] = std::max(0.0, es.eigenvalues()[src]);
  }
  return m;
}

Eigen::VectorXd pca_transform(const PcaModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.mean.size())
    throw ShapeMismatch("vector of size " + std::to_string(x.size()) + ", model dimension " +
                        std::to_string(m.mean.size()));
  return m.components * (x - m.mean);
}

Eigen::MatrixXd pca_transform_all(const PcaModel& m, const Eigen::MatrixXd& samples) {
  if (samples.cols() != m.mean.size())
    throw ShapeMismatch("samples of dimension " + std::to_string(samples.cols()) +
                        ", model dimension " + std::to_string(m.mean.size()));
  return (samples.rowwise() - m.mean.transpose()) * m.components.transpose();
}

namespace {

std::string csv_row_doubles(const double* p, std::ptrdiff_t n) {
  std::vector<std::string> cells;
  cells.reserve(static_cast<std::size_t>(n));
  for (std::ptrdiff_t i = 0; i < n; ++i) cells.push_back(fmt_double(p[i]));
  return csv_join(cells);
}

std::vector<std::vector<double>> read_double_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  CsvReader reader(in);
  std::vector<std::string> row;
  std::vector<std::vector<double>> out;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    std::vector<double> vals;
    vals.reserve(row.size());
    for (const std::string& cell : row) vals.push_back(parse_double(cell));
    out.push_back(std::move(vals));
  }
  return out;
}

}  // namespace

void PcaModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::string manifest = "pca 1\n";
  manifest += "dim " + std::to_string(dim()) + "\n";
  manifest += "components " + std::to_string(n_components()) + "\n";
  write_text_file_atomic(dir / "manifest.txt", manifest);
  write_text_file_atomic(dir / "mean.csv", csv_row_doubles(mean.data(), mean.size()));
  std::string comp;
  for (int i = 0; i < n_components(); ++i) {
    Eigen::VectorXd row = components.row(i);
    comp += csv_row_doubles(row.data(), row.size());
  }
  write_text_file_atomic(dir / "components.csv", comp);
  write_text_file_atomic(dir / "explained_variance.csv",
                         csv_row_doubles(explained_variance.data(), explained_variance.size()));
}

PcaModel PcaModel::load(const std::filesystem::path& dir) {
  std::istringstream manifest(read_text_file(dir / "manifest.txt"));
  std::string line;
  if (!std::getline(manifest, line) || trimmed(line) != "pca 1")
    throw SchemaMismatch("expected 'pca 1' manifest in " + dir.string());
  int dim = -1, ncomp = -1;
  while (std::getline(manifest, line)) {
    std::vector<std::string> parts = split(trimmed(line), ' ');
    if (parts.size() != 2) continue;
    if (parts[0] == "dim") dim = static_cast<int>(parse_int(parts[1]));
    if (parts[0] == "components") ncomp = static_cast<int>(parse_int(parts[1]));
  }
  if (dim < 1 || ncomp < 1) throw SchemaMismatch("pca manifest missing dim/components");

  auto mean_rows = read_double_rows(dir / "mean.csv");
  auto comp_rows = read_double_rows(dir / "components.csv");
  auto ev_rows = read_double_rows(dir / "explained_variance.csv");
  if (mean_rows.size() != 1 || static_cast<int>(mean_rows[0].size()) != dim)
    throw SchemaMismatch("pca mean shape mismatch");
  if (static_cast<int>(comp_rows.size()) != ncomp)
    throw SchemaMismatch("pca components shape mismatch");
  if (ev_rows.size() != 1 || static_cast<int>(ev_rows[0].size()) != ncomp)
    throw SchemaMismatch("pca explained variance shape mismatch");

  PcaModel m;
  m.mean.resize(dim);
  for (int j = 0; j < dim; ++j) m.mean[j] = mean_rows[0][static_cast<std::size_t>(j)];
  m.components.resize(ncomp, dim);
  for (int i = 0; i < ncomp; ++i) {
    if (static_cast<int>(comp_rows[static_cast<std::size_t>(i)].size()) != dim)
      throw SchemaMismatch("pca components shape mismatch");
    for (int j = 0; j < dim; ++j)
      m.components(i, j) = comp_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  m.explained_variance.resize(ncomp);
  for (int i = 0; i < ncomp; ++i) m.explained_variance[i] = ev_rows[0][static_cast<std::size_t>(i)];
  return m;
}

}  // namespace playerform::stats
