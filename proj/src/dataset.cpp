#include "playerform/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "playerform/csv.hpp"

namespace playerform::dataset {

using ingest::AtBat;
using ingest::Corpus;
using stats::Standardizer;
using stats::StatsEngine;

WindowSpec window_spec(Role role) {
  if (role == Role::Batter) return {20, 15, 5};
  return {100, 90, 10};
}

std::vector<FormWindow> extract_windows(const Corpus& corpus, std::int64_t player_id, Role role,
                                        int stride) {
  if (stride < 1) throw Error("stride must be >= 1");
  const auto& table = role == Role::Batter ? corpus.batter_atbats : corpus.pitcher_atbats;
  auto it = table.find(player_id);
  if (it == table.end())
    throw UnknownPlayer(std::string(role_name(role)) + " " + std::to_string(player_id) +
                        " has no appearances");
  const std::vector<std::size_t>& idxs = it->second;
  const WindowSpec ws = window_spec(role);
  if (idxs.size() < static_cast<std::size_t>(ws.window_len))
    throw InsufficientHistory(std::string(role_name(role)) + " " + std::to_string(player_id) +
                              " has " + std::to_string(idxs.size()) + " appearances, needs " +
                              std::to_string(ws.window_len));
  std::vector<FormWindow> out;
  for (std::size_t start = 0; start + static_cast<std::size_t>(ws.window_len) <= idxs.size();
       start += static_cast<std::size_t>(stride)) {
    FormWindow w;
    w.player_id = player_id;
    w.role = role;
    w.atbats.assign(idxs.begin() + static_cast<std::ptrdiff_t>(start),
                    idxs.begin() + static_cast<std::ptrdiff_t>(start) + ws.window_len);
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<FormWindow> extract_all_windows(const Corpus& corpus, Role role, int stride) {
  const auto& table = role == Role::Batter ? corpus.batter_atbats : corpus.pitcher_atbats;
  const WindowSpec ws = window_spec(role);
  std::vector<FormWindow> out;
  for (const auto& [player_id, idxs] : table) {
    if (idxs.size() < static_cast<std::size_t>(ws.window_len)) continue;
    std::vector<FormWindow> w = extract_windows(corpus, player_id, role, stride);
    out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return out;
}

int plate_zone(double plate_x, double plate_z) {
  int col = static_cast<int>(std::floor((plate_x + 1.5) / 3.0 * 5.0));
  int row = static_cast<int>(std::floor((plate_z - 1.0) / 3.0 * 5.0));
  col = std::clamp(col, 0, 4);
  row = std::clamp(row, 0, 4);
  return row * 5 + col;
}

FormView build_view(const Corpus& corpus, const StatsEngine& engine, const Standardizer& st,
                    const FormWindow& window, int which) {
  const WindowSpec ws = window_spec(window.role);
  if (window.atbats.size() != static_cast<std::size_t>(ws.window_len))
    throw ShapeMismatch("window has " + std::to_string(window.atbats.size()) +
                        " at-bats, expected " + std::to_string(ws.window_len));
  if (which != 0 && which != 1) throw Error("view selector must be 0 or 1");

  const int offset = which == 0 ? 0 : ws.window_len - ws.view_len;
  FormView v;
  v.player_id = window.player_id;
  v.role = window.role;
  v.atbats.assign(window.atbats.begin() + offset,
                  window.atbats.begin() + offset + ws.view_len);
  const int s_total = engine.spec().total_size();
  v.suppl_dim = 2 * s_total;

  auto push_slot = [&](int token, int stadium, int ptype, int zone, int ab_ord, int pitch_ord) {
    v.token_ids.push_back(token);
    v.stadium_ids.push_back(stadium);
    v.pitch_type_ids.push_back(ptype);
    v.zone_ids.push_back(zone);
    v.ab_ordinals.push_back(ab_ord);
    v.pitch_ordinals.push_back(pitch_ord);
  };

  // [CLS] slot: ids and features are placeholders, the model substitutes a
  // dedicated embedding
  push_slot(corpus.vocab.cls_id(), 0, 0, 0, 0, 0);
  v.physics.insert(v.physics.end(), kPhysicsChannels, 0.0f);
  v.physics_mask.insert(v.physics_mask.end(), kPhysicsChannels, 0.0f);
  v.suppl.insert(v.suppl.end(), static_cast<std::size_t>(v.suppl_dim), 0.0f);

  std::vector<float> ab_suppl(static_cast<std::size_t>(v.suppl_dim));
  for (int a = 0; a < ws.view_len; ++a) {
    const AtBat& ab = corpus.atbats[v.atbats[static_cast<std::size_t>(a)]];
    stats::SupplementalVector sv = engine.assemble_supplemental(
        ab.batter_id, ab.pitcher_id, {ab.game_pk, ab.ab_number}, st);
    for (int i = 0; i < s_total; ++i) {
      ab_suppl[static_cast<std::size_t>(i)] =
          static_cast<float>(sv.values[static_cast<std::size_t>(i)]);
      ab_suppl[static_cast<std::size_t>(s_total + i)] =
          static_cast<float>(sv.present[static_cast<std::size_t>(i)]);
    }
    for (int p = 0; p < ab.n_pitches; ++p) {
      const std::size_t ev = ab.first_event + static_cast<std::size_t>(p);
      const PitchEvent& e = corpus.events[ev];
      push_slot(corpus.delta_ids[ev], corpus.stadium_dense_id(e.stadium_id),
                corpus.pitch_type_id(e.pitch_type), plate_zone(e.plate_x, e.plate_z), a,
                std::min(p, kMaxPitchOrdinal));
      auto phys = [&](std::size_t ch, double raw) {
        v.physics.push_back(
            static_cast<float>((raw - st.phys_mean[ch]) / st.phys_std[ch]));
        v.physics_mask.push_back(1.0f);
      };
      phys(0, e.release_speed);
      phys(1, e.plate_x);
      phys(2, e.plate_z);
      phys(3, e.spin_rate);
      for (std::size_t ch = 4; ch < kPhysicsChannels; ++ch) {
        const std::optional<double>& raw =
            ch == 4 ? e.launch_speed : ch == 5 ? e.launch_angle : e.hit_distance;
        if (raw) {
          phys(ch, *raw);
        } else {
          v.physics.push_back(0.0f);
          v.physics_mask.push_back(0.0f);
        }
      }
      v.suppl.insert(v.suppl.end(), ab_suppl.begin(), ab_suppl.end());
    }
  }
  return v;
}

std::pair<FormView, FormView> make_views(const Corpus& corpus, const StatsEngine& engine,
                                         const Standardizer& st, const FormWindow& window) {
  return {build_view(corpus, engine, st, window, 0), build_view(corpus, engine, st, window, 1)};
}

MaskResult mask_view(const FormView& view, double rate, Rng& rng) {
  if (!(rate > 0.0 && rate <= 1.0)) throw Error("mask rate must be in (0, 1]");
  if (view.length() < 2) throw Error("view has no token slots to mask");
  MaskResult out;
  while (out.positions.empty()) {
    for (int slot = 1; slot < view.length(); ++slot) {
      if (rng.bernoulli(rate)) {
        out.positions.push_back(slot);
        out.targets.push_back(view.token_ids[static_cast<std::size_t>(slot)]);
      }
    }
  }
  return out;
}

MaskedBatch assemble_batch(const Corpus& corpus, const StatsEngine& engine, const Standardizer& st,
                           const std::vector<FormWindow>& windows, double mask_rate, int max_len,
                           Rng& rng) {
  if (windows.empty()) throw EmptyInput("no windows");
  if (max_len < 2) throw Error("max_len must be >= 2");
  const Role role = windows[0].role;
  for (const FormWindow& w : windows)
    if (w.role != role) throw Error("batch mixes batter and pitcher windows");

  // build and filter first so skipped windows never consume mask randomness
  std::vector<std::pair<FormView, FormView>> kept;
  std::vector<std::int64_t> skipped;
  for (const FormWindow& w : windows) {
    std::pair<FormView, FormView> views = make_views(corpus, engine, st, w);
    if (views.first.length() > max_len || views.second.length() > max_len) {
      skipped.push_back(w.player_id);
      continue;
    }
    kept.push_back(std::move(views));
  }
  if (kept.empty())
    throw SequenceOverflow("every window exceeds max_len " + std::to_string(max_len));

  MaskedBatch b;
  b.role = role;
  b.n_views = static_cast<int>(kept.size()) * 2;
  b.max_len = max_len;
  b.suppl_dim = kept[0].first.suppl_dim;
  b.skipped_players = std::move(skipped);
  const std::size_t n = static_cast<std::size_t>(b.n_views);
  const std::size_t len = static_cast<std::size_t>(max_len);
  b.token_ids.assign(n * len, 0);
  b.attn.assign(n * len, 0);
  b.stadium_ids.assign(n * len, 0);
  b.pitch_type_ids.assign(n * len, 0);
  b.zone_ids.assign(n * len, 0);
  b.ab_ordinals.assign(n * len, 0);
  b.pitch_ordinals.assign(n * len, 0);
  b.physics.assign(n * len * kPhysicsChannels, 0.0f);
  b.physics_mask.assign(n * len * kPhysicsChannels, 0.0f);
  b.suppl.assign(n * len * static_cast<std::size_t>(b.suppl_dim), 0.0f);
  b.pairing.resize(n);
  for (std::size_t i = 0; i < n; ++i) b.pairing[i] = static_cast<int>(i ^ 1);

  const int mask_id = corpus.vocab.mask_id();
  for (std::size_t k = 0; k < kept.size(); ++k) {
    for (int half = 0; half < 2; ++half) {
      const FormView& v = half == 0 ? kept[k].first : kept[k].second;
      const int view_index = static_cast<int>(k) * 2 + half;
      const std::size_t base = b.flat(view_index, 0);
      for (int slot = 0; slot < v.length(); ++slot) {
        const std::size_t src = static_cast<std::size_t>(slot);
        const std::size_t dst = base + src;
        b.token_ids[dst] = v.token_ids[src];
        b.attn[dst] = 1;
        b.stadium_ids[dst] = v.stadium_ids[src];
        b.pitch_type_ids[dst] = v.pitch_type_ids[src];
        b.zone_ids[dst] = v.zone_ids[src];
        b.ab_ordinals[dst] = v.ab_ordinals[src];
        b.pitch_ordinals[dst] = v.pitch_ordinals[src];
        for (std::size_t ch = 0; ch < kPhysicsChannels; ++ch) {
          b.physics[dst * kPhysicsChannels + ch] = v.physics[src * kPhysicsChannels + ch];
          b.physics_mask[dst * kPhysicsChannels + ch] =
              v.physics_mask[src * kPhysicsChannels + ch];
        }
        const std::size_t sd = static_cast<std::size_t>(b.suppl_dim);
        for (std::size_t j = 0; j < sd; ++j)
          b.suppl[dst * sd + j] = v.suppl[src * sd + j];
      }
      MaskResult m = mask_view(v, mask_rate, rng);
      for (std::size_t i = 0; i < m.positions.size(); ++i) {
        const std::size_t pos = base + static_cast<std::size_t>(m.positions[i]);
        b.token_ids[pos] = mask_id;
        b.mask_positions.push_back(pos);
        b.mask_targets.push_back(m.targets[i]);
      }
    }
  }
  return b;
}

void write_window_manifest(const std::vector<FormWindow>& windows, const Corpus& corpus,
                           const std::filesystem::path& path) {
  std::string out = "player_id,role,window_ordinal,first_game_pk,first_ab,last_game_pk,last_ab\n";
  std::map<std::int64_t, int> ordinal;
  for (const FormWindow& w : windows) {
    const AtBat& first = corpus.atbats[w.atbats.front()];
    const AtBat& last = corpus.atbats[w.atbats.back()];
    std::vector<std::string> row{std::to_string(w.player_id),
                                 role_name(w.role),
                                 std::to_string(ordinal[w.player_id]++),
                                 std::to_string(first.game_pk),
                                 std::to_string(first.ab_number),
                                 std::to_string(last.game_pk),
                                 std::to_string(last.ab_number)};
    out += csv_join(row);
  }
  write_text_file_atomic(path, out);
}

}  // namespace playerform::dataset
