#include "playerform/model.hpp"

namespace playerform::model {

void ModelConfig::validate() const {
  if (layers < 1) throw Error("model needs at least one layer");
  if (heads < 1) throw Error("model needs at least one attention head");
  if (model_dim < 2 || model_dim % heads != 0)
    throw Error("model_dim must be a positive multiple of heads");
  if (model_dim % 2 != 0) throw Error("model_dim must be even to split token/context halves");
  if (feedforward_dim < 1) throw Error("feedforward_dim must be positive");
  if (vocab_size < 1) throw Error("vocab_size must be positive");
  if (n_stadiums < 1 || n_pitch_types < 1 || n_plate_zones < 1)
    throw Error("embedding tables must be non-empty");
  if (n_positions < 1) throw Error("n_positions must be positive");
  if (supplemental_input_dim < 2 || supplemental_input_dim % 2 != 0)
    throw Error("supplemental_input_dim must be even (values + presence)");
  if (form_dim != kFormDim)
    throw Error("form embeddings are " + std::to_string(kFormDim) + "-dimensional");
  if (max_len < 2) throw Error("max_len must be at least 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("dropout must be in [0, 1)");
}

std::string ModelConfig::serialize() const {
  std::string s;
  auto kv = [&](const char* k, const std::string& v) {
    s += k;
    s += '=';
    s += v;
    s += '\n';
  };
  kv("layers", std::to_string(layers));
  kv("heads", std::to_string(heads));
  kv("model_dim", std::to_string(model_dim));
  kv("feedforward_dim", std::to_string(feedforward_dim));
  kv("vocab_size", std::to_string(vocab_size));
  kv("n_stadiums", std::to_string(n_stadiums));
  kv("n_positions", std::to_string(n_positions));
  kv("n_pitch_types", std::to_string(n_pitch_types));
  kv("n_plate_zones", std::to_string(n_plate_zones));
  kv("supplemental_input_dim", std::to_string(supplemental_input_dim));
  kv("form_dim", std::to_string(form_dim));
  kv("max_len", std::to_string(max_len));
  kv("dropout", fmt_double(dropout));
  return s;
}

SlotInputs slots_of(const dataset::FormView& view) {
  SlotInputs s;
  s.length = view.length();
  s.tokens = view.token_ids.data();
  s.stadiums = view.stadium_ids.data();
  s.ptypes = view.pitch_type_ids.data();
  s.zones = view.zone_ids.data();
  s.ab_ords = view.ab_ordinals.data();
  s.pitch_ords = view.pitch_ordinals.data();
  s.physics = view.physics.data();
  s.physics_mask = view.physics_mask.data();
  s.suppl = view.suppl.data();
  s.suppl_dim = view.suppl_dim;
  return s;
}

void check_pairing(const std::vector<int>& pairing) {
  const int n = static_cast<int>(pairing.size());
  if (n < 2 || n % 2 != 0)
    throw BadPairing("pairing needs an even number of entries, got " + std::to_string(n));
  for (int i = 0; i < n; ++i) {
    const int j = pairing[static_cast<std::size_t>(i)];
    if (j < 0 || j >= n) throw BadPairing("pairing index out of range at " + std::to_string(i));
    if (j == i) throw BadPairing("embedding " + std::to_string(i) + " is paired with itself");
    if (pairing[static_cast<std::size_t>(j)] != i)
      throw BadPairing("pairing is not an involution at " + std::to_string(i));
  }
}

double lr_schedule(std::int64_t step, std::int64_t warmup_steps, double base_lr) {
  if (step < 0) throw Error("schedule step must be non-negative");
  if (warmup_steps <= 0 || step >= warmup_steps) return base_lr;
  return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
}

}  // namespace playerform::model
