#pragma once

// Training loop, presets, and checkpointing.
//
// Each step is seeded independently via Rng::mix(seed, step): it samples a
// batch of windows, masks them, takes one Adam step, and logs metrics. A run
// is therefore resumable from any checkpoint with bit-identical results; no
// RNG state crosses step boundaries.
//
// A checkpoint is a directory: manifest.txt (tensor names and shapes, the
// step, and a hash of the model + training configuration) plus raw
// little-endian float32 blobs for the parameters and both Adam moments.
// metrics.csv accumulates one row per step:
//   step,lr,mgm_loss,con_loss,masked_acc,retrieval_acc

#include <filesystem>
#include <vector>

#include "playerform/model.hpp"

namespace playerform::train {

struct TrainConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double base_lr = 5e-4;
  std::int64_t warmup_steps = 200;
  std::int64_t total_steps = 2000;
  int batch_windows = 8;  // N windows -> 2N views per step
  double tau = 0.1;       // contrastive temperature
  double lambda = 1.0;    // contrastive loss weight
  double mask_rate = 0.15;
  std::uint64_t seed = 1;
  std::int64_t checkpoint_every = 500;

  void validate() const;
  std::string serialize() const;
};

// Hash of everything that determines the numbers a run produces. total_steps
// and checkpoint_every are excluded so a finished run can be extended or
// re-checkpointed without invalidating its checkpoints.
std::uint64_t run_hash(const model::ModelConfig& mcfg, const TrainConfig& tcfg);

struct MetricsRow {
  std::int64_t step = 0;
  double lr = 0.0;
  double mgm_loss = 0.0;
  double con_loss = 0.0;
  double masked_acc = 0.0;
  double retrieval_acc = 0.0;
};

std::string metrics_to_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> metrics_from_csv(const std::filesystem::path& path);

// Presets. Desk scale trains in minutes on one core; the paper-scale echoes
// record the published hyperparameters and are not meant to run here.
model::ModelConfig desk_model_config(Role role, const ingest::Corpus& corpus,
                                     const stats::StatsEngine& engine);
TrainConfig desk_train_config();
model::ModelConfig paper_model_config(Role role, const ingest::Corpus& corpus,
                                      const stats::StatsEngine& engine);
TrainConfig paper_train_config(Role role);

struct Checkpoint {
  model::Parameters params;
  model::AdamState<float> adam;
  std::int64_t step = 0;
  std::uint64_t hash = 0;
};

void save_checkpoint(const std::filesystem::path& dir, const model::ModelConfig& cfg,
                     const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& dir, const model::ModelConfig& cfg);

struct TrainResult {
  model::Parameters params;
  std::vector<MetricsRow> metrics;  // full history, including steps loaded on resume
  std::filesystem::path final_checkpoint;
  std::size_t windows_dropped = 0;  // windows whose views exceed max_len
  std::int64_t steps_run = 0;       // steps executed by this call
};

// Runs (or resumes) a training run in out_dir. If out_dir holds a checkpoint
// for this configuration, training continues after its step; a checkpoint at
// total_steps makes the call a no-op. A checkpoint written under a different
// configuration raises CheckpointMismatch. Aborts with NonFiniteGradient and
// a diagnostic file if a gradient leaves the reals.
TrainResult train(const ingest::Corpus& corpus, const stats::StatsEngine& engine,
                  const stats::Standardizer& st, const std::vector<dataset::FormWindow>& windows,
                  const model::ModelConfig& mcfg, const TrainConfig& tcfg,
                  const std::filesystem::path& out_dir);

}  // namespace playerform::train
