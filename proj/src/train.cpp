#include "playerform/train.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "playerform/csv.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian float32");

namespace playerform::train {

using dataset::FormWindow;
using model::ModelConfig;
using model::Parameters;
using model::TensorRef;

void TrainConfig::validate() const {
  if (total_steps < 1) throw Error("total_steps must be positive");
  if (warmup_steps < 0 || warmup_steps >= total_steps)
    throw Error("warmup_steps must lie in [0, total_steps)");
  if (batch_windows < 1) throw Error("batch_windows must be positive");
  if (tau <= 0.0) throw Error("contrastive temperature must be positive");
  if (lambda < 0.0) throw Error("contrastive weight must be non-negative");
  if (!(mask_rate > 0.0 && mask_rate <= 1.0)) throw Error("mask_rate must be in (0, 1]");
  if (base_lr <= 0.0) throw Error("base_lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw Error("Adam betas must be in [0, 1)");
  if (adam_eps <= 0.0) throw Error("adam_eps must be positive");
  if (checkpoint_every < 1) throw Error("checkpoint_every must be positive");
}

std::string TrainConfig::serialize() const {
  std::string s;
  auto kv = [&](const char* k, const std::string& v) {
    s += k;
    s += '=';
    s += v;
    s += '\n';
  };
  kv("beta1", fmt_double(beta1));
  kv("beta2", fmt_double(beta2));
  kv("adam_eps", fmt_double(adam_eps));
  kv("base_lr", fmt_double(base_lr));
  kv("warmup_steps", std::to_string(warmup_steps));
  kv("total_steps", std::to_string(total_steps));
  kv("batch_windows", std::to_string(batch_windows));
  kv("tau", fmt_double(tau));
  kv("lambda", fmt_double(lambda));
  kv("mask_rate", fmt_double(mask_rate));
  kv("seed", std::to_string(seed));
  kv("checkpoint_every", std::to_string(checkpoint_every));
  return s;
}

std::uint64_t run_hash(const ModelConfig& mcfg, const TrainConfig& tcfg) {
  // total_steps and checkpoint_every control how far and how often, not what
  // the numbers are, so they stay out of the hash.
  std::string s = mcfg.serialize();
  s += "beta1=" + fmt_double(tcfg.beta1) + "\n";
  s += "beta2=" + fmt_double(tcfg.beta2) + "\n";
  s += "adam_eps=" + fmt_double(tcfg.adam_eps) + "\n";
  s += "base_lr=" + fmt_double(tcfg.base_lr) + "\n";
  s += "warmup_steps=" + std::to_string(tcfg.warmup_steps) + "\n";
  s += "batch_windows=" + std::to_string(tcfg.batch_windows) + "\n";
  s += "tau=" + fmt_double(tcfg.tau) + "\n";
  s += "lambda=" + fmt_double(tcfg.lambda) + "\n";
  s += "mask_rate=" + fmt_double(tcfg.mask_rate) + "\n";
  s += "seed=" + std::to_string(tcfg.seed) + "\n";
  return fnv1a64(s);
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::string out = "step,lr,mgm_loss,con_loss,masked_acc,retrieval_acc\n";
  for (const MetricsRow& r : rows) {
    out += std::to_string(r.step) + "," + fmt_double(r.lr) + "," + fmt_double(r.mgm_loss) + "," +
           fmt_double(r.con_loss) + "," + fmt_double(r.masked_acc) + "," +
           fmt_double(r.retrieval_acc) + "\n";
  }
  return out;
}

std::vector<MetricsRow> metrics_from_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row) || row.size() != 6 || row[0] != "step")
    throw ParseError("metrics file lacks the expected header: " + path.string());
  std::vector<MetricsRow> out;
  while (reader.next(row)) {
    if (row.size() != 6)
      throw ParseError("metrics row with " + std::to_string(row.size()) + " fields");
    MetricsRow m;
    m.step = std::stoll(row[0]);
    m.lr = std::stod(row[1]);
    m.mgm_loss = std::stod(row[2]);
    m.con_loss = std::stod(row[3]);
    m.masked_acc = std::stod(row[4]);
    m.retrieval_acc = std::stod(row[5]);
    out.push_back(m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

static ModelConfig base_model_config(Role role, const ingest::Corpus& corpus,
                                     const stats::StatsEngine& engine) {
  ModelConfig m;
  m.vocab_size = corpus.vocab.size();
  m.n_stadiums = static_cast<int>(corpus.stadiums.size());
  m.n_pitch_types = static_cast<int>(corpus.pitch_types.size());
  m.n_positions = dataset::window_spec(role).view_len;
  m.supplemental_input_dim = 2 * engine.spec().total_size();
  return m;
}

model::ModelConfig desk_model_config(Role role, const ingest::Corpus& corpus,
                                     const stats::StatsEngine& engine) {
  ModelConfig m = base_model_config(role, corpus, engine);
  m.layers = 2;
  m.heads = 4;
  m.model_dim = 64;
  m.feedforward_dim = 128;
  m.max_len = role == Role::Batter ? 128 : 512;
  m.dropout = 0.0;
  return m;
}

TrainConfig desk_train_config() {
  TrainConfig t;
  t.warmup_steps = 200;
  t.total_steps = 2000;
  t.batch_windows = 8;
  t.checkpoint_every = 500;
  return t;
}

model::ModelConfig paper_model_config(Role role, const ingest::Corpus& corpus,
                                      const stats::StatsEngine& engine) {
  ModelConfig m = base_model_config(role, corpus, engine);
  m.layers = 8;
  m.heads = 8;
  m.model_dim = 512;
  m.feedforward_dim = 2048;
  m.max_len = role == Role::Batter ? 256 : 1024;
  m.dropout = 0.1;
  return m;
}

TrainConfig paper_train_config(Role role) {
  TrainConfig t;
  if (role == Role::Batter) {
    t.batch_windows = 78;
    t.total_steps = 90000;
    t.warmup_steps = 7500;
  } else {
    t.batch_windows = 36;
    t.total_steps = 35000;
    t.warmup_steps = 2500;
  }
  t.checkpoint_every = 5000;
  return t;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

std::string tensor_blob(Parameters& p) {
  std::string blob;
  for (const TensorRef<float>& r : model::tensor_refs(p)) {
    const std::size_t bytes = static_cast<std::size_t>(r.size()) * sizeof(float);
    blob.append(reinterpret_cast<const char*>(r.data), bytes);
  }
  return blob;
}

void fill_from_blob(Parameters& p, const std::string& blob, const std::string& what) {
  std::size_t off = 0;
  for (const TensorRef<float>& r : model::tensor_refs(p)) {
    const std::size_t bytes = static_cast<std::size_t>(r.size()) * sizeof(float);
    if (off + bytes > blob.size())
      throw CheckpointMismatch(what + " blob is shorter than the manifest promises");
    std::memcpy(r.data, blob.data() + off, bytes);
    off += bytes;
  }
  if (off != blob.size())
    throw CheckpointMismatch(what + " blob has " + std::to_string(blob.size() - off) +
                             " trailing bytes");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const ModelConfig& cfg,
                     const Checkpoint& ck) {
  std::filesystem::create_directories(dir);
  Parameters& params = const_cast<Parameters&>(ck.params);
  model::AdamState<float>& adam = const_cast<model::AdamState<float>&>(ck.adam);
  auto refs = model::tensor_refs(params);

  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(ck.hash));
  std::string manifest = "checkpoint 1\n";
  manifest += "step " + std::to_string(ck.step) + "\n";
  manifest += "hash " + std::string(hex) + "\n";
  manifest += "dtype f32\n";
  manifest += "tensors " + std::to_string(refs.size()) + "\n";
  for (const TensorRef<float>& r : refs)
    manifest += "tensor " + r.name + " " + std::to_string(r.rows) + " " + std::to_string(r.cols) +
                "\n";
  (void)cfg;

  write_text_file_atomic(dir / "manifest.txt", manifest);
  const std::string pb = tensor_blob(params);
  write_binary_file_atomic(dir / "params.bin", pb.data(), pb.size());
  const std::string mb = tensor_blob(adam.m);
  write_binary_file_atomic(dir / "adam_m.bin", mb.data(), mb.size());
  const std::string vb = tensor_blob(adam.v);
  write_binary_file_atomic(dir / "adam_v.bin", vb.data(), vb.size());
}

Checkpoint load_checkpoint(const std::filesystem::path& dir, const ModelConfig& cfg) {
  std::istringstream in(read_text_file(dir / "manifest.txt"));
  std::string line;
  if (!std::getline(in, line) || line != "checkpoint 1")
    throw ParseError("not a checkpoint manifest: " + (dir / "manifest.txt").string());

  Checkpoint ck;
  ck.params = model::make_parameters<float>(cfg);
  ck.adam = model::make_adam_state<float>(cfg);
  auto refs = model::tensor_refs(ck.params);

  auto expect = [&](const char* key) {
    if (!std::getline(in, line) || line.rfind(key, 0) != 0 ||
        line.size() < std::strlen(key) + 2)
      throw ParseError(std::string("checkpoint manifest is missing '") + key + "'");
    return line.substr(std::strlen(key) + 1);
  };
  ck.step = std::stoll(expect("step"));
  ck.hash = std::stoull(expect("hash"), nullptr, 16);
  if (expect("dtype") != "f32") throw CheckpointMismatch("checkpoint dtype is not f32");
  const std::size_t count = std::stoull(expect("tensors"));
  if (count != refs.size())
    throw CheckpointMismatch("checkpoint has " + std::to_string(count) + " tensors, expected " +
                             std::to_string(refs.size()));
  for (const TensorRef<float>& r : refs) {
    if (!std::getline(in, line)) throw ParseError("checkpoint manifest ends early");
    const std::string want =
        "tensor " + r.name + " " + std::to_string(r.rows) + " " + std::to_string(r.cols);
    if (line != want)
      throw CheckpointMismatch("checkpoint tensor mismatch: saw '" + line + "', expected '" +
                               want + "'");
  }

  fill_from_blob(ck.params, read_text_file(dir / "params.bin"), "params");
  fill_from_blob(ck.adam.m, read_text_file(dir / "adam_m.bin"), "adam_m");
  fill_from_blob(ck.adam.v, read_text_file(dir / "adam_v.bin"), "adam_v");
  ck.adam.t = ck.step;
  return ck;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

int view_length(const ingest::Corpus& corpus, const FormWindow& w, int which) {
  const dataset::WindowSpec ws = dataset::window_spec(w.role);
  const int offset = which == 0 ? 0 : ws.window_len - ws.view_len;
  int len = 1;
  for (int a = 0; a < ws.view_len; ++a)
    len += corpus.atbats[w.atbats[static_cast<std::size_t>(offset + a)]].n_pitches;
  return len;
}

void write_state(const std::filesystem::path& out_dir, const ModelConfig& mcfg,
                 const Checkpoint& ck, const std::vector<MetricsRow>& metrics) {
  const std::string name = "step-" + std::to_string(ck.step);
  save_checkpoint(out_dir / name, mcfg, ck);
  write_text_file_atomic(out_dir / "metrics.csv", metrics_to_csv(metrics));
  write_text_file_atomic(out_dir / "latest.txt", name + "\n");
}

}  // namespace

TrainResult train(const ingest::Corpus& corpus, const stats::StatsEngine& engine,
                  const stats::Standardizer& st, const std::vector<FormWindow>& windows,
                  const ModelConfig& mcfg, const TrainConfig& tcfg,
                  const std::filesystem::path& out_dir) {
  mcfg.validate();
  tcfg.validate();
  if (windows.empty()) throw EmptyInput("no windows to train on");
  const Role role = windows[0].role;
  for (const FormWindow& w : windows)
    if (w.role != role) throw Error("training set mixes batter and pitcher windows");

  std::vector<FormWindow> usable;
  for (const FormWindow& w : windows) {
    if (view_length(corpus, w, 0) <= mcfg.max_len && view_length(corpus, w, 1) <= mcfg.max_len)
      usable.push_back(w);
  }
  if (usable.empty())
    throw SequenceOverflow("every training window exceeds max_len " +
                           std::to_string(mcfg.max_len));

  const std::uint64_t rh = run_hash(mcfg, tcfg);
  std::filesystem::create_directories(out_dir);

  Checkpoint ck;
  std::vector<MetricsRow> metrics;
  const std::filesystem::path latest = out_dir / "latest.txt";
  if (std::filesystem::exists(latest)) {
    std::string name = read_text_file(latest);
    while (!name.empty() && (name.back() == '\n' || name.back() == '\r')) name.pop_back();
    ck = load_checkpoint(out_dir / name, mcfg);
    if (ck.hash != rh)
      throw CheckpointMismatch("checkpoint in " + out_dir.string() +
                               " was written by a different configuration");
    for (MetricsRow& m : metrics_from_csv(out_dir / "metrics.csv"))
      if (m.step <= ck.step) metrics.push_back(m);
  } else {
    ck.params = model::init_parameters<float>(mcfg, tcfg.seed);
    ck.adam = model::make_adam_state<float>(mcfg);
    ck.step = 0;
    ck.hash = rh;
  }

  const std::int64_t start = ck.step;
  const std::size_t n_batch =
      std::min(static_cast<std::size_t>(tcfg.batch_windows), usable.size());
  for (std::int64_t step = start + 1; step <= tcfg.total_steps; ++step) {
    Rng rs(Rng::mix(tcfg.seed, static_cast<std::uint64_t>(step)));
    std::vector<std::size_t> picked;
    while (picked.size() < n_batch) {
      const std::size_t idx = rs.below(usable.size());
      if (std::find(picked.begin(), picked.end(), idx) == picked.end()) picked.push_back(idx);
    }
    std::vector<FormWindow> sample;
    sample.reserve(picked.size());
    for (std::size_t idx : picked) sample.push_back(usable[idx]);

    dataset::MaskedBatch batch =
        dataset::assemble_batch(corpus, engine, st, sample, tcfg.mask_rate, mcfg.max_len, rs);

    model::DropoutPlan<float> plan;
    if (mcfg.dropout > 0.0) {
      std::vector<int> lengths;
      for (int v = 0; v < batch.n_views; ++v)
        lengths.push_back(model::slots_of_batch_view<float>(batch, v).length);
      plan = model::make_dropout_plan<float>(mcfg, lengths, rs);
    }

    model::ParametersT<float> grads;
    model::BatchMetrics bm = model::batch_backward<float>(
        batch, mcfg, ck.params, tcfg.tau, tcfg.lambda, grads,
        plan.keep.empty() ? nullptr : &plan);

    for (const TensorRef<float>& r : model::tensor_refs(grads)) {
      for (std::int64_t i = 0; i < r.size(); ++i) {
        if (!std::isfinite(r.data[i])) {
          const std::string msg = "non-finite gradient at step " + std::to_string(step) +
                                  " in tensor " + r.name + " index " + std::to_string(i);
          write_text_file_atomic(out_dir / "diagnostic.txt",
                                 msg + "\nvalue " + std::to_string(r.data[i]) + "\n");
          throw NonFiniteGradient(msg);
        }
      }
    }

    const double lr = model::lr_schedule(step, tcfg.warmup_steps, tcfg.base_lr);
    model::adam_step(ck.params, grads, ck.adam, lr, tcfg.beta1, tcfg.beta2, tcfg.adam_eps);
    ck.step = step;
    metrics.push_back(
        {step, lr, bm.mgm_loss, bm.con_loss, bm.masked_acc, bm.retrieval_acc});

    if (step % tcfg.checkpoint_every == 0 || step == tcfg.total_steps)
      write_state(out_dir, mcfg, ck, metrics);
  }

  TrainResult result;
  result.params = std::move(ck.params);
  result.metrics = std::move(metrics);
  result.final_checkpoint = out_dir / ("step-" + std::to_string(ck.step));
  result.windows_dropped = windows.size() - usable.size();
  result.steps_run = ck.step > start ? ck.step - start : 0;
  return result;
}

}  // namespace playerform::train
