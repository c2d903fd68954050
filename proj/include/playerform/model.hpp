#pragma once

// Transformer encoder over tokenized pitch sequences, with the two training
// objectives and the optimizer. Everything is templated on the scalar type:
// training runs in float, numerical tests (finite-difference gradient checks,
// closed-form loss oracles) run in double with the same code.
//
// Input layout per slot: the delta-token embedding fills the first half of
// model_dim; the second half is the sum of a two-layer supplemental
// projection, a linear map of the physics channels (values and presence),
// and the stadium / pitch-type / plate-zone embeddings. At-bat and
// pitch-ordinal positional embeddings are added across the full width.
// Slot 0 is replaced by a dedicated [CLS] embedding.
//
// The encoder is pre-norm: x += Attn(LN(x)); x += FF(LN(x)); final LN after
// the stack. The MGM head (model_dim -> model_dim -> vocab) predicts masked
// delta tokens; the contrastive head projects the [CLS] state to a
// 72-dimensional L2-normalized form embedding.
//
// Gradients are hand-derived. All parameter tensors are reachable through
// tensor_refs(), which fixes the (name, shape) enumeration used by Adam,
// checkpoints, and the gradient checks.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "playerform/common.hpp"
#include "playerform/dataset.hpp"

namespace playerform::model {

template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

inline constexpr int kFormDim = 72;
inline constexpr int kPitchOrdinals = dataset::kMaxPitchOrdinal + 1;
inline constexpr int kPhysicsInputDim = 2 * static_cast<int>(dataset::kPhysicsChannels);

struct ModelConfig {
  int layers = 2;
  int heads = 4;
  int model_dim = 64;
  int feedforward_dim = 128;
  int vocab_size = 0;   // real delta tokens; the [MASK] row is appended to the table
  int n_stadiums = 0;
  int n_positions = 0;  // at-bat ordinals per view: 15 for batters, 90 for pitchers
  int n_pitch_types = 0;
  int n_plate_zones = dataset::kPlateZones;
  int supplemental_input_dim = 0;  // values + presence
  int form_dim = kFormDim;
  int max_len = 128;
  double dropout = 0.0;

  int head_dim() const { return model_dim / heads; }
  int half_dim() const { return model_dim / 2; }
  void validate() const;
  std::string serialize() const;  // canonical key=value lines
  std::uint64_t hash() const { return fnv1a64(serialize()); }
};

template <typename T>
struct EncoderLayerT {
  MatX<T> wq, wk, wv, wo;  // model_dim x model_dim
  VecX<T> bq, bk, bv, bo;
  VecX<T> ln1_g, ln1_b, ln2_g, ln2_b;
  MatX<T> w1, w2;  // model_dim x ff, ff x model_dim
  VecX<T> b1, b2;
};

template <typename T>
struct ParametersT {
  MatX<T> tok_embed;      // (vocab_size + 1) x D/2; last row is [MASK]
  MatX<T> stadium_embed;  // n_stadiums x D/2
  MatX<T> ptype_embed;    // n_pitch_types x D/2
  MatX<T> zone_embed;     // n_plate_zones x D/2
  MatX<T> pos_ab;         // n_positions x D
  MatX<T> pos_pitch;      // kPitchOrdinals x D
  VecX<T> cls_embed;      // D
  MatX<T> suppl_w1;       // S x D/2
  VecX<T> suppl_b1;
  MatX<T> suppl_w2;  // D/2 x D/2
  VecX<T> suppl_b2;
  MatX<T> phys_w;  // 14 x D/2
  VecX<T> phys_b;
  std::vector<EncoderLayerT<T>> layers;
  VecX<T> final_g, final_b;
  MatX<T> mgm_w1;  // D x D
  VecX<T> mgm_b1;
  MatX<T> mgm_w2;  // D x vocab_size
  VecX<T> mgm_b2;
  MatX<T> con_w;  // D x form_dim
  VecX<T> con_b;
};

using Parameters = ParametersT<float>;

template <typename T>
struct TensorRef {
  std::string name;
  T* data;
  std::int64_t rows, cols;
  std::int64_t size() const { return rows * cols; }
};

// Fixed enumeration order; Adam, checkpoints, and the finite-difference
// harness all walk this list.
template <typename T>
std::vector<TensorRef<T>> tensor_refs(ParametersT<T>& p) {
  std::vector<TensorRef<T>> out;
  auto mat = [&](const char* name, MatX<T>& m) {
    out.push_back({name, m.data(), m.rows(), m.cols()});
  };
  auto vec = [&](const char* name, VecX<T>& v) { out.push_back({name, v.data(), v.rows(), 1}); };
  mat("tok_embed", p.tok_embed);
  mat("stadium_embed", p.stadium_embed);
  mat("ptype_embed", p.ptype_embed);
  mat("zone_embed", p.zone_embed);
  mat("pos_ab", p.pos_ab);
  mat("pos_pitch", p.pos_pitch);
  vec("cls_embed", p.cls_embed);
  mat("suppl_w1", p.suppl_w1);
  vec("suppl_b1", p.suppl_b1);
  mat("suppl_w2", p.suppl_w2);
  vec("suppl_b2", p.suppl_b2);
  mat("phys_w", p.phys_w);
  vec("phys_b", p.phys_b);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    EncoderLayerT<T>& lay = p.layers[l];
    const std::string pre = "layer" + std::to_string(l) + ".";
    auto lmat = [&](const char* n, MatX<T>& m) {
      out.push_back({pre + n, m.data(), m.rows(), m.cols()});
    };
    auto lvec = [&](const char* n, VecX<T>& v) { out.push_back({pre + n, v.data(), v.rows(), 1}); };
    lmat("wq", lay.wq);
    lvec("bq", lay.bq);
    lmat("wk", lay.wk);
    lvec("bk", lay.bk);
    lmat("wv", lay.wv);
    lvec("bv", lay.bv);
    lmat("wo", lay.wo);
    lvec("bo", lay.bo);
    lvec("ln1_g", lay.ln1_g);
    lvec("ln1_b", lay.ln1_b);
    lvec("ln2_g", lay.ln2_g);
    lvec("ln2_b", lay.ln2_b);
    lmat("w1", lay.w1);
    lvec("b1", lay.b1);
    lmat("w2", lay.w2);
    lvec("b2", lay.b2);
  }
  vec("final_g", p.final_g);
  vec("final_b", p.final_b);
  mat("mgm_w1", p.mgm_w1);
  vec("mgm_b1", p.mgm_b1);
  mat("mgm_w2", p.mgm_w2);
  vec("mgm_b2", p.mgm_b2);
  mat("con_w", p.con_w);
  vec("con_b", p.con_b);
  return out;
}

// Zero-filled tensors with shapes derived from the config alone.
template <typename T>
ParametersT<T> make_parameters(const ModelConfig& cfg) {
  cfg.validate();
  const int d = cfg.model_dim;
  const int h = cfg.half_dim();
  const int f = cfg.feedforward_dim;
  ParametersT<T> p;
  p.tok_embed = MatX<T>::Zero(cfg.vocab_size + 1, h);
  p.stadium_embed = MatX<T>::Zero(cfg.n_stadiums, h);
  p.ptype_embed = MatX<T>::Zero(cfg.n_pitch_types, h);
  p.zone_embed = MatX<T>::Zero(cfg.n_plate_zones, h);
  p.pos_ab = MatX<T>::Zero(cfg.n_positions, d);
  p.pos_pitch = MatX<T>::Zero(kPitchOrdinals, d);
  p.cls_embed = VecX<T>::Zero(d);
  p.suppl_w1 = MatX<T>::Zero(cfg.supplemental_input_dim, h);
  p.suppl_b1 = VecX<T>::Zero(h);
  p.suppl_w2 = MatX<T>::Zero(h, h);
  p.suppl_b2 = VecX<T>::Zero(h);
  p.phys_w = MatX<T>::Zero(kPhysicsInputDim, h);
  p.phys_b = VecX<T>::Zero(h);
  p.layers.resize(static_cast<std::size_t>(cfg.layers));
  for (EncoderLayerT<T>& lay : p.layers) {
    lay.wq = MatX<T>::Zero(d, d);
    lay.wk = MatX<T>::Zero(d, d);
    lay.wv = MatX<T>::Zero(d, d);
    lay.wo = MatX<T>::Zero(d, d);
    lay.bq = VecX<T>::Zero(d);
    lay.bk = VecX<T>::Zero(d);
    lay.bv = VecX<T>::Zero(d);
    lay.bo = VecX<T>::Zero(d);
    lay.ln1_g = VecX<T>::Zero(d);
    lay.ln1_b = VecX<T>::Zero(d);
    lay.ln2_g = VecX<T>::Zero(d);
    lay.ln2_b = VecX<T>::Zero(d);
    lay.w1 = MatX<T>::Zero(d, f);
    lay.b1 = VecX<T>::Zero(f);
    lay.w2 = MatX<T>::Zero(f, d);
    lay.b2 = VecX<T>::Zero(d);
  }
  p.final_g = VecX<T>::Zero(d);
  p.final_b = VecX<T>::Zero(d);
  p.mgm_w1 = MatX<T>::Zero(d, d);
  p.mgm_b1 = VecX<T>::Zero(d);
  p.mgm_w2 = MatX<T>::Zero(d, cfg.vocab_size);
  p.mgm_b2 = VecX<T>::Zero(cfg.vocab_size);
  p.con_w = MatX<T>::Zero(d, kFormDim);
  p.con_b = VecX<T>::Zero(kFormDim);
  return p;
}

// N(0, 0.02) weights and embeddings, zero biases, unit layer-norm gains.
template <typename T>
ParametersT<T> init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  ParametersT<T> p = make_parameters<T>(cfg);
  Rng rng(seed);
  auto fill = [&](MatX<T>& m) {
    for (std::int64_t i = 0; i < m.rows(); ++i)
      for (std::int64_t j = 0; j < m.cols(); ++j)
        m(i, j) = static_cast<T>(rng.normal(0.0, 0.02));
  };
  auto fill_vec = [&](VecX<T>& v) {
    for (std::int64_t i = 0; i < v.rows(); ++i) v(i) = static_cast<T>(rng.normal(0.0, 0.02));
  };
  fill(p.tok_embed);
  fill(p.stadium_embed);
  fill(p.ptype_embed);
  fill(p.zone_embed);
  fill(p.pos_ab);
  fill(p.pos_pitch);
  fill_vec(p.cls_embed);
  fill(p.suppl_w1);
  fill(p.suppl_w2);
  fill(p.phys_w);
  for (EncoderLayerT<T>& lay : p.layers) {
    fill(lay.wq);
    fill(lay.wk);
    fill(lay.wv);
    fill(lay.wo);
    lay.ln1_g.setOnes();
    lay.ln2_g.setOnes();
    fill(lay.w1);
    fill(lay.w2);
  }
  p.final_g.setOnes();
  fill(p.mgm_w1);
  fill(p.mgm_w2);
  fill(p.con_w);
  return p;
}

// ---------------------------------------------------------------------------
// Elementwise pieces
// ---------------------------------------------------------------------------

template <typename T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * T(0.70710678118654752440)));
}

template <typename T>
T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * T(0.70710678118654752440)));
  const T pdf = std::exp(T(-0.5) * x * x) * T(0.39894228040143267794);
  return cdf + x * pdf;
}

inline constexpr double kLayerNormEps = 1e-5;

// Row-wise layer norm; mu/si receive per-row mean and sqrt(var + eps).
template <typename T>
MatX<T> layer_norm(const MatX<T>& x, const VecX<T>& g, const VecX<T>& b, VecX<T>& mu, VecX<T>& si) {
  const std::int64_t n = x.rows(), d = x.cols();
  MatX<T> y(n, d);
  mu.resize(n);
  si.resize(n);
  for (std::int64_t i = 0; i < n; ++i) {
    const T m = x.row(i).mean();
    const T var = (x.row(i).array() - m).square().mean();
    const T s = std::sqrt(var + T(kLayerNormEps));
    mu(i) = m;
    si(i) = s;
    y.row(i) =
        (((x.row(i).array() - m) / s) * g.transpose().array() + b.transpose().array()).matrix();
  }
  return y;
}

template <typename T>
MatX<T> layer_norm_backward(const MatX<T>& dy, const MatX<T>& x, const VecX<T>& mu,
                            const VecX<T>& si, const VecX<T>& g, VecX<T>& dg, VecX<T>& db) {
  const std::int64_t n = x.rows(), d = x.cols();
  MatX<T> dx(n, d);
  for (std::int64_t i = 0; i < n; ++i) {
    Eigen::Array<T, 1, Eigen::Dynamic> xh = (x.row(i).array() - mu(i)) / si(i);
    Eigen::Array<T, 1, Eigen::Dynamic> dyr = dy.row(i).array();
    dg.array() += (dyr * xh).transpose();
    db.array() += dyr.transpose();
    Eigen::Array<T, 1, Eigen::Dynamic> dxh = dyr * g.transpose().array();
    const T m1 = dxh.mean();
    const T m2 = (dxh * xh).mean();
    dx.row(i) = ((dxh - m1 - xh * m2) / si(i)).matrix();
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Embedding
// ---------------------------------------------------------------------------

// One view's slot arrays, independent of whether they came from a FormView or
// a row of a padded batch.
struct SlotInputs {
  int length = 0;
  const int* tokens = nullptr;
  const int* stadiums = nullptr;
  const int* ptypes = nullptr;
  const int* zones = nullptr;
  const int* ab_ords = nullptr;
  const int* pitch_ords = nullptr;
  const float* physics = nullptr;       // [slot][7]
  const float* physics_mask = nullptr;  // [slot][7]
  const float* suppl = nullptr;         // [slot][suppl_dim]
  int suppl_dim = 0;
};

SlotInputs slots_of(const dataset::FormView& view);

template <typename T>
struct EmbedCache {
  MatX<T> suppl_in;  // L x S, row 0 zero
  MatX<T> suppl_h1;  // L x D/2, pre-gelu
  MatX<T> suppl_g1;
  MatX<T> phys_in;  // L x 14, row 0 zero
};

template <typename T>
void check_slot_ids(const SlotInputs& s, const ModelConfig& cfg) {
  if (s.suppl_dim != cfg.supplemental_input_dim)
    throw ShapeMismatch("view supplemental width " + std::to_string(s.suppl_dim) +
                        " does not match config " + std::to_string(cfg.supplemental_input_dim));
  if (s.length < 1) throw ShapeMismatch("empty view");
  if (s.tokens[0] != cfg.vocab_size + 1)
    throw IdOutOfRange("slot 0 must carry the [CLS] token id " +
                       std::to_string(cfg.vocab_size + 1));
  for (int i = 1; i < s.length; ++i) {
    auto bad = [&](const char* what, int id, int bound) {
      throw IdOutOfRange(std::string(what) + " id " + std::to_string(id) + " outside [0, " +
                         std::to_string(bound) + ") at slot " + std::to_string(i));
    };
    if (s.tokens[i] < 0 || s.tokens[i] > cfg.vocab_size)
      bad("token", s.tokens[i], cfg.vocab_size + 1);
    if (s.stadiums[i] < 0 || s.stadiums[i] >= cfg.n_stadiums)
      bad("stadium", s.stadiums[i], cfg.n_stadiums);
    if (s.ptypes[i] < 0 || s.ptypes[i] >= cfg.n_pitch_types)
      bad("pitch type", s.ptypes[i], cfg.n_pitch_types);
    if (s.zones[i] < 0 || s.zones[i] >= cfg.n_plate_zones)
      bad("plate zone", s.zones[i], cfg.n_plate_zones);
    if (s.ab_ords[i] < 0 || s.ab_ords[i] >= cfg.n_positions)
      bad("at-bat ordinal", s.ab_ords[i], cfg.n_positions);
    if (s.pitch_ords[i] < 0 || s.pitch_ords[i] >= kPitchOrdinals)
      bad("pitch ordinal", s.pitch_ords[i], kPitchOrdinals);
  }
}

template <typename T>
MatX<T> embed_slots(const SlotInputs& s, const ModelConfig& cfg, const ParametersT<T>& p,
                    EmbedCache<T>* cache) {
  check_slot_ids<T>(s, cfg);
  const int L = s.length;
  const int d = cfg.model_dim;
  const int h = cfg.half_dim();
  const int sd = s.suppl_dim;

  MatX<T> suppl_in = MatX<T>::Zero(L, sd);
  MatX<T> phys_in = MatX<T>::Zero(L, kPhysicsInputDim);
  for (int i = 1; i < L; ++i) {
    for (int j = 0; j < sd; ++j)
      suppl_in(i, j) = static_cast<T>(s.suppl[static_cast<std::size_t>(i) * sd + j]);
    for (int c = 0; c < static_cast<int>(dataset::kPhysicsChannels); ++c) {
      phys_in(i, c) =
          static_cast<T>(s.physics[static_cast<std::size_t>(i) * dataset::kPhysicsChannels + c]);
      phys_in(i, c + static_cast<int>(dataset::kPhysicsChannels)) = static_cast<T>(
          s.physics_mask[static_cast<std::size_t>(i) * dataset::kPhysicsChannels + c]);
    }
  }
  MatX<T> h1 = suppl_in * p.suppl_w1;
  h1.rowwise() += p.suppl_b1.transpose();
  MatX<T> g1 = h1.unaryExpr([](T x) { return gelu(x); });
  MatX<T> suppl_out = g1 * p.suppl_w2;
  suppl_out.rowwise() += p.suppl_b2.transpose();
  MatX<T> phys_out = phys_in * p.phys_w;
  phys_out.rowwise() += p.phys_b.transpose();

  MatX<T> x(L, d);
  x.row(0) = p.cls_embed.transpose();
  for (int i = 1; i < L; ++i) {
    x.row(i).head(h) = p.tok_embed.row(s.tokens[i]);
    x.row(i).tail(h) = suppl_out.row(i) + phys_out.row(i) + p.stadium_embed.row(s.stadiums[i]) +
                       p.ptype_embed.row(s.ptypes[i]) + p.zone_embed.row(s.zones[i]);
    x.row(i) += p.pos_ab.row(s.ab_ords[i]) + p.pos_pitch.row(s.pitch_ords[i]);
  }
  if (cache) {
    cache->suppl_in = std::move(suppl_in);
    cache->suppl_h1 = std::move(h1);
    cache->suppl_g1 = std::move(g1);
    cache->phys_in = std::move(phys_in);
  }
  return x;
}

template <typename T>
MatX<T> embed_inputs(const dataset::FormView& view, const ModelConfig& cfg,
                     const ParametersT<T>& p) {
  return embed_slots<T>(slots_of(view), cfg, p, nullptr);
}

// Supplemental branch alone; zero input with zero presence reduces to the
// bias path gelu(b1)*W2 + b2.
template <typename T>
VecX<T> project_supplemental(const VecX<T>& s, const ModelConfig& cfg, const ParametersT<T>& p) {
  if (s.rows() != cfg.supplemental_input_dim)
    throw ShapeMismatch("supplemental input has " + std::to_string(s.rows()) + " entries");
  VecX<T> h1 = p.suppl_w1.transpose() * s + p.suppl_b1;
  VecX<T> g1 = h1.unaryExpr([](T x) { return gelu(x); });
  return p.suppl_w2.transpose() * g1 + p.suppl_b2;
}

template <typename T>
void embed_backward(const SlotInputs& s, const ModelConfig& cfg, const ParametersT<T>& p,
                    const EmbedCache<T>& cache, const MatX<T>& dx, ParametersT<T>& g) {
  const int L = s.length;
  const int h = cfg.half_dim();
  g.cls_embed += dx.row(0).transpose();
  MatX<T> dother = MatX<T>::Zero(L, h);
  for (int i = 1; i < L; ++i) {
    g.tok_embed.row(s.tokens[i]) += dx.row(i).head(h);
    dother.row(i) = dx.row(i).tail(h);
    g.stadium_embed.row(s.stadiums[i]) += dother.row(i);
    g.ptype_embed.row(s.ptypes[i]) += dother.row(i);
    g.zone_embed.row(s.zones[i]) += dother.row(i);
    g.pos_ab.row(s.ab_ords[i]) += dx.row(i);
    g.pos_pitch.row(s.pitch_ords[i]) += dx.row(i);
  }
  // supplemental projection
  g.suppl_w2 += cache.suppl_g1.transpose() * dother;
  g.suppl_b2 += dother.colwise().sum().transpose();
  MatX<T> dg1 = dother * p.suppl_w2.transpose();
  MatX<T> dh1 = dg1.cwiseProduct(cache.suppl_h1.unaryExpr([](T x) { return gelu_grad(x); }));
  g.suppl_w1 += cache.suppl_in.transpose() * dh1;
  g.suppl_b1 += dh1.colwise().sum().transpose();
  // physics map
  g.phys_w += cache.phys_in.transpose() * dother;
  g.phys_b += dother.colwise().sum().transpose();
}

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

// Keep-scale factors (0 or 1/(1-p)) for the two residual branches of every
// layer of every view; empty when dropout is off.
template <typename T>
struct DropoutPlan {
  std::vector<std::vector<MatX<T>>> keep;  // [view][layer*2 + branch]
};

template <typename T>
DropoutPlan<T> make_dropout_plan(const ModelConfig& cfg, const std::vector<int>& lengths, Rng& rng) {
  DropoutPlan<T> plan;
  if (cfg.dropout <= 0.0) return plan;
  const T scale = static_cast<T>(1.0 / (1.0 - cfg.dropout));
  plan.keep.resize(lengths.size());
  for (std::size_t v = 0; v < lengths.size(); ++v) {
    plan.keep[v].reserve(static_cast<std::size_t>(cfg.layers) * 2);
    for (int l = 0; l < cfg.layers * 2; ++l) {
      MatX<T> m(lengths[v], cfg.model_dim);
      for (std::int64_t i = 0; i < m.rows(); ++i)
        for (std::int64_t j = 0; j < m.cols(); ++j)
          m(i, j) = rng.bernoulli(cfg.dropout) ? T(0) : scale;
      plan.keep[v].push_back(std::move(m));
    }
  }
  return plan;
}

template <typename T>
struct LayerCache {
  MatX<T> x_in;
  VecX<T> ln1_mu, ln1_si;
  MatX<T> ln1_out;
  MatX<T> q, k, v;
  std::vector<MatX<T>> probs;  // per head, L x L
  MatX<T> ctx;
  MatX<T> attn_out;
  MatX<T> x_mid;
  VecX<T> ln2_mu, ln2_si;
  MatX<T> ln2_out;
  MatX<T> ff_h1;  // pre-gelu
  MatX<T> ff_g;
  MatX<T> ff_out;
  MatX<T> x_out;
};

template <typename T>
struct EncodeCache {
  std::vector<LayerCache<T>> layers;
  MatX<T> fln_in;
  VecX<T> fln_mu, fln_si;
};

// Encoder over a compact sequence (no padding). `plan`/`view_index` select
// dropout masks; pass nullptr for inference.
template <typename T>
MatX<T> encode_seq(const MatX<T>& x0, const ModelConfig& cfg, const ParametersT<T>& p,
                   EncodeCache<T>* cache, const DropoutPlan<T>* plan = nullptr,
                   int view_index = 0) {
  const int H = cfg.heads;
  const int dh = cfg.head_dim();
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  const bool drop = plan && !plan->keep.empty();
  if (cache) cache->layers.resize(p.layers.size());
  MatX<T> x = x0;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const EncoderLayerT<T>& lay = p.layers[l];
    LayerCache<T> local;
    LayerCache<T>& c = cache ? cache->layers[l] : local;
    c.x_in = x;
    c.ln1_out = layer_norm(x, lay.ln1_g, lay.ln1_b, c.ln1_mu, c.ln1_si);
    c.q = c.ln1_out * lay.wq;
    c.q.rowwise() += lay.bq.transpose();
    c.k = c.ln1_out * lay.wk;
    c.k.rowwise() += lay.bk.transpose();
    c.v = c.ln1_out * lay.wv;
    c.v.rowwise() += lay.bv.transpose();
    c.ctx.resize(x.rows(), x.cols());
    c.probs.assign(static_cast<std::size_t>(H), MatX<T>());
    for (int hd = 0; hd < H; ++hd) {
      MatX<T> scores = c.q.middleCols(hd * dh, dh) * c.k.middleCols(hd * dh, dh).transpose();
      scores *= inv_sqrt;
      MatX<T>& prob = c.probs[static_cast<std::size_t>(hd)];
      prob.resize(scores.rows(), scores.cols());
      for (std::int64_t i = 0; i < scores.rows(); ++i) {
        const T m = scores.row(i).maxCoeff();
        Eigen::Array<T, 1, Eigen::Dynamic> e = (scores.row(i).array() - m).exp();
        prob.row(i) = (e / e.sum()).matrix();
      }
      c.ctx.middleCols(hd * dh, dh) = prob * c.v.middleCols(hd * dh, dh);
    }
    c.attn_out = c.ctx * lay.wo;
    c.attn_out.rowwise() += lay.bo.transpose();
    if (drop)
      c.x_mid = c.x_in + c.attn_out.cwiseProduct(
                             plan->keep[static_cast<std::size_t>(view_index)][l * 2]);
    else
      c.x_mid = c.x_in + c.attn_out;
    c.ln2_out = layer_norm(c.x_mid, lay.ln2_g, lay.ln2_b, c.ln2_mu, c.ln2_si);
    c.ff_h1 = c.ln2_out * lay.w1;
    c.ff_h1.rowwise() += lay.b1.transpose();
    c.ff_g = c.ff_h1.unaryExpr([](T y) { return gelu(y); });
    c.ff_out = c.ff_g * lay.w2;
    c.ff_out.rowwise() += lay.b2.transpose();
    if (drop)
      c.x_out = c.x_mid + c.ff_out.cwiseProduct(
                              plan->keep[static_cast<std::size_t>(view_index)][l * 2 + 1]);
    else
      c.x_out = c.x_mid + c.ff_out;
    x = c.x_out;
  }
  if (cache) {
    cache->fln_in = x;
    return layer_norm(x, p.final_g, p.final_b, cache->fln_mu, cache->fln_si);
  }
  VecX<T> mu, si;
  return layer_norm(x, p.final_g, p.final_b, mu, si);
}

// Returns d(loss)/d(x0) and accumulates parameter gradients.
template <typename T>
MatX<T> encode_seq_backward(const MatX<T>& denc, const ModelConfig& cfg, const ParametersT<T>& p,
                            const EncodeCache<T>& cache, ParametersT<T>& g,
                            const DropoutPlan<T>* plan = nullptr, int view_index = 0) {
  const int H = cfg.heads;
  const int dh = cfg.head_dim();
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  const bool drop = plan && !plan->keep.empty();
  MatX<T> dx = layer_norm_backward(denc, cache.fln_in, cache.fln_mu, cache.fln_si, p.final_g,
                                   g.final_g, g.final_b);
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const EncoderLayerT<T>& lay = p.layers[li];
    EncoderLayerT<T>& gl = g.layers[li];
    const LayerCache<T>& c = cache.layers[li];
    // x_out = x_mid + drop * ff_out
    MatX<T> dff_out = dx;
    if (drop)
      dff_out = dx.cwiseProduct(plan->keep[static_cast<std::size_t>(view_index)][li * 2 + 1]);
    gl.w2 += c.ff_g.transpose() * dff_out;
    gl.b2 += dff_out.colwise().sum().transpose();
    MatX<T> dff_g = dff_out * lay.w2.transpose();
    MatX<T> dff_h1 = dff_g.cwiseProduct(c.ff_h1.unaryExpr([](T y) { return gelu_grad(y); }));
    gl.w1 += c.ln2_out.transpose() * dff_h1;
    gl.b1 += dff_h1.colwise().sum().transpose();
    MatX<T> dln2_out = dff_h1 * lay.w1.transpose();
    MatX<T> dx_mid =
        dx + layer_norm_backward(dln2_out, c.x_mid, c.ln2_mu, c.ln2_si, lay.ln2_g, gl.ln2_g,
                                 gl.ln2_b);
    // x_mid = x_in + drop * attn_out
    MatX<T> dattn_out = dx_mid;
    if (drop)
      dattn_out = dx_mid.cwiseProduct(plan->keep[static_cast<std::size_t>(view_index)][li * 2]);
    gl.wo += c.ctx.transpose() * dattn_out;
    gl.bo += dattn_out.colwise().sum().transpose();
    MatX<T> dctx = dattn_out * lay.wo.transpose();
    MatX<T> dq(dctx.rows(), dctx.cols()), dk(dctx.rows(), dctx.cols()),
        dv(dctx.rows(), dctx.cols());
    for (int hd = 0; hd < H; ++hd) {
      const MatX<T>& prob = c.probs[static_cast<std::size_t>(hd)];
      MatX<T> dctx_h = dctx.middleCols(hd * dh, dh);
      MatX<T> dprob = dctx_h * c.v.middleCols(hd * dh, dh).transpose();
      dv.middleCols(hd * dh, dh) = prob.transpose() * dctx_h;
      MatX<T> dscores(prob.rows(), prob.cols());
      for (std::int64_t i = 0; i < prob.rows(); ++i) {
        const T dot = prob.row(i).dot(dprob.row(i));
        dscores.row(i) = (prob.row(i).array() * (dprob.row(i).array() - dot)).matrix();
      }
      dscores *= inv_sqrt;
      dq.middleCols(hd * dh, dh) = dscores * c.k.middleCols(hd * dh, dh);
      dk.middleCols(hd * dh, dh) = dscores.transpose() * c.q.middleCols(hd * dh, dh);
    }
    gl.wq += c.ln1_out.transpose() * dq;
    gl.bq += dq.colwise().sum().transpose();
    gl.wk += c.ln1_out.transpose() * dk;
    gl.bk += dk.colwise().sum().transpose();
    gl.wv += c.ln1_out.transpose() * dv;
    gl.bv += dv.colwise().sum().transpose();
    MatX<T> dln1_out = dq * lay.wq.transpose() + dk * lay.wk.transpose() + dv * lay.wv.transpose();
    dx = dx_mid + layer_norm_backward(dln1_out, c.x_in, c.ln1_mu, c.ln1_si, lay.ln1_g, gl.ln1_g,
                                      gl.ln1_b);
  }
  return dx;
}

// Padded-sequence encoder: rows with attn == 0 are never attended to and
// produce zero output rows. Inference only.
template <typename T>
MatX<T> encode(const MatX<T>& inputs, const std::vector<std::uint8_t>& attn,
               const ModelConfig& cfg, const ParametersT<T>& p) {
  if (inputs.rows() != static_cast<std::int64_t>(attn.size()) || inputs.cols() != cfg.model_dim)
    throw ShapeMismatch("encode: inputs " + std::to_string(inputs.rows()) + "x" +
                        std::to_string(inputs.cols()) + " vs mask of " +
                        std::to_string(attn.size()));
  std::vector<std::int64_t> real;
  for (std::size_t i = 0; i < attn.size(); ++i)
    if (attn[i]) real.push_back(static_cast<std::int64_t>(i));
  MatX<T> out = MatX<T>::Zero(inputs.rows(), inputs.cols());
  if (real.empty()) return out;
  MatX<T> compact(static_cast<std::int64_t>(real.size()), inputs.cols());
  for (std::size_t i = 0; i < real.size(); ++i)
    compact.row(static_cast<std::int64_t>(i)) = inputs.row(real[i]);
  MatX<T> enc = encode_seq<T>(compact, cfg, p, nullptr);
  for (std::size_t i = 0; i < real.size(); ++i)
    out.row(real[i]) = enc.row(static_cast<std::int64_t>(i));
  return out;
}

// ---------------------------------------------------------------------------
// Heads and losses
// ---------------------------------------------------------------------------

template <typename T>
MatX<T> mgm_logits(const MatX<T>& rows, const ParametersT<T>& p, MatX<T>* h1_cache = nullptr,
                   MatX<T>* g1_cache = nullptr) {
  MatX<T> h1 = rows * p.mgm_w1;
  h1.rowwise() += p.mgm_b1.transpose();
  MatX<T> g1 = h1.unaryExpr([](T x) { return gelu(x); });
  MatX<T> logits = g1 * p.mgm_w2;
  logits.rowwise() += p.mgm_b2.transpose();
  if (h1_cache) *h1_cache = std::move(h1);
  if (g1_cache) *g1_cache = std::move(g1);
  return logits;
}

// Mean cross-entropy over the masked positions of one contextual sequence.
template <typename T>
T mgm_loss(const MatX<T>& contextual, const std::vector<int>& positions,
           const std::vector<int>& targets, const ModelConfig& cfg, const ParametersT<T>& p) {
  if (positions.empty()) throw NoMaskedPositions("mgm loss over zero masked positions");
  if (positions.size() != targets.size())
    throw ShapeMismatch("positions/targets length mismatch");
  MatX<T> rows(static_cast<std::int64_t>(positions.size()), contextual.cols());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] < 0 || positions[i] >= contextual.rows())
      throw ShapeMismatch("masked position outside the sequence");
    rows.row(static_cast<std::int64_t>(i)) = contextual.row(positions[i]);
  }
  MatX<T> logits = mgm_logits(rows, p);
  T total = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0 || targets[i] >= cfg.vocab_size)
      throw IdOutOfRange("mgm target outside the vocabulary");
    const auto row = logits.row(static_cast<std::int64_t>(i));
    const T m = row.maxCoeff();
    const T lse = m + std::log((row.array() - m).exp().sum());
    total += lse - row(targets[i]);
  }
  return total / static_cast<T>(targets.size());
}

void check_pairing(const std::vector<int>& pairing);

// L = sum_i -log( exp(z_i.z_j(i)/tau) / sum_{a != i} exp(z_i.z_a/tau) ).
// Callers pass L2-normalized rows; the formula itself works on any rows.
template <typename T>
T contrastive_loss(const MatX<T>& z, const std::vector<int>& pairing, T tau) {
  if (tau <= T(0)) throw Error("contrastive temperature must be positive");
  if (z.rows() != static_cast<std::int64_t>(pairing.size()))
    throw BadPairing("pairing length " + std::to_string(pairing.size()) + " for " +
                     std::to_string(z.rows()) + " embeddings");
  check_pairing(pairing);
  const std::int64_t n = z.rows();
  MatX<T> sims = z * z.transpose() / tau;
  T total = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    T m = -std::numeric_limits<T>::infinity();
    for (std::int64_t a = 0; a < n; ++a)
      if (a != i) m = std::max(m, sims(i, a));
    T sum = 0;
    for (std::int64_t a = 0; a < n; ++a)
      if (a != i) sum += std::exp(sims(i, a) - m);
    total += m + std::log(sum) - sims(i, pairing[static_cast<std::size_t>(i)]);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Batch forward / backward
// ---------------------------------------------------------------------------

struct BatchMetrics {
  double mgm_loss = 0.0;
  double con_loss = 0.0;
  double total_loss = 0.0;
  double masked_acc = 0.0;
  double retrieval_acc = 0.0;
  std::size_t n_masked = 0;
  int n_views = 0;
};

template <typename T>
SlotInputs slots_of_batch_view(const dataset::MaskedBatch& b, int view) {
  SlotInputs s;
  int len = 0;
  const std::size_t base = b.flat(view, 0);
  while (len < b.max_len && b.attn[base + static_cast<std::size_t>(len)]) ++len;
  s.length = len;
  s.tokens = b.token_ids.data() + base;
  s.stadiums = b.stadium_ids.data() + base;
  s.ptypes = b.pitch_type_ids.data() + base;
  s.zones = b.zone_ids.data() + base;
  s.ab_ords = b.ab_ordinals.data() + base;
  s.pitch_ords = b.pitch_ordinals.data() + base;
  s.physics = b.physics.data() + base * dataset::kPhysicsChannels;
  s.physics_mask = b.physics_mask.data() + base * dataset::kPhysicsChannels;
  s.suppl = b.suppl.data() + base * static_cast<std::size_t>(b.suppl_dim);
  s.suppl_dim = b.suppl_dim;
  return s;
}

namespace detail {

template <typename T>
struct BatchForwardState {
  std::vector<SlotInputs> slots;
  std::vector<EmbedCache<T>> embed;
  std::vector<EncodeCache<T>> enc_cache;
  std::vector<MatX<T>> enc;               // final encoder outputs per view
  std::vector<std::pair<int, int>> mask;  // (view, slot)
  MatX<T> mgm_rows, mgm_h1, mgm_g1, mgm_logits;
  MatX<T> cls, zraw, z;
  VecX<T> znorm;
  MatX<T> sims;
};

template <typename T>
BatchMetrics batch_forward_impl(const dataset::MaskedBatch& b, const ModelConfig& cfg,
                                const ParametersT<T>& p, double tau, double lambda,
                                BatchForwardState<T>& st, bool keep_caches,
                                const DropoutPlan<T>* plan) {
  if (b.n_views <= 0) throw EmptyInput("batch has no views");
  if (b.mask_positions.empty()) throw NoMaskedPositions("batch has no masked slots");
  check_pairing(b.pairing);
  if (tau <= 0.0) throw Error("contrastive temperature must be positive");
  const int d = cfg.model_dim;

  BatchMetrics out;
  out.n_views = b.n_views;
  out.n_masked = b.mask_positions.size();

  st.slots.resize(static_cast<std::size_t>(b.n_views));
  st.embed.resize(static_cast<std::size_t>(b.n_views));
  st.enc_cache.resize(static_cast<std::size_t>(b.n_views));
  st.enc.resize(static_cast<std::size_t>(b.n_views));
  for (int v = 0; v < b.n_views; ++v) {
    st.slots[static_cast<std::size_t>(v)] = slots_of_batch_view<T>(b, v);
    MatX<T> x0 = embed_slots<T>(st.slots[static_cast<std::size_t>(v)], cfg, p,
                                keep_caches ? &st.embed[static_cast<std::size_t>(v)] : nullptr);
    st.enc[static_cast<std::size_t>(v)] =
        encode_seq<T>(x0, cfg, p, keep_caches ? &st.enc_cache[static_cast<std::size_t>(v)] : nullptr,
                      plan, v);
  }

  // masked-token head
  st.mask.clear();
  st.mask.reserve(b.mask_positions.size());
  st.mgm_rows.resize(static_cast<std::int64_t>(b.mask_positions.size()), d);
  for (std::size_t i = 0; i < b.mask_positions.size(); ++i) {
    const int view = static_cast<int>(b.mask_positions[i] / static_cast<std::size_t>(b.max_len));
    const int slot = static_cast<int>(b.mask_positions[i] % static_cast<std::size_t>(b.max_len));
    if (view >= b.n_views || slot >= st.slots[static_cast<std::size_t>(view)].length)
      throw ShapeMismatch("mask position outside the real slots");
    st.mask.emplace_back(view, slot);
    st.mgm_rows.row(static_cast<std::int64_t>(i)) =
        st.enc[static_cast<std::size_t>(view)].row(slot);
  }
  st.mgm_logits = mgm_logits(st.mgm_rows, p, &st.mgm_h1, &st.mgm_g1);
  T mgm_total = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < b.mask_targets.size(); ++i) {
    const int target = b.mask_targets[i];
    if (target < 0 || target >= cfg.vocab_size)
      throw IdOutOfRange("mgm target outside the vocabulary");
    const auto row = st.mgm_logits.row(static_cast<std::int64_t>(i));
    const T m = row.maxCoeff();
    const T lse = m + std::log((row.array() - m).exp().sum());
    mgm_total += lse - row(target);
    std::int64_t arg = 0;
    row.maxCoeff(&arg);
    if (static_cast<int>(arg) == target) ++correct;
  }
  out.mgm_loss = static_cast<double>(mgm_total) / static_cast<double>(b.mask_targets.size());
  out.masked_acc = static_cast<double>(correct) / static_cast<double>(b.mask_targets.size());

  // contrastive head on the [CLS] states
  st.cls.resize(b.n_views, d);
  for (int v = 0; v < b.n_views; ++v) st.cls.row(v) = st.enc[static_cast<std::size_t>(v)].row(0);
  st.zraw = st.cls * p.con_w;
  st.zraw.rowwise() += p.con_b.transpose();
  st.z.resize(st.zraw.rows(), st.zraw.cols());
  st.znorm.resize(st.zraw.rows());
  for (std::int64_t i = 0; i < st.zraw.rows(); ++i) {
    T n = st.zraw.row(i).norm();
    if (n < T(1e-12)) n = T(1e-12);
    st.znorm(i) = n;
    st.z.row(i) = st.zraw.row(i) / n;
  }
  out.con_loss =
      static_cast<double>(contrastive_loss<T>(st.z, b.pairing, static_cast<T>(tau)));
  out.total_loss = out.mgm_loss + lambda * out.con_loss;

  st.sims = st.z * st.z.transpose();
  std::size_t retrieved = 0;
  for (std::int64_t i = 0; i < st.sims.rows(); ++i) {
    std::int64_t best = -1;
    T best_v = -std::numeric_limits<T>::infinity();
    for (std::int64_t a = 0; a < st.sims.cols(); ++a) {
      if (a == i) continue;
      if (st.sims(i, a) > best_v) {
        best_v = st.sims(i, a);
        best = a;
      }
    }
    if (best == b.pairing[static_cast<std::size_t>(i)]) ++retrieved;
  }
  out.retrieval_acc = static_cast<double>(retrieved) / static_cast<double>(b.n_views);
  return out;
}

}  // namespace detail

// Forward-only evaluation of both objectives on an assembled batch.
template <typename T>
BatchMetrics batch_forward(const dataset::MaskedBatch& b, const ModelConfig& cfg,
                           const ParametersT<T>& p, double tau, double lambda,
                           const DropoutPlan<T>* plan = nullptr) {
  detail::BatchForwardState<T> st;
  return detail::batch_forward_impl<T>(b, cfg, p, tau, lambda, st, false, plan);
}

// Forward plus hand-derived backward; `grads` is reshaped to match and
// overwritten.
template <typename T>
BatchMetrics batch_backward(const dataset::MaskedBatch& b, const ModelConfig& cfg,
                            const ParametersT<T>& p, double tau, double lambda,
                            ParametersT<T>& grads, const DropoutPlan<T>* plan = nullptr) {
  detail::BatchForwardState<T> st;
  BatchMetrics metrics = detail::batch_forward_impl<T>(b, cfg, p, tau, lambda, st, true, plan);
  grads = make_parameters<T>(cfg);

  const T tt = static_cast<T>(tau);
  const std::int64_t nm = static_cast<std::int64_t>(st.mask.size());
  const std::int64_t nv = b.n_views;

  std::vector<MatX<T>> denc(static_cast<std::size_t>(nv));
  for (int v = 0; v < nv; ++v)
    denc[static_cast<std::size_t>(v)] =
        MatX<T>::Zero(st.slots[static_cast<std::size_t>(v)].length, cfg.model_dim);

  // MGM: mean cross-entropy
  MatX<T> dlogits(nm, cfg.vocab_size);
  for (std::int64_t i = 0; i < nm; ++i) {
    const auto row = st.mgm_logits.row(i);
    const T m = row.maxCoeff();
    Eigen::Array<T, 1, Eigen::Dynamic> e = (row.array() - m).exp();
    dlogits.row(i) = (e / e.sum()).matrix();
    dlogits(i, b.mask_targets[static_cast<std::size_t>(i)]) -= T(1);
  }
  dlogits /= static_cast<T>(nm);
  grads.mgm_w2 += st.mgm_g1.transpose() * dlogits;
  grads.mgm_b2 += dlogits.colwise().sum().transpose();
  MatX<T> dg1 = dlogits * p.mgm_w2.transpose();
  MatX<T> dh1 = dg1.cwiseProduct(st.mgm_h1.unaryExpr([](T x) { return gelu_grad(x); }));
  grads.mgm_w1 += st.mgm_rows.transpose() * dh1;
  grads.mgm_b1 += dh1.colwise().sum().transpose();
  MatX<T> dmgm_rows = dh1 * p.mgm_w1.transpose();
  for (std::int64_t i = 0; i < nm; ++i) {
    const auto [view, slot] = st.mask[static_cast<std::size_t>(i)];
    denc[static_cast<std::size_t>(view)].row(slot) += dmgm_rows.row(i);
  }

  // contrastive: dL/dS, then through z = u/|u| and the projection head
  MatX<T> dsims = MatX<T>::Zero(nv, nv);
  MatX<T> scaled = st.z * st.z.transpose() / tt;
  for (std::int64_t i = 0; i < nv; ++i) {
    T m = -std::numeric_limits<T>::infinity();
    for (std::int64_t a = 0; a < nv; ++a)
      if (a != i) m = std::max(m, scaled(i, a));
    T sum = 0;
    for (std::int64_t a = 0; a < nv; ++a)
      if (a != i) sum += std::exp(scaled(i, a) - m);
    for (std::int64_t a = 0; a < nv; ++a)
      if (a != i) dsims(i, a) = std::exp(scaled(i, a) - m) / sum;
    dsims(i, b.pairing[static_cast<std::size_t>(i)]) -= T(1);
  }
  const T lam = static_cast<T>(lambda);
  MatX<T> dz = (dsims + dsims.transpose()) * st.z * (lam / tt);
  MatX<T> dzraw(nv, st.z.cols());
  for (std::int64_t i = 0; i < nv; ++i) {
    const T dot = st.z.row(i).dot(dz.row(i));
    dzraw.row(i) = (dz.row(i) - st.z.row(i) * dot) / st.znorm(i);
  }
  grads.con_w += st.cls.transpose() * dzraw;
  grads.con_b += dzraw.colwise().sum().transpose();
  MatX<T> dcls = dzraw * p.con_w.transpose();
  for (int v = 0; v < nv; ++v) denc[static_cast<std::size_t>(v)].row(0) += dcls.row(v);

  for (int v = 0; v < nv; ++v) {
    MatX<T> dx0 = encode_seq_backward<T>(denc[static_cast<std::size_t>(v)], cfg, p,
                                         st.enc_cache[static_cast<std::size_t>(v)], grads, plan, v);
    embed_backward<T>(st.slots[static_cast<std::size_t>(v)], cfg, p,
                      st.embed[static_cast<std::size_t>(v)], dx0, grads);
  }
  return metrics;
}

// Encode one view and project its [CLS] state to the unit 72-sphere.
template <typename T>
VecX<T> form_embedding(const dataset::FormView& view, const ModelConfig& cfg,
                       const ParametersT<T>& p) {
  MatX<T> x0 = embed_slots<T>(slots_of(view), cfg, p, nullptr);
  MatX<T> enc = encode_seq<T>(x0, cfg, p, nullptr);
  VecX<T> u = p.con_w.transpose() * enc.row(0).transpose() + p.con_b;
  T n = u.norm();
  if (n < T(1e-12)) n = T(1e-12);
  return u / n;
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

template <typename T>
struct AdamState {
  ParametersT<T> m, v;
  std::int64_t t = 0;
};

template <typename T>
AdamState<T> make_adam_state(const ModelConfig& cfg) {
  return {make_parameters<T>(cfg), make_parameters<T>(cfg), 0};
}

// Bias-corrected Adam; all arithmetic in T.
template <typename T>
void adam_step(ParametersT<T>& params, const ParametersT<T>& grads, AdamState<T>& state, double lr,
               double beta1, double beta2, double eps) {
  auto tp = tensor_refs(params);
  auto tg = tensor_refs(const_cast<ParametersT<T>&>(grads));
  auto tm = tensor_refs(state.m);
  auto tv = tensor_refs(state.v);
  if (tp.size() != tg.size()) throw ShapeMismatch("gradient tensor count mismatch");
  state.t += 1;
  const T b1 = static_cast<T>(beta1), b2 = static_cast<T>(beta2);
  const T bc1 = T(1) - static_cast<T>(std::pow(beta1, static_cast<double>(state.t)));
  const T bc2 = T(1) - static_cast<T>(std::pow(beta2, static_cast<double>(state.t)));
  const T a = static_cast<T>(lr), ep = static_cast<T>(eps);
  for (std::size_t k = 0; k < tp.size(); ++k) {
    if (tp[k].rows != tg[k].rows || tp[k].cols != tg[k].cols)
      throw ShapeMismatch("gradient shape mismatch for " + tp[k].name);
    T* pp = tp[k].data;
    const T* pg = tg[k].data;
    T* pm = tm[k].data;
    T* pv = tv[k].data;
    const std::int64_t n = tp[k].size();
    for (std::int64_t i = 0; i < n; ++i) {
      pm[i] = b1 * pm[i] + (T(1) - b1) * pg[i];
      pv[i] = b2 * pv[i] + (T(1) - b2) * pg[i] * pg[i];
      const T mhat = pm[i] / bc1;
      const T vhat = pv[i] / bc2;
      pp[i] -= a * mhat / (std::sqrt(vhat) + ep);
    }
  }
}

// Linear warmup from zero, constant afterward.
double lr_schedule(std::int64_t step, std::int64_t warmup_steps, double base_lr);

}  // namespace playerform::model
