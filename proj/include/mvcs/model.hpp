// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mvcs/eval.hpp"
#include "mvcs/features.hpp"
#include "mvcs/losses.hpp"
#include "mvcs/synth.hpp"
#include "mvcs/transfer.hpp"

namespace mvcs {

/// Two-layer per-pixel perceptron: tanh hidden layer, logistic output.
/// Parameter layout: W1 (hidden x channels, row-major), b1, w2, b2.
class ModelWeights {
 public:
  ModelWeights() = default;
  ModelWeights(int channels, int hidden)
      : channels_(channels), hidden_(hidden),
        params_(static_cast<std::size_t>(hidden) * (channels + 2) + 1, 0.0) {
    require(channels > 0 && hidden > 0, "model: channels and hidden units must be positive");
  }

  static ModelWeights random(int channels, int hidden, std::uint64_t seed) {
    ModelWeights w(channels, hidden);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> in_dist(-1.0 / std::sqrt(channels),
                                                   1.0 / std::sqrt(channels));
    std::uniform_real_distribution<double> out_dist(-1.0 / std::sqrt(hidden),
                                                    1.0 / std::sqrt(hidden));
    for (int h = 0; h < hidden; ++h)
      for (int c = 0; c < channels; ++c) w.w1(h, c) = in_dist(rng);
    for (int h = 0; h < hidden; ++h) w.w2(h) = out_dist(rng);
    return w;
  }

  int channels() const { return channels_; }
  int hidden() const { return hidden_; }

  double& w1(int h, int c) { return params_[static_cast<std::size_t>(h) * channels_ + c]; }
  double w1(int h, int c) const { return params_[static_cast<std::size_t>(h) * channels_ + c]; }
  double& b1(int h) { return params_[static_cast<std::size_t>(hidden_) * channels_ + h]; }
  double b1(int h) const { return params_[static_cast<std::size_t>(hidden_) * channels_ + h]; }
  double& w2(int h) { return params_[static_cast<std::size_t>(hidden_) * (channels_ + 1) + h]; }
  double w2(int h) const {
    return params_[static_cast<std::size_t>(hidden_) * (channels_ + 1) + h];
  }
  double& b2() { return params_.back(); }
  double b2() const { return params_.back(); }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  bool finite() const {
    return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;

 private:
  int channels_ = 0, hidden_ = 0;
  std::vector<double> params_;
};

inline double logistic(double z) {
  const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(p, 1e-15, 1.0 - 1e-15);
}

/// Forward output plus the hidden activations backward needs.
struct ForwardPass {
  ProbMap prob;
  std::vector<double> hidden;  // pixel-major tanh activations
};

inline ForwardPass forward_pass(const FeatureImage& features, const ModelWeights& w) {
  if (features.channels() != w.channels())
    throw InvalidArgument("forward: feature channels do not match the model");
  const int H = w.hidden(), C = w.channels();
  ForwardPass out{ProbMap(features.width(), features.height(), 0.0),
                  std::vector<double>(features.pixels() * static_cast<std::size_t>(H))};
  for (std::size_t i = 0; i < features.pixels(); ++i) {
    const auto f = features.pixel(i);
    double* act = out.hidden.data() + i * H;
    double z = w.b2();
    for (int h = 0; h < H; ++h) {
      double a = w.b1(h);
      for (int c = 0; c < C; ++c) a += w.w1(h, c) * f[c];
      act[h] = std::tanh(a);
      z += w.w2(h) * act[h];
    }
    out.prob[i] = logistic(z);
  }
  return out;
}

inline ProbMap forward(const FeatureImage& features, const ModelWeights& w) {
  return forward_pass(features, w).prob;
}

/// Reverse-mode gradient of sum_x upstream(x) * P(x) with respect to the
/// parameters, in the ModelWeights parameter layout. `pass` must come from
/// forward_pass on the same features and weights.
inline std::vector<double> backward(const FeatureImage& features, const ModelWeights& w,
                                    const ForwardPass& pass, const RealGrid& upstream) {
  if (features.channels() != w.channels())
    throw InvalidArgument("backward: feature channels do not match the model");
  require_same_shape(features, upstream, "backward");
  require_same_shape(features, pass.prob, "backward");
  const int H = w.hidden(), C = w.channels();
  require(pass.hidden.size() == features.pixels() * static_cast<std::size_t>(H),
          "backward: forward pass does not match the model");
  ModelWeights g(C, H);
  for (std::size_t i = 0; i < features.pixels(); ++i) {
    const double up = upstream[i];
    if (up == 0.0) continue;
    const auto f = features.pixel(i);
    const double* act = pass.hidden.data() + i * H;
    const double p = pass.prob[i];
    const double dz = up * p * (1.0 - p);
    g.b2() += dz;
    for (int h = 0; h < H; ++h) {
      g.w2(h) += dz * act[h];
      const double da = dz * w.w2(h) * (1.0 - act[h] * act[h]);
      g.b1(h) += da;
      for (int c = 0; c < C; ++c) g.w1(h, c) += da * f[c];
    }
  }
  return std::move(g.params());
}

inline std::vector<double> backward(const FeatureImage& features, const ModelWeights& w,
                                    const RealGrid& upstream) {
  return backward(features, w, forward_pass(features, w), upstream);
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  long step = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

inline void adam_update(std::vector<double>& params, const std::vector<double>& grad,
                        AdamState& state, const AdamConfig& cfg) {
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    params[i] -= cfg.learning_rate * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + cfg.epsilon);
  }
}

enum class Regime { no_aug, prior, cross };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::no_aug: return "no-aug";
    case Regime::prior: return "prior";
    case Regime::cross: return "cross";
  }
  return "?";
}

inline Regime parse_regime(const std::string& s) {
  if (s == "no-aug") return Regime::no_aug;
  if (s == "prior") return Regime::prior;
  if (s == "cross") return Regime::cross;
  throw InvalidArgument("unknown regime '" + s + "' (expected no-aug, prior or cross)");
}

struct TrainConfig {
  Regime regime = Regime::cross;
  int steps = 5000;         // iterations, warmup included
  int warmup_steps = 500;   // labeled-only iterations before the prior is frozen
  int eval_every = 500;
  int supervised_per_triplet = 1;
  double triplet_labeled_prob = 0.5;
  int hidden = 16;
  AdamConfig adam;
  LossWeights weights;
  std::uint64_t seed = 1;
  int rect_size = 0;  // rectified grid size, 0 = heatmap size
  int prior_depth_samples = 256;
  MaskLookup prior_lookup = MaskLookup::conservative;

  void validate() const {
    require(steps >= 0 && warmup_steps >= 0 && eval_every > 0, "train: invalid step counts");
    require(supervised_per_triplet >= 1, "train: supervised_per_triplet must be >= 1");
    require(triplet_labeled_prob >= 0 && triplet_labeled_prob <= 1,
            "train: triplet_labeled_prob must lie in [0, 1]");
    require(hidden > 0 && adam.learning_rate > 0, "train: invalid model or optimizer settings");
    weights.validate();
  }
};

/// Three views of one frame; every view takes the target role once per batch
/// while the other two act as sources.
struct TripletBatch {
  std::array<int, 3> views{};

  /// (target, first source, second source) for rotation r.
  std::array<int, 3> roles(int r) const {
    return {views[(r + 2) % 3], views[r % 3], views[(r + 1) % 3]};
  }
};

struct StepLosses {
  int iteration = 0;
  LossParts parts;
  double total = 0.0;
};

struct MetricRow {
  int iteration = 0;
  double mean_iou = 0.0;
  double pixel_accuracy = 0.0;
};

/// Semi-supervised trainer for one shared weight vector. Every logical
/// network (supervised branch and the three triplet branches) evaluates the
/// same ModelWeights.
class Trainer {
 public:
  Trainer(const Dataset& data, TrainConfig cfg)
      : data_(data), cfg_(std::move(cfg)), rng_(cfg_.seed) {
    cfg_.validate();
    require(data_.labeled.size() >= 2, "train: need at least two labeled views");
    require(!data_.unlabeled.empty(), "train: need at least one unlabeled view");
    require(!data_.views.empty(), "train: empty dataset");
    weights_ = ModelWeights::random(data_.views.front().features.channels(), cfg_.hidden,
                                    cfg_.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<CameraView> cams;
    for (const auto& v : data_.views) cams.push_back(v.camera);
    sampling_ = rig_depth_sampling(cams, cfg_.prior_depth_samples);
  }

  const ModelWeights& weights() const { return weights_; }
  const AdamState& optimizer() const { return adam_; }
  int iteration() const { return iteration_; }
  const std::vector<StepLosses>& losses() const { return losses_; }
  const std::vector<MetricRow>& metrics() const { return metrics_; }
  const std::vector<std::optional<BinaryMask>>& pseudo_masks() const { return pseudo_; }
  const TrainConfig& config() const { return cfg_; }

  /// Runs iterations until `iteration()` reaches `until` (capped at cfg.steps).
  void run(int until = -1) {
    if (until < 0 || until > cfg_.steps) until = cfg_.steps;
    while (iteration_ < until) step();
  }

  /// One iteration: a supervised step, then (past warmup, when the regime
  /// uses unlabeled views) one triplet step per supervised_per_triplet.
  void step() {
    StepLosses rec;
    rec.iteration = iteration_;
    const auto sup = supervised_step();
    rec.parts.labeled += sup.parts.labeled;
    const bool augment = cfg_.regime != Regime::no_aug && iteration_ >= cfg_.warmup_steps;
    if (augment && iteration_ == cfg_.warmup_steps && pseudo_.empty()) build_pseudo_masks();
    if (augment && (iteration_ - cfg_.warmup_steps) % cfg_.supervised_per_triplet == 0) {
      const auto t = train_step(sample_triplet());
      rec.parts.labeled += t.parts.labeled;
      rec.parts.cross += t.parts.cross;
      rec.parts.prior += t.parts.prior;
    }
    rec.total = total_loss(rec.parts, cfg_.weights);
    losses_.push_back(rec);
    ++iteration_;
    if (iteration_ % cfg_.eval_every == 0 || iteration_ == cfg_.steps) {
      const auto rep = evaluate(data_.unlabeled);
      metrics_.push_back({iteration_, rep.mean_iou, rep.pixel_accuracy});
    }
  }

  /// Labeled cross-entropy on one labeled view.
  StepLosses supervised_step() {
    const int v = data_.labeled[rng_() % data_.labeled.size()];
    const auto& view = data_.views[v];
    const ForwardPass pass = forward_pass(view.features, weights_);
    const auto l = labeled_loss(pass.prob, *view.label);
    StepLosses rec;
    rec.parts.labeled = l.value;
    rec.total = total_loss(rec.parts, cfg_.weights);
    apply(backward(view.features, weights_, pass, l.grad));
    return rec;
  }

  /// One gradient step of the full objective on a triplet: labeled loss on
  /// its labeled views, cross-view supervision for each target rotation, and
  /// the prior on its unlabeled views.
  StepLosses train_step(const TripletBatch& batch) {
    std::array<ForwardPass, 3> pass;
    std::array<ProbMap, 3> pred;
    std::array<RealGrid, 3> grad;
    for (int k = 0; k < 3; ++k) {
      pass[k] = forward_pass(data_.views[batch.views[k]].features, weights_);
      pred[k] = pass[k].prob;
      grad[k] = RealGrid(pred[k].width(), pred[k].height(), 0.0);
    }
    auto slot = [&](int view) {
      for (int k = 0; k < 3; ++k)
        if (batch.views[k] == view) return k;
      return -1;
    };
    StepLosses rec;
    const auto& w = cfg_.weights;
    for (int k = 0; k < 3; ++k) {
      const auto& view = data_.views[batch.views[k]];
      if (view.label) {
        const auto l = labeled_loss(pred[k], *view.label);
        rec.parts.labeled += l.value;
        for (std::size_t i = 0; i < l.grad.size(); ++i) grad[k][i] += l.grad[i];
      } else if (cfg_.regime != Regime::no_aug && w.lambda_p > 0 &&
                 pseudo_.size() > static_cast<std::size_t>(batch.views[k]) &&
                 pseudo_[batch.views[k]]) {
        const auto l = prior_loss(pred[k], *pseudo_[batch.views[k]]);
        rec.parts.prior += l.value;
        for (std::size_t i = 0; i < l.grad.size(); ++i) grad[k][i] += w.lambda_p * l.grad[i];
      }
    }
    if (cfg_.regime == Regime::cross && w.lambda_s > 0) {
      for (int r = 0; r < 3; ++r) {
        const auto roles = batch.roles(r);
        const int t = slot(roles[0]), s1 = slot(roles[1]), s2 = slot(roles[2]);
        const auto& tv = data_.views[roles[0]];
        const std::vector<CameraView> cams{data_.views[roles[1]].camera,
                                           data_.views[roles[2]].camera};
        const auto pairing = reparam_coeffs(
            tv.camera, cams, cfg_.rect_size > 0 ? cfg_.rect_size : tv.camera.heatmap_size());
        const std::vector<ProbView> srcs{{pred[s1], cams[0]}, {pred[s2], cams[1]}};
        const auto [transferred, record] = belief_transfer_rectified(srcs, tv.camera, pairing);
        const auto l = cross_supervision_loss(pred[t], transferred);
        rec.parts.cross += l.value;
        for (std::size_t i = 0; i < l.grad_target.size(); ++i)
          grad[t][i] += w.lambda_s * l.grad_target[i];
        const auto g = transfer_backward(record, l.grad_transferred);
        for (std::size_t i = 0; i < g[0].size(); ++i) grad[s1][i] += w.lambda_s * g[0][i];
        for (std::size_t i = 0; i < g[1].size(); ++i) grad[s2][i] += w.lambda_s * g[1][i];
      }
    }
    rec.total = total_loss(rec.parts, w);
    std::vector<double> total(weights_.params().size(), 0.0);
    for (int k = 0; k < 3; ++k) {
      const auto gk = backward(data_.views[batch.views[k]].features, weights_, pass[k], grad[k]);
      for (std::size_t i = 0; i < total.size(); ++i) total[i] += gk[i];
    }
    apply(total);
    return rec;
  }

  /// Triplet of distinct views; with probability triplet_labeled_prob it is
  /// forced to contain a labeled view. Pairwise-degenerate triplets are
  /// redrawn.
  TripletBatch sample_triplet() {
    const int n = static_cast<int>(data_.views.size());
    require(n >= 3, "train: triplets need at least three views");
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int attempt = 0; attempt < 64; ++attempt) {
      TripletBatch b;
      std::vector<int> pool(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) pool[i] = i;
      int first = 0;
      if (uni(rng_) < cfg_.triplet_labeled_prob) {
        b.views[0] = data_.labeled[rng_() % data_.labeled.size()];
        pool.erase(std::find(pool.begin(), pool.end(), b.views[0]));
        first = 1;
      }
      for (int k = first; k < 3; ++k) {
        const std::size_t j = rng_() % pool.size();
        b.views[k] = pool[j];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
      }
      if (triplet_ok(b)) return b;
    }
    throw DegenerateError("train: could not draw a non-degenerate triplet");
  }

  /// Pseudo-binary superset masks for every unlabeled view: silhouette
  /// transfer from all other views (ground truth where labeled, binarized
  /// current predictions elsewhere).
  void build_pseudo_masks() {
    const std::size_t n = data_.views.size();
    std::vector<BinaryMask> masks(n);
    for (std::size_t v = 0; v < n; ++v)
      masks[v] = data_.views[v].label ? *data_.views[v].label
                                      : binarize(forward(data_.views[v].features, weights_));
    pseudo_.assign(n, std::nullopt);
    for (int j : data_.unlabeled) {
      std::vector<MaskView> sources;
      for (std::size_t v = 0; v < n; ++v)
        if (static_cast<int>(v) != j) sources.push_back({masks[v], data_.views[v].camera});
      pseudo_[j] = silhouette_transfer(sources, data_.views[j].camera, sampling_,
                                       cfg_.prior_lookup);
    }
  }

  MetricReport evaluate(const std::vector<int>& views) const {
    std::vector<ViewMetric> rows;
    for (int v : views) {
      const BinaryMask pred = binarize(forward(data_.views[v].features, weights_));
      rows.push_back({v, iou(pred, data_.truth[v]), pixel_accuracy(pred, data_.truth[v])});
    }
    return MetricReport::from_views(std::move(rows));
  }

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  bool triplet_ok(const TripletBatch& b) const {
    for (int r = 0; r < 3; ++r) {
      const auto roles = b.roles(r);
      try {
        rectify_pair(data_.views[roles[0]].camera, data_.views[roles[1]].camera);
      } catch (const DegenerateError&) {
        return false;
      }
    }
    return true;
  }

  void apply(const std::vector<double>& grad) {
    for (double g : grad)
      if (!std::isfinite(g)) throw DegenerateError("train: non-finite gradient");
    adam_update(weights_.params(), grad, adam_, cfg_.adam);
    if (!weights_.finite()) throw DegenerateError("train: weights became non-finite");
  }

  const Dataset& data_;
  TrainConfig cfg_;
  ModelWeights weights_;
  AdamState adam_;
  std::mt19937_64 rng_;
  DepthSampling sampling_;
  std::vector<std::optional<BinaryMask>> pseudo_;
  std::vector<StepLosses> losses_;
  std::vector<MetricRow> metrics_;
  int iteration_ = 0;
};

namespace detail {

inline std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline double parse_double(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw IoError("checkpoint: bad number '" + tok + "'");
  return v;
}

inline std::string expect(std::istream& is, const std::string& key) {
  std::string tok;
  if (!(is >> tok) || tok != key)
    throw IoError("checkpoint: expected '" + key + "', found '" + tok + "'");
  return tok;
}

inline std::vector<double> read_doubles(std::istream& is, std::size_t n) {
  std::vector<double> out(n);
  std::string tok;
  for (auto& v : out) {
    if (!(is >> tok)) throw IoError("checkpoint: truncated");
    v = parse_double(tok);
  }
  return out;
}

}  // namespace detail

// Text checkpoint; doubles are written as hex floats so a reload is exact.
inline void Trainer::save(std::ostream& os) const {
  os << "mvcs-checkpoint 1\n";
  os << "regime " << to_string(cfg_.regime) << "\n";
  os << "iteration " << iteration_ << "\n";
  os << "model " << weights_.channels() << " " << weights_.hidden() << "\n";
  os << "params";
  for (double v : weights_.params()) os << " " << detail::hex(v);
  os << "\nadam_step " << adam_.step << "\nadam_m " << adam_.m.size();
  for (double v : adam_.m) os << " " << detail::hex(v);
  os << "\nadam_v " << adam_.v.size();
  for (double v : adam_.v) os << " " << detail::hex(v);
  os << "\nrng " << rng_ << "\n";
  os << "pseudo " << pseudo_.size() << "\n";
  for (const auto& m : pseudo_) {
    if (!m) {
      os << "none\n";
      continue;
    }
    os << "mask " << m->width() << " " << m->height() << " ";
    for (auto v : m->values()) os << static_cast<char>('0' + v);
    os << "\n";
  }
  os << "losses " << losses_.size() << "\n";
  for (const auto& l : losses_)
    os << l.iteration << " " << detail::hex(l.parts.labeled) << " " << detail::hex(l.parts.cross)
       << " " << detail::hex(l.parts.prior) << " " << detail::hex(l.total) << "\n";
  os << "metrics " << metrics_.size() << "\n";
  for (const auto& m : metrics_)
    os << m.iteration << " " << detail::hex(m.mean_iou) << " " << detail::hex(m.pixel_accuracy)
       << "\n";
  os << "end\n";
}

inline void Trainer::load(std::istream& is) {
  using detail::expect;
  std::string tok;
  expect(is, "mvcs-checkpoint");
  if (!(is >> tok) || tok != "1") throw IoError("checkpoint: unsupported version");
  expect(is, "regime");
  is >> tok;
  if (parse_regime(tok) != cfg_.regime) throw IoError("checkpoint: regime mismatch");
  expect(is, "iteration");
  int it = 0;
  if (!(is >> it) || it < 0) throw IoError("checkpoint: bad iteration");
  expect(is, "model");
  int channels = 0, hidden = 0;
  if (!(is >> channels >> hidden) || channels != weights_.channels() ||
      hidden != weights_.hidden())
    throw IoError("checkpoint: model shape mismatch");
  expect(is, "params");
  ModelWeights w(channels, hidden);
  w.params() = detail::read_doubles(is, w.params().size());
  AdamState adam;
  expect(is, "adam_step");
  if (!(is >> adam.step)) throw IoError("checkpoint: bad adam step");
  std::size_t n = 0;
  expect(is, "adam_m");
  if (!(is >> n)) throw IoError("checkpoint: bad adam_m");
  adam.m = detail::read_doubles(is, n);
  expect(is, "adam_v");
  if (!(is >> n)) throw IoError("checkpoint: bad adam_v");
  adam.v = detail::read_doubles(is, n);
  expect(is, "rng");
  std::mt19937_64 rng;
  if (!(is >> rng)) throw IoError("checkpoint: bad rng state");
  expect(is, "pseudo");
  if (!(is >> n)) throw IoError("checkpoint: bad pseudo count");
  std::vector<std::optional<BinaryMask>> pseudo(n);
  for (auto& m : pseudo) {
    is >> tok;
    if (tok == "none") continue;
    if (tok != "mask") throw IoError("checkpoint: bad pseudo mask");
    int mw = 0, mh = 0;
    std::string bits;
    if (!(is >> mw >> mh >> bits) || mw <= 0 || mh <= 0 ||
        bits.size() != static_cast<std::size_t>(mw) * mh)
      throw IoError("checkpoint: bad pseudo mask");
    BinaryMask mask(mw, mh, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] != '0' && bits[i] != '1') throw IoError("checkpoint: bad pseudo mask bit");
      mask[i] = static_cast<std::uint8_t>(bits[i] - '0');
    }
    m = std::move(mask);
  }
  expect(is, "losses");
  if (!(is >> n)) throw IoError("checkpoint: bad loss count");
  std::vector<StepLosses> losses(n);
  for (auto& l : losses) {
    if (!(is >> l.iteration)) throw IoError("checkpoint: truncated losses");
    const auto v = detail::read_doubles(is, 4);
    l.parts = {v[0], v[1], v[2]};
    l.total = v[3];
  }
  expect(is, "metrics");
  if (!(is >> n)) throw IoError("checkpoint: bad metric count");
  std::vector<MetricRow> metrics(n);
  for (auto& m : metrics) {
    if (!(is >> m.iteration)) throw IoError("checkpoint: truncated metrics");
    const auto v = detail::read_doubles(is, 2);
    m.mean_iou = v[0];
    m.pixel_accuracy = v[1];
  }
  expect(is, "end");
  if (!w.finite()) throw IoError("checkpoint: non-finite weights");

  weights_ = std::move(w);
  adam_ = std::move(adam);
  rng_ = rng;
  pseudo_ = std::move(pseudo);
  losses_ = std::move(losses);
  metrics_ = std::move(metrics);
  iteration_ = it;
}

/// Full training run: labeled-only warmup, frozen bootstrapping prior, then
/// interleaved supervised and triplet steps.
struct TrainResult {
  ModelWeights weights;
  std::vector<StepLosses> losses;
  std::vector<MetricRow> metrics;
  MetricReport final_report;
};

inline TrainResult train(const Dataset& data, const TrainConfig& cfg) {
  Trainer t(data, cfg);
  t.run();
  return {t.weights(), t.losses(), t.metrics(), t.evaluate(data.unlabeled)};
}

}  // namespace mvcs
