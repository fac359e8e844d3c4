#pragma once

/**
 * Toy two-moons classification pipeline that manufactures genuine checkpoint
 * pairs: a small ReLU MLP is trained with seeded mini-batch gradient descent
 * and snapshotted at requested steps. Snapshots of one run share tensor names
 * and shapes, so they are merge-compatible by construction.
 *
 * Training is single-threaded float32, so two runs with the same seed emit
 * byte-identical checkpoints. Evaluation runs the forward pass in double.
 * Plain gradient descent only: checkpoint == parameters, nothing else to
 * average.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ckmerge/checkpoint.hpp"
#include "ckmerge/errors.hpp"
#include "ckmerge/rng.hpp"

namespace ckmerge {

struct ToyTask {
  int n_train = 256;
  int n_dev = 256;
  int n_test = 512;
  double noise = 0.2;
  std::uint64_t seed = 1;
};

enum class Split { train, dev, test };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

struct ToyDataset {
  std::vector<std::array<double, 2>> x;
  std::vector<int> y;
};

// Two interleaved half-moons; sample i belongs to class i % 2, so every
// prefix of the dataset is balanced within one sample.
inline ToyDataset make_moons(const ToyTask& task, Split split) {
  const int n = split == Split::train ? task.n_train
              : split == Split::dev   ? task.n_dev
                                      : task.n_test;
  if (n < 1) throw DomainError("split size must be >= 1");
  Rng rng(substream(task.seed, static_cast<std::uint64_t>(split) + 101));
  ToyDataset data;
  data.x.reserve(static_cast<std::size_t>(n));
  data.y.reserve(static_cast<std::size_t>(n));
  constexpr double kPi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    const double t = rng.uniform(0.0, kPi);
    double px, py;
    if (label == 0) {
      px = std::cos(t);
      py = std::sin(t);
    } else {
      px = 1.0 - std::cos(t);
      py = 0.5 - std::sin(t);
    }
    px += task.noise * rng.normal();
    py += task.noise * rng.normal();
    data.x.push_back({px, py});
    data.y.push_back(label);
  }
  return data;
}

// ============================================================================
// Model
// ============================================================================

struct ToyModelConfig {
  int hidden1 = 16;
  int hidden2 = 16;
};

inline constexpr int kToyInputDim = 2;
inline constexpr int kToyNumClasses = 2;

namespace detail {

// Flat float parameter block with the same layout as the checkpoint tensors.
struct MlpParams {
  ToyModelConfig cfg;
  std::vector<float> w1, b1, w2, b2, w3, b3;  // weights row-major [out, in]

  static MlpParams init(const ToyModelConfig& cfg, std::uint64_t seed) {
    MlpParams p;
    p.cfg = cfg;
    Rng rng(substream(seed, 7));
    auto he_fill = [&rng](std::vector<float>& v, int out, int in) {
      v.resize(static_cast<std::size_t>(out) * in);
      const double scale = std::sqrt(2.0 / in);
      for (float& x : v) x = static_cast<float>(scale * rng.normal());
    };
    he_fill(p.w1, cfg.hidden1, kToyInputDim);
    p.b1.assign(static_cast<std::size_t>(cfg.hidden1), 0.0f);
    he_fill(p.w2, cfg.hidden2, cfg.hidden1);
    p.b2.assign(static_cast<std::size_t>(cfg.hidden2), 0.0f);
    he_fill(p.w3, kToyNumClasses, cfg.hidden2);
    p.b3.assign(static_cast<std::size_t>(kToyNumClasses), 0.0f);
    return p;
  }

  Checkpoint to_checkpoint(int step) const {
    Checkpoint ckpt;
    auto put = [&ckpt](const std::string& name, std::vector<std::int64_t> shape,
                       const std::vector<float>& data) {
      ckpt.tensors.emplace(name, Tensor{std::move(shape), data});
    };
    put("fc1.weight", {cfg.hidden1, kToyInputDim}, w1);
    put("fc1.bias", {cfg.hidden1}, b1);
    put("fc2.weight", {cfg.hidden2, cfg.hidden1}, w2);
    put("fc2.bias", {cfg.hidden2}, b2);
    put("fc3.weight", {kToyNumClasses, cfg.hidden2}, w3);
    put("fc3.bias", {kToyNumClasses}, b3);
    ckpt.meta["step"] = std::to_string(step);
    return ckpt;
  }
};

}  // namespace detail

struct TrainConfig {
  double lr = 0.2;
  int steps = 1000;
  int batch_size = 32;
  std::vector<int> snapshot_steps = {900, 1000};
};

// Trains the MLP on the task's train split with seeded mini-batch gradient
// descent on softmax cross-entropy. Emits one checkpoint per snapshot step
// (step 0 = the seeded initialization).
inline std::vector<Checkpoint> make_toy_checkpoints(const ToyTask& task,
                                                    const ToyModelConfig& model_cfg,
                                                    const TrainConfig& train_cfg,
                                                    std::uint64_t seed) {
  if (train_cfg.steps < 0 || train_cfg.batch_size < 1 || !(train_cfg.lr > 0.0))
    throw DomainError("bad training configuration");
  for (std::size_t i = 0; i < train_cfg.snapshot_steps.size(); ++i) {
    const int s = train_cfg.snapshot_steps[i];
    if (s < 0 || s > train_cfg.steps)
      throw DomainError("snapshot step " + std::to_string(s) + " outside [0, steps]");
    if (i > 0 && s < train_cfg.snapshot_steps[i - 1])
      throw DomainError("snapshot steps must be sorted ascending");
  }

  const ToyDataset train = make_moons(task, Split::train);
  detail::MlpParams p = detail::MlpParams::init(model_cfg, seed);
  Rng batch_rng(substream(seed, 13));

  const int h1 = model_cfg.hidden1;
  const int h2 = model_cfg.hidden2;
  std::vector<float> a1(static_cast<std::size_t>(h1)), a2(static_cast<std::size_t>(h2));
  std::vector<float> g1(static_cast<std::size_t>(h1)), g2(static_cast<std::size_t>(h2));
  std::vector<float> gw1(p.w1.size()), gb1(p.b1.size());
  std::vector<float> gw2(p.w2.size()), gb2(p.b2.size());
  std::vector<float> gw3(p.w3.size()), gb3(p.b3.size());

  std::vector<Checkpoint> snapshots;
  std::size_t next_snapshot = 0;
  auto maybe_snapshot = [&](int step) {
    while (next_snapshot < train_cfg.snapshot_steps.size() &&
           train_cfg.snapshot_steps[next_snapshot] == step) {
      snapshots.push_back(p.to_checkpoint(step));
      ++next_snapshot;
    }
  };
  maybe_snapshot(0);

  for (int step = 1; step <= train_cfg.steps; ++step) {
    std::fill(gw1.begin(), gw1.end(), 0.0f);
    std::fill(gb1.begin(), gb1.end(), 0.0f);
    std::fill(gw2.begin(), gw2.end(), 0.0f);
    std::fill(gb2.begin(), gb2.end(), 0.0f);
    std::fill(gw3.begin(), gw3.end(), 0.0f);
    std::fill(gb3.begin(), gb3.end(), 0.0f);

    float batch_loss = 0.0f;
    for (int b = 0; b < train_cfg.batch_size; ++b) {
      const std::size_t idx = batch_rng.index(train.x.size());
      const float x0 = static_cast<float>(train.x[idx][0]);
      const float x1 = static_cast<float>(train.x[idx][1]);
      const int label = train.y[idx];

      for (int i = 0; i < h1; ++i) {
        const float z = p.w1[static_cast<std::size_t>(i) * 2] * x0 +
                        p.w1[static_cast<std::size_t>(i) * 2 + 1] * x1 +
                        p.b1[static_cast<std::size_t>(i)];
        a1[static_cast<std::size_t>(i)] = z > 0.0f ? z : 0.0f;
      }
      for (int i = 0; i < h2; ++i) {
        float z = p.b2[static_cast<std::size_t>(i)];
        for (int j = 0; j < h1; ++j)
          z += p.w2[static_cast<std::size_t>(i) * h1 + j] * a1[static_cast<std::size_t>(j)];
        a2[static_cast<std::size_t>(i)] = z > 0.0f ? z : 0.0f;
      }
      float logits[kToyNumClasses];
      for (int c = 0; c < kToyNumClasses; ++c) {
        float z = p.b3[static_cast<std::size_t>(c)];
        for (int j = 0; j < h2; ++j)
          z += p.w3[static_cast<std::size_t>(c) * h2 + j] * a2[static_cast<std::size_t>(j)];
        logits[c] = z;
      }

      const float mx = std::max(logits[0], logits[1]);
      const float e0 = std::exp(logits[0] - mx);
      const float e1 = std::exp(logits[1] - mx);
      const float denom = e0 + e1;
      const float prob[kToyNumClasses] = {e0 / denom, e1 / denom};
      batch_loss += -std::log(std::max(prob[label], 1e-12f));

      float dlogits[kToyNumClasses];
      for (int c = 0; c < kToyNumClasses; ++c)
        dlogits[c] = prob[c] - (c == label ? 1.0f : 0.0f);

      for (int c = 0; c < kToyNumClasses; ++c) {
        gb3[static_cast<std::size_t>(c)] += dlogits[c];
        for (int j = 0; j < h2; ++j)
          gw3[static_cast<std::size_t>(c) * h2 + j] += dlogits[c] * a2[static_cast<std::size_t>(j)];
      }
      for (int j = 0; j < h2; ++j) {
        float g = 0.0f;
        for (int c = 0; c < kToyNumClasses; ++c)
          g += dlogits[c] * p.w3[static_cast<std::size_t>(c) * h2 + j];
        g2[static_cast<std::size_t>(j)] = a2[static_cast<std::size_t>(j)] > 0.0f ? g : 0.0f;
      }
      for (int i = 0; i < h2; ++i) {
        gb2[static_cast<std::size_t>(i)] += g2[static_cast<std::size_t>(i)];
        for (int j = 0; j < h1; ++j)
          gw2[static_cast<std::size_t>(i) * h1 + j] +=
              g2[static_cast<std::size_t>(i)] * a1[static_cast<std::size_t>(j)];
      }
      for (int j = 0; j < h1; ++j) {
        float g = 0.0f;
        for (int i = 0; i < h2; ++i)
          g += g2[static_cast<std::size_t>(i)] * p.w2[static_cast<std::size_t>(i) * h1 + j];
        g1[static_cast<std::size_t>(j)] = a1[static_cast<std::size_t>(j)] > 0.0f ? g : 0.0f;
      }
      for (int i = 0; i < h1; ++i) {
        gb1[static_cast<std::size_t>(i)] += g1[static_cast<std::size_t>(i)];
        gw1[static_cast<std::size_t>(i) * 2] += g1[static_cast<std::size_t>(i)] * x0;
        gw1[static_cast<std::size_t>(i) * 2 + 1] += g1[static_cast<std::size_t>(i)] * x1;
      }
    }

    if (!std::isfinite(batch_loss))
      throw TrainingError("non-finite loss at step " + std::to_string(step));

    const float scale = static_cast<float>(train_cfg.lr / train_cfg.batch_size);
    auto apply = [scale](std::vector<float>& w, const std::vector<float>& g) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= scale * g[i];
    };
    apply(p.w1, gw1);
    apply(p.b1, gb1);
    apply(p.w2, gw2);
    apply(p.b2, gb2);
    apply(p.w3, gw3);
    apply(p.b3, gb3);

    maybe_snapshot(step);
  }
  return snapshots;
}

// ============================================================================
// Evaluation
// ============================================================================

namespace detail {

// Architecture read back from checkpoint tensor shapes. Throws CompatError
// when the expected tensors are missing or inconsistent.
struct MlpView {
  int h1 = 0, h2 = 0;
  const Tensor *w1, *b1, *w2, *b2, *w3, *b3;

  static MlpView of(const Checkpoint& ckpt) {
    auto need = [&ckpt](const char* name) -> const Tensor* {
      auto it = ckpt.tensors.find(name);
      if (it == ckpt.tensors.end()) {
        CompatReport r;
        r.compatible = false;
        r.mismatches.push_back({name, MismatchKind::missing_in_a, "expected MLP tensor"});
        throw CompatError(std::move(r));
      }
      return &it->second;
    };
    MlpView v;
    v.w1 = need("fc1.weight");
    v.b1 = need("fc1.bias");
    v.w2 = need("fc2.weight");
    v.b2 = need("fc2.bias");
    v.w3 = need("fc3.weight");
    v.b3 = need("fc3.bias");
    auto fail = [](const std::string& detail) {
      CompatReport r;
      r.compatible = false;
      r.mismatches.push_back({"fc*", MismatchKind::shape_mismatch, detail});
      throw CompatError(std::move(r));
    };
    if (v.w1->shape.size() != 2 || v.w1->shape[1] != kToyInputDim)
      fail("fc1.weight must be [h1, 2]");
    v.h1 = static_cast<int>(v.w1->shape[0]);
    if (v.w2->shape.size() != 2 || v.w2->shape[1] != v.h1) fail("fc2.weight must be [h2, h1]");
    v.h2 = static_cast<int>(v.w2->shape[0]);
    if (v.w3->shape.size() != 2 || v.w3->shape[0] != kToyNumClasses ||
        v.w3->shape[1] != v.h2)
      fail("fc3.weight must be [2, h2]");
    if (v.b1->numel() != v.h1 || v.b2->numel() != v.h2 || v.b3->numel() != kToyNumClasses)
      fail("bias shapes inconsistent with weights");
    return v;
  }

  // Double-precision forward pass; returns the predicted class, ties to 0.
  int predict(const std::array<double, 2>& x) const {
    std::vector<double> a1(static_cast<std::size_t>(h1));
    for (int i = 0; i < h1; ++i) {
      const double z = static_cast<double>(w1->data[static_cast<std::size_t>(i) * 2]) * x[0] +
                       static_cast<double>(w1->data[static_cast<std::size_t>(i) * 2 + 1]) * x[1] +
                       static_cast<double>(b1->data[static_cast<std::size_t>(i)]);
      a1[static_cast<std::size_t>(i)] = z > 0.0 ? z : 0.0;
    }
    std::vector<double> a2(static_cast<std::size_t>(h2));
    for (int i = 0; i < h2; ++i) {
      double z = static_cast<double>(b2->data[static_cast<std::size_t>(i)]);
      for (int j = 0; j < h1; ++j)
        z += static_cast<double>(w2->data[static_cast<std::size_t>(i) * h1 + j]) *
             a1[static_cast<std::size_t>(j)];
      a2[static_cast<std::size_t>(i)] = z > 0.0 ? z : 0.0;
    }
    double logits[kToyNumClasses];
    for (int c = 0; c < kToyNumClasses; ++c) {
      double z = static_cast<double>(b3->data[static_cast<std::size_t>(c)]);
      for (int j = 0; j < h2; ++j)
        z += static_cast<double>(w3->data[static_cast<std::size_t>(c) * h2 + j]) *
             a2[static_cast<std::size_t>(j)];
      logits[c] = z;
    }
    return logits[1] > logits[0] ? 1 : 0;
  }
};

inline double accuracy_on(const MlpView& view, const ToyDataset& data, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DomainError("fraction must lie in (0, 1]");
  const std::size_t m = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(data.x.size())));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < m; ++i)
    if (view.predict(data.x[i]) == data.y[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(m);
}

}  // namespace detail

// Accuracy of the checkpoint on the first ceil(fraction * n) samples of the
// split, in generation order.
inline double eval_model(const Checkpoint& ckpt, const ToyTask& task, Split split,
                         double fraction = 1.0) {
  const detail::MlpView view = detail::MlpView::of(ckpt);
  const ToyDataset data = make_moons(task, split);
  return detail::accuracy_on(view, data, fraction);
}

// Evaluator with the split cached, for sweeps and optimization loops that
// score many checkpoints against the same data.
class ToyEvaluator {
 public:
  ToyEvaluator(const ToyTask& task, Split split, double fraction = 1.0)
      : data_(make_moons(task, split)), fraction_(fraction) {}

  double operator()(const Checkpoint& ckpt) const {
    return detail::accuracy_on(detail::MlpView::of(ckpt), data_, fraction_);
  }

 private:
  ToyDataset data_;
  double fraction_;
};

}  // namespace ckmerge
