#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dimsel/corpus.hpp"
#include "dimsel/error.hpp"
#include "dimsel/matrix.hpp"

namespace dimsel {

// Row i holds the input ("word") vector for vocabulary id i.
using EmbeddingMatrix = MatrixF;

struct TrainConfig {
  int dim = 100;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  float lr_start = 0.025f;
  float lr_end = 0.025f * 1e-4f;
  double subsample_t = 1e-4;  // applied by encode(), recorded here
  double noise_power = 0.75;
  std::uint64_t seed = 1;
  int eval_every = 10;
  int threads = 1;

  void validate() const {
    if (dim < 1) throw Error("train: dim must be >= 1");
    if (window < 1) throw Error("train: window must be >= 1");
    if (negatives < 1) throw Error("train: negatives must be >= 1");
    if (epochs < 1) throw Error("train: epochs must be >= 1");
    if (!(lr_end > 0 && lr_end <= lr_start))
      throw Error("train: need 0 < lr_end <= lr_start");
    if (eval_every < 1) throw Error("train: eval_every must be >= 1");
    if (threads < 1) throw Error("train: threads must be >= 1");
  }
};

struct TrainLogEntry {
  int epoch = 0;
  double lr = 0;
  double elapsed_s = 0;
  std::optional<double> metric;  // present on checkpoint-evaluation epochs
};

struct TrainResult {
  EmbeddingMatrix embedding;  // best checkpoint (final state if no metric)
  std::vector<TrainLogEntry> log;
  std::optional<double> best_metric;
  int best_epoch = 0;
  std::vector<std::string> events;  // skipped-checkpoint notices etc.
};

using CheckpointMetric = std::function<double(const EmbeddingMatrix&)>;

// Input matrix uniform in [-0.5/dim, +0.5/dim], output matrix all zeros;
// deterministic per seed.
std::pair<MatrixF, MatrixF> init_embeddings(std::size_t vocab_size, int dim,
                                            std::uint64_t seed);

// log(sigmoid(x)) without overflow for |x| up to ~700.
template <typename Real>
inline Real log_sigmoid(Real x) {
  return -(std::log1p(std::exp(-std::abs(x))) + std::max(-x, Real(0)));
}

// -log s(c.v) - sum_k log s(-n_k.v); always >= 0 and finite for finite input.
template <typename Real>
Real pair_loss(std::span<const Real> center, std::span<const Real> context,
               const std::vector<std::vector<Real>>& negative_contexts) {
  auto dot = [](std::span<const Real> u, std::span<const Real> v) {
    Real s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
  };
  Real loss = -log_sigmoid(dot(center, context));
  for (const auto& neg : negative_contexts)
    loss -= log_sigmoid(-dot(center, std::span<const Real>(neg)));
  return loss;
}

// One exact gradient step of pair_loss at learning rate lr. The center-row
// gradient is accumulated across the positive and all negatives and applied
// once; all sigmoids are computed before any row moves, so the step stays the
// exact gradient even with duplicate ids.
template <typename Real>
void sgd_step(std::uint32_t center, std::uint32_t context,
              std::span<const std::uint32_t> negatives, Real lr,
              Matrix<Real>& input, Matrix<Real>& output) {
  const std::size_t dim = input.cols();
  auto v = input.row(center);

  thread_local std::vector<Real> center_grad;
  thread_local std::vector<Real> coeffs;
  center_grad.assign(dim, Real(0));
  coeffs.resize(negatives.size() + 1);

  // Pass 1: sigmoids from pristine rows.
  for (std::size_t t = 0; t <= negatives.size(); ++t) {
    const std::uint32_t target = t == 0 ? context : negatives[t - 1];
    const Real label = t == 0 ? Real(1) : Real(0);
    auto o = output.row(target);
    Real d = 0;
    for (std::size_t i = 0; i < dim; ++i) d += v[i] * o[i];
    if (!std::isfinite(static_cast<double>(d)))
      throw Error("sgd_step: non-finite activation (learning rate too high?)");
    const Real sigma = Real(1) / (Real(1) + std::exp(-d));
    coeffs[t] = (label - sigma) * lr;
  }
  // Pass 2: apply.
  for (std::size_t t = 0; t <= negatives.size(); ++t) {
    const std::uint32_t target = t == 0 ? context : negatives[t - 1];
    const Real g = coeffs[t];
    auto o = output.row(target);
    for (std::size_t i = 0; i < dim; ++i) {
      center_grad[i] += g * o[i];
      o[i] += g * v[i];
    }
  }
  for (std::size_t i = 0; i < dim; ++i) v[i] += center_grad[i];
}

// Windowed SGNS over the encoded corpus with linear lr decay and optional
// best-checkpoint retention. Single-threaded runs are bit-reproducible per
// seed; multi-threaded runs use unsynchronized row updates over disjoint
// corpus shards (the usual benign-race contract).
TrainResult train(std::span<const std::uint32_t> corpus,
                  const Vocabulary& vocab, const TrainConfig& config,
                  const CheckpointMetric& checkpoint_metric = {});

// word2vec text format: header "<rows> <cols>", then one `word v1 .. vd` line
// per row at 9 significant digits.
void save_embedding(const EmbeddingMatrix& embedding, const Vocabulary& vocab,
                    const std::filesystem::path& path);
std::pair<EmbeddingMatrix, Vocabulary> load_embedding(
    const std::filesystem::path& path);

// CSV `epoch,metric,lr,elapsed_s`; metric column empty on epochs without a
// checkpoint evaluation.
void save_train_log(const std::vector<TrainLogEntry>& log,
                    const std::filesystem::path& path);

}  // namespace dimsel
