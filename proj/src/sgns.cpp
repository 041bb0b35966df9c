#include "dimsel/sgns.hpp"

#include <omp.h>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dimsel {

std::pair<MatrixF, MatrixF> init_embeddings(std::size_t vocab_size, int dim,
                                            std::uint64_t seed) {
  if (vocab_size < 1 || dim < 1)
    throw Error("init_embeddings: vocab_size and dim must be >= 1");
  MatrixF input(vocab_size, dim);
  MatrixF output(vocab_size, dim);  // zeros
  SplitMix64 rng(stage_seed(seed, "init"));
  const float scale = 0.5f / static_cast<float>(dim);
  for (std::size_t r = 0; r < vocab_size; ++r)
    for (int c = 0; c < dim; ++c)
      input(r, c) = (rng.uniform_float() * 2.0f - 1.0f) * scale;
  return {std::move(input), std::move(output)};
}

namespace {

struct EpochContext {
  std::span<const std::uint32_t> corpus;
  const NoiseTable* noise;
  const TrainConfig* config;
  MatrixF* input;
  MatrixF* output;
  std::uint64_t total_updates;  // epochs * corpus size, for the lr schedule
};

float lr_at(const TrainConfig& cfg, std::uint64_t processed,
            std::uint64_t total) {
  const double frac =
      static_cast<double>(processed) / static_cast<double>(total);
  const double lr = cfg.lr_start - (cfg.lr_start - cfg.lr_end) * frac;
  return static_cast<float>(std::max<double>(lr, cfg.lr_end));
}

// Processes corpus positions [begin, end) with one private RNG. Windows are
// clipped at the full corpus bounds, not at shard edges.
void run_range(const EpochContext& ctx, std::size_t begin, std::size_t end,
               SplitMix64 rng, std::atomic<std::uint64_t>& processed) {
  const TrainConfig& cfg = *ctx.config;
  const auto n = ctx.corpus.size();
  std::vector<std::uint32_t> negatives;
  negatives.reserve(cfg.negatives);

  std::uint64_t local = 0;
  std::uint64_t base = processed.load(std::memory_order_relaxed);
  float lr = lr_at(cfg, base, ctx.total_updates);
  constexpr std::uint64_t kLrFlush = 8192;

  for (std::size_t pos = begin; pos < end; ++pos) {
    if (++local % kLrFlush == 0) {
      base = processed.fetch_add(kLrFlush, std::memory_order_relaxed) + kLrFlush;
      lr = lr_at(cfg, base, ctx.total_updates);
    }
    const std::uint32_t center = ctx.corpus[pos];
    const std::uint64_t b = 1 + rng.below(cfg.window);
    const std::size_t lo = pos >= b ? pos - b : 0;
    const std::size_t hi = std::min<std::size_t>(pos + b, n - 1);
    for (std::size_t cpos = lo; cpos <= hi; ++cpos) {
      if (cpos == pos) continue;
      const std::uint32_t context = ctx.corpus[cpos];
      negatives.clear();
      for (int k = 0; k < cfg.negatives; ++k) {
        const std::uint32_t neg = ctx.noise->sample(rng);
        if (neg == context) continue;  // word2vec convention: drop the draw
        negatives.push_back(neg);
      }
      sgd_step<float>(center, context, negatives, lr, *ctx.input, *ctx.output);
    }
  }
  processed.fetch_add(local % kLrFlush, std::memory_order_relaxed);
}

void run_epoch_serial(const EpochContext& ctx, int epoch,
                      std::atomic<std::uint64_t>& processed) {
  SplitMix64 rng(stage_seed(ctx.config->seed, "epoch",
                            static_cast<std::uint64_t>(epoch) << 16));
  run_range(ctx, 0, ctx.corpus.size(), rng, processed);
}

void run_epoch_parallel(const EpochContext& ctx, int epoch,
                        std::atomic<std::uint64_t>& processed) {
  const int threads = ctx.config->threads;
  const std::size_t n = ctx.corpus.size();
#pragma omp parallel num_threads(threads)
  {
    const int tid = omp_get_thread_num();
    const std::size_t begin = n * tid / threads;
    const std::size_t end = n * (tid + 1) / threads;
    SplitMix64 rng(stage_seed(ctx.config->seed, "epoch",
                              (static_cast<std::uint64_t>(epoch) << 16) |
                                  static_cast<std::uint64_t>(tid)));
    run_range(ctx, begin, end, rng, processed);
  }
}

}  // namespace

TrainResult train(std::span<const std::uint32_t> corpus,
                  const Vocabulary& vocab, const TrainConfig& config,
                  const CheckpointMetric& checkpoint_metric) {
  config.validate();
  if (corpus.empty()) throw Error("train: empty corpus");
  for (std::uint32_t id : corpus)
    if (id >= vocab.size()) throw Error("train: corpus id out of range");

  auto [input, output] = init_embeddings(vocab.size(), config.dim, config.seed);
  const NoiseTable noise = build_noise_table(
      vocab, config.noise_power, std::max<std::size_t>(vocab.size(), 1 << 20));

  EpochContext ctx{corpus,  &noise,
                   &config, &input,
                   &output, static_cast<std::uint64_t>(config.epochs) *
                                corpus.size()};

  TrainResult result;
  std::atomic<std::uint64_t> processed{0};
  MatrixF best;
  double best_metric = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;

  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.threads <= 1)
      run_epoch_serial(ctx, epoch, processed);
    else
      run_epoch_parallel(ctx, epoch, processed);

    TrainLogEntry entry;
    entry.epoch = epoch;
    entry.lr = lr_at(config, processed.load(), ctx.total_updates);
    entry.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();

    const bool evaluate =
        checkpoint_metric &&
        (epoch % config.eval_every == 0 || epoch == config.epochs);
    if (evaluate) {
      try {
        const double metric = checkpoint_metric(input);
        entry.metric = metric;
        if (metric > best_metric) {
          best_metric = metric;
          best = input;
          best_epoch = epoch;
        }
      } catch (const std::exception& e) {
        result.events.push_back("checkpoint evaluation failed at epoch " +
                                std::to_string(epoch) + ": " + e.what());
      }
    }
    result.log.push_back(std::move(entry));
  }

  if (best_epoch > 0) {
    result.embedding = std::move(best);
    result.best_metric = best_metric;
    result.best_epoch = best_epoch;
  } else {
    result.embedding = std::move(input);
    result.best_epoch = config.epochs;
  }
  return result;
}

void save_embedding(const EmbeddingMatrix& embedding, const Vocabulary& vocab,
                    const std::filesystem::path& path) {
  if (embedding.rows() != vocab.size())
    throw Error("save_embedding: matrix rows do not match vocabulary size");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_embedding: cannot open " + path.string());
  out << embedding.rows() << ' ' << embedding.cols() << '\n';
  char buf[64];
  for (std::size_t r = 0; r < embedding.rows(); ++r) {
    out << vocab.tokens[r];
    for (std::size_t c = 0; c < embedding.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), " %.9g",
                    static_cast<double>(embedding(r, c)));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error("save_embedding: write failed for " + path.string());
}

std::pair<EmbeddingMatrix, Vocabulary> load_embedding(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_embedding: cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw Error("load_embedding: empty file " + path.string());
  std::size_t rows = 0, cols = 0;
  {
    std::istringstream header(line);
    if (!(header >> rows >> cols) || rows == 0 || cols == 0)
      throw Error("load_embedding: malformed header at line 1 in " +
                  path.string());
    std::string extra;
    if (header >> extra)
      throw Error("load_embedding: malformed header at line 1 in " +
                  path.string());
  }

  EmbeddingMatrix embedding(rows, cols);
  Vocabulary vocab;
  vocab.tokens.reserve(rows);
  std::size_t lineno = 1;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line))
      throw Error("load_embedding: expected " + std::to_string(rows) +
                  " rows, file ends at line " + std::to_string(lineno));
    ++lineno;
    std::istringstream row(line);
    std::string word;
    if (!(row >> word))
      throw Error("load_embedding: missing word at line " +
                  std::to_string(lineno));
    for (std::size_t c = 0; c < cols; ++c) {
      double v;
      if (!(row >> v))
        throw Error("load_embedding: row has fewer than " +
                    std::to_string(cols) + " values at line " +
                    std::to_string(lineno));
      embedding(r, c) = static_cast<float>(v);
    }
    double extra;
    if (row >> extra)
      throw Error("load_embedding: row has more than " + std::to_string(cols) +
                  " values at line " + std::to_string(lineno));
    const auto id = static_cast<std::uint32_t>(r);
    if (!vocab.index.emplace(word, id).second)
      throw Error("load_embedding: duplicate word at line " +
                  std::to_string(lineno));
    vocab.tokens.push_back(std::move(word));
    vocab.counts.push_back(1);  // frequencies are not stored in this format
    vocab.total_count += 1;
  }
  return {std::move(embedding), std::move(vocab)};
}

void save_train_log(const std::vector<TrainLogEntry>& log,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_train_log: cannot open " + path.string());
  out << "epoch,metric,lr,elapsed_s\n";
  char buf[128];
  for (const auto& e : log) {
    if (e.metric)
      std::snprintf(buf, sizeof(buf), "%d,%.6f,%.8g,%.3f\n", e.epoch,
                    *e.metric, e.lr, e.elapsed_s);
    else
      std::snprintf(buf, sizeof(buf), "%d,,%.8g,%.3f\n", e.epoch, e.lr,
                    e.elapsed_s);
    out << buf;
  }
}

}  // namespace dimsel
