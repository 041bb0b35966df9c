#include "dimsel/selector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "dimsel/error.hpp"
#include "dimsel/pca.hpp"

namespace dimsel {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

CheckpointMetric make_checkpoint_metric(const Vocabulary& vocab,
                                        const TaskSpec& task, int threads) {
  const AnalogyBenchmark* bench = nullptr;
  if (task.checkpoint_analogy)
    bench = &*task.checkpoint_analogy;
  else if (task.kind == TaskSpec::Kind::kAnalogy)
    bench = &task.analogy;
  if (!bench) return {};
  const bool lower = task.lowercase_words;
  return [&vocab, bench, threads, lower](const EmbeddingMatrix& m) {
    return evaluate_analogy(m, vocab, *bench, true, threads, lower).metric;
  };
}

std::vector<SweepRecord> sweep_task(const PcaModel& model,
                                    const Vocabulary& vocab,
                                    const TaskSpec& task, ScoreParams score,
                                    int threads) {
  std::vector<SweepRecord> records;
  if (task.kind == TaskSpec::Kind::kSimilarity) {
    const auto points = evaluate_similarity_sweep(model, vocab, task.similarity,
                                                  task.lowercase_words);
    records.reserve(points.size());
    for (const auto& p : points)
      records.push_back(
          {p.d, p.metric, score.score(p.d, p.metric), task.name()});
  } else {
    const int n = model.dim();
    const int stride = std::max(task.analogy_stride, 1);
    for (int d = n - 1; d >= 1; d -= stride) {
      const TruncatedEmbedding trunc = truncate(model, d);
      const EvalResult r = evaluate_analogy(trunc.values, vocab, task.analogy,
                                            true, threads,
                                            task.lowercase_words);
      records.push_back(
          {d, r.metric, score.score(d, r.metric), task.name()});
    }
  }
  return records;
}

}  // namespace

EvalResult evaluate_task(const EmbeddingMatrix& embedding,
                         const Vocabulary& vocab, const TaskSpec& task,
                         int threads) {
  if (task.kind == TaskSpec::Kind::kSimilarity)
    return evaluate_similarity(embedding, vocab, task.similarity,
                               task.lowercase_words);
  return evaluate_analogy(embedding, vocab, task.analogy, true, threads,
                          task.lowercase_words);
}

int select_from_records(std::span<const SweepRecord> records) {
  int best_d = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& rec : records) {
    if (!std::isfinite(rec.metric)) continue;
    if (rec.score > best_score ||
        (rec.score == best_score && rec.d < best_d)) {
      best_score = rec.score;
      best_d = rec.d;
    }
  }
  if (best_d < 0) throw Error("select_from_records: no finite metric");
  return best_d;
}

SelectionReport run_selection(std::span<const std::uint32_t> corpus,
                              const Vocabulary& vocab, int upper_bound,
                              const TaskSpec& task, ScoreParams score,
                              bool retrain, const TrainConfig& base_config,
                              int threads, SelectionArtifacts* artifacts) {
  if (upper_bound < 2) throw Error("run_selection: upper bound must be >= 2");
  if (static_cast<std::size_t>(upper_bound) >= vocab.size())
    throw Error("run_selection: upper bound must be below vocabulary size");
  if (score.lambda < 0) throw Error("run_selection: lambda must be >= 0");

  SelectionReport report;
  report.upper_bound = upper_bound;
  report.vocab_size = vocab.size();
  report.lambda = score.lambda;
  report.seed = base_config.seed;
  report.task = task.name();

  TrainConfig cfg = base_config;
  cfg.dim = upper_bound;
  cfg.threads = threads;

  auto t0 = Clock::now();
  TrainResult trained =
      train(corpus, vocab, cfg, make_checkpoint_metric(vocab, task, threads));
  report.timings["train"] = seconds_since(t0);

  t0 = Clock::now();
  PcaModel model = fit_pca(trained.embedding, PcaMode::kUncentered, threads);
  report.timings["pca"] = seconds_since(t0);

  t0 = Clock::now();
  report.records = sweep_task(model, vocab, task, score, threads);
  report.timings["sweep"] = seconds_since(t0);

  report.selected_d = select_from_records(report.records);
  report.embedding_params =
      report.vocab_size * static_cast<std::uint64_t>(report.selected_d);
  for (const auto& rec : report.records)
    if (rec.d == report.selected_d) report.truncated_metric = rec.metric;

  if (retrain) {
    TrainConfig retrain_cfg = base_config;
    retrain_cfg.dim = report.selected_d;
    retrain_cfg.threads = threads;
    retrain_cfg.seed = stage_seed(base_config.seed, "retrain");
    t0 = Clock::now();
    TrainResult second =
        train(corpus, vocab, retrain_cfg,
              make_checkpoint_metric(vocab, task, threads));
    report.timings["retrain"] = seconds_since(t0);
    report.retrained_metric =
        evaluate_task(second.embedding, vocab, task, threads).metric;
    report.final_metric_retrained = true;
    if (artifacts) artifacts->retrained = std::move(second.embedding);
  }
  if (artifacts) {
    artifacts->trained = std::move(trained.embedding);
    artifacts->train_log = std::move(trained.log);
    artifacts->model = std::move(model);
  }
  return report;
}

BaselineResult grid_search(std::span<const std::uint32_t> corpus,
                           const Vocabulary& vocab, std::span<const int> dims,
                           const TaskSpec& task, const TrainConfig& base_config,
                           int threads,
                           const std::function<void(const GridRecord&)>& sink) {
  if (dims.empty()) throw Error("grid_search: empty dimension list");
  for (int d : dims)
    if (d < 1) throw Error("grid_search: dimensions must be >= 1");

  BaselineResult result;
  result.records.reserve(dims.size());
  for (int dim : dims) {
    TrainConfig cfg = base_config;
    cfg.dim = dim;
    cfg.threads = threads;
    cfg.seed = stage_seed(base_config.seed, "grid", static_cast<std::uint64_t>(dim));
    try {
      const auto t0 = Clock::now();
      TrainResult trained =
          train(corpus, vocab, cfg, make_checkpoint_metric(vocab, task, threads));
      GridRecord rec;
      rec.dim = dim;
      rec.train_seconds = seconds_since(t0);
      const auto t1 = Clock::now();
      rec.metric = evaluate_task(trained.embedding, vocab, task, threads).metric;
      rec.eval_seconds = seconds_since(t1);
      result.records.push_back(rec);
      if (sink) sink(rec);
    } catch (const std::exception& e) {
      throw Error("grid_search: dim " + std::to_string(dim) + " failed (" +
                  e.what() + "); " + std::to_string(result.records.size()) +
                  " completed entries preserved");
    }
  }

  result.best_dim = result.records.front().dim;
  result.best_metric = result.records.front().metric;
  for (const auto& rec : result.records) {
    if (rec.metric > result.best_metric ||
        (rec.metric == result.best_metric && rec.dim < result.best_dim)) {
      result.best_dim = rec.dim;
      result.best_metric = rec.metric;
    }
  }
  return result;
}

BaselineComparison compare_to_baseline(const SelectionReport& report) {
  if (!report.baseline) throw Error("compare_to_baseline: no baseline present");
  const BaselineResult& base = *report.baseline;
  if (base.best_metric <= 0)
    throw Error("compare_to_baseline: baseline best metric <= 0, ratio undefined");
  BaselineComparison cmp;
  cmp.distance_d = std::abs(report.selected_d - base.best_dim);
  cmp.relative_performance = 100.0 * report.final_metric() / base.best_metric;
  return cmp;
}

ConsistencyResult consistency_check(std::span<const std::uint32_t> corpus,
                                    const Vocabulary& vocab,
                                    std::span<const int> bounds,
                                    const TaskSpec& task, ScoreParams score,
                                    const TrainConfig& base_config,
                                    int threads) {
  if (bounds.empty()) throw Error("consistency_check: no bounds given");
  for (int b : bounds)
    if (b < 2) throw Error("consistency_check: bounds must be >= 2");

  ConsistencyResult result;
  int lo = 0, hi = 0;
  for (int bound : bounds) {
    SelectionReport rep = run_selection(corpus, vocab, bound, task, score,
                                        /*retrain=*/false, base_config, threads);
    result.selected_per_bound.emplace_back(bound, rep.selected_d);
    if (result.reports.empty()) {
      lo = hi = rep.selected_d;
    } else {
      lo = std::min(lo, rep.selected_d);
      hi = std::max(hi, rep.selected_d);
    }
    result.reports.push_back(std::move(rep));
  }
  result.max_spread = hi - lo;
  return result;
}

SpeedupReport speedup_report(
    const std::map<std::string, double>& selection_timings,
    double grid_total_s) {
  SpeedupReport report;
  for (const char* phase : {"train", "pca", "sweep", "retrain"}) {
    auto it = selection_timings.find(phase);
    if (it != selection_timings.end()) report.ours_total_s += it->second;
  }
  report.grid_total_s = grid_total_s;
  report.speedup = report.grid_total_s / report.ours_total_s;
  return report;
}

}  // namespace dimsel
