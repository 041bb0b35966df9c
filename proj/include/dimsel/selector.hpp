#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dimsel/corpus.hpp"
#include "dimsel/eval.hpp"
#include "dimsel/pca.hpp"
#include "dimsel/sgns.hpp"

namespace dimsel {

// f(d, metric) = metric - lambda * d. The penalty balances model size
// against task performance.
struct ScoreParams {
  double lambda = 0.01;

  double score(int d, double metric) const {
    return metric - lambda * static_cast<double>(d);
  }
};

struct SweepRecord {
  int d = 0;  // retained dimensions; the removal loop's i maps to d = i-1
  double metric = 0;
  double score = 0;
  std::string task;
};

struct GridRecord {
  int dim = 0;
  double metric = 0;
  double train_seconds = 0;
  double eval_seconds = 0;
};

struct BaselineResult {
  std::vector<GridRecord> records;
  int best_dim = 0;
  double best_metric = 0;
};

struct SelectionReport {
  int selected_d = 0;
  int upper_bound = 0;
  std::uint64_t vocab_size = 0;
  std::uint64_t embedding_params = 0;  // vocab_size * selected_d
  double lambda = 0;
  std::uint64_t seed = 0;
  std::string task;
  std::vector<SweepRecord> records;
  std::map<std::string, double> timings;  // phase -> seconds
  double truncated_metric = 0;            // sweep metric at selected_d
  std::optional<double> retrained_metric;
  bool final_metric_retrained = false;
  std::optional<BaselineResult> baseline;

  double final_metric() const {
    return retrained_metric ? *retrained_metric : truncated_metric;
  }
};

struct TaskSpec {
  enum class Kind { kSimilarity, kAnalogy };
  Kind kind = Kind::kSimilarity;
  SimilarityBenchmark similarity;
  AnalogyBenchmark analogy;
  // When present, training keeps the checkpoint scoring best on this set.
  std::optional<AnalogyBenchmark> checkpoint_analogy;
  int analogy_stride = 10;  // analogy sweeps have no O(1) update trick
  bool lowercase_words = false;

  std::string name() const {
    return kind == Kind::kSimilarity ? similarity.name : "analogy";
  }
};

EvalResult evaluate_task(const EmbeddingMatrix& embedding,
                         const Vocabulary& vocab, const TaskSpec& task,
                         int threads);

// Argmax of score over records with finite metric, smallest d on ties.
int select_from_records(std::span<const SweepRecord> records);

// Intermediate products a caller may want to persist.
struct SelectionArtifacts {
  EmbeddingMatrix trained;  // upper-bound embedding (best checkpoint)
  std::vector<TrainLogEntry> train_log;
  PcaModel model;
  EmbeddingMatrix retrained;  // filled only when retraining was requested
};

// Algorithm-1 end to end: train one upper-bound embedding, fit uncentered
// PCA, sweep truncations scoring the task, pick argmax f(d, metric), and
// optionally retrain at the selected dimensionality.
SelectionReport run_selection(std::span<const std::uint32_t> corpus,
                              const Vocabulary& vocab, int upper_bound,
                              const TaskSpec& task, ScoreParams score,
                              bool retrain, const TrainConfig& base_config,
                              int threads,
                              SelectionArtifacts* artifacts = nullptr);

// Ground-truth baseline: one training per candidate dimensionality. The sink
// runs after every completed entry so partial results can be persisted; a
// per-dim failure is rethrown after the sink has seen all finished records.
BaselineResult grid_search(std::span<const std::uint32_t> corpus,
                           const Vocabulary& vocab, std::span<const int> dims,
                           const TaskSpec& task, const TrainConfig& base_config,
                           int threads,
                           const std::function<void(const GridRecord&)>& sink = {});

struct BaselineComparison {
  int distance_d = 0;              // |selected_d - grid argmax dim|
  double relative_performance = 0;  // 100 * ours / grid best
};

BaselineComparison compare_to_baseline(const SelectionReport& report);

struct ConsistencyResult {
  std::vector<std::pair<int, int>> selected_per_bound;  // (bound, selected_d)
  int max_spread = 0;
  std::vector<SelectionReport> reports;
};

ConsistencyResult consistency_check(std::span<const std::uint32_t> corpus,
                                    const Vocabulary& vocab,
                                    std::span<const int> bounds,
                                    const TaskSpec& task, ScoreParams score,
                                    const TrainConfig& base_config,
                                    int threads);

struct SpeedupReport {
  double ours_total_s = 0;
  double grid_total_s = 0;
  double speedup = 0;
};

// ours = train + pca + sweep (+ retrain when present); grid = sum of
// per-dim training and evaluation.
SpeedupReport speedup_report(const std::map<std::string, double>& selection_timings,
                             double grid_total_s);

}  // namespace dimsel
