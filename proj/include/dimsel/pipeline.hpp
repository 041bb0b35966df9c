#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dimsel/pca.hpp"
#include "dimsel/selector.hpp"

namespace dimsel {

// Fully resolved run configuration for the end-to-end pipeline. Serializes
// to a flat key=value file that reloads to an identical config, and the
// resolved config is echoed into the output directory of every run.
struct RunConfig {
  std::string corpus;
  std::string vocab;       // loaded if the file exists, else built and saved
  std::string benchmark;   // similarity pairs or analogy questions
  std::string task = "similarity";
  std::string out_dir = ".";

  int upper_bound = 200;
  double lambda = 0.01;
  bool retrain = false;
  std::vector<int> grid_dims;
  std::vector<int> bounds;

  // Training hyperparameters (see TrainConfig).
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  float lr_start = 0.025f;
  float lr_end = 0.025f * 1e-4f;
  double subsample_t = 1e-4;
  double noise_power = 0.75;
  int eval_every = 10;

  std::uint64_t min_count = 5;
  std::optional<std::uint64_t> max_vocab;
  bool lowercase = false;
  int analogy_stride = 10;

  std::uint64_t seed = 1;
  int threads = 1;
  bool quiet = false;

  TrainConfig train_config() const;

  std::string to_text() const;
  static RunConfig from_text(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static RunConfig load(const std::filesystem::path& path);

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Plot-data emission (the data behind the paper-style figures).
void emit_sweep_csv(const SelectionReport& report,
                    const std::filesystem::path& path, bool mark_selected);
void emit_grid_csv(const std::vector<GridRecord>& records,
                   const std::filesystem::path& path);
void emit_variance_csv(const PcaModel& model,
                       const std::filesystem::path& path);
void emit_timing_csv(const std::map<std::string, double>& timings,
                     const std::filesystem::path& path);

void write_selection_json(const SelectionReport& report,
                          const std::optional<BaselineComparison>& comparison,
                          const std::optional<ConsistencyResult>& consistency,
                          const std::optional<SpeedupReport>& speedup,
                          const std::filesystem::path& path);
void write_selection_summary(const SelectionReport& report,
                             const std::optional<BaselineComparison>& comparison,
                             const std::optional<ConsistencyResult>& consistency,
                             const std::optional<SpeedupReport>& speedup,
                             std::ostream& out);

// Executes vocab -> train -> pca -> sweep -> select [-> retrain]
// [-> grid search -> compare] and writes every artifact into out_dir.
// Returns 0 on success; on failure the failing stage is named in the log
// and partial artifacts are left in place.
int run_pipeline(const RunConfig& config, std::ostream& log);

}  // namespace dimsel
