#include "dimsel/pipeline.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dimsel/error.hpp"

namespace dimsel {

namespace {

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_float(float v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw Error("config: bad integer '" + item + "' in key " + key);
    }
  }
  return out;
}

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw Error("config: bad boolean '" + s + "' in key " + key);
}

}  // namespace

TrainConfig RunConfig::train_config() const {
  TrainConfig cfg;
  cfg.dim = upper_bound;
  cfg.window = window;
  cfg.negatives = negatives;
  cfg.epochs = epochs;
  cfg.lr_start = lr_start;
  cfg.lr_end = lr_end;
  cfg.subsample_t = subsample_t;
  cfg.noise_power = noise_power;
  cfg.seed = seed;
  cfg.eval_every = eval_every;
  cfg.threads = threads;
  return cfg;
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  out << "corpus=" << corpus << '\n';
  out << "vocab=" << vocab << '\n';
  out << "benchmark=" << benchmark << '\n';
  out << "task=" << task << '\n';
  out << "out_dir=" << out_dir << '\n';
  out << "upper_bound=" << upper_bound << '\n';
  out << "lambda=" << format_double(lambda) << '\n';
  out << "retrain=" << (retrain ? "true" : "false") << '\n';
  out << "grid=" << join_ints(grid_dims) << '\n';
  out << "bounds=" << join_ints(bounds) << '\n';
  out << "window=" << window << '\n';
  out << "negatives=" << negatives << '\n';
  out << "epochs=" << epochs << '\n';
  out << "lr_start=" << format_float(lr_start) << '\n';
  out << "lr_end=" << format_float(lr_end) << '\n';
  out << "subsample_t=" << format_double(subsample_t) << '\n';
  out << "noise_power=" << format_double(noise_power) << '\n';
  out << "eval_every=" << eval_every << '\n';
  out << "min_count=" << min_count << '\n';
  if (max_vocab) out << "max_vocab=" << *max_vocab << '\n';
  out << "lowercase=" << (lowercase ? "true" : "false") << '\n';
  out << "analogy_stride=" << analogy_stride << '\n';
  out << "seed=" << seed << '\n';
  out << "threads=" << threads << '\n';
  out << "quiet=" << (quiet ? "true" : "false") << '\n';
  return out.str();
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error("config: expected key=value at line " +
                  std::to_string(lineno));
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "corpus") cfg.corpus = value;
      else if (key == "vocab") cfg.vocab = value;
      else if (key == "benchmark") cfg.benchmark = value;
      else if (key == "task") cfg.task = value;
      else if (key == "out_dir") cfg.out_dir = value;
      else if (key == "upper_bound") cfg.upper_bound = std::stoi(value);
      else if (key == "lambda") cfg.lambda = std::stod(value);
      else if (key == "retrain") cfg.retrain = parse_bool(value, key);
      else if (key == "grid") cfg.grid_dims = parse_int_list(value, key);
      else if (key == "bounds") cfg.bounds = parse_int_list(value, key);
      else if (key == "window") cfg.window = std::stoi(value);
      else if (key == "negatives") cfg.negatives = std::stoi(value);
      else if (key == "epochs") cfg.epochs = std::stoi(value);
      else if (key == "lr_start") cfg.lr_start = std::stof(value);
      else if (key == "lr_end") cfg.lr_end = std::stof(value);
      else if (key == "subsample_t") cfg.subsample_t = std::stod(value);
      else if (key == "noise_power") cfg.noise_power = std::stod(value);
      else if (key == "eval_every") cfg.eval_every = std::stoi(value);
      else if (key == "min_count") cfg.min_count = std::stoull(value);
      else if (key == "max_vocab") cfg.max_vocab = std::stoull(value);
      else if (key == "lowercase") cfg.lowercase = parse_bool(value, key);
      else if (key == "analogy_stride") cfg.analogy_stride = std::stoi(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "threads") cfg.threads = std::stoi(value);
      else if (key == "quiet") cfg.quiet = parse_bool(value, key);
      else
        throw Error("config: unknown key '" + key + "' at line " +
                    std::to_string(lineno));
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw Error("config: bad value for key '" + key + "' at line " +
                  std::to_string(lineno));
    }
  }
  return cfg;
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("config: cannot open " + path.string());
  out << to_text();
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

void emit_sweep_csv(const SelectionReport& report,
                    const std::filesystem::path& path, bool mark_selected) {
  if (report.records.empty()) throw Error("emit_sweep_csv: no records");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("emit_sweep_csv: cannot open " + path.string());
  out << "# lambda=" << format_double(report.lambda) << " task=" << report.task
      << " upper_bound=" << report.upper_bound << " seed=" << report.seed
      << '\n';
  out << (mark_selected ? "d,metric,score,selected\n" : "d,metric,score\n");
  char buf[128];
  for (const auto& rec : report.records) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f", rec.d, rec.metric,
                  rec.score);
    out << buf;
    if (mark_selected) out << ',' << (rec.d == report.selected_d ? 1 : 0);
    out << '\n';
  }
  if (!out) throw Error("emit_sweep_csv: write failed for " + path.string());
}

void emit_grid_csv(const std::vector<GridRecord>& records,
                   const std::filesystem::path& path) {
  if (records.empty()) throw Error("emit_grid_csv: no records");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("emit_grid_csv: cannot open " + path.string());
  out << "dim,metric,train_seconds,eval_seconds\n";
  char buf[160];
  for (const auto& rec : records) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.3f,%.3f\n", rec.dim, rec.metric,
                  rec.train_seconds, rec.eval_seconds);
    out << buf;
  }
  if (!out) throw Error("emit_grid_csv: write failed for " + path.string());
}

void emit_variance_csv(const PcaModel& model,
                       const std::filesystem::path& path) {
  const VarianceReport report = explained_variance_report(model);
  const std::vector<double> profile = coefficient_mean_profile(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("emit_variance_csv: cannot open " + path.string());
  out << "k,variance,ratio,mean_abs_coef\n";
  char buf[160];
  for (std::size_t k = 0; k < report.ratios.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g,%.12g\n", k + 1,
                  model.explained_variance[k], report.ratios[k], profile[k]);
    out << buf;
  }
  if (!out)
    throw Error("emit_variance_csv: write failed for " + path.string());
}

void emit_timing_csv(const std::map<std::string, double>& timings,
                     const std::filesystem::path& path) {
  if (timings.empty()) throw Error("emit_timing_csv: no timings");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("emit_timing_csv: cannot open " + path.string());
  out << "phase,seconds\n";
  for (const auto& [phase, seconds] : timings)
    out << phase << ',' << format_double(seconds) << '\n';
}

namespace {

nlohmann::json report_to_json(
    const SelectionReport& report,
    const std::optional<BaselineComparison>& comparison,
    const std::optional<ConsistencyResult>& consistency,
    const std::optional<SpeedupReport>& speedup) {
  nlohmann::json j;
  j["selected_d"] = report.selected_d;
  j["upper_bound"] = report.upper_bound;
  j["vocab_size"] = report.vocab_size;
  j["embedding_params"] = report.embedding_params;
  j["lambda"] = report.lambda;
  j["seed"] = report.seed;
  j["task"] = report.task;
  j["truncated_metric"] = report.truncated_metric;
  j["final_metric_retrained"] = report.final_metric_retrained;
  if (report.retrained_metric) j["retrained_metric"] = *report.retrained_metric;

  auto records = nlohmann::json::array();
  for (const auto& rec : report.records) {
    nlohmann::json r;
    r["d"] = rec.d;
    r["metric"] = rec.metric;
    r["score"] = rec.score;
    records.push_back(std::move(r));
  }
  j["records"] = std::move(records);
  j["timings"] = report.timings;

  if (report.baseline) {
    nlohmann::json b;
    b["best_dim"] = report.baseline->best_dim;
    b["best_metric"] = report.baseline->best_metric;
    auto recs = nlohmann::json::array();
    for (const auto& rec : report.baseline->records) {
      nlohmann::json r;
      r["dim"] = rec.dim;
      r["metric"] = rec.metric;
      r["train_seconds"] = rec.train_seconds;
      r["eval_seconds"] = rec.eval_seconds;
      recs.push_back(std::move(r));
    }
    b["records"] = std::move(recs);
    if (comparison) {
      b["distance_d"] = comparison->distance_d;
      b["relative_performance"] = comparison->relative_performance;
    }
    j["baseline"] = std::move(b);
  }
  if (consistency) {
    nlohmann::json c;
    auto bounds = nlohmann::json::array();
    auto selected = nlohmann::json::array();
    for (const auto& [bound, d] : consistency->selected_per_bound) {
      bounds.push_back(bound);
      selected.push_back(d);
    }
    c["bounds"] = std::move(bounds);
    c["selected"] = std::move(selected);
    c["max_spread"] = consistency->max_spread;
    j["consistency"] = std::move(c);
  }
  if (speedup) {
    nlohmann::json s;
    s["ours_total_s"] = speedup->ours_total_s;
    s["grid_total_s"] = speedup->grid_total_s;
    s["speedup"] = speedup->speedup;
    j["speedup"] = std::move(s);
  }
  return j;
}

}  // namespace

void write_selection_json(const SelectionReport& report,
                          const std::optional<BaselineComparison>& comparison,
                          const std::optional<ConsistencyResult>& consistency,
                          const std::optional<SpeedupReport>& speedup,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_selection_json: cannot open " + path.string());
  out << report_to_json(report, comparison, consistency, speedup).dump(2)
      << '\n';
}

void write_selection_summary(const SelectionReport& report,
                             const std::optional<BaselineComparison>& comparison,
                             const std::optional<ConsistencyResult>& consistency,
                             const std::optional<SpeedupReport>& speedup,
                             std::ostream& out) {
  out << "selected dimensionality: " << report.selected_d << " (upper bound "
      << report.upper_bound << ", lambda " << report.lambda << ")\n";
  out << "task: " << report.task << ", vocabulary " << report.vocab_size
      << " -> " << report.embedding_params << " embedding parameters\n";
  out << "metric at selected d: " << report.truncated_metric << " (truncated)";
  if (report.retrained_metric)
    out << ", " << *report.retrained_metric << " (retrained)";
  out << '\n';
  for (const auto& [phase, seconds] : report.timings)
    out << "  " << phase << ": " << seconds << " s\n";
  if (report.baseline) {
    out << "grid-search baseline: best dim " << report.baseline->best_dim
        << " with metric " << report.baseline->best_metric << '\n';
    if (comparison)
      out << "  distance " << comparison->distance_d << " dims, relative "
          << comparison->relative_performance << "%\n";
  }
  if (consistency) {
    out << "consistency across upper bounds:";
    for (const auto& [bound, d] : consistency->selected_per_bound)
      out << ' ' << bound << "->" << d;
    out << " (max spread " << consistency->max_spread << ")\n";
  }
  if (speedup)
    out << "speedup: " << speedup->grid_total_s << " s grid / "
        << speedup->ours_total_s << " s ours = " << speedup->speedup << "x\n";
}

int run_pipeline(const RunConfig& config, std::ostream& log) {
  namespace fs = std::filesystem;
  std::string stage = "setup";
  try {
    const fs::path out_dir(config.out_dir);
    fs::create_directories(out_dir);
    config.save(out_dir / "run.config");

    stage = "vocab";
    Vocabulary vocab;
    if (!config.vocab.empty() && fs::exists(config.vocab)) {
      vocab = load_vocabulary(config.vocab);
      log << "[vocab] loaded " << vocab.size() << " tokens from "
          << config.vocab << '\n';
    } else {
      const auto tokens = tokenize_file(config.corpus, config.lowercase);
      vocab = build_vocabulary(tokens, config.min_count, config.max_vocab);
      save_vocabulary(vocab, out_dir / "vocab.tsv");
      log << "[vocab] built " << vocab.size() << " tokens (min_count "
          << config.min_count << ") -> vocab.tsv\n";
    }

    stage = "encode";
    EncodeStats stats;
    std::vector<std::uint32_t> ids;
    {
      const auto tokens = tokenize_file(config.corpus, config.lowercase);
      SubsampleConfig sub{config.subsample_t,
                          stage_seed(config.seed, "subsample")};
      ids = encode(tokens, vocab, sub, &stats);
    }
    log << "[encode] " << ids.size() << " training ids (" << stats.oov_dropped
        << " OOV dropped, " << stats.subsample_dropped
        << " subsampled away)\n";

    stage = "benchmark";
    TaskSpec task;
    task.lowercase_words = config.lowercase;
    task.analogy_stride = config.analogy_stride;
    if (config.task == "similarity") {
      task.kind = TaskSpec::Kind::kSimilarity;
      task.similarity = load_similarity(config.benchmark);
      log << "[benchmark] " << task.similarity.pairs.size()
          << " similarity pairs from " << config.benchmark << '\n';
    } else if (config.task == "analogy") {
      task.kind = TaskSpec::Kind::kAnalogy;
      task.analogy = load_analogy(config.benchmark);
      log << "[benchmark] " << task.analogy.questions.size()
          << " analogy questions from " << config.benchmark << '\n';
    } else {
      throw Error("task must be 'similarity' or 'analogy', got '" +
                  config.task + "'");
    }

    stage = "selection";
    SelectionArtifacts artifacts;
    SelectionReport report = run_selection(
        ids, vocab, config.upper_bound, task, ScoreParams{config.lambda},
        config.retrain, config.train_config(), config.threads, &artifacts);
    log << "[selection] selected_d=" << report.selected_d << " metric="
        << report.truncated_metric << " (train " << report.timings["train"]
        << " s, pca " << report.timings["pca"] << " s, sweep "
        << report.timings["sweep"] << " s)\n";

    stage = "artifacts";
    save_embedding(artifacts.trained, vocab,
                   out_dir / ("embedding_" + std::to_string(config.upper_bound) +
                              ".vec"));
    save_train_log(artifacts.train_log, out_dir / "train_log.csv");
    save_pca(artifacts.model, out_dir / "pca.model");
    emit_sweep_csv(report, out_dir / "sweep.csv", /*mark_selected=*/false);
    if (config.retrain)
      save_embedding(artifacts.retrained, vocab,
                     out_dir / ("embedding_selected_" +
                                std::to_string(report.selected_d) + ".vec"));

    std::optional<BaselineComparison> comparison;
    std::optional<SpeedupReport> speedup;
    if (!config.grid_dims.empty()) {
      stage = "grid-search";
      std::ofstream grid_csv(out_dir / "grid.csv", std::ios::binary);
      grid_csv << "dim,metric,train_seconds,eval_seconds\n";
      auto sink = [&grid_csv](const GridRecord& rec) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.3f,%.3f\n", rec.dim,
                      rec.metric, rec.train_seconds, rec.eval_seconds);
        grid_csv << buf << std::flush;
      };
      report.baseline = grid_search(ids, vocab, config.grid_dims, task,
                                    config.train_config(), config.threads,
                                    sink);
      comparison = compare_to_baseline(report);
      double grid_total = 0;
      for (const auto& rec : report.baseline->records)
        grid_total += rec.train_seconds + rec.eval_seconds;
      speedup = speedup_report(report.timings, grid_total);
      log << "[grid-search] best dim " << report.baseline->best_dim
          << " metric " << report.baseline->best_metric << "; distance "
          << comparison->distance_d << ", relative "
          << comparison->relative_performance << "%, speedup "
          << speedup->speedup << "x\n";
    }

    std::optional<ConsistencyResult> consistency;
    if (!config.bounds.empty()) {
      stage = "consistency";
      ConsistencyResult cons =
          consistency_check(ids, vocab, config.bounds, task,
                            ScoreParams{config.lambda}, config.train_config(),
                            config.threads);
      for (const auto& rep : cons.reports)
        emit_sweep_csv(rep,
                       out_dir / ("sweep_bound_" +
                                  std::to_string(rep.upper_bound) + ".csv"),
                       /*mark_selected=*/false);
      log << "[consistency] max spread " << cons.max_spread << " across";
      for (const auto& [bound, d] : cons.selected_per_bound)
        log << ' ' << bound << "->" << d;
      log << '\n';
      consistency = std::move(cons);
    }

    stage = "report";
    write_selection_json(report, comparison, consistency, speedup,
                         out_dir / "selection.json");
    {
      std::ofstream summary(out_dir / "selection.txt", std::ios::binary);
      write_selection_summary(report, comparison, consistency, speedup,
                              summary);
    }
    write_selection_summary(report, comparison, consistency, speedup, log);
    return 0;
  } catch (const std::exception& e) {
    log << "[" << stage << "] failed: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dimsel
