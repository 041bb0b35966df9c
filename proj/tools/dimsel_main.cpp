// dimsel: select a word-embedding dimensionality by sweeping PCA truncations
// of one wide embedding, with a grid-search baseline for validation.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <streambuf>

#include "dimsel/pipeline.hpp"

namespace fs = std::filesystem;
using namespace dimsel;

namespace {

// Duplicates log output to stdout (unless quiet) and log.txt.
class TeeBuf : public std::streambuf {
 public:
  TeeBuf(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

 protected:
  int overflow(int c) override {
    if (c == EOF) return !EOF;
    if (a_ && a_->sputc(static_cast<char>(c)) == EOF) return EOF;
    if (b_ && b_->sputc(static_cast<char>(c)) == EOF) return EOF;
    return c;
  }
  int sync() override {
    int r = 0;
    if (a_) r |= a_->pubsync();
    if (b_) r |= b_->pubsync();
    return r;
  }

 private:
  std::streambuf* a_;
  std::streambuf* b_;
};

int default_threads() {
  if (const char* env = std::getenv("DIMSEL_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

std::vector<std::uint32_t> encode_corpus(const std::string& corpus_path,
                                         const Vocabulary& vocab,
                                         double subsample_t, bool lowercase,
                                         std::uint64_t seed) {
  const auto tokens = tokenize_file(corpus_path, lowercase);
  SubsampleConfig sub{subsample_t, stage_seed(seed, "subsample")};
  return encode(tokens, vocab, sub, nullptr);
}

SelectionReport report_from_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("report: cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  SelectionReport report;
  report.selected_d = j.at("selected_d").get<int>();
  report.upper_bound = j.at("upper_bound").get<int>();
  report.vocab_size = j.at("vocab_size").get<std::uint64_t>();
  report.embedding_params = j.at("embedding_params").get<std::uint64_t>();
  report.lambda = j.at("lambda").get<double>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.task = j.at("task").get<std::string>();
  report.truncated_metric = j.at("truncated_metric").get<double>();
  for (const auto& r : j.at("records"))
    report.records.push_back({r.at("d").get<int>(),
                              r.at("metric").get<double>(),
                              r.at("score").get<double>(), report.task});
  for (const auto& [phase, seconds] : j.at("timings").items())
    report.timings[phase] = seconds.get<double>();
  if (j.contains("baseline")) {
    BaselineResult base;
    base.best_dim = j["baseline"].at("best_dim").get<int>();
    base.best_metric = j["baseline"].at("best_metric").get<double>();
    for (const auto& r : j["baseline"].at("records"))
      base.records.push_back({r.at("dim").get<int>(),
                              r.at("metric").get<double>(),
                              r.at("train_seconds").get<double>(),
                              r.at("eval_seconds").get<double>()});
    report.baseline = std::move(base);
  }
  return report;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pareto-optimal embedding dimensionality selection via PCA "
               "truncation sweeps"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  int threads = default_threads();
  bool quiet = false;
  app.add_option("--seed", seed, "root random seed");
  app.add_option("--threads", threads,
                 "worker threads (default: env DIMSEL_THREADS or 1)");
  app.add_flag("--quiet", quiet, "suppress stdout logging");

  // ---- build-vocab ----
  auto* sc_vocab = app.add_subcommand("build-vocab", "build a vocabulary file");
  std::string bv_input, bv_output;
  std::uint64_t bv_min_count = 5;
  std::uint64_t bv_max_vocab = 0;
  bool bv_lowercase = false;
  sc_vocab->add_option("--input", bv_input, "corpus text file")->required();
  sc_vocab->add_option("--min-count", bv_min_count, "minimum token frequency");
  sc_vocab->add_option("--max-vocab", bv_max_vocab,
                       "keep only the most frequent tokens (0 = unlimited)");
  sc_vocab->add_option("--output", bv_output, "vocabulary tsv path")->required();
  sc_vocab->add_flag("--lowercase", bv_lowercase, "case-fold tokens");

  // ---- train ----
  auto* sc_train = app.add_subcommand("train", "train an SGNS embedding");
  std::string tr_corpus, tr_vocab, tr_output, tr_log, tr_analogy;
  std::string tr_checkpoint_task;
  int tr_dim = 100, tr_epochs = 5, tr_window = 5, tr_negatives = 5,
      tr_eval_every = 10;
  float tr_lr = 0.025f, tr_lr_end = 0.025f * 1e-4f;
  double tr_subsample = 1e-4;
  bool tr_lowercase = false;
  sc_train->add_option("--corpus", tr_corpus, "corpus text file")->required();
  sc_train->add_option("--vocab", tr_vocab, "vocabulary tsv")->required();
  sc_train->add_option("--dim", tr_dim, "embedding dimensionality")->required();
  sc_train->add_option("--epochs", tr_epochs, "training epochs");
  sc_train->add_option("--window", tr_window, "max context offset");
  sc_train->add_option("--negatives", tr_negatives, "negatives per pair");
  sc_train->add_option("--lr", tr_lr, "starting learning rate");
  sc_train->add_option("--lr-end", tr_lr_end, "final learning rate");
  sc_train->add_option("--subsample", tr_subsample, "subsampling threshold t");
  sc_train->add_option("--eval-every", tr_eval_every,
                       "epochs between checkpoint evaluations");
  sc_train->add_option("--checkpoint-task", tr_checkpoint_task,
                       "checkpoint metric task (only 'analogy')");
  sc_train->add_option("--analogy", tr_analogy,
                       "analogy questions for checkpointing");
  sc_train->add_option("--output", tr_output, "embedding .vec path")->required();
  sc_train->add_option("--log", tr_log, "training log csv path");
  sc_train->add_flag("--lowercase", tr_lowercase, "case-fold corpus tokens");

  // ---- pca ----
  auto* sc_pca = app.add_subcommand("pca", "fit a PCA model of an embedding");
  std::string pc_embedding, pc_output;
  bool pc_centered = false;
  sc_pca->add_option("--embedding", pc_embedding, "embedding .vec file")
      ->required();
  sc_pca->add_flag("--centered", pc_centered, "subtract the column mean");
  sc_pca->add_option("--output", pc_output, "model output path")->required();

  // ---- pca-report ----
  auto* sc_pcarep = app.add_subcommand(
      "pca-report", "per-direction variance and coefficient profile");
  std::string pr_model, pr_output;
  sc_pcarep->add_option("--model", pr_model, "PCA model path")->required();
  sc_pcarep->add_option("--output", pr_output, "csv output path")->required();

  // ---- eval ----
  auto* sc_eval = app.add_subcommand("eval", "score an embedding on a task");
  std::string ev_embedding, ev_task, ev_benchmark;
  bool ev_lowercase = false;
  sc_eval->add_option("--embedding", ev_embedding, "embedding .vec file")
      ->required();
  sc_eval->add_option("--task", ev_task, "similarity or analogy")->required();
  sc_eval->add_option("--benchmark", ev_benchmark, "benchmark file")
      ->required();
  sc_eval->add_flag("--lowercase", ev_lowercase, "lowercase benchmark words");

  // ---- select (the full pipeline) ----
  auto* sc_select = app.add_subcommand(
      "select", "train once, sweep PCA truncations, select a dimensionality");
  RunConfig run;
  std::string config_path;
  std::string grid_arg, bounds_arg;
  std::uint64_t select_max_vocab = 0;
  sc_select->add_option("--config", config_path,
                        "key=value config file (flags override)");
  sc_select->add_option("--corpus", run.corpus, "corpus text file");
  sc_select->add_option("--vocab", run.vocab,
                        "vocabulary tsv (built from corpus when absent)");
  sc_select->add_option("--benchmark", run.benchmark, "benchmark file");
  sc_select->add_option("--task", run.task, "similarity or analogy");
  sc_select->add_option("--upper-bound", run.upper_bound,
                        "dimension upper bound N");
  sc_select->add_option("--lambda", run.lambda,
                        "score penalty per retained dimension");
  sc_select->add_flag("--retrain", run.retrain,
                      "retrain at the selected dimensionality");
  sc_select->add_option("--grid", grid_arg,
                        "comma-separated grid-search dims (baseline)");
  sc_select->add_option("--bounds", bounds_arg,
                        "comma-separated upper bounds for consistency check");
  sc_select->add_option("--epochs", run.epochs, "training epochs");
  sc_select->add_option("--window", run.window, "max context offset");
  sc_select->add_option("--negatives", run.negatives, "negatives per pair");
  sc_select->add_option("--lr", run.lr_start, "starting learning rate");
  sc_select->add_option("--lr-end", run.lr_end, "final learning rate");
  sc_select->add_option("--subsample", run.subsample_t,
                        "subsampling threshold t");
  sc_select->add_option("--eval-every", run.eval_every,
                        "epochs between checkpoint evaluations");
  sc_select->add_option("--min-count", run.min_count,
                        "vocabulary minimum frequency");
  sc_select->add_option("--max-vocab", select_max_vocab,
                        "vocabulary size cap (0 = unlimited)");
  sc_select->add_option("--analogy-stride", run.analogy_stride,
                        "d stride for analogy sweeps");
  sc_select->add_flag("--lowercase", run.lowercase, "case-fold tokens");
  sc_select->add_option("--out-dir", run.out_dir, "artifact directory");

  // ---- grid-search ----
  auto* sc_grid = app.add_subcommand(
      "grid-search", "train one embedding per dimensionality (baseline)");
  std::string gs_corpus, gs_vocab, gs_benchmark, gs_task = "similarity";
  std::string gs_dims, gs_out_dir = ".";
  int gs_epochs = 5;
  bool gs_lowercase = false;
  sc_grid->add_option("--corpus", gs_corpus, "corpus text file")->required();
  sc_grid->add_option("--vocab", gs_vocab, "vocabulary tsv")->required();
  sc_grid->add_option("--dims", gs_dims, "comma-separated dims")->required();
  sc_grid->add_option("--task", gs_task, "similarity or analogy");
  sc_grid->add_option("--benchmark", gs_benchmark, "benchmark file")
      ->required();
  sc_grid->add_option("--epochs", gs_epochs, "training epochs per dim");
  sc_grid->add_flag("--lowercase", gs_lowercase, "case-fold tokens");
  sc_grid->add_option("--out-dir", gs_out_dir, "artifact directory");

  // ---- report ----
  auto* sc_report = app.add_subcommand(
      "report", "emit plot-ready csv from stored artifacts");
  std::string rp_selection, rp_model, rp_kind, rp_output;
  sc_report->add_option("--selection", rp_selection, "selection.json path");
  sc_report->add_option("--model", rp_model, "PCA model (for kind=variance)");
  sc_report->add_option("--kind", rp_kind, "sweep|grid|variance|timing")
      ->required();
  sc_report->add_option("--output", rp_output, "csv output path")->required();

  // Pre-scan for select --config so flags can override file values.
  if (argc > 1 && std::string(argv[1]) == "select") {
    for (int i = 2; i + 1 < argc; ++i) {
      if (std::string(argv[i]) == "--config") {
        try {
          run = RunConfig::load(argv[i + 1]);
        } catch (const std::exception& e) {
          std::cerr << "error: " << e.what() << '\n';
          return 1;
        }
        break;
      }
    }
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sc_vocab) {
      const auto tokens = tokenize_file(bv_input, bv_lowercase);
      std::optional<std::size_t> max_vocab;
      if (bv_max_vocab > 0) max_vocab = bv_max_vocab;
      const Vocabulary vocab = build_vocabulary(tokens, bv_min_count, max_vocab);
      save_vocabulary(vocab, bv_output);
      if (!quiet)
        std::cout << "wrote " << vocab.size() << " tokens to " << bv_output
                  << '\n';
      return 0;
    }

    if (*sc_train) {
      const Vocabulary vocab = load_vocabulary(tr_vocab);
      const auto ids =
          encode_corpus(tr_corpus, vocab, tr_subsample, tr_lowercase, seed);
      TrainConfig cfg;
      cfg.dim = tr_dim;
      cfg.window = tr_window;
      cfg.negatives = tr_negatives;
      cfg.epochs = tr_epochs;
      cfg.lr_start = tr_lr;
      cfg.lr_end = tr_lr_end;
      cfg.subsample_t = tr_subsample;
      cfg.seed = seed;
      cfg.eval_every = tr_eval_every;
      cfg.threads = threads;

      CheckpointMetric metric;
      AnalogyBenchmark analogy;
      if (!tr_checkpoint_task.empty()) {
        if (tr_checkpoint_task != "analogy")
          throw Error("train: only --checkpoint-task analogy is supported");
        if (tr_analogy.empty())
          throw Error("train: --checkpoint-task analogy needs --analogy");
        analogy = load_analogy(tr_analogy);
        const bool lower = tr_lowercase;
        metric = [&vocab, &analogy, threads, lower](const EmbeddingMatrix& m) {
          return evaluate_analogy(m, vocab, analogy, true, threads, lower)
              .metric;
        };
      }
      const TrainResult result = train(ids, vocab, cfg, metric);
      save_embedding(result.embedding, vocab, tr_output);
      if (!tr_log.empty()) save_train_log(result.log, tr_log);
      if (!quiet) {
        std::cout << "trained " << vocab.size() << "x" << tr_dim << " -> "
                  << tr_output;
        if (result.best_metric)
          std::cout << " (best checkpoint: epoch " << result.best_epoch
                    << ", metric " << *result.best_metric << ")";
        std::cout << '\n';
      }
      return 0;
    }

    if (*sc_pca) {
      const auto [embedding, vocab] = load_embedding(pc_embedding);
      const PcaModel model = fit_pca(
          embedding, pc_centered ? PcaMode::kCentered : PcaMode::kUncentered,
          threads);
      save_pca(model, pc_output);
      if (!quiet)
        std::cout << "fitted " << model.vocab_rows() << "x" << model.dim()
                  << " model -> " << pc_output << '\n';
      return 0;
    }

    if (*sc_pcarep) {
      emit_variance_csv(load_pca(pr_model), pr_output);
      if (!quiet) std::cout << "wrote " << pr_output << '\n';
      return 0;
    }

    if (*sc_eval) {
      const auto [embedding, vocab] = load_embedding(ev_embedding);
      EvalResult result;
      if (ev_task == "similarity") {
        result = evaluate_similarity(embedding, vocab,
                                     load_similarity(ev_benchmark),
                                     ev_lowercase);
      } else if (ev_task == "analogy") {
        result = evaluate_analogy(embedding, vocab, load_analogy(ev_benchmark),
                                  true, threads, ev_lowercase);
      } else {
        throw Error("eval: task must be 'similarity' or 'analogy'");
      }
      std::cout << "metric,covered,skipped\n";
      std::printf("%.6f,%zu,%zu\n", result.metric, result.covered,
                  result.skipped);
      return 0;
    }

    if (*sc_select) {
      // Globals only override config-file values when actually given.
      if (app.get_option("--seed")->count() || run.seed == 0) run.seed = seed;
      if (app.get_option("--threads")->count() || config_path.empty())
        run.threads = threads;
      if (quiet) run.quiet = true;
      if (!grid_arg.empty()) {
        run.grid_dims.clear();
        std::stringstream ss(grid_arg);
        std::string item;
        while (std::getline(ss, item, ','))
          if (!item.empty()) run.grid_dims.push_back(std::stoi(item));
      }
      if (!bounds_arg.empty()) {
        run.bounds.clear();
        std::stringstream ss(bounds_arg);
        std::string item;
        while (std::getline(ss, item, ','))
          if (!item.empty()) run.bounds.push_back(std::stoi(item));
      }
      if (select_max_vocab > 0) run.max_vocab = select_max_vocab;
      if (run.corpus.empty()) throw Error("select: --corpus is required");
      if (run.benchmark.empty()) throw Error("select: --benchmark is required");

      fs::create_directories(run.out_dir);
      std::ofstream log_file(fs::path(run.out_dir) / "log.txt",
                             std::ios::binary);
      TeeBuf tee(run.quiet ? nullptr : std::cout.rdbuf(), log_file.rdbuf());
      std::ostream log(&tee);
      return run_pipeline(run, log);
    }

    if (*sc_grid) {
      const Vocabulary vocab = load_vocabulary(gs_vocab);
      const auto ids = encode_corpus(gs_corpus, vocab, 1e-4, gs_lowercase, seed);
      TaskSpec task;
      task.lowercase_words = gs_lowercase;
      if (gs_task == "similarity") {
        task.kind = TaskSpec::Kind::kSimilarity;
        task.similarity = load_similarity(gs_benchmark);
      } else if (gs_task == "analogy") {
        task.kind = TaskSpec::Kind::kAnalogy;
        task.analogy = load_analogy(gs_benchmark);
      } else {
        throw Error("grid-search: task must be 'similarity' or 'analogy'");
      }
      std::vector<int> dims;
      std::stringstream ss(gs_dims);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) dims.push_back(std::stoi(item));

      TrainConfig cfg;
      cfg.epochs = gs_epochs;
      cfg.seed = seed;
      cfg.threads = threads;

      fs::create_directories(gs_out_dir);
      std::ofstream grid_csv(fs::path(gs_out_dir) / "grid.csv",
                             std::ios::binary);
      grid_csv << "dim,metric,train_seconds,eval_seconds\n";
      auto sink = [&grid_csv, quiet](const GridRecord& rec) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.3f,%.3f\n", rec.dim,
                      rec.metric, rec.train_seconds, rec.eval_seconds);
        grid_csv << buf << std::flush;
        if (!quiet)
          std::cout << "dim " << rec.dim << ": metric " << rec.metric << " ("
                    << rec.train_seconds << " s)\n";
      };
      const BaselineResult result =
          grid_search(ids, vocab, dims, task, cfg, threads, sink);
      if (!quiet)
        std::cout << "best dim " << result.best_dim << " with metric "
                  << result.best_metric << '\n';
      return 0;
    }

    if (*sc_report) {
      if (rp_kind == "variance") {
        if (rp_model.empty())
          throw Error("report: kind=variance needs --model");
        emit_variance_csv(load_pca(rp_model), rp_output);
      } else if (rp_kind == "sweep" || rp_kind == "grid" ||
                 rp_kind == "timing") {
        if (rp_selection.empty())
          throw Error("report: kind=" + rp_kind + " needs --selection");
        const SelectionReport report = report_from_json(rp_selection);
        if (rp_kind == "sweep") {
          emit_sweep_csv(report, rp_output, /*mark_selected=*/true);
        } else if (rp_kind == "grid") {
          if (!report.baseline)
            throw Error("report: selection has no grid-search baseline");
          emit_grid_csv(report.baseline->records, rp_output);
        } else {
          emit_timing_csv(report.timings, rp_output);
        }
      } else {
        throw Error("report: kind must be sweep|grid|variance|timing");
      }
      if (!quiet) std::cout << "wrote " << rp_output << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
