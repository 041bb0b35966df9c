// Compares the serial reference kernels against their OpenMP variants and
// reports throughput per thread count. Usage: dimsel_bench [--quick]
// [--threads T].

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "dimsel/corpus.hpp"
#include "dimsel/eval.hpp"
#include "dimsel/kernels.hpp"
#include "dimsel/matrix.hpp"
#include "dimsel/rng.hpp"
#include "dimsel/sgns.hpp"

using namespace dimsel;

namespace {

using Clock = std::chrono::steady_clock;

double time_once(const std::function<void()>& fn) {
  const auto t0 = Clock::now();
  fn();
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double time_best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) best = std::min(best, time_once(fn));
  return best;
}

MatrixD random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  MatrixD m(rows, cols);
  SplitMix64 rng(seed);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(r, c) = rng.uniform() * 2.0 - 1.0;
  return m;
}

void print_row(const char* kernel, const char* variant, int threads,
               double seconds, double baseline) {
  std::printf("%-18s %-10s %7d %12.4f %10.2fx\n", kernel, variant, threads,
              seconds, baseline / seconds);
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  int max_threads = omp_get_max_threads();
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;
    if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc)
      max_threads = std::atoi(argv[++i]);
  }

  const std::size_t rows = quick ? 2000 : 40000;
  const std::size_t cols = quick ? 32 : 200;
  const int reps = quick ? 2 : 3;

  std::printf("rows=%zu cols=%zu max_threads=%d\n", rows, cols, max_threads);
  std::printf("%-18s %-10s %7s %12s %10s\n", "kernel", "variant", "threads",
              "seconds", "speedup");

  const MatrixD a = random_matrix(rows, cols, 7);
  MatrixD g(cols, cols);
  const double gram_base = time_best_of(
      reps, [&] { kernels::gram_serial(a.data(), rows, cols, g.data()); });
  print_row("gram", "serial", 1, gram_base, gram_base);
  for (int t = 2; t <= max_threads; t *= 2) {
    const double s = time_best_of(
        reps, [&] { kernels::gram(a.data(), rows, cols, g.data(), t); });
    print_row("gram", "openmp", t, s, gram_base);
  }

  const MatrixD b = random_matrix(cols, cols, 11);
  MatrixD c(rows, cols);
  const double mm_base = time_best_of(reps, [&] {
    kernels::matmul_serial(a.data(), rows, cols, cols, b.data(), cols, cols,
                           c.data(), cols);
  });
  print_row("matmul", "serial", 1, mm_base, mm_base);
  for (int t = 2; t <= max_threads; t *= 2) {
    const double s = time_best_of(reps, [&] {
      kernels::matmul(a.data(), rows, cols, cols, b.data(), cols, cols,
                      c.data(), cols, t);
    });
    print_row("matmul", "openmp", t, s, mm_base);
  }

  // SGNS epoch throughput on a synthetic Zipf corpus.
  {
    const std::size_t vocab_size = quick ? 500 : 5000;
    const std::size_t corpus_len = quick ? 50000 : 500000;
    std::vector<std::string> stream;
    stream.reserve(corpus_len);
    SplitMix64 rng(13);
    for (std::size_t i = 0; i < corpus_len; ++i) {
      const double u = rng.uniform();
      const auto id = static_cast<std::size_t>(
          vocab_size * (std::exp(u * std::log(1.0 + vocab_size)) - 1.0) /
          vocab_size);
      stream.push_back("w" + std::to_string(std::min(id, vocab_size - 1)));
    }
    const Vocabulary vocab = build_vocabulary(stream, 1);
    const auto ids = encode(stream, vocab);

    TrainConfig cfg;
    cfg.dim = quick ? 32 : 100;
    cfg.epochs = 1;
    cfg.threads = 1;
    const double sgns_base = time_best_of(1, [&] { train(ids, vocab, cfg); });
    std::printf("%-18s %-10s %7d %12.4f %10.2fx  (%.0f tokens/s)\n", "sgns_epoch",
                "serial", 1, sgns_base, 1.0,
                static_cast<double>(ids.size()) / sgns_base);
    for (int t = 2; t <= max_threads; t *= 2) {
      cfg.threads = t;
      const double s = time_best_of(1, [&] { train(ids, vocab, cfg); });
      std::printf("%-18s %-10s %7d %12.4f %10.2fx  (%.0f tokens/s)\n",
                  "sgns_epoch", "openmp", t, s, sgns_base / s,
                  static_cast<double>(ids.size()) / s);
    }

    // Analogy scan: vocabulary-wide argmax per question.
    cfg.threads = 1;
    cfg.dim = quick ? 16 : 64;
    const TrainResult tr = train(ids, vocab, cfg);
    AnalogyBenchmark bench;
    SplitMix64 qrng(17);
    for (int q = 0; q < (quick ? 20 : 200); ++q) {
      const auto pick = [&] {
        return vocab.tokens[qrng.below(vocab.size())];
      };
      std::string aw = pick(), bw = pick(), cw = pick(), dw = pick();
      if (aw == bw || cw == dw) continue;
      bench.questions.push_back({aw, bw, cw, dw, -1});
    }
    if (bench.questions.size() >= 4) {
      const double ana_base = time_best_of(reps, [&] {
        evaluate_analogy(tr.embedding, vocab, bench, true, 1);
      });
      print_row("analogy_eval", "serial", 1, ana_base, ana_base);
      for (int t = 2; t <= max_threads; t *= 2) {
        const double s = time_best_of(reps, [&] {
          evaluate_analogy(tr.embedding, vocab, bench, true, t);
        });
        print_row("analogy_eval", "openmp", t, s, ana_base);
      }
    }
  }
  return 0;
}
