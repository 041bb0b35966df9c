#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dimsel/sgns.hpp"
#include "support/oracles.hpp"

using namespace dimsel;

namespace {

Vocabulary two_word_vocab() {
  Vocabulary v;
  v.tokens = {"a", "b"};
  v.counts = {4, 4};
  v.total_count = 8;
  v.index = {{"a", 0}, {"b", 1}};
  return v;
}

// pair_loss as a function of every matrix entry, for finite differences.
double loss_from_matrices(const MatrixD& input, const MatrixD& output,
                          std::uint32_t center, std::uint32_t context,
                          const std::vector<std::uint32_t>& negatives) {
  std::vector<double> c(input.row(center).begin(), input.row(center).end());
  std::vector<double> ctx(output.row(context).begin(),
                          output.row(context).end());
  std::vector<std::vector<double>> negs;
  for (auto n : negatives)
    negs.emplace_back(output.row(n).begin(), output.row(n).end());
  return pair_loss<double>(c, ctx, negs);
}

}  // namespace

TEST_CASE("init_embeddings ranges, zeros, determinism") {
  auto [input, output] = init_embeddings(50, 100, 7);
  for (std::size_t r = 0; r < input.rows(); ++r)
    for (std::size_t c = 0; c < input.cols(); ++c) {
      CHECK(std::abs(input(r, c)) <= 0.005f);
      CHECK(output(r, c) == 0.0f);
    }
  auto [input2, output2] = init_embeddings(50, 100, 7);
  CHECK(input == input2);
  CHECK(output == output2);
  auto [input3, _] = init_embeddings(50, 100, 8);
  CHECK(!(input == input3));
}

TEST_CASE("pair_loss known values") {
  // All-zero vectors, one negative: -2 log s(0) = 2 log 2.
  std::vector<double> zero(4, 0.0);
  CHECK(pair_loss<double>(zero, zero, {zero}) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

  // Saturated correct predictions drive the loss to ~0.
  std::vector<double> c{100.0, 0.0};
  std::vector<double> pos{100.0, 0.0};
  std::vector<double> neg{-100.0, 0.0};
  CHECK(pair_loss<double>(c, pos, {neg}) < 1e-12);
  CHECK(pair_loss<double>(c, pos, {neg}) >= 0.0);
}

TEST_CASE("pair_loss matches a high-precision oracle") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> c(5), ctx(5);
    std::vector<std::vector<double>> negs(3, std::vector<double>(5));
    for (auto& x : c) x = rng.uniform() * 4 - 2;
    for (auto& x : ctx) x = rng.uniform() * 4 - 2;
    for (auto& n : negs)
      for (auto& x : n) x = rng.uniform() * 4 - 2;
    const double mine = pair_loss<double>(c, ctx, negs);
    const long double oracle = oracles::high_precision_pair_loss(c, ctx, negs);
    CHECK(std::abs(mine - static_cast<double>(oracle)) <=
          1e-10 * std::max(1.0, std::abs(static_cast<double>(oracle))));
    CHECK(mine >= 0.0);
    CHECK(std::isfinite(mine));
  }
}

TEST_CASE("pair_loss stays finite at extreme activations") {
  std::vector<double> c{650.0};
  std::vector<double> bad_pos{-1.0};  // c.pos = -650, the worst case
  CHECK(std::isfinite(pair_loss<double>(c, bad_pos, {})));
  CHECK(pair_loss<double>(c, bad_pos, {}) == doctest::Approx(650.0).epsilon(1e-9));
}

TEST_CASE("sgd_step with lr=0 changes nothing") {
  MatrixD input(4, 3, 0.5);
  MatrixD output(4, 3, 0.25);
  const MatrixD input_before = input;
  const MatrixD output_before = output;
  const std::vector<std::uint32_t> negs{2, 3};
  sgd_step<double>(0, 1, negs, 0.0, input, output);
  CHECK(input == input_before);
  CHECK(output == output_before);
}

TEST_CASE("sgd_step matches central finite differences of pair_loss") {
  SplitMix64 rng(77);
  const double h = 1e-5;
  int trials = 0;
  while (trials < 100) {
    const int dim = 2 + static_cast<int>(rng.below(7));  // <= 8
    const std::size_t vocab = 6;
    const std::uint32_t center = static_cast<std::uint32_t>(rng.below(vocab));
    const std::uint32_t context = static_cast<std::uint32_t>(rng.below(vocab));
    std::vector<std::uint32_t> negatives;
    for (std::size_t i = 0; i < 2; ++i) {
      const auto n = static_cast<std::uint32_t>(rng.below(vocab));
      if (n != context) negatives.push_back(n);
    }
    MatrixD input(vocab, dim);
    MatrixD output(vocab, dim);
    for (std::size_t r = 0; r < vocab; ++r)
      for (int c = 0; c < dim; ++c) {
        input(r, c) = rng.uniform() * 2 - 1;
        output(r, c) = rng.uniform() * 2 - 1;
      }

    const double lr = 0.1;
    MatrixD stepped_input = input;
    MatrixD stepped_output = output;
    sgd_step<double>(center, context, negatives, lr, stepped_input,
                     stepped_output);

    // Analytic gradient recovered from the update: g = (x_before - x_after)/lr.
    auto check_grad = [&](std::size_t row, int col, bool in_input) {
      MatrixD ip = input, op = output;
      MatrixD im = input, om = output;
      (in_input ? ip : op)(row, col) += h;
      (in_input ? im : om)(row, col) -= h;
      const double fd =
          (loss_from_matrices(ip, op, center, context, negatives) -
           loss_from_matrices(im, om, center, context, negatives)) /
          (2 * h);
      const double analytic =
          ((in_input ? input : output)(row, col) -
           (in_input ? stepped_input : stepped_output)(row, col)) /
          lr;
      if (std::abs(fd) < 1e-7) {
        CHECK(std::abs(analytic) < 1e-6);
      } else {
        CHECK(std::abs(analytic - fd) <= 1e-4 * std::abs(fd));
      }
    };

    for (int c = 0; c < dim; ++c) {
      check_grad(center, c, true);
      check_grad(context, c, false);
      for (auto n : negatives) check_grad(n, c, false);
    }
    ++trials;
  }
}

TEST_CASE("repeated positive-only steps increase the pair activation") {
  MatrixD input(2, 4);
  MatrixD output(2, 4);
  SplitMix64 rng(5);
  for (std::size_t r = 0; r < 2; ++r)
    for (int c = 0; c < 4; ++c) {
      input(r, c) = rng.uniform() * 0.2 - 0.1;
      output(r, c) = rng.uniform() * 0.2 - 0.1;
    }
  auto activation = [&] {
    double s = 0;
    for (int c = 0; c < 4; ++c) s += input(0, c) * output(1, c);
    return s;
  };
  double prev = activation();
  for (int step = 0; step < 25; ++step) {
    sgd_step<double>(0, 1, {}, 0.05, input, output);
    const double cur = activation();
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("sgd_step aborts on non-finite activations") {
  MatrixF input(2, 2, 1e30f);
  MatrixF output(2, 2, 1e30f);
  const std::vector<std::uint32_t> none;
  CHECK_THROWS_AS(sgd_step<float>(0, 1, none, 0.1f, input, output), Error);
}

TEST_CASE("train rejects bad inputs") {
  const auto vocab = two_word_vocab();
  TrainConfig cfg;
  cfg.dim = 4;
  CHECK_THROWS_AS(train({}, vocab, cfg), Error);  // empty corpus
  TrainConfig bad = cfg;
  bad.epochs = 0;
  const std::vector<std::uint32_t> corpus{0, 1, 0, 1};
  CHECK_THROWS_AS(train(corpus, vocab, bad), Error);
}

TEST_CASE("train with one epoch evaluates exactly once and returns that state") {
  const auto vocab = two_word_vocab();
  std::vector<std::uint32_t> corpus;
  for (int i = 0; i < 100; ++i) corpus.push_back(i % 2);

  TrainConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 1;
  cfg.eval_every = 1;
  cfg.seed = 3;

  int evaluations = 0;
  MatrixF seen;
  const auto result = train(corpus, vocab, cfg, [&](const EmbeddingMatrix& m) {
    ++evaluations;
    seen = m;
    return 1.5;
  });
  CHECK(evaluations == 1);
  CHECK(result.embedding == seen);
  REQUIRE(result.best_metric.has_value());
  CHECK(*result.best_metric == 1.5);
  CHECK(result.log.size() == 1);
  REQUIRE(result.log[0].metric.has_value());
  CHECK(*result.log[0].metric == 1.5);
}

TEST_CASE("train improves a planted association and decays lr monotonically") {
  const auto vocab = two_word_vocab();
  std::vector<std::uint32_t> corpus;
  for (int i = 0; i < 200; ++i) corpus.push_back(i % 2);

  TrainConfig cfg;
  cfg.dim = 5;
  cfg.window = 1;
  cfg.negatives = 2;
  cfg.epochs = 50;
  cfg.eval_every = 10;
  cfg.seed = 9;

  const auto result = train(corpus, vocab, cfg);

  // "a b a b ..." should tie a's input vector to b's input vector direction
  // much more strongly than at init.
  auto [init_input, init_output] = init_embeddings(vocab.size(), cfg.dim, cfg.seed);
  auto cos_rows = [](const MatrixF& m) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      dot += m(0, c) * m(1, c);
      na += m(0, c) * m(0, c);
      nb += m(1, c) * m(1, c);
    }
    return dot / std::sqrt(na * nb);
  };
  CHECK(cos_rows(result.embedding) > cos_rows(init_input) + 0.2);

  double prev_lr = 1e9;
  for (const auto& entry : result.log) {
    CHECK(entry.lr < prev_lr);
    prev_lr = entry.lr;
  }
}

TEST_CASE("train retains the argmax checkpoint and skips failing evaluations") {
  const auto vocab = two_word_vocab();
  std::vector<std::uint32_t> corpus;
  for (int i = 0; i < 60; ++i) corpus.push_back(i % 2);

  TrainConfig cfg;
  cfg.dim = 3;
  cfg.epochs = 4;
  cfg.eval_every = 1;
  cfg.seed = 1;

  // Metric peaks at epoch 2, fails at epoch 3.
  int call = 0;
  const auto result = train(corpus, vocab, cfg, [&](const EmbeddingMatrix&) {
    ++call;
    if (call == 3) throw Error("simulated evaluation outage");
    return call == 2 ? 10.0 : 1.0;
  });
  REQUIRE(result.best_metric.has_value());
  CHECK(*result.best_metric == 10.0);
  CHECK(result.best_epoch == 2);
  REQUIRE(result.events.size() == 1);
  CHECK(result.events[0].find("epoch 3") != std::string::npos);

  double max_logged = -1e300;
  for (const auto& e : result.log)
    if (e.metric) max_logged = std::max(max_logged, *e.metric);
  CHECK(*result.best_metric == max_logged);
}

TEST_CASE("single-threaded training is bit-reproducible") {
  const auto stream = [] {
    std::vector<std::uint32_t> ids;
    SplitMix64 rng(4);
    for (int i = 0; i < 500; ++i)
      ids.push_back(static_cast<std::uint32_t>(rng.below(2)));
    return ids;
  }();
  const auto vocab = two_word_vocab();
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 3;
  cfg.seed = 21;
  const auto a = train(stream, vocab, cfg);
  const auto b = train(stream, vocab, cfg);
  CHECK(a.embedding == b.embedding);
}

TEST_CASE("multi-threaded training converges like the serial reference") {
  // Hogwild updates race benignly; exact equality is out, losing the planted
  // signal is not.
  std::vector<std::uint32_t> corpus;
  for (int i = 0; i < 4000; ++i) corpus.push_back(i % 2);
  const auto vocab = two_word_vocab();

  TrainConfig cfg;
  cfg.dim = 8;
  cfg.window = 1;
  cfg.epochs = 3;
  cfg.seed = 2;
  cfg.threads = 2;
  const auto parallel = train(corpus, vocab, cfg);

  auto cos_rows = [](const MatrixF& m) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      dot += m(0, c) * m(1, c);
      na += m(0, c) * m(0, c);
      nb += m(1, c) * m(1, c);
    }
    return dot / std::sqrt(na * nb);
  };
  CHECK(parallel.embedding.all_finite());
  CHECK(cos_rows(parallel.embedding) > 0.5);
}

TEST_CASE("embedding save/load round trip") {
  const auto vocab = two_word_vocab();
  MatrixF m(2, 3);
  m(0, 0) = 0.125f;
  m(0, 1) = -1.5f;
  m(0, 2) = 3.25e-7f;
  m(1, 0) = -0.0625f;
  m(1, 1) = 2.0f;
  m(1, 2) = 1.0f / 3.0f;
  const auto path = std::filesystem::temp_directory_path() / "dimsel_emb.vec";
  save_embedding(m, vocab, path);
  const auto [loaded, lvocab] = load_embedding(path);
  REQUIRE(loaded.rows() == 2);
  REQUIRE(loaded.cols() == 3);
  CHECK(lvocab.tokens == vocab.tokens);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(std::abs(loaded(r, c) - m(r, c)) <= 1e-6f * std::abs(m(r, c)));
  std::filesystem::remove(path);
}

TEST_CASE("load_embedding parses a hand-written file exactly") {
  const auto path = std::filesystem::temp_directory_path() / "dimsel_hand.vec";
  {
    std::ofstream out(path);
    out << "3 2\n";
    out << "cat 1.0 2.0\n";
    out << "dog 3.5 -4.25\n";
    out << "eel 0 0.5\n";
  }
  const auto [m, vocab] = load_embedding(path);
  CHECK(m(0, 0) == 1.0f);
  CHECK(m(1, 1) == -4.25f);
  CHECK(m(2, 0) == 0.0f);
  CHECK(vocab.index.at("dog") == 1);
  std::filesystem::remove(path);
}

TEST_CASE("load_embedding reports malformed rows with line numbers") {
  const auto path = std::filesystem::temp_directory_path() / "dimsel_bad.vec";
  {
    std::ofstream out(path);
    out << "2 3\n";
    out << "cat 1 2 3 4\n";  // too many values
    out << "dog 1 2 3\n";
  }
  CHECK_THROWS_WITH_AS(load_embedding(path), doctest::Contains("line 2"),
                       Error);
  {
    std::ofstream out(path);
    out << "2 3\n";
    out << "cat 1 2 3\n";
    out << "dog 1 2\n";  // too few
  }
  CHECK_THROWS_WITH_AS(load_embedding(path), doctest::Contains("line 3"),
                       Error);
  {
    std::ofstream out(path);
    out << "not a header\n";
  }
  CHECK_THROWS_AS(load_embedding(path), Error);
  std::filesystem::remove(path);
}
