#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dimsel/rng.hpp"

namespace dimsel {

// Token universe every matrix row indexes into. Ids are dense 0..|V|-1 in
// descending frequency order (ties by first occurrence in the input).
struct Vocabulary {
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> counts;
  std::uint64_t total_count = 0;
  std::unordered_map<std::string, std::uint32_t> index;

  std::size_t size() const { return tokens.size(); }

  // Returns -1 for out-of-vocabulary tokens.
  std::int64_t id_of(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? -1 : static_cast<std::int64_t>(it->second);
  }
};

// Cumulative distribution over token ids under counts^power, sampled by
// binary search on a uniform deviate.
struct NoiseTable {
  std::vector<double> cumulative;
  double power = 0.75;

  std::uint32_t sample(SplitMix64& rng) const;
};

// Whitespace-split tokens in input order. Rejects invalid UTF-8, reporting
// the byte offset of the offending sequence.
std::vector<std::string> tokenize(std::istream& in, bool lowercase);
std::vector<std::string> tokenize_file(const std::filesystem::path& path,
                                       bool lowercase);

Vocabulary build_vocabulary(const std::vector<std::string>& tokens,
                            std::uint64_t min_count,
                            std::optional<std::size_t> max_vocab = {});

// Subsampling retention probability: p = (sqrt(f/t) + 1) * (t/f), clamped to
// [0, 1], with f = count / total_count.
double keep_probability(std::uint64_t count, std::uint64_t total_count,
                        double t);

NoiseTable build_noise_table(const Vocabulary& vocab, double power,
                             std::size_t resolution);

struct SubsampleConfig {
  double t = 1e-4;
  std::uint64_t seed = 1;
};

struct EncodeStats {
  std::uint64_t in_vocab = 0;
  std::uint64_t oov_dropped = 0;
  std::uint64_t subsample_dropped = 0;
};

// OOV tokens are dropped silently (drop counts land in stats); with a
// subsample config, each occurrence is kept independently with
// keep_probability, deterministic per seed.
std::vector<std::uint32_t> encode(const std::vector<std::string>& tokens,
                                  const Vocabulary& vocab,
                                  const std::optional<SubsampleConfig>& sub = {},
                                  EncodeStats* stats = nullptr);

// One `token<TAB>count` line per token, descending count; round-trips
// bit-exact.
void save_vocabulary(const Vocabulary& vocab,
                     const std::filesystem::path& path);
Vocabulary load_vocabulary(const std::filesystem::path& path);

}  // namespace dimsel
