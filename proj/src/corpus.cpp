#include "dimsel/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dimsel/error.hpp"

namespace dimsel {

namespace {

// Validates one UTF-8 sequence starting at p, returns its length or 0.
std::size_t utf8_sequence_length(const unsigned char* p, std::size_t avail) {
  unsigned char b = p[0];
  if (b < 0x80) return 1;
  std::size_t len;
  if ((b & 0xe0) == 0xc0 && b >= 0xc2) len = 2;
  else if ((b & 0xf0) == 0xe0) len = 3;
  else if ((b & 0xf8) == 0xf0 && b <= 0xf4) len = 4;
  else return 0;
  if (avail < len) return 0;
  for (std::size_t i = 1; i < len; ++i)
    if ((p[i] & 0xc0) != 0x80) return 0;
  // Reject overlong encodings and surrogates.
  if (len == 3 && b == 0xe0 && p[1] < 0xa0) return 0;
  if (len == 3 && b == 0xed && p[1] >= 0xa0) return 0;
  if (len == 4 && b == 0xf0 && p[1] < 0x90) return 0;
  if (len == 4 && b == 0xf4 && p[1] >= 0x90) return 0;
  return len;
}

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

}  // namespace

std::vector<std::string> tokenize(std::istream& in, bool lowercase) {
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();

  std::vector<std::string> tokens;
  std::string current;
  std::size_t pos = 0;
  while (pos < n) {
    std::size_t len = utf8_sequence_length(data + pos, n - pos);
    if (len == 0)
      throw Error("tokenize: invalid UTF-8 at byte offset " +
                  std::to_string(pos));
    if (len == 1 && is_ascii_space(data[pos])) {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    } else {
      if (len == 1 && lowercase)
        current.push_back(static_cast<char>(
            std::tolower(static_cast<unsigned char>(data[pos]))));
      else
        current.append(bytes, pos, len);
    }
    pos += len;
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> tokenize_file(const std::filesystem::path& path,
                                       bool lowercase) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("tokenize: cannot open " + path.string());
  return tokenize(in, lowercase);
}

Vocabulary build_vocabulary(const std::vector<std::string>& tokens,
                            std::uint64_t min_count,
                            std::optional<std::size_t> max_vocab) {
  if (min_count < 1) throw Error("build_vocabulary: min_count must be >= 1");

  std::unordered_map<std::string, std::uint64_t> freq;
  std::unordered_map<std::string, std::uint64_t> first_seen;
  std::uint64_t order = 0;
  for (const auto& tok : tokens) {
    auto [it, inserted] = freq.try_emplace(tok, 0);
    it->second++;
    if (inserted) first_seen.emplace(tok, order);
    ++order;
  }

  struct Entry {
    const std::string* token;
    std::uint64_t count;
    std::uint64_t first;
  };
  std::vector<Entry> entries;
  entries.reserve(freq.size());
  for (const auto& [tok, count] : freq)
    if (count >= min_count) entries.push_back({&tok, count, first_seen[tok]});

  if (entries.empty())
    throw Error("build_vocabulary: no token reaches min_count=" +
                std::to_string(min_count));

  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.first < b.first;
  });
  if (max_vocab && entries.size() > *max_vocab) entries.resize(*max_vocab);

  Vocabulary vocab;
  vocab.tokens.reserve(entries.size());
  vocab.counts.reserve(entries.size());
  for (std::uint32_t id = 0; id < entries.size(); ++id) {
    vocab.tokens.push_back(*entries[id].token);
    vocab.counts.push_back(entries[id].count);
    vocab.total_count += entries[id].count;
    vocab.index.emplace(vocab.tokens.back(), id);
  }
  return vocab;
}

double keep_probability(std::uint64_t count, std::uint64_t total_count,
                        double t) {
  if (count < 1 || total_count < count || t <= 0)
    throw Error("keep_probability: invalid inputs");
  const double f = static_cast<double>(count) / static_cast<double>(total_count);
  const double p = (std::sqrt(f / t) + 1.0) * (t / f);
  return std::clamp(p, 0.0, 1.0);
}

std::uint32_t NoiseTable::sample(SplitMix64& rng) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<std::uint32_t>(it - cumulative.begin());
}

NoiseTable build_noise_table(const Vocabulary& vocab, double power,
                             std::size_t resolution) {
  if (vocab.size() == 0) throw Error("build_noise_table: empty vocabulary");
  if (power <= 0) throw Error("build_noise_table: power must be > 0");
  if (resolution < vocab.size())
    throw Error("build_noise_table: resolution must be >= |V|");

  NoiseTable table;
  table.power = power;
  table.cumulative.resize(vocab.size());
  double total = 0.0;
  for (std::uint64_t c : vocab.counts)
    total += std::pow(static_cast<double>(c), power);
  double running = 0.0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    running += std::pow(static_cast<double>(vocab.counts[i]), power);
    table.cumulative[i] = running / total;
  }
  // Per-token cumulative masses are exact doubles, so the sampling error is
  // below 1/resolution for any admissible resolution.
  table.cumulative.back() = 1.0;
  return table;
}

std::vector<std::uint32_t> encode(const std::vector<std::string>& tokens,
                                  const Vocabulary& vocab,
                                  const std::optional<SubsampleConfig>& sub,
                                  EncodeStats* stats) {
  if (vocab.size() == 0) throw Error("encode: empty vocabulary");
  EncodeStats local;
  std::vector<std::uint32_t> ids;
  ids.reserve(tokens.size());
  std::optional<SplitMix64> rng;
  if (sub) rng.emplace(sub->seed);

  for (const auto& tok : tokens) {
    const std::int64_t id = vocab.id_of(tok);
    if (id < 0) {
      ++local.oov_dropped;
      continue;
    }
    ++local.in_vocab;
    if (sub) {
      const double p =
          keep_probability(vocab.counts[id], vocab.total_count, sub->t);
      if (rng->uniform() >= p) {
        ++local.subsample_dropped;
        continue;
      }
    }
    ids.push_back(static_cast<std::uint32_t>(id));
  }
  if (stats) *stats = local;
  return ids;
}

void save_vocabulary(const Vocabulary& vocab,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_vocabulary: cannot open " + path.string());
  for (std::size_t i = 0; i < vocab.size(); ++i)
    out << vocab.tokens[i] << '\t' << vocab.counts[i] << '\n';
  if (!out) throw Error("save_vocabulary: write failed for " + path.string());
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_vocabulary: cannot open " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw Error("load_vocabulary: malformed line " + std::to_string(lineno) +
                  " in " + path.string());
    std::string token = line.substr(0, tab);
    std::uint64_t count = 0;
    try {
      count = std::stoull(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw Error("load_vocabulary: bad count on line " +
                  std::to_string(lineno) + " in " + path.string());
    }
    const auto id = static_cast<std::uint32_t>(vocab.tokens.size());
    if (!vocab.index.emplace(token, id).second)
      throw Error("load_vocabulary: duplicate token on line " +
                  std::to_string(lineno));
    vocab.tokens.push_back(std::move(token));
    vocab.counts.push_back(count);
    vocab.total_count += count;
  }
  if (vocab.tokens.empty())
    throw Error("load_vocabulary: empty vocabulary in " + path.string());
  return vocab;
}

}  // namespace dimsel
