#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mixsp::data {

inline constexpr double kMaxScore = 5.0;

/// Partition of [0, 5] into k half-open bins, the last one closed at 5.
/// Bin index 0 is the top (most similar) bin.
class BinScheme {
 public:
  /// Default two-class split {[0,4), [4,5]}.
  BinScheme();
  /// `edges` must start at 0, end at 5 and be strictly increasing.
  explicit BinScheme(std::vector<double> edges);

  static BinScheme uniform(std::size_t k);

  std::size_t bins() const { return edges_.size() - 1; }
  const std::vector<double>& edges() const { return edges_; }
  /// Bin index of a gold score; 0 = top bin.
  std::size_t bin_of(double score) const;
  /// Score interval [lo, hi) of a bin (hi inclusive for bin 0).
  std::pair<double, double> range(std::size_t bin) const;

  bool operator==(const BinScheme&) const = default;

 private:
  std::vector<double> edges_;
};

enum class ClassLabel : std::uint8_t { Upper = 0, Lower = 1 };

const char* to_string(ClassLabel label);

struct SentencePair {
  std::string id;
  std::vector<std::int32_t> sent1;
  std::vector<std::int32_t> sent2;
  double gold_score = 0.0;
  std::size_t bin = 0;

  /// Upper iff gold ∈ [4, 5].
  ClassLabel class_label() const;
  double y_sim() const { return gold_score / kMaxScore; }
};

SentencePair make_pair(std::string id, std::vector<std::int32_t> sent1,
                       std::vector<std::int32_t> sent2, double gold,
                       const BinScheme& scheme = {});

/// Token <-> id mapping. Ids are assigned in insertion order.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  std::int32_t add(const std::string& token);
  std::optional<std::int32_t> find(const std::string& token) const;
  const std::string& token(std::int32_t id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

struct Corpus {
  std::string name;
  Vocabulary vocab;
  std::vector<SentencePair> pairs;
  std::optional<std::uint64_t> seed;

  std::size_t vocab_size() const { return vocab.size(); }
  std::string text(const std::vector<std::int32_t>& sentence) const;
  /// Recomputes bins with another scheme.
  void relabel(const BinScheme& scheme);
};

/// Reads `sent1<TAB>sent2<TAB>score` records. With a fixed vocabulary,
/// unknown tokens are a parse error; otherwise the vocabulary grows.
/// Pair ids are "<file stem>:<record index>", e.g. "test:0".
Corpus load_tsv(const std::filesystem::path& path, Vocabulary vocab = {},
                bool fixed_vocab = false, const BinScheme& scheme = {});

void write_tsv(const Corpus& corpus, const std::filesystem::path& path);

/// Raw sentence strings of a pair TSV (both columns), used by the leakage
/// audit where tokenisation differs from the model vocabulary.
std::vector<std::string> read_tsv_sentences(const std::filesystem::path& path);

using Metadata = std::map<std::string, std::string>;
void write_metadata(const Metadata& meta, const std::filesystem::path& path);
Metadata read_metadata(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SynthOptions {
  double noise = 0.15;
  /// Fraction of pairs whose latent cosine targets the top bin.
  double upper_fraction = 0.5;
  std::size_t min_len = 6;
  std::size_t max_len = 12;
  /// Concentration of the token sampling distribution around a sentence
  /// direction.
  double concentration = 12.0;
};

/// Ground truth behind a synthetic corpus.
struct LatentGeometry {
  std::size_t dim = 0;
  /// V×dim unit token directions, row-major.
  std::vector<double> token_dirs;
  /// Per pair id: the two latent sentence directions.
  std::unordered_map<std::string, std::pair<std::vector<double>, std::vector<double>>> sentences;
};

struct SynthCorpus {
  Corpus corpus;
  LatentGeometry latents;
};

/// Deterministic in `seed`. gold = clip(5·(0.5 + 0.5·cos) + N(0, noise²), 0, 5);
/// noise draws that would move a pair out of its target class are redrawn,
/// so class proportions are exactly those of `upper_fraction`.
SynthCorpus synth_corpus(std::size_t n_pairs, std::size_t dim, std::size_t vocab_size,
                         std::uint64_t seed, const SynthOptions& options = {});

/// Gold score of a latent cosine before noise.
double clean_score(double cosine);

struct Splits {
  Corpus train;
  Corpus dev;
  Corpus test;
};

/// Deterministic shuffle by seed, then consecutive slices. Sizes are
/// floor(f·n) for all but the last non-empty split, which takes the rest.
/// One, two or three fractions may be given.
Splits split(const Corpus& corpus, const std::vector<double>& fractions, std::uint64_t seed);

}  // namespace mixsp::data
