#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixsp/data.hpp"
#include "mixsp/head.hpp"

namespace mixsp::metrics {

/// 1-based fractional ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v);

/// Product-moment correlation. Throws UndefinedMetric for n < 2 or a
/// constant input.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// Parallel arrays of prediction, gold score and gold bin.
struct ScoredPairs {
  std::vector<double> prediction;
  std::vector<double> gold;
  std::vector<data::ClassLabel> label;

  void push(double pred, double gold_score);
  std::size_t size() const { return prediction.size(); }
};

/// A metric that may be undefined on the given data.
struct MaybeMetric {
  std::optional<double> value;
  std::string error;

  bool ok() const { return value.has_value(); }
};

MaybeMetric try_spearman(std::span<const double> x, std::span<const double> y);

struct PerClassSpearman {
  MaybeMetric upper;
  MaybeMetric lower;
};

PerClassSpearman per_class_spearman(const ScoredPairs& scored);

struct Candidate {
  double score = 0.0;
  bool relevant = false;
};

struct Query {
  std::string id;
  std::vector<Candidate> candidates;
};

struct MapResult {
  double map = 0.0;
  std::size_t scored_queries = 0;
  /// Queries without any relevant candidate (excluded from the mean).
  std::size_t skipped_queries = 0;
};

/// Average precision of one ranking; candidates are sorted by score
/// descending with ties kept in input order.
double average_precision(std::span<const Candidate> candidates);

/// Mean average precision over queries with at least one relevant
/// candidate. Throws UndefinedMetric if none qualifies.
MapResult mean_average_precision(std::span<const Query> queries);

/// JSON lines {"query_id": ..., "candidates": [{"score": x, "relevant": 0|1}, ...]}.
std::vector<Query> load_queries(const std::filesystem::path& path);

/// Mann–Whitney AUC: (wins + ½·ties) / (positives·negatives).
double auc(std::span<const double> scores, std::span<const int> labels);

struct RouterAccuracy {
  std::optional<double> per_sentence;
  std::optional<double> per_pair;
  std::size_t sentences = 0;
};

/// Fraction of sentences whose argmax bin equals the pair's gold bin; the
/// per-pair figure requires both sentences to be right.
RouterAccuracy router_accuracy(std::span<const head::RouteDecision> decisions,
                               std::span<const std::size_t> gold_bins);

}  // namespace mixsp::metrics
