#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mixsp/data.hpp"
#include "mixsp/model.hpp"

namespace mixsp::analysis {

struct SimilaritySample {
  double cosine = 0.0;
  data::ClassLabel label = data::ClassLabel::Lower;
};

/// Which vectors the cosine is taken over.
enum class Space { Projected, Encoder };

struct CosineSamples {
  std::vector<SimilaritySample> samples;
  /// Pairs dropped because a vector had zero norm.
  std::size_t skipped = 0;
};

/// cos(z_x1, z_x2) per pair (Projected) or cos(h_x1, h_x2) (Encoder).
CosineSamples cosine_samples(const Model& model, std::span<const data::SentencePair> pairs,
                             Space space = Space::Projected);

double cosine(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kGridPoints = 4096;

struct DensityGrid {
  std::vector<double> x;
  std::vector<double> upper;
  std::vector<double> lower;
  double bandwidth_upper = 0.0;
  double bandwidth_lower = 0.0;
};

struct OverlapResult {
  double overlap = 0.0;
  DensityGrid grid;
};

/// Silverman's rule 0.9·min(σ̂, IQR/1.34)·n^(−1/5), floored at 1e-3. Falls
/// back to σ̂ when the IQR is zero. Throws for n < 2 or zero variance.
double silverman_bandwidth(std::span<const double> values);

/// Gaussian KDE at x.
double kde(std::span<const double> samples, double bandwidth, double x);

/// Trapezoid integral of min(f_upper, f_lower) on a shared 4096-point grid
/// spanning [min − 5·h_max, max + 5·h_max].
OverlapResult kde_overlap(std::span<const double> upper, std::span<const double> lower,
                          std::size_t grid_points = kGridPoints);
OverlapResult kde_overlap(std::span<const SimilaritySample> samples,
                          std::size_t grid_points = kGridPoints);

/// Mean ‖f(x) − f(x⁺)‖² over positive pairs, each vector L2-normalised.
double alignment(std::span<const std::pair<std::vector<double>, std::vector<double>>> positives);

/// log mean over distinct unordered pairs of exp(−2‖f(x) − f(y)‖²), vectors
/// L2-normalised.
double uniformity(std::span<const std::vector<double>> embeddings);

struct JaccardResult {
  double similarity = 0.0;
  std::size_t set_a = 0;
  std::size_t set_b = 0;
  std::size_t intersection = 0;
  /// Both n-gram sets empty; similarity reported as 0.
  bool empty = false;
};

/// Jaccard similarity of the word n-gram sets (lowercased, whitespace
/// tokens) of two corpora.
JaccardResult ngram_jaccard(std::span<const std::string> corpus_a,
                            std::span<const std::string> corpus_b, std::size_t n);

}  // namespace mixsp::analysis
