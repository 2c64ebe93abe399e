#include "mixsp/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "mixsp/errors.hpp"

namespace mixsp::analysis {

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine: vector lengths differ");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DomainError("cosine: zero-norm vector");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

CosineSamples cosine_samples(const Model& model, std::span<const data::SentencePair> pairs,
                             Space space) {
  CosineSamples out;
  for (const auto& p : pairs) {
    std::vector<double> a, b;
    if (space == Space::Projected) {
      auto pred = model.predict(p);
      a = std::move(pred.z1);
      b = std::move(pred.z2);
    } else {
      auto enc = model.encoder().encode(p);
      a = std::move(enc.x1);
      b = std::move(enc.x2);
    }
    try {
      out.samples.push_back({cosine(a, b), p.class_label()});
    } catch (const DomainError&) {
      ++out.skipped;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Linear-interpolation quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double silverman_bandwidth(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw UndefinedMetric("KDE needs at least 2 samples per class");
  double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) throw UndefinedMetric("KDE undefined: samples have zero variance");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd;
  const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  return std::max(h, 1e-3);
}

double kde(std::span<const double> samples, double bandwidth, double x) {
  const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth *
                             std::sqrt(2.0 * std::numbers::pi));
  double s = 0;
  for (double v : samples) {
    const double u = (x - v) / bandwidth;
    s += std::exp(-0.5 * u * u);
  }
  return s * norm;
}

namespace {

// Density on an ascending uniform grid. Kernels are cut at 40 bandwidths,
// where exp(−800) underflows to zero anyway.
std::vector<double> density_on_grid(std::span<const double> samples, double h,
                                    const std::vector<double>& grid) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double norm = 1.0 / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  const double cut = 40.0 * h;
  std::vector<double> out(grid.size(), 0.0);
  std::size_t lo = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double x = grid[g];
    while (lo < sorted.size() && sorted[lo] < x - cut) ++lo;
    double s = 0;
    for (std::size_t i = lo; i < sorted.size() && sorted[i] <= x + cut; ++i) {
      const double u = (x - sorted[i]) / h;
      s += std::exp(-0.5 * u * u);
    }
    out[g] = s * norm;
  }
  return out;
}

}  // namespace

OverlapResult kde_overlap(std::span<const double> upper, std::span<const double> lower,
                          std::size_t grid_points) {
  if (grid_points < 2) throw ConfigError("kde_overlap: grid needs at least 2 points");
  double hu, hl;
  try {
    hu = silverman_bandwidth(upper);
  } catch (const UndefinedMetric& e) {
    throw UndefinedMetric(std::string("upper class: ") + e.what());
  }
  try {
    hl = silverman_bandwidth(lower);
  } catch (const UndefinedMetric& e) {
    throw UndefinedMetric(std::string("lower class: ") + e.what());
  }
  const double hmax = std::max(hu, hl);
  const auto [umin, umax] = std::minmax_element(upper.begin(), upper.end());
  const auto [lmin, lmax] = std::minmax_element(lower.begin(), lower.end());
  const double lo = std::min(*umin, *lmin) - 5.0 * hmax;
  const double hi = std::max(*umax, *lmax) + 5.0 * hmax;

  OverlapResult out;
  auto& g = out.grid;
  g.bandwidth_upper = hu;
  g.bandwidth_lower = hl;
  g.x.resize(grid_points);
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  for (std::size_t i = 0; i < grid_points; ++i) g.x[i] = lo + step * static_cast<double>(i);
  g.upper = density_on_grid(upper, hu, g.x);
  g.lower = density_on_grid(lower, hl, g.x);

  double area = 0;
  for (std::size_t i = 0; i + 1 < grid_points; ++i) {
    const double a = std::min(g.upper[i], g.lower[i]);
    const double b = std::min(g.upper[i + 1], g.lower[i + 1]);
    area += 0.5 * (a + b) * step;
  }
  out.overlap = std::clamp(area, 0.0, 1.0);
  return out;
}

OverlapResult kde_overlap(std::span<const SimilaritySample> samples, std::size_t grid_points) {
  std::vector<double> up, low;
  for (const auto& s : samples) (s.label == data::ClassLabel::Upper ? up : low).push_back(s.cosine);
  return kde_overlap(up, low, grid_points);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> normalized(const std::vector<double>& v) {
  double n = 0;
  for (double x : v) n += x * x;
  if (n == 0.0) throw DomainError("zero-norm embedding");
  n = std::sqrt(n);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("embedding dimensions differ");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

double alignment(std::span<const std::pair<std::vector<double>, std::vector<double>>> positives) {
  if (positives.empty()) throw UndefinedMetric("alignment needs at least one positive pair");
  double s = 0;
  for (const auto& [a, b] : positives) s += sq_dist(normalized(a), normalized(b));
  return s / static_cast<double>(positives.size());
}

double uniformity(std::span<const std::vector<double>> embeddings) {
  if (embeddings.size() < 2) throw UndefinedMetric("uniformity needs at least 2 embeddings");
  std::vector<std::vector<double>> unit;
  unit.reserve(embeddings.size());
  for (const auto& e : embeddings) unit.push_back(normalized(e));
  double s = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < unit.size(); ++i)
    for (std::size_t j = i + 1; j < unit.size(); ++j) {
      s += std::exp(-2.0 * sq_dist(unit[i], unit[j]));
      ++pairs;
    }
  return std::log(s / static_cast<double>(pairs));
}

// ---------------------------------------------------------------------------

namespace {

void collect_ngrams(std::span<const std::string> corpus, std::size_t n,
                    std::unordered_set<std::string>& out) {
  for (const auto& sentence : corpus) {
    std::vector<std::string> toks;
    std::istringstream is(sentence);
    std::string t;
    while (is >> t) {
      std::transform(t.begin(), t.end(), t.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      toks.push_back(std::move(t));
    }
    if (toks.size() < n) continue;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      std::string g = toks[i];
      for (std::size_t k = 1; k < n; ++k) g += ' ' + toks[i + k];
      out.insert(std::move(g));
    }
  }
}

}  // namespace

JaccardResult ngram_jaccard(std::span<const std::string> corpus_a,
                            std::span<const std::string> corpus_b, std::size_t n) {
  if (n == 0) throw ConfigError("ngram_jaccard: n must be at least 1");
  std::unordered_set<std::string> a, b;
  collect_ngrams(corpus_a, n, a);
  collect_ngrams(corpus_b, n, b);
  JaccardResult r;
  r.set_a = a.size();
  r.set_b = b.size();
  for (const auto& g : a) r.intersection += b.count(g);
  const std::size_t uni = r.set_a + r.set_b - r.intersection;
  if (uni == 0) {
    r.empty = true;
    return r;
  }
  r.similarity = static_cast<double>(r.intersection) / static_cast<double>(uni);
  return r;
}

}  // namespace mixsp::analysis
