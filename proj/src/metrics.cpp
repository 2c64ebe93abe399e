#include "mixsp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "mixsp/errors.hpp"

namespace mixsp::metrics {

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && v[order[j]] == v[order[i]]) ++j;
    // Positions i+1 .. j share rank (i+1 + j)/2.
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw DimensionError("correlation: lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()) + " differ");
  const std::size_t n = x.size();
  if (n < 2) throw UndefinedMetric("correlation needs at least 2 observations");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedMetric("correlation undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw DimensionError("spearman: lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()) + " differ");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

void ScoredPairs::push(double pred, double gold_score) {
  prediction.push_back(pred);
  gold.push_back(gold_score);
  label.push_back(gold_score >= 4.0 ? data::ClassLabel::Upper : data::ClassLabel::Lower);
}

MaybeMetric try_spearman(std::span<const double> x, std::span<const double> y) {
  try {
    return {spearman(x, y), {}};
  } catch (const UndefinedMetric& e) {
    return {std::nullopt, e.what()};
  }
}

PerClassSpearman per_class_spearman(const ScoredPairs& scored) {
  std::vector<double> p[2], g[2];
  for (std::size_t i = 0; i < scored.size(); ++i) {
    const auto c = static_cast<std::size_t>(scored.label[i]);
    p[c].push_back(scored.prediction[i]);
    g[c].push_back(scored.gold[i]);
  }
  PerClassSpearman out;
  out.upper = try_spearman(p[0], g[0]);
  out.lower = try_spearman(p[1], g[1]);
  if (!out.upper.ok()) out.upper.error = "upper class: " + out.upper.error;
  if (!out.lower.ok()) out.lower.error = "lower class: " + out.lower.error;
  return out;
}

// ---------------------------------------------------------------------------

double average_precision(std::span<const Candidate> candidates) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].score > candidates[b].score;
  });
  double sum = 0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (!candidates[order[r]].relevant) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  if (hits == 0) throw UndefinedMetric("average precision undefined without relevant candidates");
  return sum / static_cast<double>(hits);
}

MapResult mean_average_precision(std::span<const Query> queries) {
  MapResult out;
  double sum = 0;
  for (const auto& q : queries) {
    const bool any = std::any_of(q.candidates.begin(), q.candidates.end(),
                                 [](const Candidate& c) { return c.relevant; });
    if (!any) {
      ++out.skipped_queries;
      continue;
    }
    sum += average_precision(q.candidates);
    ++out.scored_queries;
  }
  if (out.scored_queries == 0) throw UndefinedMetric("MAP undefined: no query has a relevant candidate");
  out.map = sum / static_cast<double>(out.scored_queries);
  return out;
}

std::vector<Query> load_queries(const std::filesystem::path& path) {
  using nlohmann::json;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open query file " + path.string());
  std::vector<Query> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    try {
      const json rec = json::parse(line);
      Query q;
      const auto& qid = rec.at("query_id");
      q.id = qid.is_string() ? qid.get<std::string>() : qid.dump();
      for (const auto& c : rec.at("candidates")) {
        const int rel = c.at("relevant").get<int>();
        if (rel != 0 && rel != 1) throw ParseError(where + ": relevant must be 0 or 1");
        q.candidates.push_back({c.at("score").get<double>(), rel == 1});
      }
      out.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw DimensionError("auc: " + std::to_string(scores.size()) + " scores vs " +
                         std::to_string(labels.size()) + " labels");
  // Rank-sum form of the Mann–Whitney statistic; average ranks give ties ½.
  const auto ranks = average_ranks(scores);
  double pos = 0, neg = 0, rank_sum = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      pos += 1;
      rank_sum += ranks[i];
    } else if (labels[i] == 0) {
      neg += 1;
    } else {
      throw DomainError("auc: labels must be 0 or 1");
    }
  }
  if (pos == 0 || neg == 0) throw UndefinedMetric("AUC undefined: labels contain a single class");
  return (rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

RouterAccuracy router_accuracy(std::span<const head::RouteDecision> decisions,
                               std::span<const std::size_t> gold_bins) {
  if (decisions.size() != gold_bins.size())
    throw DimensionError("router_accuracy: decisions and labels differ in length");
  RouterAccuracy out;
  if (decisions.empty()) return out;
  std::size_t right = 0, pairs_right = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const bool a = decisions[i].chosen[0] == gold_bins[i];
    const bool b = decisions[i].chosen[1] == gold_bins[i];
    right += static_cast<std::size_t>(a) + static_cast<std::size_t>(b);
    pairs_right += static_cast<std::size_t>(a && b);
  }
  out.sentences = 2 * decisions.size();
  out.per_sentence = static_cast<double>(right) / static_cast<double>(out.sentences);
  out.per_pair = static_cast<double>(pairs_right) / static_cast<double>(decisions.size());
  return out;
}

}  // namespace mixsp::metrics
