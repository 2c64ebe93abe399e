#include "mixsp/evaluate.hpp"

#include <vector>

#include "mixsp/errors.hpp"
#include "mixsp/json_io.hpp"

namespace mixsp {

using nlohmann::json;

namespace {

template <typename F>
metrics::MaybeMetric attempt(F&& f) {
  try {
    return {f(), {}};
  } catch (const Error& e) {
    return {std::nullopt, e.what()};
  }
}

}  // namespace

EvalOutput evaluate(const Model& model, std::span<const data::SentencePair> pairs,
                    analysis::Space space) {
  EvalOutput out;
  EvalReport& r = out.report;
  r.pairs = pairs.size();
  r.param_count = model.param_count();
  r.embedding_space = space == analysis::Space::Projected ? "projected" : "encoder";

  metrics::ScoredPairs scored;
  std::vector<head::RouteDecision> decisions;
  std::vector<std::size_t> gold_bins;
  std::vector<std::pair<std::vector<double>, std::vector<double>>> positives;
  std::vector<std::vector<double>> all_vectors;
  std::vector<analysis::SimilaritySample> sims;

  for (const auto& p : pairs) {
    Prediction pred = model.predict(p);
    scored.push(pred.score, p.gold_score);
    if (pred.decision) {
      decisions.push_back(*pred.decision);
      gold_bins.push_back(p.bin);
    }
    std::vector<double> a, b;
    if (space == analysis::Space::Projected) {
      a = std::move(pred.z1);
      b = std::move(pred.z2);
    } else {
      auto enc = model.encoder().encode(p);
      a = std::move(enc.x1);
      b = std::move(enc.x2);
    }
    try {
      sims.push_back({analysis::cosine(a, b), p.class_label()});
    } catch (const DomainError&) {
      ++r.skipped_zero_norm;
      continue;
    }
    if (p.class_label() == data::ClassLabel::Upper) positives.emplace_back(a, b);
    all_vectors.push_back(std::move(a));
    all_vectors.push_back(std::move(b));
  }

  r.spearman_overall = metrics::try_spearman(scored.prediction, scored.gold);
  const auto per_class = metrics::per_class_spearman(scored);
  r.spearman_upper = per_class.upper;
  r.spearman_lower = per_class.lower;
  r.pearson = attempt([&] { return metrics::pearson(scored.prediction, scored.gold); });
  r.router_accuracy = metrics::router_accuracy(decisions, gold_bins);
  r.auc = attempt([&] {
    std::vector<int> labels;
    for (auto l : scored.label) labels.push_back(l == data::ClassLabel::Upper ? 1 : 0);
    return metrics::auc(scored.prediction, labels);
  });
  r.overlap = attempt([&] {
    auto res = analysis::kde_overlap(sims);
    out.density = std::move(res.grid);
    return res.overlap;
  });
  r.alignment = attempt([&] { return analysis::alignment(positives); });
  r.uniformity = attempt([&] { return analysis::uniformity(all_vectors); });
  return out;
}

namespace {

json metric_json(const metrics::MaybeMetric& m) {
  if (m.ok()) return *m.value;
  return {{"error", m.error}};
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const EvalReport& r) {
  json j;
  j["pairs"] = r.pairs;
  j["spearman_overall"] = metric_json(r.spearman_overall);
  j["spearman_upper"] = metric_json(r.spearman_upper);
  j["spearman_lower"] = metric_json(r.spearman_lower);
  j["pearson"] = metric_json(r.pearson);
  j["router_accuracy"] = {{"per_sentence", opt_json(r.router_accuracy.per_sentence)},
                          {"per_pair", opt_json(r.router_accuracy.per_pair)},
                          {"sentences", r.router_accuracy.sentences}};
  if (r.map)
    j["map"] = {{"value", r.map->map},
                {"scored_queries", r.map->scored_queries},
                {"skipped_queries", r.map->skipped_queries}};
  else
    j["map"] = nullptr;
  j["auc"] = metric_json(r.auc);
  j["overlap"] = metric_json(r.overlap);
  if (r.overlap.ok()) j["overlap_percent"] = 100.0 * *r.overlap.value;
  j["alignment"] = metric_json(r.alignment);
  j["uniformity"] = metric_json(r.uniformity);
  j["embedding_space"] = r.embedding_space;
  j["skipped_zero_norm"] = r.skipped_zero_norm;
  j["param_count"] = to_json(r.param_count);
  return j;
}

}  // namespace mixsp
