#pragma once

#include <optional>
#include <span>
#include <string>

#include "json.hpp"

#include "mixsp/analysis.hpp"
#include "mixsp/data.hpp"
#include "mixsp/metrics.hpp"
#include "mixsp/model.hpp"

namespace mixsp {

/// Every scalar diagnostic for a model on one split. Undefined statistics
/// keep an empty value and an explanatory error string.
struct EvalReport {
  std::size_t pairs = 0;
  metrics::MaybeMetric spearman_overall;
  metrics::MaybeMetric spearman_upper;
  metrics::MaybeMetric spearman_lower;
  metrics::MaybeMetric pearson;
  metrics::RouterAccuracy router_accuracy;
  std::optional<metrics::MapResult> map;
  metrics::MaybeMetric auc;
  metrics::MaybeMetric overlap;
  metrics::MaybeMetric alignment;
  metrics::MaybeMetric uniformity;
  std::size_t skipped_zero_norm = 0;
  /// "projected" (z vectors) or "encoder" (h vectors).
  std::string embedding_space;
  ParamCount param_count;
};

struct EvalOutput {
  EvalReport report;
  /// Present when the overlap could be computed.
  std::optional<analysis::DensityGrid> density;
};

/// Runs the model over `pairs` and fills every field except `map`.
EvalOutput evaluate(const Model& model, std::span<const data::SentencePair> pairs,
                    analysis::Space space = analysis::Space::Projected);

nlohmann::json to_json(const EvalReport& report);

}  // namespace mixsp
