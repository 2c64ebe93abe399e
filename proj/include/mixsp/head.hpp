#pragma once

// Routing network, specialized projectors, scorer and losses of the
// classify-and-rank head.

#include <cstdint>
#include <string>
#include <vector>

#include "mixsp/data.hpp"
#include "mixsp/diffkit.hpp"
#include "mixsp/encoder.hpp"
#include "mixsp/rng.hpp"

namespace mixsp::head {

enum class Selection : std::uint8_t { Argmax, WeightedAverage };
enum class RouterInput : std::uint8_t { ClsPlusCtx, CtxOnly, PairCtx };
enum class Objective : std::uint8_t { BCE, CosineMSE };

const char* to_string(Selection s);
const char* to_string(RouterInput r);
const char* to_string(Objective o);
Selection parse_selection(const std::string& s);
RouterInput parse_router_input(const std::string& s);
Objective parse_objective(const std::string& s);

struct HeadConfig {
  /// False drops the router: one shared projector, no classification loss.
  bool routed = true;
  data::BinScheme bin_scheme;
  Selection selection = Selection::Argmax;
  RouterInput router_input = RouterInput::ClsPlusCtx;
  Objective objective = Objective::BCE;
  double alpha1 = 7e-4;
  double alpha2 = 1e-4;
  bool use_clf_loss = true;

  std::size_t k_bins() const { return routed ? bin_scheme.bins() : 1; }
  bool has_scorer() const { return objective == Objective::BCE; }
  bool clf_enabled() const { return routed && use_clf_loss; }
  void validate() const;

  /// Hard selection with classification loss (the default head).
  static HeadConfig mixsp();
  /// Shared projector trained on cosine regression, no router.
  static HeadConfig fine_tune();
  /// Probability-weighted projector mixture without classification loss.
  static HeadConfig moe();
};

struct Linear {
  diff::Tensor weight;  // out×in
  diff::Tensor bias;    // out

  static Linear init(std::size_t in, std::size_t out, Rng& rng);
  diff::Var apply(diff::Tape& tape, diff::Var x);
  std::size_t param_count() const { return weight.size() + bias.size(); }
  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }
};

struct HeadParams {
  Linear router;                  // G1: d → k
  std::vector<Linear> projectors;  // d → d; index 0 = top bin (Upper)
  Linear scorer;                  // G2: 2d → 1

  std::size_t dim() const { return projectors.empty() ? 0 : projectors.front().in_dim(); }
};

HeadParams init_head(const HeadConfig& config, std::size_t dim, Rng& rng);

/// Per-sentence routing outcome.
struct RouteDecision {
  std::vector<double> p_hat[2];
  std::size_t chosen[2] = {0, 0};
  double beta[2] = {1.0, 1.0};
};

struct RouteVars {
  diff::Var p_hat[2];
  RouteDecision decision;
};

/// Index of the maximum; ties go to the lowest index.
std::size_t argmax(const std::vector<double>& v);

/// p̂_xj = softmax(G1(input_j)), input per `router_input`.
RouteVars route(diff::Tape& tape, HeadParams& params, const HeadConfig& config,
                const encoder::EncodedVars& encoded);

/// Both sentences are supervised by the pair's gold bin. Two bins: mean of
/// BCE on the top-bin probability; more bins: mean categorical CE.
diff::Var clf_loss(diff::Tape& tape, const RouteVars& routes, std::size_t gold_bin);

struct ProjectedVars {
  diff::Var z[2];
};

/// Argmax: z_j = projector[chosen_j](h_xj)·β_j with β_j a tape node.
/// WeightedAverage: z_j = Σ_c p̂_j[c]·projector[c](h_xj).
/// Unrouted heads apply the single projector directly (`routes` unused).
ProjectedVars project(diff::Tape& tape, HeadParams& params, const HeadConfig& config,
                      const encoder::EncodedVars& encoded, const RouteVars* routes);

/// sigmoid(G2(concat(z_x1, z_x2))).
diff::Var score(diff::Tape& tape, HeadParams& params, const ProjectedVars& projected);

/// BCE(y_sim, prediction) or (cos(z_x1, z_x2) − y_sim)².
diff::Var rl_loss(diff::Tape& tape, const HeadConfig& config, diff::Var prediction,
                  const ProjectedVars& projected, double y_sim);

/// α1·L_RL + α2·L_Clf (the second term only when enabled).
diff::Var combine_losses(diff::Tape& tape, const HeadConfig& config, diff::Var rl,
                         const diff::Var* clf);

}  // namespace mixsp::head
