#include "mixsp/head.hpp"

#include "mixsp/errors.hpp"
#include "mixsp/init.hpp"

namespace mixsp::head {

const char* to_string(Selection s) {
  return s == Selection::Argmax ? "argmax" : "weighted_average";
}

const char* to_string(RouterInput r) {
  switch (r) {
    case RouterInput::ClsPlusCtx: return "cls_plus_ctx";
    case RouterInput::CtxOnly: return "ctx_only";
    case RouterInput::PairCtx: return "pair_ctx";
  }
  return "?";
}

const char* to_string(Objective o) { return o == Objective::BCE ? "bce" : "cosine_mse"; }

Selection parse_selection(const std::string& s) {
  if (s == "argmax") return Selection::Argmax;
  if (s == "weighted_average") return Selection::WeightedAverage;
  throw ConfigError("unknown selection '" + s + "'");
}

RouterInput parse_router_input(const std::string& s) {
  if (s == "cls_plus_ctx") return RouterInput::ClsPlusCtx;
  if (s == "ctx_only") return RouterInput::CtxOnly;
  if (s == "pair_ctx") return RouterInput::PairCtx;
  throw ConfigError("unknown router input '" + s + "'");
}

Objective parse_objective(const std::string& s) {
  if (s == "bce") return Objective::BCE;
  if (s == "cosine_mse") return Objective::CosineMSE;
  throw ConfigError("unknown objective '" + s + "'");
}

void HeadConfig::validate() const {
  if (!(alpha1 >= 0) || !(alpha2 >= 0)) throw ConfigError("loss weights must be non-negative");
}

HeadConfig HeadConfig::mixsp() { return {}; }

HeadConfig HeadConfig::fine_tune() {
  HeadConfig c;
  c.routed = false;
  c.objective = Objective::CosineMSE;
  c.use_clf_loss = false;
  return c;
}

HeadConfig HeadConfig::moe() {
  HeadConfig c;
  c.selection = Selection::WeightedAverage;
  c.use_clf_loss = false;
  return c;
}

// ---------------------------------------------------------------------------

Linear Linear::init(std::size_t in, std::size_t out, Rng& rng) {
  return {uniform_init({out, in}, in, rng), uniform_init({out}, in, rng)};
}

diff::Var Linear::apply(diff::Tape& tape, diff::Var x) {
  return tape.linear(tape.leaf(weight), tape.leaf(bias), x);
}

HeadParams init_head(const HeadConfig& config, std::size_t dim, Rng& rng) {
  config.validate();
  if (dim == 0) throw ConfigError("head: dimension must be positive");
  HeadParams p;
  const std::size_t k = config.k_bins();
  if (config.routed) p.router = Linear::init(dim, k, rng);
  for (std::size_t c = 0; c < k; ++c) p.projectors.push_back(Linear::init(dim, dim, rng));
  if (config.has_scorer()) p.scorer = Linear::init(2 * dim, 1, rng);
  return p;
}

// ---------------------------------------------------------------------------

std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

RouteVars route(diff::Tape& tape, HeadParams& params, const HeadConfig& config,
                const encoder::EncodedVars& encoded) {
  if (!config.routed) throw ConfigError("route: head has no router");
  const std::size_t d = params.dim();
  if (encoded.x1.size() != d || encoded.x2.size() != d || encoded.cls.size() != d)
    throw DimensionError("route: encoder dimension " + std::to_string(encoded.x1.size()) +
                         " does not match router input " + std::to_string(d));
  const diff::Var h[2] = {encoded.x1, encoded.x2};
  RouteVars out;
  diff::Var pair_input;
  if (config.router_input == RouterInput::PairCtx) pair_input = tape.add(encoded.x1, encoded.x2);
  for (int j = 0; j < 2; ++j) {
    diff::Var input;
    switch (config.router_input) {
      case RouterInput::ClsPlusCtx: input = tape.add(encoded.cls, h[j]); break;
      case RouterInput::CtxOnly: input = h[j]; break;
      case RouterInput::PairCtx: input = pair_input; break;
    }
    out.p_hat[j] = tape.softmax(params.router.apply(tape, input));
    out.decision.p_hat[j] = out.p_hat[j].value();
    out.decision.chosen[j] = argmax(out.decision.p_hat[j]);
    out.decision.beta[j] = out.decision.p_hat[j][out.decision.chosen[j]];
  }
  return out;
}

diff::Var clf_loss(diff::Tape& tape, const RouteVars& routes, std::size_t gold_bin) {
  const std::size_t k = routes.p_hat[0].size();
  if (gold_bin >= k)
    throw DomainError("clf_loss: label bin " + std::to_string(gold_bin) + " outside a " +
                      std::to_string(k) + "-bin scheme");
  diff::Var per[2];
  for (int j = 0; j < 2; ++j) {
    if (k == 2) {
      const double t = gold_bin == 0 ? 1.0 : 0.0;
      per[j] = tape.bce(t, tape.pick(routes.p_hat[j], 0));
    } else {
      per[j] = tape.nll(routes.p_hat[j], gold_bin);
    }
  }
  return tape.scale(tape.add(per[0], per[1]), 0.5);
}

ProjectedVars project(diff::Tape& tape, HeadParams& params, const HeadConfig& config,
                      const encoder::EncodedVars& encoded, const RouteVars* routes) {
  const diff::Var h[2] = {encoded.x1, encoded.x2};
  ProjectedVars out;
  if (!config.routed) {
    for (int j = 0; j < 2; ++j) out.z[j] = params.projectors.at(0).apply(tape, h[j]);
    return out;
  }
  if (routes == nullptr) throw ConfigError("project: routed head needs routing decisions");
  for (int j = 0; j < 2; ++j) {
    if (config.selection == Selection::Argmax) {
      const std::size_t c = routes->decision.chosen[j];
      diff::Var beta = tape.pick(routes->p_hat[j], c);
      out.z[j] = tape.scale(params.projectors.at(c).apply(tape, h[j]), beta);
    } else {
      diff::Var acc;
      for (std::size_t c = 0; c < params.projectors.size(); ++c) {
        diff::Var term = tape.scale(params.projectors[c].apply(tape, h[j]),
                                    tape.pick(routes->p_hat[j], c));
        acc = c == 0 ? term : tape.add(acc, term);
      }
      out.z[j] = acc;
    }
  }
  return out;
}

diff::Var score(diff::Tape& tape, HeadParams& params, const ProjectedVars& projected) {
  return tape.sigmoid(params.scorer.apply(tape, tape.concat(projected.z[0], projected.z[1])));
}

diff::Var rl_loss(diff::Tape& tape, const HeadConfig& config, diff::Var prediction,
                  const ProjectedVars& projected, double y_sim) {
  if (config.objective == Objective::BCE) return tape.bce(y_sim, prediction);
  diff::Var diffv = tape.add_constant(tape.cosine(projected.z[0], projected.z[1]), -y_sim);
  return tape.mul(diffv, diffv);
}

diff::Var combine_losses(diff::Tape& tape, const HeadConfig& config, diff::Var rl,
                         const diff::Var* clf) {
  diff::Var total = tape.scale(rl, config.alpha1);
  if (config.clf_enabled() && clf != nullptr) total = tape.add(total, tape.scale(*clf, config.alpha2));
  return total;
}

}  // namespace mixsp::head
