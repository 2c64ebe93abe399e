#include "mixsp/model.hpp"

#include "mixsp/errors.hpp"

namespace mixsp {

Model::Model(head::HeadConfig config, std::unique_ptr<encoder::Encoder> enc, head::HeadParams params)
    : config_(std::move(config)), encoder_(std::move(enc)), head_(std::move(params)) {
  if (!encoder_) throw ConfigError("model: missing encoder");
  config_.validate();
  const std::size_t d = encoder_->dim();
  if (head_.projectors.size() != config_.k_bins())
    throw DimensionError("model: " + std::to_string(head_.projectors.size()) + " projectors for " +
                         std::to_string(config_.k_bins()) + " bins");
  for (const auto& p : head_.projectors)
    if (p.in_dim() != d || p.out_dim() != d)
      throw DimensionError("model: projector is " + std::to_string(p.out_dim()) + "x" +
                           std::to_string(p.in_dim()) + ", encoder dimension is " + std::to_string(d));
  if (config_.routed &&
      (head_.router.in_dim() != d || head_.router.out_dim() != config_.k_bins()))
    throw DimensionError("model: router shape does not match d=" + std::to_string(d) + ", k=" +
                         std::to_string(config_.k_bins()));
  if (config_.has_scorer() && (head_.scorer.in_dim() != 2 * d || head_.scorer.out_dim() != 1))
    throw DimensionError("model: scorer must map " + std::to_string(2 * d) + " -> 1");
}

Model::Model(head::HeadConfig config, std::unique_ptr<encoder::Encoder> enc, std::uint64_t seed)
    : config_(std::move(config)), encoder_(std::move(enc)) {
  if (!encoder_) throw ConfigError("model: missing encoder");
  Rng rng(seed);
  head_ = head::init_head(config_, encoder_->dim(), rng);
}

Model::Model(const Model& other)
    : config_(other.config_), encoder_(other.encoder_->clone()), head_(other.head_) {}

Model& Model::operator=(const Model& other) {
  if (this != &other) {
    config_ = other.config_;
    encoder_ = other.encoder_->clone();
    head_ = other.head_;
  }
  return *this;
}

PairForward Model::forward(diff::Tape& tape, const data::SentencePair& pair) {
  PairForward f;
  f.encoded = encoder_->encode(tape, pair);
  if (config_.routed) f.routes = head::route(tape, head_, config_, f.encoded);
  f.projected = head::project(tape, head_, config_, f.encoded, f.routes ? &*f.routes : nullptr);
  if (config_.objective == head::Objective::BCE)
    f.prediction = head::score(tape, head_, f.projected);
  else
    f.prediction = tape.cosine(f.projected.z[0], f.projected.z[1]);
  return f;
}

diff::Var Model::sample_loss(diff::Tape& tape, const data::SentencePair& pair,
                             const PairForward& fwd, LossParts* parts, bool include_clf) {
  diff::Var rl = head::rl_loss(tape, config_, fwd.prediction, fwd.projected, pair.y_sim());
  std::optional<diff::Var> clf;
  if (include_clf && config_.clf_enabled()) clf = head::clf_loss(tape, *fwd.routes, pair.bin);
  diff::Var total = head::combine_losses(tape, config_, rl, clf ? &*clf : nullptr);
  if (parts) {
    parts->rl = rl.scalar();
    parts->clf = clf ? clf->scalar() : 0.0;
    parts->total = total.scalar();
  }
  return total;
}

diff::Var Model::total_loss(diff::Tape& tape, std::span<const data::SentencePair> batch,
                            LossParts* mean_parts, bool include_clf) {
  if (batch.empty()) throw ConfigError("total_loss: empty batch");
  diff::Var acc;
  LossParts sum;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    LossParts parts;
    const PairForward f = forward(tape, batch[i]);
    diff::Var l = sample_loss(tape, batch[i], f, &parts, include_clf);
    sum.rl += parts.rl;
    sum.clf += parts.clf;
    acc = i == 0 ? l : tape.add(acc, l);
  }
  const double n = static_cast<double>(batch.size());
  diff::Var mean = batch.size() == 1 ? acc : tape.scale(acc, 1.0 / n);
  if (mean_parts) {
    mean_parts->rl = sum.rl / n;
    mean_parts->clf = sum.clf / n;
    mean_parts->total = mean.scalar();
  }
  return mean;
}

diff::Var Model::clf_batch_loss(diff::Tape& tape, std::span<const data::SentencePair> batch) {
  if (!config_.routed) throw ConfigError("clf_batch_loss: head has no router");
  if (batch.empty()) throw ConfigError("clf_batch_loss: empty batch");
  diff::Var acc;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto encoded = encoder_->encode(tape, batch[i]);
    const auto routes = head::route(tape, head_, config_, encoded);
    diff::Var l = head::clf_loss(tape, routes, batch[i].bin);
    acc = i == 0 ? l : tape.add(acc, l);
  }
  return batch.size() == 1 ? acc : tape.scale(acc, 1.0 / static_cast<double>(batch.size()));
}

Prediction Model::predict(const data::SentencePair& pair) const {
  // The forward pass binds parameters on a tape; values are only read.
  auto& self = const_cast<Model&>(*this);
  diff::Tape tape;
  const PairForward f = self.forward(tape, pair);
  Prediction p;
  p.score = f.prediction.scalar();
  if (f.routes) p.decision = f.routes->decision;
  p.z1 = f.projected.z[0].value();
  p.z2 = f.projected.z[1].value();
  return p;
}

std::vector<double> Model::predict_scores(std::span<const data::SentencePair> pairs) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(predict(p).score);
  return out;
}

std::vector<std::pair<std::string, diff::Tensor*>> Model::named_tensors() {
  std::vector<std::pair<std::string, diff::Tensor*>> out;
  if (auto* toy = dynamic_cast<encoder::ToyEncoder*>(encoder_.get())) {
    auto& p = toy->params();
    out.emplace_back("encoder.embedding", &p.embedding);
    out.emplace_back("encoder.ctx_weight", &p.ctx_weight);
    out.emplace_back("encoder.ctx_bias", &p.ctx_bias);
    out.emplace_back("encoder.cls_weight", &p.cls_weight);
    out.emplace_back("encoder.cls_bias", &p.cls_bias);
  }
  if (config_.routed) {
    out.emplace_back("head.router.weight", &head_.router.weight);
    out.emplace_back("head.router.bias", &head_.router.bias);
  }
  for (std::size_t c = 0; c < head_.projectors.size(); ++c) {
    const std::string base = "head.projector." + std::to_string(c);
    out.emplace_back(base + ".weight", &head_.projectors[c].weight);
    out.emplace_back(base + ".bias", &head_.projectors[c].bias);
  }
  if (config_.has_scorer()) {
    out.emplace_back("head.scorer.weight", &head_.scorer.weight);
    out.emplace_back("head.scorer.bias", &head_.scorer.bias);
  }
  return out;
}

std::vector<std::pair<std::string, const diff::Tensor*>> Model::named_tensors() const {
  std::vector<std::pair<std::string, const diff::Tensor*>> out;
  for (auto& [name, t] : const_cast<Model&>(*this).named_tensors()) out.emplace_back(name, t);
  return out;
}

std::vector<diff::Tensor*> Model::trainable() {
  std::vector<diff::Tensor*> out = encoder_->trainable();
  for (auto* t : router_tensors()) out.push_back(t);
  for (auto* t : ranking_tensors()) out.push_back(t);
  return out;
}

std::vector<diff::Tensor*> Model::router_tensors() {
  if (!config_.routed) return {};
  return {&head_.router.weight, &head_.router.bias};
}

std::vector<diff::Tensor*> Model::ranking_tensors() {
  std::vector<diff::Tensor*> out;
  for (auto& p : head_.projectors) {
    out.push_back(&p.weight);
    out.push_back(&p.bias);
  }
  if (config_.has_scorer()) {
    out.push_back(&head_.scorer.weight);
    out.push_back(&head_.scorer.bias);
  }
  return out;
}

ParamCount head_param_count(const head::HeadConfig& config, std::size_t d) {
  ParamCount c;
  const std::size_t k = config.k_bins();
  if (config.routed) c.router = d * k + k;
  c.projectors = k * (d * d + d);
  if (config.has_scorer()) c.scorer = 2 * d + 1;
  return c;
}

ParamCount Model::param_count() const {
  ParamCount c = head_param_count(config_, dim());
  for (const diff::Tensor* t : const_cast<Model&>(*this).encoder_->trainable()) c.encoder += t->size();
  return c;
}

}  // namespace mixsp
