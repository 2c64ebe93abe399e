#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixsp/data.hpp"
#include "mixsp/encoder.hpp"
#include "mixsp/head.hpp"

namespace mixsp {

/// Forward pass of one pair recorded on a tape.
struct PairForward {
  encoder::EncodedVars encoded;
  std::optional<head::RouteVars> routes;
  head::ProjectedVars projected;
  /// sigmoid score (BCE objective) or cos(z_x1, z_x2) (cosine objective).
  diff::Var prediction;
};

struct LossParts {
  double rl = 0.0;
  double clf = 0.0;
  double total = 0.0;
};

/// Plain-value output of the model for one pair.
struct Prediction {
  double score = 0.0;
  std::optional<head::RouteDecision> decision;
  std::vector<double> z1;
  std::vector<double> z2;
};

struct ParamCount {
  std::size_t encoder = 0;
  std::size_t router = 0;
  std::size_t projectors = 0;
  std::size_t scorer = 0;

  std::size_t head() const { return router + projectors + scorer; }
  std::size_t total() const { return encoder + head(); }
};

/// Encoder plus classify-and-rank head.
class Model {
 public:
  Model(head::HeadConfig config, std::unique_ptr<encoder::Encoder> enc, head::HeadParams params);
  /// Fresh model with a head initialised from `seed`.
  Model(head::HeadConfig config, std::unique_ptr<encoder::Encoder> enc, std::uint64_t seed);

  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const head::HeadConfig& config() const { return config_; }
  head::HeadConfig& config() { return config_; }
  encoder::Encoder& encoder() { return *encoder_; }
  const encoder::Encoder& encoder() const { return *encoder_; }
  head::HeadParams& head() { return head_; }
  const head::HeadParams& head() const { return head_; }
  std::size_t dim() const { return encoder_->dim(); }

  PairForward forward(diff::Tape& tape, const data::SentencePair& pair);
  /// α1·L_RL + α2·L_Clf for one pair.
  /// `include_clf = false` drops the classification term even when the
  /// config enables it.
  diff::Var sample_loss(diff::Tape& tape, const data::SentencePair& pair, const PairForward& fwd,
                        LossParts* parts = nullptr, bool include_clf = true);
  /// Arithmetic mean of sample losses. Throws on an empty batch.
  diff::Var total_loss(diff::Tape& tape, std::span<const data::SentencePair> batch,
                       LossParts* mean_parts = nullptr, bool include_clf = true);
  /// Mean L_Clf alone over a batch (router pre-training).
  diff::Var clf_batch_loss(diff::Tape& tape, std::span<const data::SentencePair> batch);

  Prediction predict(const data::SentencePair& pair) const;
  std::vector<double> predict_scores(std::span<const data::SentencePair> pairs) const;

  /// Every tensor that takes part in the forward pass, by stable name.
  std::vector<std::pair<std::string, diff::Tensor*>> named_tensors();
  std::vector<std::pair<std::string, const diff::Tensor*>> named_tensors() const;

  /// Tensors updated during end-to-end training.
  std::vector<diff::Tensor*> trainable();
  /// Subsets used by two-stage training.
  std::vector<diff::Tensor*> router_tensors();
  std::vector<diff::Tensor*> ranking_tensors();

  ParamCount param_count() const;

 private:
  head::HeadConfig config_;
  std::unique_ptr<encoder::Encoder> encoder_;
  head::HeadParams head_;
};

/// Trainable scalar count of a head of dimension d under `config`.
ParamCount head_param_count(const head::HeadConfig& config, std::size_t dim);

}  // namespace mixsp
