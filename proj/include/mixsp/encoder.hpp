#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "mixsp/data.hpp"
#include "mixsp/diffkit.hpp"

namespace mixsp::encoder {

/// (h_cls, h_x1, h_x2) for one sentence pair.
struct EncodedPair {
  std::vector<double> cls;
  std::vector<double> x1;
  std::vector<double> x2;

  std::size_t dim() const { return cls.size(); }
  bool operator==(const EncodedPair&) const = default;
};

/// The same triple recorded on a tape.
struct EncodedVars {
  diff::Var cls;
  diff::Var x1;
  diff::Var x2;
};

enum class Kind : std::uint8_t { Toy, Frozen, Synthetic };

const char* to_string(Kind kind);

/// Common contract: three finite d-vectors per pair, d fixed for the
/// encoder's lifetime.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual Kind kind() const = 0;
  virtual std::size_t dim() const = 0;
  virtual EncodedVars encode(diff::Tape& tape, const data::SentencePair& pair) const = 0;
  /// Tensors updated by training; empty for frozen encoders.
  virtual std::vector<diff::Tensor*> trainable() { return {}; }
  virtual std::unique_ptr<Encoder> clone() const = 0;

  EncodedPair encode(const data::SentencePair& pair) const;
};

// ---------------------------------------------------------------------------

struct EncoderParams {
  diff::Tensor embedding;  // V×d
  diff::Tensor ctx_weight;  // d×d
  diff::Tensor ctx_bias;    // d
  diff::Tensor cls_weight;  // d×d
  diff::Tensor cls_bias;    // d
  bool trainable = true;

  std::size_t vocab_size() const { return embedding.rows(); }
  std::size_t dim() const { return embedding.cols(); }
  std::vector<diff::Tensor*> tensors();
  std::vector<const diff::Tensor*> tensors() const;
};

/// Unit-norm random embedding rows; dense layers uniform in ±1/√fan_in.
EncoderParams init_encoder_params(std::size_t vocab_size, std::size_t dim, std::uint64_t seed,
                                  bool trainable = true);

/// Bag-of-embeddings cross-encoder stand-in:
///   m_j   = mean of embedding rows of sentence j
///   h_xj  = tanh(W_ctx·m_j + b_ctx)
///   h_cls = tanh(W_cls·(m_1 + m_2) + b_cls)
class ToyEncoder final : public Encoder {
 public:
  explicit ToyEncoder(EncoderParams params);

  Kind kind() const override { return Kind::Toy; }
  std::size_t dim() const override { return params_.dim(); }
  EncodedVars encode(diff::Tape& tape, const data::SentencePair& pair) const override;
  using Encoder::encode;
  std::vector<diff::Tensor*> trainable() override;
  std::unique_ptr<Encoder> clone() const override;

  EncoderParams& params() { return params_; }
  const EncoderParams& params() const { return params_; }

 private:
  // encode() binds parameters on a tape, which needs mutable access.
  mutable EncoderParams params_;
};

// ---------------------------------------------------------------------------

/// Precomputed triples keyed by pair id, stored as JSON lines
/// {"id": ..., "cls": [...], "x1": [...], "x2": [...]}.
class FrozenStore {
 public:
  FrozenStore() = default;
  explicit FrozenStore(std::size_t dim) : dim_(dim) {}

  /// Loads a store; `expected_dim` (if non-zero) must match every record.
  static FrozenStore load(const std::filesystem::path& path, std::size_t expected_dim = 0);
  void save(const std::filesystem::path& path) const;

  void put(const std::string& id, EncodedPair triple);
  const EncodedPair& get(const std::string& id) const;
  bool contains(const std::string& id) const { return entries_.count(id) != 0; }
  std::size_t size() const { return entries_.size(); }
  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> order_;
  std::unordered_map<std::string, EncodedPair> entries_;
};

class FrozenEncoder final : public Encoder {
 public:
  explicit FrozenEncoder(std::shared_ptr<const FrozenStore> store, std::string source = {});

  Kind kind() const override { return Kind::Frozen; }
  std::size_t dim() const override { return store_->dim(); }
  EncodedVars encode(diff::Tape& tape, const data::SentencePair& pair) const override;
  using Encoder::encode;
  std::unique_ptr<Encoder> clone() const override;

  const FrozenStore& store() const { return *store_; }
  /// Path the store was loaded from, if any (recorded in checkpoints).
  const std::string& source() const { return source_; }

 private:
  std::shared_ptr<const FrozenStore> store_;
  std::string source_;
};

EncodedPair encode_frozen(const FrozenStore& store, const std::string& pair_id);

// ---------------------------------------------------------------------------

/// Test double emitting the generator's latent directions:
/// h_xj = latent_j, h_cls = (latent_1 + latent_2) / ‖latent_1 + latent_2‖.
class SyntheticEncoder final : public Encoder {
 public:
  explicit SyntheticEncoder(std::shared_ptr<const data::LatentGeometry> latents);

  Kind kind() const override { return Kind::Synthetic; }
  std::size_t dim() const override { return latents_->dim; }
  EncodedVars encode(diff::Tape& tape, const data::SentencePair& pair) const override;
  using Encoder::encode;
  std::unique_ptr<Encoder> clone() const override;

 private:
  std::shared_ptr<const data::LatentGeometry> latents_;
};

EncodedPair encode_synthetic(const data::LatentGeometry& latents, const data::SentencePair& pair);

}  // namespace mixsp::encoder
