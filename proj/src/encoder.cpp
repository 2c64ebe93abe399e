#include "mixsp/encoder.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "mixsp/errors.hpp"
#include "mixsp/init.hpp"

namespace mixsp::encoder {

using json = nlohmann::json;

const char* to_string(Kind kind) {
  switch (kind) {
    case Kind::Toy: return "toy";
    case Kind::Frozen: return "frozen";
    case Kind::Synthetic: return "synthetic";
  }
  return "?";
}

EncodedPair Encoder::encode(const data::SentencePair& pair) const {
  diff::Tape tape;
  const EncodedVars v = encode(tape, pair);
  return {v.cls.value(), v.x1.value(), v.x2.value()};
}

// ---------------------------------------------------------------------------

std::vector<diff::Tensor*> EncoderParams::tensors() {
  return {&embedding, &ctx_weight, &ctx_bias, &cls_weight, &cls_bias};
}

std::vector<const diff::Tensor*> EncoderParams::tensors() const {
  return {&embedding, &ctx_weight, &ctx_bias, &cls_weight, &cls_bias};
}

EncoderParams init_encoder_params(std::size_t vocab_size, std::size_t dim, std::uint64_t seed,
                                  bool trainable) {
  if (vocab_size == 0 || dim == 0) throw ConfigError("encoder: vocabulary and dim must be positive");
  Rng rng(seed);
  EncoderParams p;
  p.trainable = trainable;
  p.embedding = diff::Tensor::zeros({vocab_size, dim}, trainable);
  for (std::size_t r = 0; r < vocab_size; ++r) {
    double n = 0;
    do {
      n = 0;
      for (std::size_t c = 0; c < dim; ++c) {
        p.embedding.at(r, c) = rng.normal();
        n += p.embedding.at(r, c) * p.embedding.at(r, c);
      }
    } while (n < 1e-12);
    n = std::sqrt(n);
    for (std::size_t c = 0; c < dim; ++c) p.embedding.at(r, c) /= n;
  }
  p.ctx_weight = uniform_init({dim, dim}, dim, rng, trainable);
  p.ctx_bias = uniform_init({dim}, dim, rng, trainable);
  p.cls_weight = uniform_init({dim, dim}, dim, rng, trainable);
  p.cls_bias = uniform_init({dim}, dim, rng, trainable);
  return p;
}

ToyEncoder::ToyEncoder(EncoderParams params) : params_(std::move(params)) {
  const std::size_t d = params_.dim();
  if (params_.embedding.shape.size() != 2 || params_.ctx_weight.shape != diff::Shape{d, d} ||
      params_.cls_weight.shape != diff::Shape{d, d} || params_.ctx_bias.size() != d ||
      params_.cls_bias.size() != d)
    throw DimensionError("toy encoder: parameter shapes inconsistent with d=" + std::to_string(d));
  for (diff::Tensor* t : params_.tensors()) t->requires_grad = params_.trainable;
}

EncodedVars ToyEncoder::encode(diff::Tape& tape, const data::SentencePair& pair) const {
  diff::Var E = tape.leaf(params_.embedding);
  diff::Var m1 = tape.mean_pool(tape.gather_rows(E, pair.sent1));
  diff::Var m2 = tape.mean_pool(tape.gather_rows(E, pair.sent2));
  diff::Var Wc = tape.leaf(params_.ctx_weight);
  diff::Var bc = tape.leaf(params_.ctx_bias);
  EncodedVars out;
  out.x1 = tape.tanh(tape.linear(Wc, bc, m1));
  out.x2 = tape.tanh(tape.linear(Wc, bc, m2));
  out.cls = tape.tanh(tape.linear(tape.leaf(params_.cls_weight), tape.leaf(params_.cls_bias),
                                  tape.add(m1, m2)));
  return out;
}

std::vector<diff::Tensor*> ToyEncoder::trainable() {
  if (!params_.trainable) return {};
  return params_.tensors();
}

std::unique_ptr<Encoder> ToyEncoder::clone() const { return std::make_unique<ToyEncoder>(params_); }

// ---------------------------------------------------------------------------

namespace {

std::vector<double> read_vec(const json& rec, const char* key, const std::string& where) {
  if (!rec.contains(key) || !rec[key].is_array())
    throw ParseError(where + ": missing array field '" + key + "'");
  std::vector<double> v;
  for (const auto& x : rec[key]) {
    if (!x.is_number()) throw ParseError(where + ": non-numeric entry in '" + key + "'");
    v.push_back(x.get<double>());
    if (!std::isfinite(v.back())) throw ParseError(where + ": non-finite entry in '" + key + "'");
  }
  return v;
}

}  // namespace

FrozenStore FrozenStore::load(const std::filesystem::path& path, std::size_t expected_dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding store " + path.string());
  FrozenStore store(expected_dim);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!rec.contains("id") || !rec["id"].is_string())
      throw ParseError(where + ": missing string field 'id'");
    EncodedPair triple{read_vec(rec, "cls", where), read_vec(rec, "x1", where),
                       read_vec(rec, "x2", where)};
    try {
      store.put(rec["id"].get<std::string>(), std::move(triple));
    } catch (const DimensionError& e) {
      throw DimensionError(where + ": " + e.what());
    }
  }
  return store;
}

void FrozenStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write embedding store " + path.string());
  for (const auto& id : order_) {
    const auto& t = entries_.at(id);
    json rec = {{"id", id}, {"cls", t.cls}, {"x1", t.x1}, {"x2", t.x2}};
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void FrozenStore::put(const std::string& id, EncodedPair triple) {
  const std::size_t d = triple.cls.size();
  if (d == 0 || triple.x1.size() != d || triple.x2.size() != d)
    throw DimensionError("store entry '" + id + "': cls/x1/x2 dimensions differ");
  if (dim_ == 0) dim_ = d;
  if (d != dim_)
    throw DimensionError("store entry '" + id + "': expected dimension " + std::to_string(dim_) +
                         ", found " + std::to_string(d));
  if (!entries_.count(id)) order_.push_back(id);
  entries_[id] = std::move(triple);
}

const EncodedPair& FrozenStore::get(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw ConfigError("embedding store has no entry for pair id '" + id + "'");
  return it->second;
}

EncodedPair encode_frozen(const FrozenStore& store, const std::string& pair_id) {
  return store.get(pair_id);
}

FrozenEncoder::FrozenEncoder(std::shared_ptr<const FrozenStore> store, std::string source)
    : store_(std::move(store)), source_(std::move(source)) {
  if (!store_ || store_->dim() == 0) throw ConfigError("frozen encoder: empty embedding store");
}

EncodedVars FrozenEncoder::encode(diff::Tape& tape, const data::SentencePair& pair) const {
  const EncodedPair& t = store_->get(pair.id);
  return {tape.constant(t.cls), tape.constant(t.x1), tape.constant(t.x2)};
}

std::unique_ptr<Encoder> FrozenEncoder::clone() const {
  return std::make_unique<FrozenEncoder>(store_, source_);
}

// ---------------------------------------------------------------------------

EncodedPair encode_synthetic(const data::LatentGeometry& latents, const data::SentencePair& pair) {
  auto it = latents.sentences.find(pair.id);
  if (it == latents.sentences.end())
    throw ConfigError("synthetic encoder: no latent directions for pair id '" + pair.id + "'");
  const auto& [a, b] = it->second;
  EncodedPair out{std::vector<double>(a.size()), a, b};
  double n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.cls[i] = a[i] + b[i];
    n += out.cls[i] * out.cls[i];
  }
  n = std::sqrt(n);
  // Antipodal latents have no midpoint direction; keep the zero vector.
  if (n > 1e-12)
    for (double& x : out.cls) x /= n;
  return out;
}

SyntheticEncoder::SyntheticEncoder(std::shared_ptr<const data::LatentGeometry> latents)
    : latents_(std::move(latents)) {
  if (!latents_ || latents_->dim == 0) throw ConfigError("synthetic encoder: missing latents");
}

EncodedVars SyntheticEncoder::encode(diff::Tape& tape, const data::SentencePair& pair) const {
  EncodedPair t = encode_synthetic(*latents_, pair);
  return {tape.constant(std::move(t.cls)), tape.constant(std::move(t.x1)),
          tape.constant(std::move(t.x2))};
}

std::unique_ptr<Encoder> SyntheticEncoder::clone() const {
  return std::make_unique<SyntheticEncoder>(latents_);
}

}  // namespace mixsp::encoder
