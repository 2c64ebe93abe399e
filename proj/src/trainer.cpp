#include "mixsp/trainer.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>

#include "json.hpp"

#include "mixsp/errors.hpp"
#include "mixsp/json_io.hpp"
#include "mixsp/metrics.hpp"
#include "mixsp/rng.hpp"

namespace mixsp::trainer {

using nlohmann::json;

const char* to_string(Mode m) { return m == Mode::EndToEnd ? "end_to_end" : "two_stage"; }

const char* to_string(SelectionMetric m) {
  return m == SelectionMetric::DevSpearman ? "dev_spearman" : "dev_loss";
}

Mode parse_mode(const std::string& s) {
  if (s == "end_to_end") return Mode::EndToEnd;
  if (s == "two_stage") return Mode::TwoStage;
  throw ConfigError("unknown training mode '" + s + "'");
}

SelectionMetric parse_selection_metric(const std::string& s) {
  if (s == "dev_spearman") return SelectionMetric::DevSpearman;
  if (s == "dev_loss") return SelectionMetric::DevLoss;
  throw ConfigError("unknown selection metric '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1))
    throw ConfigError("optimizer betas must lie in [0, 1)");
  if (!(eps > 0) || !(weight_decay >= 0)) throw ConfigError("bad optimizer eps/weight_decay");
}

diff::AdamWConfig TrainConfig::optimizer() const {
  return {learning_rate, beta1, beta2, eps, weight_decay};
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::size_t>> shuffle_batches(std::size_t n, std::size_t batch_size,
                                                      std::size_t epoch, std::uint64_t seed) {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::derive(seed, epoch));
  rng.shuffle(std::span(order));
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch_size)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
  return out;
}

std::optional<double> dev_metric(Model& model, const data::Corpus& dev, SelectionMetric metric) {
  if (dev.pairs.empty()) return std::nullopt;
  if (metric == SelectionMetric::DevSpearman) {
    const auto pred = model.predict_scores(dev.pairs);
    std::vector<double> gold;
    gold.reserve(dev.pairs.size());
    for (const auto& p : dev.pairs) gold.push_back(p.gold_score);
    return metrics::try_spearman(pred, gold).value;
  }
  constexpr std::size_t kChunk = 64;
  double sum = 0;
  for (std::size_t i = 0; i < dev.pairs.size(); i += kChunk) {
    const std::size_t len = std::min(kChunk, dev.pairs.size() - i);
    diff::Tape tape;
    sum += model.total_loss(tape, std::span(dev.pairs).subspan(i, len)).scalar() *
           static_cast<double>(len);
  }
  return sum / static_cast<double>(dev.pairs.size());
}

namespace {

bool better(SelectionMetric metric, const std::optional<double>& candidate,
            const std::optional<double>& incumbent) {
  if (!candidate) return false;
  if (!incumbent) return true;
  return metric == SelectionMetric::DevSpearman ? *candidate > *incumbent : *candidate < *incumbent;
}

using BatchLoss = std::function<diff::Var(diff::Tape&, std::span<const data::SentencePair>, LossParts&)>;

struct Stage {
  std::string name;
  std::vector<diff::Tensor*> params;
  BatchLoss loss;
  bool select = false;
  std::uint64_t salt = 0;
};

}  // namespace

TrainResult train(const data::Corpus& train_split, const data::Corpus& dev, Model model,
                  const TrainConfig& config) {
  config.validate();
  if (train_split.pairs.empty()) throw ConfigError("train: empty training split");
  const bool two_stage = config.mode == Mode::TwoStage;
  if (two_stage && !model.config().routed)
    throw ConfigError("train: two-stage mode needs a routed head");
  if (model.config().clf_enabled() || two_stage) {
    std::set<std::size_t> bins;
    for (const auto& p : train_split.pairs) bins.insert(p.bin);
    if (bins.size() < 2)
      throw ConfigError("train: training split holds a single class but the classification loss is enabled");
  }

  TrainResult result{model, {}};
  if (config.epochs == 0) return result;

  std::vector<Stage> stages;
  if (!two_stage) {
    stages.push_back({"joint", model.trainable(),
                      [&model](diff::Tape& t, std::span<const data::SentencePair> b, LossParts& parts) {
                        return model.total_loss(t, b, &parts);
                      },
                      true, 0});
  } else {
    std::vector<diff::Tensor*> stage1 = model.encoder().trainable();
    for (auto* t : model.router_tensors()) stage1.push_back(t);
    stages.push_back({"classify", stage1,
                      [&model](diff::Tape& t, std::span<const data::SentencePair> b, LossParts& parts) {
                        diff::Var l = model.clf_batch_loss(t, b);
                        parts.clf = l.scalar();
                        parts.total = l.scalar();
                        return l;
                      },
                      false, 0});
    stages.push_back({"rank", model.ranking_tensors(),
                      [&model](diff::Tape& t, std::span<const data::SentencePair> b, LossParts& parts) {
                        return model.total_loss(t, b, &parts, /*include_clf=*/false);
                      },
                      true, config.epochs});
  }

  History& history = result.history;
  auto all_tensors = model.named_tensors();
  const std::size_t n = train_split.pairs.size();

  for (const Stage& stage : stages) {
    diff::OptimizerState opt(config.optimizer());
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
      double loss_sum = 0, rl_sum = 0, clf_sum = 0;
      const auto batches = shuffle_batches(n, config.batch_size, stage.salt + epoch, config.seed);
      std::vector<data::SentencePair> batch;
      for (const auto& idx : batches) {
        batch.clear();
        for (std::size_t i : idx) batch.push_back(train_split.pairs[i]);
        for (auto& [name, t] : all_tensors) t->zero_grad();
        diff::Tape tape;
        LossParts parts;
        diff::Var loss = stage.loss(tape, batch, parts);
        if (!std::isfinite(loss.scalar()))
          throw NumericError("training diverged: non-finite loss in " + stage.name + " epoch " +
                             std::to_string(epoch));
        tape.backward(loss);
        diff::adamw_step(stage.params, opt);
        const auto w = static_cast<double>(batch.size());
        loss_sum += parts.total * w;
        rl_sum += parts.rl * w;
        clf_sum += parts.clf * w;
      }
      EpochRecord rec;
      rec.epoch = epoch;
      rec.stage = stage.name;
      rec.train_loss = loss_sum / static_cast<double>(n);
      rec.train_rl = rl_sum / static_cast<double>(n);
      rec.train_clf = clf_sum / static_cast<double>(n);
      if (stage.select) rec.dev_metric = dev_metric(model, dev, config.selection_metric);
      history.epochs.push_back(rec);

      if (!stage.select) continue;
      const bool last = epoch == config.epochs;
      if (better(config.selection_metric, rec.dev_metric, history.best_metric) ||
          (!history.best_metric && last)) {
        history.best_index = history.epochs.size() - 1;
        history.best_metric = rec.dev_metric;
        result.model = model;
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

namespace {

json tensor_json(const diff::Tensor& t) { return {{"shape", t.shape}, {"values", t.values}}; }

void read_tensor(const json& j, const std::string& name, diff::Tensor& into) {
  diff::Shape shape;
  std::vector<double> values;
  try {
    shape = j.at("shape").get<diff::Shape>();
    values = j.at("values").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ParseError("checkpoint tensor '" + name + "': " + e.what());
  }
  if (shape != into.shape)
    throw DimensionError("checkpoint tensor '" + name + "': expected shape " + diff::shape_str(into.shape) +
                         ", found " + diff::shape_str(shape));
  if (values.size() != into.values.size())
    throw DimensionError("checkpoint tensor '" + name + "': expected " + std::to_string(into.values.size()) +
                         " values, found " + std::to_string(values.size()));
  into.values = std::move(values);
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const Model& m = ck.model;
  json enc;
  enc["kind"] = encoder::to_string(m.encoder().kind());
  if (const auto* toy = dynamic_cast<const encoder::ToyEncoder*>(&m.encoder())) {
    enc["vocab_size"] = toy->params().vocab_size();
    enc["trainable"] = toy->params().trainable;
  } else if (const auto* fr = dynamic_cast<const encoder::FrozenEncoder*>(&m.encoder())) {
    if (fr->source().empty()) throw ConfigError("checkpoint: frozen encoder has no source path");
    enc["store"] = fr->source();
  } else {
    throw ConfigError("checkpoint: synthetic encoders cannot be persisted");
  }

  json params = json::object();
  for (const auto& [name, t] : m.named_tensors()) params[name] = tensor_json(*t);

  json doc = {{"format", "mixsp-checkpoint"},
              {"version", kCheckpointVersion},
              {"float_encoding", "shortest-round-trip-decimal"},
              {"dim", m.dim()},
              {"encoder", enc},
              {"vocabulary", ck.vocab.tokens()},
              {"head_config", to_json(m.config())},
              {"train_config", ck.train_config ? to_json(*ck.train_config) : json(nullptr)},
              {"param_count", to_json(m.param_count())},
              {"params", params},
              {"history", to_json(ck.history)}};

  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
  try {
    if (doc.at("format") != "mixsp-checkpoint") throw ParseError("not a mixsp checkpoint: " + path.string());
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw ParseError("checkpoint version " + std::to_string(version) + " not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
    const auto dim = doc.at("dim").get<std::size_t>();
    const head::HeadConfig hc = head_config_from_json(doc.at("head_config"));
    data::Vocabulary vocab(doc.at("vocabulary").get<std::vector<std::string>>());

    const json& enc = doc.at("encoder");
    const std::string kind = enc.at("kind").get<std::string>();
    std::unique_ptr<encoder::Encoder> e;
    if (kind == "toy") {
      const auto V = enc.at("vocab_size").get<std::size_t>();
      if (V == 0 || dim == 0) throw DimensionError("checkpoint: zero vocabulary or dimension");
      encoder::EncoderParams ep;
      ep.trainable = enc.at("trainable").get<bool>();
      ep.embedding = diff::Tensor::zeros({V, dim}, ep.trainable);
      ep.ctx_weight = diff::Tensor::zeros({dim, dim}, ep.trainable);
      ep.ctx_bias = diff::Tensor::zeros({dim}, ep.trainable);
      ep.cls_weight = diff::Tensor::zeros({dim, dim}, ep.trainable);
      ep.cls_bias = diff::Tensor::zeros({dim}, ep.trainable);
      e = std::make_unique<encoder::ToyEncoder>(std::move(ep));
    } else if (kind == "frozen") {
      const auto src = enc.at("store").get<std::string>();
      auto store = std::make_shared<encoder::FrozenStore>(encoder::FrozenStore::load(src, dim));
      e = std::make_unique<encoder::FrozenEncoder>(std::move(store), src);
    } else {
      throw ParseError("checkpoint: unsupported encoder kind '" + kind + "'");
    }

    // Shapes come from the declared dimension; stored tensors must agree.
    head::HeadParams hp;
    const std::size_t k = hc.k_bins();
    if (hc.routed) hp.router = {diff::Tensor::zeros({k, dim}, true), diff::Tensor::zeros({k}, true)};
    for (std::size_t c = 0; c < k; ++c)
      hp.projectors.push_back({diff::Tensor::zeros({dim, dim}, true), diff::Tensor::zeros({dim}, true)});
    if (hc.has_scorer()) hp.scorer = {diff::Tensor::zeros({1, 2 * dim}, true), diff::Tensor::zeros({1}, true)};

    Model model(hc, std::move(e), std::move(hp));
    const json& params = doc.at("params");
    for (auto& [name, t] : model.named_tensors()) {
      if (!params.contains(name)) throw ParseError("checkpoint: missing tensor '" + name + "'");
      read_tensor(params.at(name), name, *t);
    }

    std::optional<TrainConfig> tc;
    if (!doc.at("train_config").is_null()) tc = train_config_from_json(doc.at("train_config"));
    return Checkpoint{std::move(model), tc, history_from_json(doc.at("history")), std::move(vocab)};
  } catch (const json::exception& e) {
    throw ParseError("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace mixsp::trainer
