#include "mixsp/json_io.hpp"

#include "mixsp/errors.hpp"

namespace mixsp {

using nlohmann::json;

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const head::HeadConfig& c) {
  return {{"routed", c.routed},
          {"k_bins", c.k_bins()},
          {"bin_edges", c.bin_scheme.edges()},
          {"selection", head::to_string(c.selection)},
          {"router_input", head::to_string(c.router_input)},
          {"objective", head::to_string(c.objective)},
          {"alpha1", c.alpha1},
          {"alpha2", c.alpha2},
          {"use_clf_loss", c.use_clf_loss}};
}

head::HeadConfig head_config_from_json(const json& j, head::HeadConfig c) {
  if (!j.is_object()) throw ConfigError("head config must be a JSON object");
  read_opt(j, "routed", c.routed);
  if (j.contains("bin_edges")) {
    std::vector<double> edges;
    read_opt(j, "bin_edges", edges);
    c.bin_scheme = data::BinScheme(std::move(edges));
  } else if (j.contains("k_bins")) {
    std::size_t k = 2;
    read_opt(j, "k_bins", k);
    if (k != c.bin_scheme.bins()) c.bin_scheme = k == 2 ? data::BinScheme() : data::BinScheme::uniform(k);
  }
  if (j.contains("k_bins") && c.routed) {
    std::size_t k = 0;
    read_opt(j, "k_bins", k);
    if (k != c.bin_scheme.bins())
      throw ConfigError("k_bins = " + std::to_string(k) + " but bin_edges define " +
                        std::to_string(c.bin_scheme.bins()) + " bins");
  }
  std::string s;
  if (j.contains("selection")) {
    read_opt(j, "selection", s);
    c.selection = head::parse_selection(s);
  }
  if (j.contains("router_input")) {
    read_opt(j, "router_input", s);
    c.router_input = head::parse_router_input(s);
  }
  if (j.contains("objective")) {
    read_opt(j, "objective", s);
    c.objective = head::parse_objective(s);
  }
  read_opt(j, "alpha1", c.alpha1);
  read_opt(j, "alpha2", c.alpha2);
  read_opt(j, "use_clf_loss", c.use_clf_loss);
  c.validate();
  return c;
}

json to_json(const trainer::TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"mode", trainer::to_string(c.mode)},
          {"selection_metric", trainer::to_string(c.selection_metric)},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"weight_decay", c.weight_decay}};
}

trainer::TrainConfig train_config_from_json(const json& j, trainer::TrainConfig c) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  read_opt(j, "learning_rate", c.learning_rate);
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "epochs", c.epochs);
  read_opt(j, "seed", c.seed);
  std::string s;
  if (j.contains("mode")) {
    read_opt(j, "mode", s);
    c.mode = trainer::parse_mode(s);
  }
  if (j.contains("selection_metric")) {
    read_opt(j, "selection_metric", s);
    c.selection_metric = trainer::parse_selection_metric(s);
  }
  read_opt(j, "beta1", c.beta1);
  read_opt(j, "beta2", c.beta2);
  read_opt(j, "eps", c.eps);
  read_opt(j, "weight_decay", c.weight_decay);
  c.validate();
  return c;
}

json to_json(const trainer::History& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"stage", e.stage},
                      {"train_loss", e.train_loss},
                      {"train_rl", e.train_rl},
                      {"train_clf", e.train_clf},
                      {"dev_metric", e.dev_metric ? json(*e.dev_metric) : json(nullptr)}});
  }
  return {{"epochs", epochs},
          {"best_index", h.best_index ? json(*h.best_index) : json(nullptr)},
          {"best_metric", h.best_metric ? json(*h.best_metric) : json(nullptr)}};
}

trainer::History history_from_json(const json& j) {
  trainer::History h;
  try {
    for (const auto& e : j.at("epochs")) {
      trainer::EpochRecord r;
      r.epoch = e.at("epoch").get<std::size_t>();
      r.stage = e.at("stage").get<std::string>();
      r.train_loss = e.at("train_loss").get<double>();
      r.train_rl = e.at("train_rl").get<double>();
      r.train_clf = e.at("train_clf").get<double>();
      if (!e.at("dev_metric").is_null()) r.dev_metric = e.at("dev_metric").get<double>();
      h.epochs.push_back(std::move(r));
    }
    if (!j.at("best_index").is_null()) h.best_index = j.at("best_index").get<std::size_t>();
    if (!j.at("best_metric").is_null()) h.best_metric = j.at("best_metric").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("history: ") + e.what());
  }
  return h;
}

json to_json(const ParamCount& c) {
  return {{"encoder", c.encoder},
          {"router", c.router},
          {"projectors", c.projectors},
          {"scorer", c.scorer},
          {"head", c.head()},
          {"total", c.total()}};
}

}  // namespace mixsp
