#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mixsp/data.hpp"
#include "mixsp/diffkit.hpp"
#include "mixsp/model.hpp"

namespace mixsp::trainer {

enum class Mode : std::uint8_t { EndToEnd, TwoStage };
enum class SelectionMetric : std::uint8_t { DevSpearman, DevLoss };

const char* to_string(Mode m);
const char* to_string(SelectionMetric m);
Mode parse_mode(const std::string& s);
SelectionMetric parse_selection_metric(const std::string& s);

struct TrainConfig {
  double learning_rate = 5e-5;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  Mode mode = Mode::EndToEnd;
  SelectionMetric selection_metric = SelectionMetric::DevSpearman;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  void validate() const;
  diff::AdamWConfig optimizer() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based within its stage
  std::string stage;      // "joint", "classify" or "rank"
  double train_loss = 0.0;
  double train_rl = 0.0;
  double train_clf = 0.0;
  std::optional<double> dev_metric;
};

struct History {
  std::vector<EpochRecord> epochs;
  /// Index into `epochs` of the selected model; empty when no epoch ran.
  std::optional<std::size_t> best_index;
  std::optional<double> best_metric;
};

struct TrainResult {
  Model model;
  History history;
};

/// Index batches for one epoch: a permutation of [0, n) seeded by
/// (seed, epoch), cut into consecutive chunks; the last may be short.
std::vector<std::vector<std::size_t>> shuffle_batches(std::size_t n, std::size_t batch_size,
                                                      std::size_t epoch, std::uint64_t seed);

/// Dev-set selection metric of a model (Spearman or mean loss). Empty when
/// Spearman is undefined.
std::optional<double> dev_metric(Model& model, const data::Corpus& dev, SelectionMetric metric);

/// Trains a copy of `model` and returns the epoch-end snapshot with the
/// best dev metric (the last epoch when `dev` is empty).
TrainResult train(const data::Corpus& train_split, const data::Corpus& dev, Model model,
                  const TrainConfig& config);

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  std::optional<TrainConfig> train_config;
  History history;
  /// Tokenisation used by the toy encoder.
  data::Vocabulary vocab;
};

/// JSON with every float written as the shortest decimal that parses back
/// to the same double.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mixsp::trainer
