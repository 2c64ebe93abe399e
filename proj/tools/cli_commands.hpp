#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mixsp::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kRuntime = 4 };

struct SynthOptions {
  std::size_t pairs = 2000;
  std::size_t dim = 16;
  std::size_t vocab = 512;
  std::uint64_t seed = 7;
  double noise = 0.15;
  std::string out;
};

struct TrainOptions {
  std::string data;
  std::string config;
  std::string out;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::string> variant;
  std::optional<std::string> mode;
  std::optional<std::size_t> epochs;
  std::optional<double> learning_rate;
  std::optional<std::size_t> batch_size;
  std::optional<std::string> embeddings;
};

struct EvalOptions {
  std::string model;
  std::string data;
  std::string report;
  std::string queries;
};

struct AnalyzeOptions {
  std::string model;
  std::string data;
  std::string out;
  std::string space = "projected";
};

struct LeakageOptions {
  std::string train;
  std::string test;
  std::vector<std::size_t> ngrams{4, 5, 6};
  std::string json_out;
};

int cmd_synth(const SynthOptions& opt);
int cmd_train(const TrainOptions& opt);
int cmd_eval(const EvalOptions& opt);
int cmd_analyze(const AnalyzeOptions& opt);
int cmd_leakage(const LeakageOptions& opt);

/// Maps the exception in flight onto an exit code and prints it to stderr.
int report_exception(const char* command);

}  // namespace mixsp::cli
