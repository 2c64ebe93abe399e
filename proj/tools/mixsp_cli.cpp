#include <iostream>

#include "CLI11.hpp"

#include "cli_commands.hpp"

namespace {

template <typename F>
int run(const char* name, F&& body) {
  try {
    return body();
  } catch (...) {
    return mixsp::cli::report_exception(name);
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mixsp::cli;
  CLI::App app{"MixSP classify-and-rank similarity toolkit"};
  app.require_subcommand(1);

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic similarity corpus");
  s->add_option("--pairs", synth.pairs, "Number of sentence pairs")->capture_default_str();
  s->add_option("--dim", synth.dim, "Latent dimension")->capture_default_str();
  s->add_option("--vocab", synth.vocab, "Vocabulary size")->capture_default_str();
  s->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  s->add_option("--noise", synth.noise, "Gold score noise std")->capture_default_str();
  s->add_option("--out", synth.out, "Output directory")->required();

  TrainOptions train;
  std::vector<std::uint64_t> seeds;
  std::string variant, mode, embeddings;
  std::size_t epochs = 0, batch_size = 0;
  double lr = 0.0;
  auto* t = app.add_subcommand("train", "Train one model per seed");
  t->add_option("--data", train.data, "Directory with train/dev/test.tsv");
  t->add_option("--config", train.config, "JSON run configuration");
  auto* seeds_opt = t->add_option("--seeds", seeds, "Comma-separated seed list")->delimiter(',');
  auto* variant_opt =
      t->add_option("--variant", variant, "Head variant")->check(CLI::IsMember({"mixsp", "ft", "moe"}));
  auto* mode_opt = t->add_option("--mode", mode, "end_to_end or two_stage")
                       ->check(CLI::IsMember({"end_to_end", "two_stage"}));
  auto* epochs_opt = t->add_option("--epochs", epochs, "Training epochs");
  auto* lr_opt = t->add_option("--lr", lr, "Learning rate");
  auto* bs_opt = t->add_option("--batch-size", batch_size, "Batch size");
  auto* emb_opt = t->add_option("--embeddings", embeddings, "Frozen encoder store (JSON lines)");
  t->add_option("--out", train.out, "Output directory");

  EvalOptions eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a pair file");
  e->add_option("--model", eval.model, "Checkpoint")->required();
  e->add_option("--data", eval.data, "Pair TSV")->required();
  e->add_option("--report", eval.report, "Output JSON report")->required();
  e->add_option("--queries", eval.queries, "Optional ranking queries (JSON lines) for MAP");

  AnalyzeOptions analyze;
  auto* a = app.add_subcommand("analyze", "Upper/lower similarity overlap and embedding geometry");
  a->add_option("--model", analyze.model, "Checkpoint")->required();
  a->add_option("--data", analyze.data, "Pair TSV")->required();
  a->add_option("--out", analyze.out, "Output directory")->required();
  a->add_option("--space", analyze.space, "projected or encoder")
      ->check(CLI::IsMember({"projected", "encoder"}))
      ->capture_default_str();

  LeakageOptions leak;
  auto* l = app.add_subcommand("leakage", "N-gram Jaccard overlap between two pair files");
  l->add_option("--train", leak.train, "First pair TSV")->required();
  l->add_option("--test", leak.test, "Second pair TSV")->required();
  l->add_option("--ngrams", leak.ngrams, "Comma-separated n values")->delimiter(',');
  l->add_option("--json", leak.json_out, "Write results as JSON to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  if (*s) return run("synth", [&] { return cmd_synth(synth); });
  if (*t) {
    if (*seeds_opt) train.seeds = seeds;
    if (*variant_opt) train.variant = variant;
    if (*mode_opt) train.mode = mode;
    if (*epochs_opt) train.epochs = epochs;
    if (*lr_opt) train.learning_rate = lr;
    if (*bs_opt) train.batch_size = batch_size;
    if (*emb_opt) train.embeddings = embeddings;
    return run("train", [&] { return cmd_train(train); });
  }
  if (*e) return run("eval", [&] { return cmd_eval(eval); });
  if (*a) return run("analyze", [&] { return cmd_analyze(analyze); });
  if (*l) return run("leakage", [&] { return cmd_leakage(leak); });
  return kUsage;
}
