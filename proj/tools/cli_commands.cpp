#include "cli_commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "json.hpp"

#include "mixsp/analysis.hpp"
#include "mixsp/data.hpp"
#include "mixsp/encoder.hpp"
#include "mixsp/errors.hpp"
#include "mixsp/evaluate.hpp"
#include "mixsp/json_io.hpp"
#include "mixsp/metrics.hpp"
#include "mixsp/rng.hpp"
#include "mixsp/trainer.hpp"

namespace mixsp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

// ---------------------------------------------------------------------------
// Resolved run configuration

struct RunConfig {
  std::string data;
  std::string out;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string variant = "mixsp";
  std::string encoder_kind = "toy";
  std::size_t dim = 0;  // 0: taken from the data sidecar, else 16
  bool encoder_trainable = true;
  std::string embeddings;
  head::HeadConfig head;
  trainer::TrainConfig train;
};

head::HeadConfig variant_preset(const std::string& name) {
  if (name == "mixsp") return head::HeadConfig::mixsp();
  if (name == "ft") return head::HeadConfig::fine_tune();
  if (name == "moe") return head::HeadConfig::moe();
  throw ConfigError("unknown variant '" + name + "' (expected mixsp, ft or moe)");
}

json to_json(const RunConfig& c) {
  return {{"data", c.data},
          {"out", c.out},
          {"seeds", c.seeds},
          {"variant", c.variant},
          {"encoder",
           {{"kind", c.encoder_kind},
            {"dim", c.dim},
            {"trainable", c.encoder_trainable},
            {"embeddings", c.embeddings}}},
          {"head", mixsp::to_json(c.head)},
          {"train", mixsp::to_json(c.train)}};
}

RunConfig resolve(const TrainOptions& opt) {
  json file = json::object();
  if (!opt.config.empty()) file = read_json(opt.config);
  if (!file.is_object()) throw ConfigError("config file must hold a JSON object");

  RunConfig rc;
  try {
    rc.data = file.value("data", rc.data);
    rc.out = file.value("out", rc.out);
    if (file.contains("seeds")) rc.seeds = file.at("seeds").get<std::vector<std::uint64_t>>();
    rc.variant = file.value("variant", rc.variant);
    if (opt.variant) rc.variant = *opt.variant;
    if (file.contains("encoder")) {
      const auto& e = file.at("encoder");
      rc.encoder_kind = e.value("kind", rc.encoder_kind);
      rc.dim = e.value("dim", rc.dim);
      rc.encoder_trainable = e.value("trainable", rc.encoder_trainable);
      rc.embeddings = e.value("embeddings", rc.embeddings);
    }
    // The variant picks the preset; explicit head keys refine it.
    rc.head = variant_preset(rc.variant);
    if (file.contains("head")) rc.head = head_config_from_json(file.at("head"), rc.head);
    if (file.contains("train")) rc.train = train_config_from_json(file.at("train"), rc.train);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config file: ") + e.what());
  }

  if (!opt.data.empty()) rc.data = opt.data;
  if (!opt.out.empty()) rc.out = opt.out;
  if (opt.seeds) rc.seeds = *opt.seeds;
  if (opt.embeddings) {
    rc.embeddings = *opt.embeddings;
    rc.encoder_kind = "frozen";
  }
  if (opt.mode) rc.train.mode = trainer::parse_mode(*opt.mode);
  if (opt.epochs) rc.train.epochs = *opt.epochs;
  if (opt.learning_rate) rc.train.learning_rate = *opt.learning_rate;
  if (opt.batch_size) rc.train.batch_size = *opt.batch_size;

  if (rc.data.empty()) throw ConfigError("no data directory given");
  if (rc.out.empty()) throw ConfigError("no output directory given");
  if (rc.seeds.empty()) throw ConfigError("seed list is empty");
  if (rc.encoder_kind != "toy" && rc.encoder_kind != "frozen")
    throw ConfigError("encoder kind must be toy or frozen");
  if (rc.encoder_kind == "frozen" && rc.embeddings.empty())
    throw ConfigError("frozen encoder needs an embeddings file");
  rc.head.validate();
  rc.train.validate();
  return rc;
}

// ---------------------------------------------------------------------------

json stats(const std::vector<double>& xs) {
  json j;
  j["n"] = xs.size();
  j["values"] = xs;
  if (xs.empty()) {
    j["mean"] = nullptr;
    j["std"] = nullptr;
    return j;
  }
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  j["mean"] = mean;
  if (xs.size() < 2) {
    j["std"] = nullptr;
  } else {
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    j["std"] = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return j;
}

struct Collected {
  std::vector<double> spearman, pearson, auc, overlap, router_pair, router_sentence;

  void add(const EvalReport& r) {
    if (r.spearman_overall.ok()) spearman.push_back(*r.spearman_overall.value);
    if (r.pearson.ok()) pearson.push_back(*r.pearson.value);
    if (r.auc.ok()) auc.push_back(*r.auc.value);
    if (r.overlap.ok()) overlap.push_back(*r.overlap.value);
    if (r.router_accuracy.per_pair) router_pair.push_back(*r.router_accuracy.per_pair);
    if (r.router_accuracy.per_sentence) router_sentence.push_back(*r.router_accuracy.per_sentence);
  }

  json to_json() const {
    return {{"spearman_overall", stats(spearman)},     {"pearson", stats(pearson)},
            {"auc", stats(auc)},                       {"overlap", stats(overlap)},
            {"router_accuracy_per_pair", stats(router_pair)},
            {"router_accuracy_per_sentence", stats(router_sentence)}};
  }
};

std::unique_ptr<encoder::Encoder> make_encoder(const RunConfig& rc, std::size_t vocab_size,
                                               std::size_t dim, std::uint64_t seed) {
  if (rc.encoder_kind == "frozen") {
    auto store = std::make_shared<encoder::FrozenStore>(encoder::FrozenStore::load(rc.embeddings, rc.dim));
    return std::make_unique<encoder::FrozenEncoder>(std::move(store), rc.embeddings);
  }
  return std::make_unique<encoder::ToyEncoder>(
      encoder::init_encoder_params(vocab_size, dim, Rng::derive(seed, 1), rc.encoder_trainable));
}

}  // namespace

// ---------------------------------------------------------------------------

int report_exception(const char* command) {
  try {
    throw;
  } catch (const ConfigError& e) {
    std::cerr << command << ": configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << command << ": I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const ParseError& e) {
    std::cerr << command << ": parse error: " << e.what() << '\n';
    return kIo;
  } catch (const DimensionError& e) {
    std::cerr << command << ": dimension mismatch: " << e.what() << '\n';
    return kIo;
  } catch (const NumericError& e) {
    std::cerr << command << ": numeric failure: " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << command << ": " << e.what() << '\n';
    return kRuntime;
  }
}

int cmd_synth(const SynthOptions& opt) {
  if (opt.pairs < 3)
    throw ConfigError("--pairs " + std::to_string(opt.pairs) + " cannot fill train/dev/test splits");
  if (opt.dim == 0) throw ConfigError("--dim must be positive");
  if (opt.vocab == 0) throw ConfigError("--vocab must be positive");
  if (!(opt.noise >= 0.0)) throw ConfigError("--noise must be non-negative");
  if (opt.out.empty()) throw ConfigError("--out is required");

  data::SynthOptions so;
  so.noise = opt.noise;
  auto synth = data::synth_corpus(opt.pairs, opt.dim, opt.vocab, opt.seed, so);
  auto splits = data::split(synth.corpus, {0.8, 0.1, 0.1}, opt.seed);

  const fs::path out(opt.out);
  ensure_dir(out);
  data::write_tsv(splits.train, out / "train.tsv");
  data::write_tsv(splits.dev, out / "dev.tsv");
  data::write_tsv(splits.test, out / "test.tsv");
  synth.corpus.vocab.save(out / "vocab.txt");
  data::write_metadata({{"generator", "synthetic"},
                        {"pairs", std::to_string(opt.pairs)},
                        {"dim", std::to_string(opt.dim)},
                        {"vocab", std::to_string(opt.vocab)},
                        {"seed", std::to_string(opt.seed)},
                        {"noise", json(opt.noise).dump()},
                        {"train", std::to_string(splits.train.pairs.size())},
                        {"dev", std::to_string(splits.dev.pairs.size())},
                        {"test", std::to_string(splits.test.pairs.size())}},
                       out / "meta.txt");
  std::cout << "wrote " << splits.train.pairs.size() << "/" << splits.dev.pairs.size() << "/"
            << splits.test.pairs.size() << " pairs to " << out.string() << '\n';
  return kOk;
}

int cmd_train(const TrainOptions& opt) {
  const RunConfig rc = resolve(opt);
  const fs::path dir(rc.data);
  if (!fs::is_directory(dir)) throw IoError("data directory " + dir.string() + " not found");

  data::Vocabulary vocab;
  const bool fixed = fs::exists(dir / "vocab.txt");
  if (fixed) vocab = data::Vocabulary::load(dir / "vocab.txt");
  const auto scheme = data::BinScheme(rc.head.bin_scheme);
  auto train_split = data::load_tsv(dir / "train.tsv", vocab, fixed, scheme);
  auto dev = fs::exists(dir / "dev.tsv") ? data::load_tsv(dir / "dev.tsv", train_split.vocab, fixed, scheme)
                                         : data::Corpus{"dev", train_split.vocab, {}, {}};
  auto test = fs::exists(dir / "test.tsv") ? data::load_tsv(dir / "test.tsv", dev.vocab, fixed, scheme)
                                           : data::Corpus{"test", dev.vocab, {}, {}};
  vocab = test.vocab;

  std::size_t dim = rc.dim;
  if (dim == 0 && fs::exists(dir / "meta.txt")) {
    const auto meta = data::read_metadata(dir / "meta.txt");
    if (auto it = meta.find("dim"); it != meta.end()) dim = std::stoul(it->second);
  }
  if (dim == 0) dim = 16;

  const fs::path out(rc.out);
  ensure_dir(out);
  json runs = json::array();
  Collected collected;
  for (std::uint64_t seed : rc.seeds) {
    trainer::TrainConfig tc = rc.train;
    tc.seed = seed;
    Model model(rc.head, make_encoder(rc, vocab.size(), dim, seed), Rng::derive(seed, 2));
    auto result = trainer::train(train_split, dev, std::move(model), tc);

    const fs::path run_dir = out / ("seed_" + std::to_string(seed));
    ensure_dir(run_dir);
    trainer::save_checkpoint({result.model, tc, result.history, vocab}, run_dir / "checkpoint.json");

    json run;
    run["seed"] = seed;
    run["checkpoint"] = (run_dir / "checkpoint.json").string();
    run["history"] = mixsp::to_json(result.history);
    if (!test.pairs.empty()) {
      auto ev = evaluate(result.model, test.pairs);
      collected.add(ev.report);
      run["test"] = mixsp::to_json(ev.report);
    } else {
      run["test"] = nullptr;
    }
    std::cout << "seed " << seed << ": "
              << (run["test"].is_null() ? json("no test split") : run["test"]["spearman_overall"]).dump()
              << '\n';
    runs.push_back(std::move(run));
  }

  json report;
  report["run_config"] = to_json(rc);
  report["runs"] = std::move(runs);
  report["aggregate"] = collected.to_json();
  write_json(report, out / "report.json");
  return kOk;
}

namespace {

struct Loaded {
  trainer::Checkpoint checkpoint;
  data::Corpus corpus;
};

Loaded load_for_eval(const std::string& model_path, const std::string& data_path) {
  auto ckpt = trainer::load_checkpoint(model_path);
  const bool fixed = ckpt.model.encoder().kind() == encoder::Kind::Toy;
  const auto scheme = data::BinScheme(ckpt.model.config().bin_scheme);
  auto corpus = data::load_tsv(data_path, fixed ? ckpt.vocab : data::Vocabulary{}, fixed, scheme);
  return {std::move(ckpt), std::move(corpus)};
}

analysis::Space parse_space(const std::string& s) {
  if (s == "projected") return analysis::Space::Projected;
  if (s == "encoder") return analysis::Space::Encoder;
  throw ConfigError("--space must be projected or encoder");
}

}  // namespace

int cmd_eval(const EvalOptions& opt) {
  if (opt.report.empty()) throw ConfigError("--report is required");
  auto loaded = load_for_eval(opt.model, opt.data);
  auto ev = evaluate(loaded.checkpoint.model, loaded.corpus.pairs);
  if (!opt.queries.empty()) {
    auto queries = metrics::load_queries(opt.queries);
    ev.report.map = metrics::mean_average_precision(queries);
  }
  json report;
  report["run_config"] = {{"model", opt.model},
                          {"data", opt.data},
                          {"queries", opt.queries},
                          {"head", mixsp::to_json(loaded.checkpoint.model.config())},
                          {"train", loaded.checkpoint.train_config
                                        ? mixsp::to_json(*loaded.checkpoint.train_config)
                                        : json(nullptr)}};
  report["report"] = mixsp::to_json(ev.report);
  report["generated_at"] = utc_now();
  write_json(report, opt.report);
  std::cout << "spearman_overall " << report["report"]["spearman_overall"].dump() << '\n';
  return kOk;
}

int cmd_analyze(const AnalyzeOptions& opt) {
  if (opt.out.empty()) throw ConfigError("--out is required");
  const auto space = parse_space(opt.space);
  auto loaded = load_for_eval(opt.model, opt.data);

  std::size_t upper = 0;
  for (const auto& p : loaded.corpus.pairs) upper += p.class_label() == data::ClassLabel::Upper;
  const std::size_t lower = loaded.corpus.pairs.size() - upper;
  if (upper < 2 || lower < 2) {
    std::cerr << "analyze: overlap needs at least two pairs of each class; found " << upper
              << " upper and " << lower << " lower\n";
    return kRuntime;
  }

  auto ev = evaluate(loaded.checkpoint.model, loaded.corpus.pairs, space);
  if (!ev.density) {
    std::cerr << "analyze: overlap undefined: " << ev.report.overlap.error << '\n';
    return kRuntime;
  }
  const fs::path out(opt.out);
  ensure_dir(out);

  json report;
  report["run_config"] = {{"model", opt.model},
                          {"data", opt.data},
                          {"space", opt.space},
                          {"head", mixsp::to_json(loaded.checkpoint.model.config())}};
  report["report"] = mixsp::to_json(ev.report);
  report["bandwidth_upper"] = ev.density->bandwidth_upper;
  report["bandwidth_lower"] = ev.density->bandwidth_lower;
  report["generated_at"] = utc_now();
  write_json(report, out / "report.json");

  std::ofstream csv(out / "density.csv");
  if (!csv) throw IoError("cannot write " + (out / "density.csv").string());
  csv << "x,f_upper,f_lower\n";
  const auto& g = *ev.density;
  for (std::size_t i = 0; i < g.x.size(); ++i)
    csv << json(g.x[i]).dump() << ',' << json(g.upper[i]).dump() << ',' << json(g.lower[i]).dump()
        << '\n';
  if (!csv) throw IoError("write failed: " + (out / "density.csv").string());
  std::cout << "overlap " << *ev.report.overlap.value << " (" << 100.0 * *ev.report.overlap.value
            << "%)\n";
  return kOk;
}

int cmd_leakage(const LeakageOptions& opt) {
  const auto a = data::read_tsv_sentences(opt.train);
  const auto b = data::read_tsv_sentences(opt.test);
  json results = json::array();
  for (std::size_t n : opt.ngrams) {
    const auto r = analysis::ngram_jaccard(a, b, n);
    std::cout << "n=" << n << " jaccard=" << r.similarity << '\n';
    results.push_back({{"n", n},
                       {"jaccard", r.similarity},
                       {"train_ngrams", r.set_a},
                       {"test_ngrams", r.set_b},
                       {"intersection", r.intersection},
                       {"empty", r.empty}});
  }
  if (!opt.json_out.empty()) {
    json report;
    report["run_config"] = {{"train", opt.train}, {"test", opt.test}, {"ngrams", opt.ngrams}};
    report["results"] = std::move(results);
    write_json(report, opt.json_out);
  }
  return kOk;
}

}  // namespace mixsp::cli
