// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any selected criterion fails.
//
//   acceptance            run all criteria
//   acceptance 4 9        run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mixsp/analysis.hpp"
#include "mixsp/data.hpp"
#include "mixsp/diffkit.hpp"
#include "mixsp/evaluate.hpp"
#include "mixsp/metrics.hpp"
#include "mixsp/model.hpp"
#include "mixsp/rng.hpp"
#include "mixsp/trainer.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace mixsp;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Model toy_model(head::HeadConfig cfg, std::size_t vocab, std::size_t dim, std::uint64_t seed) {
  return Model(cfg,
               std::make_unique<encoder::ToyEncoder>(
                   encoder::init_encoder_params(vocab, dim, Rng::derive(seed, 1))),
               Rng::derive(seed, 2));
}

std::vector<data::SentencePair> random_pairs(Rng& rng, std::size_t n, std::size_t vocab) {
  std::vector<data::SentencePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto sent = [&] {
      std::vector<std::int32_t> s(1 + rng.index(6));
      for (auto& t : s) t = static_cast<std::int32_t>(rng.index(vocab));
      return s;
    };
    out.push_back(data::make_pair("r:" + std::to_string(i), sent(), sent(), rng.uniform(0, 5)));
  }
  return out;
}

void zero_grads(Model& m) {
  for (auto* t : m.trainable()) t->zero_grad();
}

bool all_zero(const std::vector<double>& g) {
  return std::all_of(g.begin(), g.end(), [](double x) { return x == 0.0; });
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0;
  for (std::uint64_t init = 0; init < 10; ++init) {
    Rng rng(1000 + init);
    const std::size_t V = 12, d = 4;
    auto model = toy_model(head::HeadConfig::mixsp(), V, d, 500 + init);
    auto batch = random_pairs(rng, 4, V);
    auto tensors = model.trainable();
    const double err = diff::grad_check(tensors, [&](diff::Tape& t) { return model.total_loss(t, batch); });
    worst = std::max(worst, err);
  }
  const double secs = seconds_since(t0);
  o.require(worst < 1e-4, "max relative error " + fmt(worst));
  o.require(secs < 10.0, "runtime " + fmt(secs, 3) + " s");
  o.note("max_rel_err=" + fmt(worst, 3) + " runtime=" + fmt(secs, 3) + "s");
  return o;
}

Outcome loss_arithmetic() {
  Outcome o;
  Rng rng(2);
  const std::size_t V = 20, d = 5;
  auto batch = random_pairs(rng, 8, V);

  auto model = toy_model(head::HeadConfig::mixsp(), V, d, 11);
  o.require(model.config().alpha1 == 7e-4 && model.config().alpha2 == 1e-4, "default weights");
  double worst = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    diff::Tape t;
    auto fwd = model.forward(t, batch[i]);
    LossParts parts;
    const double total = model.sample_loss(t, batch[i], fwd, &parts).scalar();
    worst = std::max(worst, std::abs(total - (7e-4 * parts.rl + 1e-4 * parts.clf)));
  }
  {
    diff::Tape t;
    LossParts mean;
    const double total = model.total_loss(t, batch, &mean).scalar();
    worst = std::max(worst, std::abs(total - (7e-4 * mean.rl + 1e-4 * mean.clf)));
  }
  o.require(worst <= 1e-15, "weighted sum error " + fmt(worst));

  // Ablation: same parameters, classification term disabled.
  auto cfg = head::HeadConfig::mixsp();
  cfg.use_clf_loss = false;
  auto ablated = toy_model(cfg, V, d, 11);
  diff::Tape ta, tb;
  LossParts parts;
  const double a = ablated.total_loss(ta, batch, &parts).scalar();
  const double b = model.total_loss(tb, batch, nullptr, false).scalar();
  o.require(a == b, "ablation path differs: " + fmt(a, 17) + " vs " + fmt(b, 17));
  o.require(parts.clf == 0.0, "ablated clf term nonzero");
  o.require(std::abs(a - 7e-4 * parts.rl) <= 1e-15, "ablated total != alpha1*rl");
  o.note("max_abs_err=" + fmt(worst, 3));
  return o;
}

Outcome hard_selection() {
  Outcome o;
  auto synth = data::synth_corpus(100, 6, 40, 3);
  const auto& pairs = synth.corpus.pairs;
  const std::size_t V = synth.corpus.vocab.size();
  auto model = toy_model(head::HeadConfig::mixsp(), V, 6, 3);
  std::size_t violations = 0, checked = 0;
  for (const auto& p : pairs) {
    // Each sentence's projected vector touches only its chosen projector.
    for (int j = 0; j < 2; ++j) {
      zero_grads(model);
      diff::Tape t;
      auto fwd = model.forward(t, p);
      t.backward(t.sum(fwd.projected.z[j]));
      const std::size_t chosen = fwd.routes->decision.chosen[j];
      for (std::size_t c = 0; c < model.head().projectors.size(); ++c) {
        if (c == chosen) continue;
        ++checked;
        auto& proj = model.head().projectors[c];
        if (!all_zero(proj.weight.grad) || !all_zero(proj.bias.grad)) ++violations;
      }
    }
    // Through the full loss, a projector chosen by neither sentence.
    zero_grads(model);
    diff::Tape t;
    auto fwd = model.forward(t, p);
    t.backward(model.sample_loss(t, p, fwd));
    const auto& dec = fwd.routes->decision;
    for (std::size_t c = 0; c < model.head().projectors.size(); ++c) {
      if (c == dec.chosen[0] || c == dec.chosen[1]) continue;
      ++checked;
      auto& proj = model.head().projectors[c];
      if (!all_zero(proj.weight.grad) || !all_zero(proj.bias.grad)) ++violations;
    }
  }
  o.require(violations == 0, std::to_string(violations) + " non-selected projectors received gradient");

  auto soft = toy_model(head::HeadConfig::moe(), V, 6, 3);
  std::size_t starved = 0;
  for (const auto& p : pairs) {
    for (auto* t : soft.trainable()) t->zero_grad();
    diff::Tape t;
    auto fwd = soft.forward(t, p);
    t.backward(soft.sample_loss(t, p, fwd));
    for (auto& proj : soft.head().projectors)
      if (all_zero(proj.weight.grad)) ++starved;
  }
  o.require(starved == 0, std::to_string(starved) + " weighted-average projectors without gradient");
  o.note("checked=" + std::to_string(checked) + " zero-violations=" + std::to_string(violations));
  return o;
}

// ---------------------------------------------------------------------------

struct RunStats {
  double spearman = 0;
  double overlap = 0;
  double router_per_sentence = 0;
  double router_per_pair = 0;
  double seconds = 0;
};

RunStats run_variant(const data::Splits& sp, head::HeadConfig cfg, trainer::Mode mode, std::uint64_t seed) {
  const auto t0 = Clock::now();
  trainer::TrainConfig tc;  // lr 5e-5, batch 16, 10 epochs
  tc.seed = seed;
  tc.mode = mode;
  auto model = toy_model(cfg, sp.train.vocab.size(), 16, seed);
  auto result = trainer::train(sp.train, sp.dev, std::move(model), tc);
  auto ev = evaluate(result.model, sp.test.pairs);
  RunStats s;
  s.spearman = ev.report.spearman_overall.value.value_or(NAN);
  s.overlap = ev.report.overlap.value.value_or(NAN);
  s.router_per_sentence = ev.report.router_accuracy.per_sentence.value_or(NAN);
  s.router_per_pair = ev.report.router_accuracy.per_pair.value_or(NAN);
  s.seconds = seconds_since(t0);
  return s;
}

Outcome qualitative() {
  Outcome o;
  auto synth = data::synth_corpus(2000, 16, 512, 7);
  auto sp = data::split(synth.corpus, {0.8, 0.1, 0.1}, 7);
  int a = 0, b = 0, c = 0, d = 0;
  double slowest = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto mix = run_variant(sp, head::HeadConfig::mixsp(), trainer::Mode::EndToEnd, seed);
    auto ft = run_variant(sp, head::HeadConfig::fine_tune(), trainer::Mode::EndToEnd, seed);
    auto two = run_variant(sp, head::HeadConfig::mixsp(), trainer::Mode::TwoStage, seed);
    slowest = std::max({slowest, mix.seconds, ft.seconds, two.seconds});
    const bool pa = mix.router_per_sentence >= 0.95;
    const bool pb = mix.spearman >= ft.spearman + 0.02;
    const bool pc = mix.overlap < ft.overlap;
    const bool pd = mix.router_per_sentence >= two.router_per_sentence;
    a += pa;
    b += pb;
    c += pc;
    d += pd;
    std::printf(
        "    seed %llu: mixsp spearman=%.4f overlap=%.4f router=%.4f | ft spearman=%.4f overlap=%.4f "
        "| two_stage router=%.4f | a=%s b=%s c=%s d=%s\n",
        static_cast<unsigned long long>(seed), mix.spearman, mix.overlap, mix.router_per_sentence,
        ft.spearman, ft.overlap, two.router_per_sentence, pa ? "pass" : "fail", pb ? "pass" : "fail",
        pc ? "pass" : "fail", pd ? "pass" : "fail");
  }
  auto verdict = [](int k) { return std::to_string(k) + "/3"; };
  std::printf("    4a router accuracy >= 0.95: %s\n", a >= 2 ? "PASS" : "FAIL");
  std::printf("    4b mixsp spearman >= ft + 0.02: %s\n", b >= 2 ? "PASS" : "FAIL");
  std::printf("    4c overlap(mixsp) < overlap(ft): %s\n", c >= 2 ? "PASS" : "FAIL");
  std::printf("    4d end-to-end router >= two-stage router: %s\n", d >= 2 ? "PASS" : "FAIL");
  o.require(a >= 2, "4a " + verdict(a));
  o.require(b >= 2, "4b " + verdict(b));
  o.require(c >= 2, "4c " + verdict(c));
  o.require(d >= 2, "4d " + verdict(d));
  o.require(slowest < 60.0, "slowest run " + fmt(slowest, 3) + " s");
  o.note("seeds passing a/b/c/d=" + verdict(a) + "," + verdict(b) + "," + verdict(c) + "," + verdict(d) +
         " slowest_run=" + fmt(slowest, 3) + "s");
  return o;
}

// ---------------------------------------------------------------------------

Outcome metric_oracles() {
  Outcome o;
  Rng rng(5);
  double worst = 0;
  int lists = 0;
  while (lists < 100) {
    const std::size_t n = 2 + rng.index(999);
    const std::size_t lx = 2 + rng.index(20), ly = 2 + rng.index(20);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.index(lx));
      y[i] = static_cast<double>(rng.index(ly)) + (rng.index(2) ? x[i] : 0.0);
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
        std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; }))
      continue;
    worst = std::max(worst, std::abs(metrics::spearman(x, y) - oracle::naive_spearman(x, y)));
    ++lists;
  }
  o.require(worst <= 1e-12, "spearman error " + fmt(worst));

  int auc_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(300);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.index(15)) / 8.0;
      y[i] = static_cast<int>(rng.index(2));
    }
    y[0] = 1;
    y[1] = 0;
    if (metrics::auc(s, y) != oracle::brute_auc(s, y)) ++auc_mismatch;
  }
  o.require(auc_mismatch == 0, std::to_string(auc_mismatch) + " AUC mismatches");

  std::vector<metrics::Candidate> first{{0.9, true}, {0.5, false}, {0.1, false}};
  std::vector<metrics::Candidate> one_three{{0.9, true}, {0.5, false}, {0.3, true}};
  std::vector<metrics::Query> two{{"a", {{0.9, true}, {0.1, false}}}, {"b", {{0.9, false}, {0.1, true}}}};
  o.require(std::abs(metrics::average_precision(first) - 1.0) <= 1e-12, "AP first-relevant");
  o.require(std::abs(metrics::average_precision(one_three) - 0.8333333333333334) <= 1e-12, "AP ranks 1,3");
  o.require(std::abs(metrics::mean_average_precision(two).map - 0.75) <= 1e-12, "MAP two queries");
  o.note("spearman_max_err=" + fmt(worst, 3) + " auc_mismatches=" + std::to_string(auc_mismatch));
  return o;
}

std::vector<double> gaussian(Rng& rng, std::size_t n, double mu, double sigma) {
  std::vector<double> v(n);
  for (auto& x : v) x = mu + sigma * rng.normal();
  return v;
}

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Outcome kde_oracle() {
  Outcome o;
  // n = 10000: bisection for the density crossing, then the exact integral of
  // each kernel on its side of it.
  {
    Rng rng(20240601);
    auto up = gaussian(rng, 10000, 0.6, 0.1);
    auto lo = gaussian(rng, 10000, 0.2, 0.1);
    const double hu = oracle::silverman(up), hl = oracle::silverman(lo);
    auto diff = [&](double x) { return oracle::gaussian_kde(up, hu, x) - oracle::gaussian_kde(lo, hl, x); };
    double a = 0.2, b = 0.6;
    for (int i = 0; i < 60; ++i) {
      const double m = 0.5 * (a + b);
      (diff(m) < 0 ? a : b) = m;
    }
    const double c = 0.5 * (a + b);
    double expected = 0;
    for (double u : up) expected += phi((c - u) / hu) / 10000.0;
    for (double l : lo) expected += (1.0 - phi((c - l) / hl)) / 10000.0;
    const double got = analysis::kde_overlap(up, lo).overlap;
    o.require(std::abs(got - expected) <= 1e-3, "n=10000 overlap " + fmt(got) + " vs " + fmt(expected));
    o.note("n10000 got=" + fmt(got) + " oracle=" + fmt(expected));
  }
  // Smaller draw from the same distributions against a literal 10⁶-point grid.
  {
    Rng rng(77);
    auto up = gaussian(rng, 60, 0.6, 0.1);
    auto lo = gaussian(rng, 60, 0.2, 0.1);
    const double hu = oracle::silverman(up), hl = oracle::silverman(lo);
    const double expected = oracle::min_density_integral(
        [&](double x) { return oracle::gaussian_kde(up, hu, x); },
        [&](double x) { return oracle::gaussian_kde(lo, hl, x); }, -1.5, 2.5, 1'000'000);
    const double got = analysis::kde_overlap(up, lo).overlap;
    o.require(std::abs(got - expected) <= 1e-3, "grid overlap " + fmt(got) + " vs " + fmt(expected));
    o.note("n60 got=" + fmt(got) + " grid=" + fmt(expected));
  }
  {
    Rng rng(8);
    auto v = gaussian(rng, 300, 0.1, 0.3);
    const double same = analysis::kde_overlap(v, v).overlap;
    o.require(std::abs(same - 1.0) <= 1e-6, "identical samples " + fmt(same, 12));
    auto up = gaussian(rng, 100, 0.9, 0.01);
    auto lo = gaussian(rng, 100, -0.9, 0.01);
    const double sep = analysis::kde_overlap(up, lo).overlap;
    o.require(sep < 1e-6, "separated clusters " + fmt(sep));
    o.note("identical=" + fmt(same, 12) + " separated=" + fmt(sep, 3));
  }
  return o;
}

Outcome alignment_uniformity() {
  Outcome o;
  std::vector<std::pair<std::vector<double>, std::vector<double>>> ortho{{{1, 0}, {0, 1}}};
  std::vector<std::vector<double>> two{{1, 0}, {0, 1}};
  const double al = analysis::alignment(ortho);
  const double un = analysis::uniformity(two);
  o.require(std::abs(al - 2.0) <= 1e-12, "alignment " + fmt(al, 17));
  o.require(std::abs(un + 4.0) <= 1e-12, "uniformity " + fmt(un, 17));
  o.note("alignment=" + fmt(al, 17) + " uniformity=" + fmt(un, 17));
  return o;
}

Outcome leakage() {
  Outcome o;
  std::vector<std::string> a{"the quick brown fox jumps over the lazy dog"};
  std::vector<std::string> disjoint{"one two three four five six seven"};
  std::vector<std::string> five{"a b c d e"}, four{"a b c d"};
  for (std::size_t n : {4, 5, 6}) {
    o.require(analysis::ngram_jaccard(a, a, n).similarity == 1.0, "identity n=" + std::to_string(n));
    o.require(analysis::ngram_jaccard(a, disjoint, n).similarity == 0.0, "disjoint n=" + std::to_string(n));
  }
  // 4-grams {abcd, bcde} vs {abcd}: 1 / 2.
  o.require(analysis::ngram_jaccard(five, four, 4).similarity == 0.5, "half-overlap fixture");
  return o;
}

Outcome determinism() {
  Outcome o;
  auto synth = data::synth_corpus(300, 8, 80, 13);
  auto sp = data::split(synth.corpus, {0.8, 0.1, 0.1}, 13);
  trainer::TrainConfig tc;
  tc.epochs = 3;
  tc.learning_rate = 1e-3;
  tc.seed = 4;
  auto run = [&] { return trainer::train(sp.train, sp.dev, toy_model(head::HeadConfig::mixsp(), sp.train.vocab.size(), 8, 4), tc); };
  auto r1 = run();
  auto r2 = run();
  auto n1 = r1.model.named_tensors();
  auto n2 = r2.model.named_tensors();
  bool same = n1.size() == n2.size();
  for (std::size_t i = 0; same && i < n1.size(); ++i) same = n1[i].second->values == n2[i].second->values;
  o.require(same, "parameters differ between identical runs");

  test::TempDir dir;
  const auto path = dir.path() / "checkpoint.json";
  trainer::save_checkpoint({r1.model, tc, r1.history, sp.train.vocab}, path);
  auto back = trainer::load_checkpoint(path);
  std::size_t differing = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& p = sp.train.pairs[i];
    if (back.model.predict(p).score != r1.model.predict(p).score) ++differing;
  }
  o.require(differing == 0, std::to_string(differing) + "/100 predictions differ after reload");
  return o;
}

Outcome probability_invariants() {
  Outcome o;
  Rng rng(10);
  double worst_sum = 0;
  std::size_t beta_out = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t k = 2 + rng.index(4), d = 1 + rng.index(6);
    head::HeadConfig cfg;
    cfg.bin_scheme = data::BinScheme::uniform(k);
    cfg.router_input = static_cast<head::RouterInput>(rng.index(3));
    auto params = head::init_head(cfg, d, rng);
    const double spread = std::pow(10.0, rng.uniform(-2, 2));
    for (auto& w : params.router.weight.values) w *= spread;
    auto vec = [&] {
      std::vector<double> v(d);
      for (auto& x : v) x = rng.normal() * spread;
      return v;
    };
    diff::Tape t;
    encoder::EncodedVars enc{t.constant(vec()), t.constant(vec()), t.constant(vec())};
    auto routes = head::route(t, params, cfg, enc);
    for (int j = 0; j < 2; ++j) {
      double s = 0;
      for (double p : routes.decision.p_hat[j]) s += p;
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      const double beta = routes.decision.beta[j];
      if (beta < 1.0 / static_cast<double>(k) || beta > 1.0) ++beta_out;
    }
  }
  o.require(worst_sum <= 1e-12, "sum error " + fmt(worst_sum));
  o.require(beta_out == 0, std::to_string(beta_out) + " beta values outside [1/k, 1]");
  o.note("max_sum_err=" + fmt(worst_sum, 3));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria{
      {1, {"gradient suite", gradient_suite}},
      {2, {"loss arithmetic", loss_arithmetic}},
      {3, {"hard-selection isolation", hard_selection}},
      {4, {"qualitative replication", qualitative}},
      {5, {"metric oracles", metric_oracles}},
      {6, {"kde overlap oracle", kde_oracle}},
      {7, {"alignment/uniformity closed forms", alignment_uniformity}},
      {8, {"leakage auditor", leakage}},
      {9, {"determinism and persistence", determinism}},
      {10, {"probability invariants", probability_invariants}},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int id = std::atoi(argv[i]);
    if (!criteria.count(id)) {
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
      return 2;
    }
    selected.push_back(id);
  }
  if (selected.empty())
    for (const auto& [id, _] : criteria) selected.push_back(id);

  int failed = 0;
  for (int id : selected) {
    const auto& [name, fn] = criteria.at(id);
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("criterion %2d %-36s %s  %s\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
