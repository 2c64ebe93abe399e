#include "mixsp/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mixsp/errors.hpp"
#include "mixsp/rng.hpp"

namespace mixsp::data {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// BinScheme

BinScheme::BinScheme() : edges_{0.0, 4.0, kMaxScore} {}

BinScheme::BinScheme(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 3) throw ConfigError("bin scheme needs at least two bins");
  if (edges_.front() != 0.0 || edges_.back() != kMaxScore)
    throw ConfigError("bin scheme must cover [0, 5] exactly");
  for (std::size_t i = 1; i < edges_.size(); ++i)
    if (!(edges_[i] > edges_[i - 1])) throw ConfigError("bin edges must be strictly increasing");
}

BinScheme BinScheme::uniform(std::size_t k) {
  if (k < 2) throw ConfigError("bin scheme needs at least two bins");
  std::vector<double> e(k + 1);
  for (std::size_t i = 0; i <= k; ++i) e[i] = kMaxScore * static_cast<double>(i) / static_cast<double>(k);
  e.back() = kMaxScore;
  return BinScheme(std::move(e));
}

std::size_t BinScheme::bin_of(double score) const {
  if (!(score >= 0.0 && score <= kMaxScore))
    throw DomainError("score " + std::to_string(score) + " outside [0, 5]");
  const std::size_t k = bins();
  // Interval j is [e_j, e_{j+1}); the top interval also holds 5.
  std::size_t j = k - 1;
  for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
    if (score < edges_[i + 1]) {
      j = i;
      break;
    }
  }
  return k - 1 - j;
}

std::pair<double, double> BinScheme::range(std::size_t bin) const {
  if (bin >= bins()) throw DomainError("bin " + std::to_string(bin) + " outside scheme");
  const std::size_t j = bins() - 1 - bin;
  return {edges_[j], edges_[j + 1]};
}

const char* to_string(ClassLabel label) { return label == ClassLabel::Upper ? "upper" : "lower"; }

ClassLabel SentencePair::class_label() const {
  return gold_score >= 4.0 ? ClassLabel::Upper : ClassLabel::Lower;
}

SentencePair make_pair(std::string id, std::vector<std::int32_t> sent1,
                       std::vector<std::int32_t> sent2, double gold, const BinScheme& scheme) {
  if (sent1.empty() || sent2.empty()) throw ParseError("pair " + id + ": empty sentence");
  SentencePair p;
  p.id = std::move(id);
  p.sent1 = std::move(sent1);
  p.sent2 = std::move(sent2);
  p.gold_score = gold;
  p.bin = scheme.bin_of(gold);
  return p;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  for (const auto& t : tokens) {
    if (index_.count(t)) throw ParseError("duplicate vocabulary token '" + t + "'");
    add(t);
  }
}

std::int32_t Vocabulary::add(const std::string& token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

std::optional<std::int32_t> Vocabulary::find(const std::string& token) const {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  return std::nullopt;
}

Vocabulary Vocabulary::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": empty token");
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

void Vocabulary::save(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Corpus IO

std::string Corpus::text(const std::vector<std::int32_t>& sentence) const {
  std::string s;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    if (i) s += ' ';
    s += vocab.token(sentence[i]);
  }
  return s;
}

void Corpus::relabel(const BinScheme& scheme) {
  for (auto& p : pairs) p.bin = scheme.bin_of(p.gold_score);
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return cols;
}

double parse_score(const std::string& text, const std::string& where) {
  double v = 0;
  const char* b = text.data();
  const char* e = b + text.size();
  while (b < e && (*b == ' ')) ++b;
  while (e > b && (e[-1] == ' ')) --e;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || b == e)
    throw ParseError(where + ": column 3: cannot parse score '" + text + "'");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

Corpus load_tsv(const fs::path& path, Vocabulary vocab, bool fixed_vocab, const BinScheme& scheme) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pair file " + path.string());
  Corpus corpus;
  corpus.name = path.stem().string();
  corpus.vocab = std::move(vocab);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto cols = split_tabs(line);
    if (cols.size() != 3)
      throw ParseError(where + ": expected 3 tab-separated columns, found " + std::to_string(cols.size()));
    const double score = parse_score(cols[2], where);
    if (!(score >= 0.0 && score <= kMaxScore))
      throw ParseError(where + ": column 3: score " + cols[2] + " outside [0, 5]");
    std::vector<std::int32_t> ids[2];
    for (int c = 0; c < 2; ++c) {
      const auto toks = split_ws(cols[static_cast<std::size_t>(c)]);
      if (toks.empty())
        throw ParseError(where + ": column " + std::to_string(c + 1) + ": empty sentence");
      for (const auto& t : toks) {
        if (fixed_vocab) {
          auto id = corpus.vocab.find(t);
          if (!id)
            throw ParseError(where + ": column " + std::to_string(c + 1) + ": token '" + t +
                             "' not in vocabulary");
          ids[c].push_back(*id);
        } else {
          ids[c].push_back(corpus.vocab.add(t));
        }
      }
    }
    corpus.pairs.push_back(make_pair(corpus.name + ":" + std::to_string(corpus.pairs.size()), std::move(ids[0]),
                                     std::move(ids[1]), score, scheme));
  }
  return corpus;
}

void write_tsv(const Corpus& corpus, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write pair file " + path.string());
  for (const auto& p : corpus.pairs)
    out << corpus.text(p.sent1) << '\t' << corpus.text(p.sent2) << '\t'
        << format_double(p.gold_score) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::string> read_tsv_sentences(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pair file " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    for (std::size_t c = 0; c < std::min<std::size_t>(2, cols.size()); ++c) out.push_back(cols[c]);
  }
  return out;
}

void write_metadata(const Metadata& meta, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write metadata " + path.string());
  for (const auto& [k, v] : meta) out << k << '=' << v << '\n';
}

Metadata read_metadata(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metadata " + path.string());
  Metadata meta;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

double clean_score(double cosine) { return kMaxScore * (0.5 + 0.5 * cosine); }

namespace {

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double n = 0;
  do {
    n = 0;
    for (double& x : v) {
      x = rng.normal();
      n += x * x;
    }
  } while (n < 1e-12);
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

// Unit vector with cosine `c` to the unit vector `a`.
std::vector<double> at_angle(Rng& rng, const std::vector<double>& a, double c) {
  std::vector<double> w;
  double n = 0;
  do {
    w = random_unit(rng, a.size());
    double dot = 0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += w[i] * a[i];
    n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      w[i] -= dot * a[i];
      n += w[i] * w[i];
    }
  } while (n < 1e-12);
  n = std::sqrt(n);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = c * a[i] + s * w[i] / n;
  return out;
}

std::vector<std::int32_t> sample_sentence(Rng& rng, const std::vector<double>& dir,
                                          const std::vector<double>& tokens, std::size_t dim,
                                          std::size_t len, double concentration) {
  const std::size_t V = tokens.size() / dim;
  std::vector<double> cdf(V);
  double acc = 0;
  for (std::size_t t = 0; t < V; ++t) {
    double dot = 0;
    for (std::size_t i = 0; i < dim; ++i) dot += tokens[t * dim + i] * dir[i];
    acc += std::exp(concentration * (dot - 1.0));
    cdf[t] = acc;
  }
  std::vector<std::int32_t> out(len);
  for (auto& id : out) {
    const double u = rng.uniform() * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    id = static_cast<std::int32_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(V) - 1));
  }
  return out;
}

}  // namespace

SynthCorpus synth_corpus(std::size_t n_pairs, std::size_t dim, std::size_t vocab_size,
                         std::uint64_t seed, const SynthOptions& opt) {
  if (n_pairs < 2) throw ConfigError("synth_corpus: need at least 2 pairs");
  if (dim < 2) throw ConfigError("synth_corpus: dim must be at least 2");
  if (vocab_size < dim) throw ConfigError("synth_corpus: vocab_size must be at least dim");
  if (!(opt.noise >= 0)) throw ConfigError("synth_corpus: noise must be non-negative");
  if (!(opt.upper_fraction > 0 && opt.upper_fraction < 1))
    throw ConfigError("synth_corpus: upper_fraction must lie in (0, 1)");
  if (opt.min_len == 0 || opt.max_len < opt.min_len)
    throw ConfigError("synth_corpus: bad sentence length range");

  Rng rng(seed);
  SynthCorpus out;
  out.corpus.name = "synthetic";
  out.corpus.seed = seed;
  out.latents.dim = dim;

  for (std::size_t t = 0; t < vocab_size; ++t) {
    out.corpus.vocab.add("w" + std::to_string(t));
    auto u = random_unit(rng, dim);
    out.latents.token_dirs.insert(out.latents.token_dirs.end(), u.begin(), u.end());
  }

  // Exact class counts, at least one of each, then shuffled.
  auto n_upper = static_cast<std::size_t>(std::llround(opt.upper_fraction * static_cast<double>(n_pairs)));
  n_upper = std::clamp<std::size_t>(n_upper, 1, n_pairs - 1);
  std::vector<std::uint8_t> upper(n_pairs, 0);
  std::fill_n(upper.begin(), n_upper, 1);
  rng.shuffle(std::span(upper));

  const BinScheme scheme;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    // Clean score uniform over the target class interval.
    const double clean = upper[i] ? rng.uniform(4.0, kMaxScore) : rng.uniform(0.0, 4.0);
    const double c = std::clamp(2.0 * clean / kMaxScore - 1.0, -1.0, 1.0);
    auto l1 = random_unit(rng, dim);
    auto l2 = at_angle(rng, l1, c);

    double gold = clean;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      gold = std::clamp(clean + opt.noise * rng.normal(), 0.0, kMaxScore);
      if ((gold >= 4.0) == static_cast<bool>(upper[i])) break;
      gold = clean;
    }

    const auto len1 = opt.min_len + rng.index(opt.max_len - opt.min_len + 1);
    const auto len2 = opt.min_len + rng.index(opt.max_len - opt.min_len + 1);
    auto s1 = sample_sentence(rng, l1, out.latents.token_dirs, dim, len1, opt.concentration);
    auto s2 = sample_sentence(rng, l2, out.latents.token_dirs, dim, len2, opt.concentration);

    std::string id = std::to_string(i);
    out.latents.sentences.emplace(id, std::make_pair(std::move(l1), std::move(l2)));
    out.corpus.pairs.push_back(make_pair(std::move(id), std::move(s1), std::move(s2), gold, scheme));
  }
  return out;
}

// ---------------------------------------------------------------------------

Splits split(const Corpus& corpus, const std::vector<double>& fractions, std::uint64_t seed) {
  if (fractions.empty() || fractions.size() > 3)
    throw ConfigError("split: between one and three fractions required");
  double total = 0;
  for (double f : fractions) {
    if (!(f > 0)) throw ConfigError("split: fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split: fractions must sum to 1");

  const std::size_t n = corpus.pairs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span(order));

  std::vector<std::size_t> sizes;
  std::size_t used = 0;
  for (std::size_t i = 0; i + 1 < fractions.size(); ++i) {
    const auto s = static_cast<std::size_t>(std::floor(fractions[i] * static_cast<double>(n) + 1e-9));
    sizes.push_back(s);
    used += s;
  }
  sizes.push_back(n - used);
  for (std::size_t s : sizes)
    if (s == 0) throw ConfigError("split: " + std::to_string(n) + " pairs cannot fill every split");

  Splits out;
  Corpus* targets[3] = {&out.train, &out.dev, &out.test};
  std::size_t pos = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    Corpus& c = *targets[k];
    c.name = corpus.name;
    c.vocab = corpus.vocab;
    c.seed = corpus.seed;
    for (std::size_t i = 0; i < sizes[k]; ++i) c.pairs.push_back(corpus.pairs[order[pos++]]);
  }
  for (std::size_t k = sizes.size(); k < 3; ++k) {
    targets[k]->name = corpus.name;
    targets[k]->vocab = corpus.vocab;
  }
  return out;
}

}  // namespace mixsp::data
