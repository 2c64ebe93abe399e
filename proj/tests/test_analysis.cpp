#include <gtest/gtest.h>

#include <cmath>

#include "mixsp/analysis.hpp"
#include "mixsp/errors.hpp"
#include "mixsp/rng.hpp"
#include "oracles.hpp"

using namespace mixsp;
using namespace mixsp::analysis;

namespace {

std::vector<double> gaussian(Rng& rng, std::size_t n, double mu, double sigma) {
  std::vector<double> v(n);
  for (auto& x : v) x = mu + sigma * rng.normal();
  return v;
}

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST(Cosine, Examples) {
  EXPECT_EQ(cosine(std::vector<double>{1, 2}, std::vector<double>{1, 2}), 1.0);
  EXPECT_EQ(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 2}), 0.0);
  EXPECT_EQ(cosine(std::vector<double>{1, 2}, std::vector<double>{-1, -2}), -1.0);
  EXPECT_THROW(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 2}), DomainError);
}

TEST(Silverman, MatchesDefinition) {
  Rng rng(5);
  auto v = gaussian(rng, 500, 0.3, 0.2);
  EXPECT_NEAR(silverman_bandwidth(v), oracle::silverman(v), 1e-15);
  EXPECT_THROW(silverman_bandwidth(std::vector<double>{1.0, 1.0, 1.0}), UndefinedMetric);
  EXPECT_THROW(silverman_bandwidth(std::vector<double>{1.0}), UndefinedMetric);
}

TEST(KdeOverlap, IdenticalSamplesGiveOne) {
  Rng rng(8);
  auto v = gaussian(rng, 300, 0.1, 0.3);
  auto r = kde_overlap(v, v);
  EXPECT_NEAR(r.overlap, 1.0, 1e-6);
}

TEST(KdeOverlap, SeparatedClustersGiveZero) {
  Rng rng(9);
  auto up = gaussian(rng, 100, 0.9, 0.01);
  auto lo = gaussian(rng, 100, -0.9, 0.01);
  EXPECT_LT(kde_overlap(up, lo).overlap, 1e-6);
}

TEST(KdeOverlap, GridContract) {
  Rng rng(10);
  auto up = gaussian(rng, 50, 0.6, 0.1);
  auto lo = gaussian(rng, 50, 0.2, 0.1);
  auto r = kde_overlap(up, lo);
  ASSERT_EQ(r.grid.x.size(), kGridPoints);
  ASSERT_EQ(r.grid.upper.size(), kGridPoints);
  ASSERT_EQ(r.grid.lower.size(), kGridPoints);
  const double hmax = std::max(r.grid.bandwidth_upper, r.grid.bandwidth_lower);
  const double mn = std::min(*std::min_element(up.begin(), up.end()), *std::min_element(lo.begin(), lo.end()));
  EXPECT_NEAR(r.grid.x.front(), mn - 5 * hmax, 1e-12);
  for (std::size_t i = 0; i < kGridPoints; i += 97) {
    EXPECT_NEAR(r.grid.upper[i], oracle::gaussian_kde(up, r.grid.bandwidth_upper, r.grid.x[i]), 1e-12);
    EXPECT_GE(r.grid.lower[i], 0.0);
  }
  EXPECT_GE(r.overlap, 0.0);
  EXPECT_LE(r.overlap, 1.0);
}

TEST(KdeOverlap, TwoGaussianFixtureAgainstCrossingOracle) {
  // n = 10000 per class. The oracle finds the single density crossing c by
  // bisection on exact kernel sums, then integrates each side in closed form:
  // overlap = mean_u Φ((c−u)/h_u) + mean_l (1 − Φ((c−l)/h_l)).
  Rng rng(20240601);
  auto up = gaussian(rng, 10000, 0.6, 0.1);
  auto lo = gaussian(rng, 10000, 0.2, 0.1);
  const double hu = oracle::silverman(up), hl = oracle::silverman(lo);
  auto diff = [&](double x) { return oracle::gaussian_kde(up, hu, x) - oracle::gaussian_kde(lo, hl, x); };
  double a = 0.2, b = 0.6;
  ASSERT_LT(diff(a), 0.0);
  ASSERT_GT(diff(b), 0.0);
  for (int i = 0; i < 60; ++i) {
    const double m = 0.5 * (a + b);
    (diff(m) < 0 ? a : b) = m;
  }
  const double c = 0.5 * (a + b);
  double expected = 0;
  for (double u : up) expected += phi((c - u) / hu) / static_cast<double>(up.size());
  for (double l : lo) expected += (1.0 - phi((c - l) / hl)) / static_cast<double>(lo.size());

  const double got = kde_overlap(up, lo).overlap;
  EXPECT_NEAR(got, expected, 1e-3);
  // Population value for two N(·, 0.1) at distance 0.4 is 2Φ(−2) ≈ 0.0455.
  EXPECT_NEAR(got, 2 * phi(-2.0), 0.01);
}

TEST(KdeOverlap, SmallFixtureAgainstMillionPointGrid) {
  Rng rng(77);
  auto up = gaussian(rng, 60, 0.6, 0.1);
  auto lo = gaussian(rng, 60, 0.2, 0.1);
  const double hu = oracle::silverman(up), hl = oracle::silverman(lo);
  const double expected = oracle::min_density_integral(
      [&](double x) { return oracle::gaussian_kde(up, hu, x); },
      [&](double x) { return oracle::gaussian_kde(lo, hl, x); }, -1.5, 2.5, 1'000'000);
  EXPECT_NEAR(kde_overlap(up, lo).overlap, expected, 1e-3);
}

TEST(KdeOverlap, MissingClassIsUndefined) {
  std::vector<SimilaritySample> only_upper{{0.9, data::ClassLabel::Upper},
                                           {0.8, data::ClassLabel::Upper}};
  EXPECT_THROW(kde_overlap(only_upper), UndefinedMetric);
}

TEST(Alignment, ClosedForms) {
  std::vector<std::pair<std::vector<double>, std::vector<double>>> same{{{3, 4}, {0.6, 0.8}}};
  EXPECT_NEAR(alignment(same), 0.0, 1e-15);
  std::vector<std::pair<std::vector<double>, std::vector<double>>> ortho{{{1, 0}, {0, 1}}};
  EXPECT_NEAR(alignment(ortho), 2.0, 1e-12);
  std::vector<std::pair<std::vector<double>, std::vector<double>>> anti{{{0, 2}, {0, -1}}};
  EXPECT_NEAR(alignment(anti), 4.0, 1e-12);
  EXPECT_THROW(alignment({}), UndefinedMetric);
}

TEST(Uniformity, ClosedForms) {
  std::vector<std::vector<double>> same{{1, 1}, {2, 2}, {0.5, 0.5}};
  EXPECT_NEAR(uniformity(same), 0.0, 1e-15);
  std::vector<std::vector<double>> ortho{{1, 0}, {0, 1}};
  EXPECT_NEAR(uniformity(ortho), -4.0, 1e-12);
  std::vector<std::vector<double>> anti{{1, 0}, {-1, 0}};
  EXPECT_NEAR(uniformity(anti), -8.0, 1e-12);
  EXPECT_THROW(uniformity(std::vector<std::vector<double>>{{1, 0}}), UndefinedMetric);
}

TEST(NgramJaccard, Examples) {
  std::vector<std::string> a{"a b c d e"}, b{"a b c d"};
  auto r = ngram_jaccard(a, b, 4);
  EXPECT_EQ(r.similarity, 0.5);
  EXPECT_EQ(r.intersection, 1u);
  EXPECT_EQ(r.set_a, 2u);
  EXPECT_EQ(ngram_jaccard(a, a, 5).similarity, 1.0);
  std::vector<std::string> c{"x y z w v"};
  EXPECT_EQ(ngram_jaccard(a, c, 2).similarity, 0.0);
  EXPECT_THROW(ngram_jaccard(a, b, 0), ConfigError);
}

TEST(NgramJaccard, CaseFoldingAndEmptySets) {
  std::vector<std::string> a{"The Cat Sat Down"}, b{"the cat sat down"};
  EXPECT_EQ(ngram_jaccard(a, b, 4).similarity, 1.0);
  auto e = ngram_jaccard(a, b, 9);
  EXPECT_TRUE(e.empty);
  EXPECT_EQ(e.similarity, 0.0);
}

TEST(NgramJaccard, MatchesSetOracle) {
  Rng rng(3);
  const std::vector<std::string> words{"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> A, B;
    for (auto* corpus : {&A, &B})
      for (int s = 0; s < 4; ++s) {
        std::string sent;
        const std::size_t len = 1 + rng.index(8);
        for (std::size_t k = 0; k < len; ++k) sent += words[rng.index(words.size())] + " ";
        corpus->push_back(sent);
      }
    for (std::size_t n = 1; n <= 4; ++n)
      EXPECT_EQ(ngram_jaccard(A, B, n).similarity, oracle::brute_jaccard(A, B, n));
  }
}
