#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "ctp/shortcuts.hpp"
#include "oracles.hpp"

using Catch::Matchers::WithinAbs;

namespace {

std::vector<double> random_pvec(std::mt19937_64& gen, int n, bool with_ties) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> p(static_cast<std::size_t>(n));
  for (auto& v : p) v = dist(gen);
  if (with_ties && n >= 2) p[0] = p[static_cast<std::size_t>(n) - 1];
  return p;
}

}  // namespace

TEST_CASE("holm_adjust matches the worked example and brute force") {
  const std::vector<double> paper{0.157299, 0.004678, 0.157299};
  const auto adj = ctp::holm_adjust(paper);
  REQUIRE_THAT(adj[0], WithinAbs(0.314598, 1e-6));
  REQUIRE_THAT(adj[1], WithinAbs(0.014034, 1e-6));
  REQUIRE_THAT(adj[2], WithinAbs(0.314598, 1e-6));

  const auto brute = oracle::closure_adjusted(paper, oracle::bonferroni);
  for (std::size_t i = 0; i < adj.size(); ++i)
    REQUIRE_THAT(adj[i], WithinAbs(brute[i], 1e-12));
}

TEST_CASE("holm_adjust trivial cases") {
  const std::vector<double> single{0.2};
  REQUIRE(ctp::holm_adjust(single) == std::vector<double>{0.2});
  const std::vector<double> ones{1.0, 1.0, 1.0, 1.0};
  REQUIRE(ctp::holm_adjust(ones) == ones);
}

TEST_CASE("hommel_adjust matches brute-force closed Simes") {
  const std::vector<double> four{0.01, 0.02, 0.03, 0.04};
  const auto adj = ctp::hommel_adjust(four);
  const auto brute = oracle::closure_adjusted(four, oracle::simes);
  for (std::size_t i = 0; i < adj.size(); ++i)
    REQUIRE_THAT(adj[i], WithinAbs(brute[i], 1e-12));

  const std::vector<double> single{0.33};
  REQUIRE(ctp::hommel_adjust(single) == std::vector<double>{0.33});
}

TEST_CASE("hommel_adjust matches brute force on random 10-vectors") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_pvec(gen, 10, trial % 3 == 0);
    const auto adj = ctp::hommel_adjust(p);
    const auto brute = oracle::closure_adjusted(p, oracle::simes);
    for (std::size_t i = 0; i < p.size(); ++i)
      REQUIRE_THAT(adj[i], WithinAbs(brute[i], 1e-12));
  }
}

TEST_CASE("fisher_adjust_independent matches brute-force closed Fisher") {
  const std::vector<double> paper{0.157299, 0.004678, 0.157299};
  const auto adj = ctp::fisher_adjust_independent(paper);
  const auto brute = oracle::closure_adjusted(paper, oracle::fisher_chisq);
  for (std::size_t i = 0; i < adj.size(); ++i)
    REQUIRE_THAT(adj[i], WithinAbs(brute[i], 1e-12));

  // singleton goes through exp(ln p): equal to p up to rounding
  const std::vector<double> single{0.08};
  REQUIRE_THAT(ctp::fisher_adjust_independent(single)[0], WithinAbs(0.08, 1e-12));
}

TEST_CASE("all three shortcuts match brute force across sizes") {
  std::mt19937_64 gen(23);
  for (int n = 1; n <= 9; ++n) {
    for (int trial = 0; trial < 25; ++trial) {
      const auto p = random_pvec(gen, n, trial % 4 == 0);
      const auto holm = ctp::holm_adjust(p);
      const auto hommel = ctp::hommel_adjust(p);
      const auto fisher = ctp::fisher_adjust_independent(p);
      const auto bb = oracle::closure_adjusted(p, oracle::bonferroni);
      const auto bs = oracle::closure_adjusted(p, oracle::simes);
      const auto bf = oracle::closure_adjusted(p, oracle::fisher_chisq);
      for (std::size_t i = 0; i < p.size(); ++i) {
        REQUIRE_THAT(holm[i], WithinAbs(bb[i], 1e-12));
        REQUIRE_THAT(hommel[i], WithinAbs(bs[i], 1e-12));
        REQUIRE_THAT(fisher[i], WithinAbs(bf[i], 1e-12));
      }
    }
  }
}

TEST_CASE("shortcut outputs are valid adjusted p-values") {
  std::mt19937_64 gen(29);
  for (int trial = 0; trial < 60; ++trial) {
    const auto p = random_pvec(gen, 1 + static_cast<int>(gen() % 12), false);
    for (const auto& adj :
         {ctp::holm_adjust(p), ctp::hommel_adjust(p), ctp::fisher_adjust_independent(p)}) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        REQUIRE(adj[i] >= p[i] - 1e-15);
        REQUIRE(adj[i] <= 1.0);
      }
    }
  }
}

TEST_CASE("a single strong signal among many uniforms: Fisher loses, Holm wins") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> p(1000);
  for (auto& v : p) v = dist(gen);
  p[0] = 1e-10;
  const auto holm = ctp::holm_adjust(p);
  const auto fisher = ctp::fisher_adjust_independent(p);
  REQUIRE(holm[0] < 1e-6);
  REQUIRE(fisher[0] > 0.5);
}
