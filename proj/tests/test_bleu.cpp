#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "robustmt/eval.hpp"
#include "robustmt/util.hpp"

using namespace rmt;

namespace {

std::vector<std::string> random_corpus(Rng& rng, std::size_t sentences,
                                       const std::vector<std::string>& words) {
  std::vector<std::string> out;
  for (std::size_t s = 0; s < sentences; ++s) {
    std::size_t len = 1 + uniform_index(rng, 19);
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < len; ++i) tokens.push_back(words[uniform_index(rng, words.size())]);
    out.push_back(join(tokens));
  }
  return out;
}

// hypothesis = reference with a few random word substitutions, so n-gram
// overlap is high but not total
std::vector<std::string> mutate(Rng& rng, const std::vector<std::string>& refs,
                                const std::vector<std::string>& words) {
  std::vector<std::string> out;
  for (const auto& ref : refs) {
    auto tokens = split_whitespace(ref);
    for (auto& t : tokens)
      if (uniform_real(rng) < 0.15) t = words[uniform_index(rng, words.size())];
    out.push_back(join(tokens));
  }
  return out;
}

const std::vector<std::string> kWords = {"the",  "cat", "sat",   "on",  "a",   "mat",
                                         "dogs", "run", "fast,", "and", "far", "away."};

}  // namespace

TEST_SUITE("bleu") {

TEST_CASE("identical corpora score exactly 100") {
  std::vector<std::string> text = {"the cat sat on the mat.", "dogs run far, very far!",
                                   "a lone sentence"};
  auto report = corpus_bleu(text, text);
  CHECK(report.score == 100.0);
  CHECK(report.brevity_penalty == 1.0);
  for (int n = 0; n < 4; ++n) CHECK(report.precisions[n] == 1.0);
}

TEST_CASE("zero 4-gram matches score 0 unsmoothed") {
  std::vector<std::string> hyp = {"a b c x"};
  std::vector<std::string> ref = {"a b c d"};
  auto report = corpus_bleu(hyp, ref);
  CHECK(report.matched[3] == 0);
  CHECK(report.score == 0.0);
  // exponential smoothing behind the flag gives a nonzero score
  BleuOptions smooth;
  smooth.smooth = true;
  auto smoothed = corpus_bleu(hyp, ref, smooth);
  CHECK(smoothed.score > 0.0);
}

TEST_CASE("three-sentence regression fixture") {
  std::vector<std::string> hyps = {"the cat sat on the mat.", "dogs run fast and far.",
                                   "it was a quiet, gray morning"};
  std::vector<std::string> refs = {"the cat sat on a mat.", "the dogs run fast and so far.",
                                   "it was a quiet, grey morning"};
  auto oracle = oracles::bleu_oracle(hyps, refs);
  auto report = corpus_bleu(hyps, refs);
  CHECK(report.score == doctest::Approx(oracle.score).epsilon(1e-12));
  // regression pin: brute-force clipped-count value frozen at build time
  CHECK(report.score == doctest::Approx(52.750136521966).epsilon(1e-9));
}

TEST_CASE("matches the brute-force oracle on randomized corpora") {
  Rng rng(1234);
  for (int trial = 0; trial < 8; ++trial) {
    auto refs = random_corpus(rng, 4 + trial, kWords);
    auto hyps = mutate(rng, refs, kWords);
    auto oracle = oracles::bleu_oracle(hyps, refs);
    auto report = corpus_bleu(hyps, refs);
    CHECK(std::abs(report.score - oracle.score) < 1e-9);
    CHECK(std::abs(report.brevity_penalty - oracle.brevity_penalty) < 1e-12);
  }
}

TEST_CASE("corpus_bleu is permutation invariant") {
  Rng rng(555);
  auto refs = random_corpus(rng, 12, kWords);
  auto hyps = mutate(rng, refs, kWords);
  double base = corpus_bleu(hyps, refs).score;
  std::vector<std::size_t> order(refs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  deterministic_shuffle(order, 9);
  std::vector<std::string> hyps2, refs2;
  for (std::size_t i : order) {
    hyps2.push_back(hyps[i]);
    refs2.push_back(refs[i]);
  }
  CHECK(corpus_bleu(hyps2, refs2).score == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("replacing a hypothesis with its reference never lowers the score") {
  Rng rng(808);
  auto refs = random_corpus(rng, 10, kWords);
  auto hyps = mutate(rng, refs, kWords);
  double base = corpus_bleu(hyps, refs).score;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    auto improved = hyps;
    improved[i] = refs[i];
    CHECK(corpus_bleu(improved, refs).score >= base - 1e-12);
  }
}

TEST_CASE("brevity penalty behavior") {
  // shorter hypothesis corpus: BP < 1
  auto short_report = corpus_bleu({"a b"}, {"a b c d"});
  CHECK(short_report.brevity_penalty == doctest::Approx(std::exp(1.0 - 4.0 / 2.0)).epsilon(1e-12));
  // longer or equal: BP == 1
  auto long_report = corpus_bleu({"a b c d e"}, {"a b c d"});
  CHECK(long_report.brevity_penalty == 1.0);
}

TEST_CASE("report arithmetic identity holds against its own precisions") {
  Rng rng(99);
  auto refs = random_corpus(rng, 8, kWords);
  auto hyps = mutate(rng, refs, kWords);
  auto report = corpus_bleu(hyps, refs);
  if (report.score > 0) {
    double log_sum = 0;
    for (int n = 0; n < 4; ++n) log_sum += std::log(report.precisions[n]);
    double recomputed = report.brevity_penalty * std::exp(log_sum / 4.0) * 100.0;
    CHECK(report.score == doctest::Approx(recomputed).epsilon(1e-9));
  }
}

TEST_CASE("count mismatch is an error; lowercase flag folds case") {
  CHECK_THROWS_AS(corpus_bleu({"a"}, {"a", "b"}), Error);
  BleuOptions lower;
  lower.lowercase = true;
  CHECK(corpus_bleu({"Say IT loud NOW"}, {"say it LOUD now"}, lower).score == 100.0);
  CHECK(corpus_bleu({"Say IT loud NOW"}, {"say it LOUD now"}).score < 100.0);
}

}  // TEST_SUITE
