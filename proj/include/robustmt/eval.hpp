#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace rmt {

// ---------------------------------------------------------------------------
// Corpus-level BLEU (orders 1..4, single reference), computed over the intl
// tokenization of detokenized text.
// ---------------------------------------------------------------------------

struct BleuOptions {
  bool lowercase = false;
  // Exponential smoothing for zero-match orders; off by default, for parity
  // with standardized corpus scoring. Useful only on tiny fixtures.
  bool smooth = false;
};

struct BleuReport {
  std::array<std::size_t, 4> matched{};  // clipped n-gram matches per order
  std::array<std::size_t, 4> total{};    // hypothesis n-gram counts per order
  std::array<double, 4> precisions{};
  double brevity_penalty = 1.0;
  double score = 0.0;  // [0, 100]
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  std::string tokenization = "intl";
  bool lowercased = false;
  bool smoothed = false;

  std::string to_text() const;
  std::string to_json() const;
};

// Accumulates clipped n-gram matches corpus-wide and applies
// BP = min(1, exp(1 - ref_len / hyp_len)). With smoothing off, any
// zero-match order sends the score to 0.
BleuReport corpus_bleu(const std::vector<std::string>& hypotheses,
                       const std::vector<std::string>& references,
                       const BleuOptions& options = {});

}  // namespace rmt

#include "robustmt/decode.hpp"

namespace rmt {

// ---------------------------------------------------------------------------
// End-to-end system evaluation: decode -> subword join -> detokenize ->
// corpus_bleu, with per-sentence decode errors recorded rather than fatal.
// Both cased and lowercased scores are reported.
// ---------------------------------------------------------------------------

struct EvalResult {
  BleuReport cased;
  BleuReport lowercased;
  std::vector<std::string> hypotheses;  // detokenized, one per test sentence
  std::size_t decode_errors = 0;
};

// Test sources may carry a source-side tag at position 0. Decoding starts
// from `start_token` (begin token, or a target tag for generator-style
// models).
EvalResult evaluate_system(const EnsembleSpec& ensemble, const Corpus& testset,
                           const DecodeConfig& config, int start_token = kBosId);

}  // namespace rmt
