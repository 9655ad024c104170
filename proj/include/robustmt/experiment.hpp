#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robustmt/backtrans.hpp"
#include "robustmt/corpus.hpp"
#include "robustmt/eval.hpp"

namespace rmt {

// ---------------------------------------------------------------------------
// Four-system comparison on supplied corpora: domain-insensitive mixing,
// domain-sensitive mixing, sensitive mixing plus noisy back-translation, and
// the same plus ensemble decoding.
// ---------------------------------------------------------------------------

struct ComparisonConfig {
  Corpus clean;     // final direction, untagged
  Corpus noisy;     // final direction, untagged
  MonoCorpus mono;  // final target language
  Corpus testset;   // final direction, untagged (noisy domain)

  std::uint64_t seed = 1;
  int d_model = 64;
  int layers = 2;
  int heads = 4;
  int ffn_dim = 128;
  double dropout = 0.0;
  int steps = 800;
  int batch_size = 16;
  double lr_factor = 2.0;
  int warmup_steps = 200;
  int beam = 4;
  double length_reward = 0.0;
  int max_len = 32;
  int ensemble_size = 2;
  int log_every = 0;
};

struct ComparisonRow {
  std::string method;
  double bleu = 0.0;
  double bleu_lowercased = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;

  std::string to_text() const;
  std::string to_json() const;
};

ComparisonReport run_comparison_experiment(const ComparisonConfig& config);

}  // namespace rmt
