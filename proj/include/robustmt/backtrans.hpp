#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robustmt/corpus.hpp"
#include "robustmt/decode.hpp"
#include "robustmt/model.hpp"

namespace rmt {

// ---------------------------------------------------------------------------
// Reversed noisy-generation pipeline: train a target-tagged generator on
// reversed data, synthesize pseudo-noisy sources for monolingual target
// text, and assemble the augmented training set.
// ---------------------------------------------------------------------------

// Reverses both corpora (generator direction is the reverse of the final
// translation direction) and tags the reversed targets: <clean_s> for clean
// pairs, <noisy_s> for noisy pairs; then mixes with the seed.
Corpus build_generator_corpus(const Corpus& clean, const Corpus& noisy, std::uint64_t seed);

struct PseudoSourceResult {
  Corpus corpus;  // (pseudo source, original monolingual sentence), final direction
  std::size_t dropped_empty = 0;
};

// Decodes every monolingual sentence with the generator started from
// <noisy_s>; output pairs carry origin SyntheticBacktranslated and the given
// final-direction labels. Generations that come out empty are dropped and
// counted; reserved ids in generated output are dropped from the text.
// Errors if the generator was not trained with target-side tags.
PseudoSourceResult generate_pseudo_sources(const EnsembleSpec& generator, const MonoCorpus& mono,
                                           const DecodeConfig& config,
                                           const std::string& source_lang = "src",
                                           const std::string& target_lang = "tgt");

enum class MixingMode { Insensitive, Sensitive };

// Sensitive mode applies source-side tags: <clean> to clean pairs, <noisy> to
// noisy AND synthetic pairs (synthetic sources imitate noisy style).
// Insensitive mode applies no tags. Result is mixed with the seed.
Corpus assemble_training_set(const Corpus& clean, const Corpus& noisy, const Corpus& synthetic,
                             MixingMode mode, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Tag-steering experiment: a desk-scale probe of domain-sensitive generation.
// CLEAN and NOISY domains map identical sources to systematically different
// targets; a target-tagged generator should produce tag-consistent output on
// held-out sources, while a tag-blind generator trained on the same mix
// cannot be steered.
// ---------------------------------------------------------------------------

struct SteeringConfig {
  int vocab_words = 40;        // base source alphabet size
  int train_sources = 600;     // distinct training sources (each appears per domain)
  int held_out = 200;          // fresh evaluation sources
  int min_len = 3;
  int max_len = 6;
  bool identical_domains = false;  // degenerate control: both transforms equal
  std::uint64_t seed = 11;
  int d_model = 64;
  int layers = 2;
  int heads = 4;
  int ffn_dim = 128;
  int steps = 1200;
  int batch_size = 16;
  double lr_factor = 2.0;
  int warmup_steps = 200;
  int beam = 4;
};

struct SteeringReport {
  double tagged_clean_match = 0.0;  // tagged generator, <clean_s> requested
  double tagged_noisy_match = 0.0;  // tagged generator, <noisy_s> requested
  double blind_clean_match = 0.0;   // tag-blind generator vs clean style
  double blind_noisy_match = 0.0;   // tag-blind generator vs noisy style
  double mixing_ratio = 0.5;
  int held_out = 0;

  std::string to_text() const;
  std::string to_json() const;
};

SteeringReport run_tag_steering_experiment(const SteeringConfig& config);

// The synthetic style corpus behind the steering experiment, exposed for the
// comparison pipeline and tests. Shared target-side sentences use words
// "w<i>"; the clean transform maps w<i> -> "c<i>" and the noisy transform
// maps w<i> -> "n<i>" (also "c<i>" when identical_domains is set). Both
// corpora are in the final translation direction (styled source, shared
// target) over the same underlying sentences.
struct StyleCorpus {
  Corpus clean_final;  // (clean-styled source, shared target), origin CleanParallel
  Corpus noisy_final;  // (noisy-styled source, shared target), origin NoisyParallel
  std::vector<std::vector<std::string>> held_out_sources;  // fresh generator inputs (w-words)
};

StyleCorpus make_style_corpus(const SteeringConfig& config);

// Style membership tests for generated token sequences.
bool matches_clean_style(const std::vector<std::string>& tokens);
bool matches_noisy_style(const std::vector<std::string>& tokens, bool identical_domains);

}  // namespace rmt
