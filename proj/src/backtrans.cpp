#include "robustmt/backtrans.hpp"

#include <sstream>

#include "robustmt/util.hpp"

namespace rmt {

Corpus build_generator_corpus(const Corpus& clean, const Corpus& noisy, std::uint64_t seed) {
  if (clean.source_lang != noisy.source_lang || clean.target_lang != noisy.target_lang)
    throw InvariantError("build_generator_corpus: direction mismatch");
  Corpus rev_clean = reverse_direction(clean);
  Corpus rev_noisy = reverse_direction(noisy);
  for (auto& pair : rev_clean.pairs)
    pair = tag_pair(pair, DomainTag{DomainKind::Clean, TagSide::TargetStart});
  for (auto& pair : rev_noisy.pairs)
    pair = tag_pair(pair, DomainTag{DomainKind::Noisy, TagSide::TargetStart});
  std::vector<Corpus> parts;
  parts.push_back(std::move(rev_clean));
  parts.push_back(std::move(rev_noisy));
  return mix(std::move(parts), seed);
}

PseudoSourceResult generate_pseudo_sources(const EnsembleSpec& generator, const MonoCorpus& mono,
                                           const DecodeConfig& config,
                                           const std::string& source_lang,
                                           const std::string& target_lang) {
  if (!generator.trained_start_tokens.empty() &&
      !generator.trained_start_tokens.count(kNoisySTagId))
    throw InvariantError(
        "generate_pseudo_sources: generator was not trained with target-side tags");
  if (!generator.src_vocab || !generator.tgt_vocab)
    throw Error("generate_pseudo_sources: ensemble is missing vocabularies");

  PseudoSourceResult result;
  result.corpus.source_lang = source_lang;
  result.corpus.target_lang = target_lang;
  result.corpus.pairs.reserve(mono.sentences.size());
  for (const auto& sentence : mono.sentences) {
    std::vector<int> src_ids = encode_source_ids(*generator.src_vocab, sentence);
    BeamHypothesis hyp = beam_search(generator, src_ids, kNoisySTagId, config);
    std::vector<std::string> generated;
    for (std::size_t i = 1; i < hyp.ids.size(); ++i) {  // skip the start tag
      int id = hyp.ids[i];
      if (id < kNumReserved) continue;  // drop </s>, <unk> and friends from text
      generated.push_back(generator.tgt_vocab->symbol(id));
    }
    if (generated.empty()) {
      ++result.dropped_empty;
      continue;
    }
    TaggedSentencePair pair;
    pair.source = std::move(generated);
    pair.target = sentence;
    pair.origin = PairOrigin::SyntheticBacktranslated;
    result.corpus.pairs.push_back(std::move(pair));
  }
  return result;
}

Corpus assemble_training_set(const Corpus& clean, const Corpus& noisy, const Corpus& synthetic,
                             MixingMode mode, std::uint64_t seed) {
  const auto check_direction = [&](const Corpus& c, const char* name) {
    if (c.source_lang != clean.source_lang || c.target_lang != clean.target_lang)
      throw InvariantError(std::string("assemble_training_set: ") + name + " direction mismatch");
  };
  check_direction(noisy, "noisy");
  check_direction(synthetic, "synthetic");

  Corpus tagged_clean = clean, tagged_noisy = noisy, tagged_synth = synthetic;
  if (mode == MixingMode::Sensitive) {
    for (auto& pair : tagged_clean.pairs)
      pair = tag_pair(pair, DomainTag{DomainKind::Clean, TagSide::SourceStart});
    for (auto& pair : tagged_noisy.pairs)
      pair = tag_pair(pair, DomainTag{DomainKind::Noisy, TagSide::SourceStart});
    for (auto& pair : tagged_synth.pairs)
      pair = tag_pair(pair, DomainTag{DomainKind::Noisy, TagSide::SourceStart});
  }
  std::vector<Corpus> parts;
  parts.push_back(std::move(tagged_clean));
  parts.push_back(std::move(tagged_noisy));
  parts.push_back(std::move(tagged_synth));
  return mix(std::move(parts), seed);
}

// ---------------------------------------------------------------------------
// Tag-steering experiment
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> random_sentence(Rng& rng, int vocab_words, int min_len, int max_len) {
  int len = min_len + static_cast<int>(uniform_index(
                          rng, static_cast<std::uint64_t>(max_len - min_len + 1)));
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i)
    out.push_back("w" + std::to_string(uniform_index(rng, static_cast<std::uint64_t>(vocab_words))));
  return out;
}

std::vector<std::string> transform_style(const std::vector<std::string>& words, char prefix) {
  std::vector<std::string> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(prefix + w.substr(1));
  return out;
}

bool all_have_prefix(const std::vector<std::string>& tokens, char prefix) {
  if (tokens.empty()) return false;
  for (const auto& t : tokens)
    if (t.empty() || t[0] != prefix) return false;
  return true;
}

}  // namespace

bool matches_clean_style(const std::vector<std::string>& tokens) {
  return all_have_prefix(tokens, 'c');
}

bool matches_noisy_style(const std::vector<std::string>& tokens, bool identical_domains) {
  return all_have_prefix(tokens, identical_domains ? 'c' : 'n');
}

StyleCorpus make_style_corpus(const SteeringConfig& config) {
  StyleCorpus sc;
  sc.clean_final.source_lang = sc.noisy_final.source_lang = "styled";
  sc.clean_final.target_lang = sc.noisy_final.target_lang = "plain";
  Rng rng(derive_seed(config.seed, "style-corpus"));
  for (int i = 0; i < config.train_sources; ++i) {
    auto shared = random_sentence(rng, config.vocab_words, config.min_len, config.max_len);
    TaggedSentencePair clean_pair;
    clean_pair.source = transform_style(shared, 'c');
    clean_pair.target = shared;
    clean_pair.origin = PairOrigin::CleanParallel;
    sc.clean_final.pairs.push_back(std::move(clean_pair));
    TaggedSentencePair noisy_pair;
    noisy_pair.source = transform_style(shared, config.identical_domains ? 'c' : 'n');
    noisy_pair.target = shared;
    noisy_pair.origin = PairOrigin::NoisyParallel;
    sc.noisy_final.pairs.push_back(std::move(noisy_pair));
  }
  Rng held_rng(derive_seed(config.seed, "held-out"));
  for (int i = 0; i < config.held_out; ++i)
    sc.held_out_sources.push_back(
        random_sentence(held_rng, config.vocab_words, config.min_len, config.max_len));
  return sc;
}

SteeringReport run_tag_steering_experiment(const SteeringConfig& config) {
  StyleCorpus sc = make_style_corpus(config);
  Corpus tagged_corpus =
      build_generator_corpus(sc.clean_final, sc.noisy_final, derive_seed(config.seed, "gen-mix"));
  // Tag-blind control: the same reversed mix without tags.
  Corpus blind_corpus;
  {
    std::vector<Corpus> parts;
    parts.push_back(reverse_direction(sc.clean_final));
    parts.push_back(reverse_direction(sc.noisy_final));
    blind_corpus = mix(std::move(parts), derive_seed(config.seed, "gen-mix"));
  }

  std::vector<std::vector<std::string>> src_sentences, tgt_sentences;
  for (const auto& pair : tagged_corpus.pairs) {
    src_sentences.push_back(pair.source);
    tgt_sentences.push_back(pair.target);
  }
  Vocabulary src_vocab = Vocabulary::build(src_sentences);
  Vocabulary tgt_vocab = Vocabulary::build(tgt_sentences);

  ModelConfig mc;
  mc.src_vocab_size = src_vocab.size();
  mc.tgt_vocab_size = tgt_vocab.size();
  mc.d_model = config.d_model;
  mc.layers = config.layers;
  mc.heads = config.heads;
  mc.ffn_dim = config.ffn_dim;
  mc.dropout = 0.0;
  mc.label_smoothing = 0.1;

  TrainOptions topts;
  topts.steps = config.steps;
  topts.batch_size = config.batch_size;
  topts.lr_factor = config.lr_factor;
  topts.warmup_steps = config.warmup_steps;

  mc.seed = derive_seed(config.seed, "tagged-model");
  topts.seed = derive_seed(config.seed, "tagged-train");
  Seq2SeqModel tagged_model = init_model<float>(mc);
  TrainState tagged_state = train(tagged_model, encode_corpus(tagged_corpus, src_vocab, tgt_vocab), topts);

  mc.seed = derive_seed(config.seed, "blind-model");
  topts.seed = derive_seed(config.seed, "blind-train");
  Seq2SeqModel blind_model = init_model<float>(mc);
  TrainState blind_state = train(blind_model, encode_corpus(blind_corpus, src_vocab, tgt_vocab), topts);

  EnsembleSpec tagged_spec;
  tagged_spec.members = {&tagged_model};
  tagged_spec.src_vocab = &src_vocab;
  tagged_spec.tgt_vocab = &tgt_vocab;
  tagged_spec.trained_start_tokens = tagged_state.observed_start_tokens;
  EnsembleSpec blind_spec;
  blind_spec.members = {&blind_model};
  blind_spec.src_vocab = &src_vocab;
  blind_spec.tgt_vocab = &tgt_vocab;
  blind_spec.trained_start_tokens = blind_state.observed_start_tokens;

  DecodeConfig dc;
  dc.beam_size = config.beam;
  dc.max_len = config.max_len + 3;

  SteeringReport report;
  report.held_out = config.held_out;
  report.mixing_ratio = 0.5;
  int tagged_clean = 0, tagged_noisy = 0, blind_clean = 0, blind_noisy = 0;
  for (const auto& sentence : sc.held_out_sources) {
    std::vector<int> src_ids = encode_source_ids(src_vocab, sentence);
    const auto emit_tokens = [&](const BeamHypothesis& hyp) {
      std::vector<std::string> tokens;
      for (std::size_t i = 1; i < hyp.ids.size(); ++i)
        if (hyp.ids[i] >= kNumReserved) tokens.push_back(tgt_vocab.symbol(hyp.ids[i]));
      return tokens;
    };
    auto clean_out = emit_tokens(beam_search(tagged_spec, src_ids, kCleanSTagId, dc));
    auto noisy_out = emit_tokens(beam_search(tagged_spec, src_ids, kNoisySTagId, dc));
    if (matches_clean_style(clean_out)) ++tagged_clean;
    if (matches_noisy_style(noisy_out, config.identical_domains)) ++tagged_noisy;
    auto blind_out = emit_tokens(beam_search(blind_spec, src_ids, kBosId, dc));
    if (matches_clean_style(blind_out)) ++blind_clean;
    if (matches_noisy_style(blind_out, config.identical_domains)) ++blind_noisy;
  }
  const double denom = static_cast<double>(std::max(1, config.held_out));
  report.tagged_clean_match = tagged_clean / denom;
  report.tagged_noisy_match = tagged_noisy / denom;
  report.blind_clean_match = blind_clean / denom;
  report.blind_noisy_match = blind_noisy / denom;
  return report;
}

std::string SteeringReport::to_text() const {
  std::ostringstream out;
  out.precision(4);
  out << "tag steering over " << held_out << " held-out sources (mixing ratio " << mixing_ratio
      << ")\n";
  out << "tagged generator   <clean_s> match " << tagged_clean_match << "   <noisy_s> match "
      << tagged_noisy_match << "\n";
  out << "tag-blind control  clean-style " << blind_clean_match << "   noisy-style "
      << blind_noisy_match << "\n";
  return out.str();
}

std::string SteeringReport::to_json() const {
  std::ostringstream out;
  out.precision(17);
  out << "{\"held_out\":" << held_out << ",\"mixing_ratio\":" << mixing_ratio
      << ",\"tagged_clean_match\":" << tagged_clean_match
      << ",\"tagged_noisy_match\":" << tagged_noisy_match
      << ",\"blind_clean_match\":" << blind_clean_match
      << ",\"blind_noisy_match\":" << blind_noisy_match << "}";
  return out.str();
}

}  // namespace rmt
