#include "robustmt/experiment.hpp"

#include <iostream>
#include <sstream>

#include "robustmt/util.hpp"

namespace rmt {

namespace {

Corpus tag_test_sources(const Corpus& testset, DomainKind kind) {
  Corpus tagged = testset;
  for (auto& pair : tagged.pairs) pair = tag_pair(pair, DomainTag{kind, TagSide::SourceStart});
  return tagged;
}

}  // namespace

ComparisonReport run_comparison_experiment(const ComparisonConfig& config) {
  if (config.testset.pairs.empty()) throw Error("comparison experiment: empty testset");

  // Shared vocabularies over the training-side material. The generator works
  // in the reversed direction, so it reuses the same two vocabularies with
  // the roles swapped.
  std::vector<std::vector<std::string>> src_side, tgt_side;
  for (const auto& c : {config.clean, config.noisy})
    for (const auto& pair : c.pairs) {
      src_side.push_back(pair.source);
      tgt_side.push_back(pair.target);
    }
  for (const auto& sentence : config.mono.sentences) tgt_side.push_back(sentence);
  Vocabulary src_vocab = Vocabulary::build(src_side);
  Vocabulary tgt_vocab = Vocabulary::build(tgt_side);

  ModelConfig mc;
  mc.d_model = config.d_model;
  mc.layers = config.layers;
  mc.heads = config.heads;
  mc.ffn_dim = config.ffn_dim;
  mc.dropout = config.dropout;
  mc.label_smoothing = 0.1;

  const auto train_system = [&](const Corpus& corpus, const Vocabulary& sv, const Vocabulary& tv,
                                std::uint64_t model_seed, std::uint64_t train_seed) {
    ModelConfig sys_config = mc;
    sys_config.src_vocab_size = sv.size();
    sys_config.tgt_vocab_size = tv.size();
    sys_config.seed = model_seed;
    Seq2SeqModel model = init_model<float>(sys_config);
    TrainOptions topts;
    topts.steps = config.steps;
    topts.batch_size = config.batch_size;
    topts.lr_factor = config.lr_factor;
    topts.warmup_steps = config.warmup_steps;
    topts.seed = train_seed;
    topts.log_every = config.log_every;
    train(model, encode_corpus(corpus, sv, tv), topts);
    return model;
  };

  DecodeConfig dc;
  dc.beam_size = config.beam;
  dc.length_reward = config.length_reward;
  dc.max_len = config.max_len;

  ComparisonReport report;
  Corpus empty_synth;
  empty_synth.source_lang = config.clean.source_lang;
  empty_synth.target_lang = config.clean.target_lang;

  // 1. Domain-insensitive mixing.
  {
    Corpus data = assemble_training_set(config.clean, config.noisy, empty_synth,
                                        MixingMode::Insensitive, derive_seed(config.seed, "mix-i"));
    Seq2SeqModel model = train_system(data, src_vocab, tgt_vocab, derive_seed(config.seed, "m1"),
                                      derive_seed(config.seed, "t1"));
    EnsembleSpec spec;
    spec.members = {&model};
    spec.src_vocab = &src_vocab;
    spec.tgt_vocab = &tgt_vocab;
    EvalResult r = evaluate_system(spec, config.testset, dc);
    report.rows.push_back({"insensitive mix", r.cased.score, r.lowercased.score});
    std::cerr << "experiment: insensitive mix done, BLEU " << r.cased.score << "\n";
  }

  Corpus sensitive_test = tag_test_sources(config.testset, DomainKind::Noisy);

  // 2. Domain-sensitive mixing.
  {
    Corpus data = assemble_training_set(config.clean, config.noisy, empty_synth,
                                        MixingMode::Sensitive, derive_seed(config.seed, "mix-s"));
    Seq2SeqModel model = train_system(data, src_vocab, tgt_vocab, derive_seed(config.seed, "m2"),
                                      derive_seed(config.seed, "t2"));
    EnsembleSpec spec;
    spec.members = {&model};
    spec.src_vocab = &src_vocab;
    spec.tgt_vocab = &tgt_vocab;
    EvalResult r = evaluate_system(spec, sensitive_test, dc);
    report.rows.push_back({"sensitive mix", r.cased.score, r.lowercased.score});
    std::cerr << "experiment: sensitive mix done, BLEU " << r.cased.score << "\n";
  }

  // 3. Sensitive mixing plus noisy back-translation.
  Corpus augmented;
  {
    Corpus gen_corpus =
        build_generator_corpus(config.clean, config.noisy, derive_seed(config.seed, "gen-mix"));
    Seq2SeqModel generator = train_system(gen_corpus, tgt_vocab, src_vocab,
                                          derive_seed(config.seed, "mg"),
                                          derive_seed(config.seed, "tg"));
    EnsembleSpec gen_spec;
    gen_spec.members = {&generator};
    gen_spec.src_vocab = &tgt_vocab;
    gen_spec.tgt_vocab = &src_vocab;
    gen_spec.trained_start_tokens = {kCleanSTagId, kNoisySTagId};
    DecodeConfig gen_dc = dc;
    PseudoSourceResult pseudo = generate_pseudo_sources(gen_spec, config.mono, gen_dc,
                                                        config.clean.source_lang,
                                                        config.clean.target_lang);
    std::cerr << "experiment: generated " << pseudo.corpus.size() << " pseudo pairs ("
              << pseudo.dropped_empty << " dropped)\n";
    augmented = assemble_training_set(config.clean, config.noisy, pseudo.corpus,
                                      MixingMode::Sensitive, derive_seed(config.seed, "mix-bt"));
    Seq2SeqModel model = train_system(augmented, src_vocab, tgt_vocab,
                                      derive_seed(config.seed, "m3"),
                                      derive_seed(config.seed, "t3"));
    EnsembleSpec spec;
    spec.members = {&model};
    spec.src_vocab = &src_vocab;
    spec.tgt_vocab = &tgt_vocab;
    EvalResult r = evaluate_system(spec, sensitive_test, dc);
    report.rows.push_back({"+ noisy back-translation", r.cased.score, r.lowercased.score});
    std::cerr << "experiment: back-translation row done, BLEU " << r.cased.score << "\n";
  }

  // 4. Plus ensemble decoding over differently seeded members.
  {
    std::vector<Seq2SeqModel> members;
    members.reserve(static_cast<std::size_t>(config.ensemble_size));
    for (int i = 0; i < config.ensemble_size; ++i)
      members.push_back(train_system(augmented, src_vocab, tgt_vocab,
                                     derive_seed(config.seed, "me" + std::to_string(i)),
                                     derive_seed(config.seed, "te" + std::to_string(i))));
    EnsembleSpec spec;
    for (const auto& m : members) spec.members.push_back(&m);
    spec.src_vocab = &src_vocab;
    spec.tgt_vocab = &tgt_vocab;
    EvalResult r = evaluate_system(spec, sensitive_test, dc);
    report.rows.push_back({"+ ensemble", r.cased.score, r.lowercased.score});
    std::cerr << "experiment: ensemble row done, BLEU " << r.cased.score << "\n";
  }

  return report;
}

std::string ComparisonReport::to_text() const {
  std::ostringstream out;
  out.precision(2);
  out << std::fixed;
  out << "method                      BLEU    BLEU-lc\n";
  for (const auto& row : rows) {
    std::string name = row.method;
    name.resize(26, ' ');
    out << name << "  " << row.bleu << "   " << row.bleu_lowercased << "\n";
  }
  return out.str();
}

std::string ComparisonReport::to_json() const {
  std::ostringstream out;
  out.precision(17);
  out << "[";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) out << ",";
    out << "{\"method\":\"" << rows[i].method << "\",\"bleu\":" << rows[i].bleu
        << ",\"bleu_lowercased\":" << rows[i].bleu_lowercased << "}";
  }
  out << "]";
  return out.str();
}

}  // namespace rmt
