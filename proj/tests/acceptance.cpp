// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with its measured values. Run them all with `ctest` or directly via
// `./acceptance`.

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "oracles.hpp"
#include "robustmt/backtrans.hpp"
#include "robustmt/corpus.hpp"
#include "robustmt/decode.hpp"
#include "robustmt/eval.hpp"
#include "robustmt/model.hpp"
#include "robustmt/subword.hpp"
#include "robustmt/util.hpp"

using namespace rmt;

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void report(int criterion, const char* name, bool pass, const std::string& details) {
  std::printf("%s criterion %d: %s%s%s\n", pass ? "[PASS]" : "[FAIL]", criterion, name,
              details.empty() ? "" : " | ", details.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6g", v);
  return buffer;
}

TokenDistribution random_simplex(Rng& rng, std::size_t v) {
  TokenDistribution d;
  d.probs.resize(v);
  double sum = 0;
  for (auto& p : d.probs) {
    p = -std::log(std::max(uniform_real(rng), 1e-12));
    sum += p;
  }
  for (auto& p : d.probs) p /= sum;
  return d;
}

std::vector<int> random_source_ids(Rng& rng, int vocab, int min_len, int max_len) {
  std::vector<int> src = {kBosId};
  int len = min_len + static_cast<int>(uniform_index(rng, max_len - min_len + 1));
  for (int i = 0; i < len; ++i)
    src.push_back(kNumReserved + static_cast<int>(uniform_index(rng, vocab - kNumReserved)));
  src.push_back(kEosId);
  return src;
}

// Writes `count` single-token lines without materializing them in memory.
void write_numbered_lines(const std::string& path, std::size_t count, const std::string& prefix) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  for (std::size_t i = 0; i < count; ++i) out << prefix << i << '\n';
  REQUIRE(out.good());
}

ModelConfig desk_config(int src_vocab, int tgt_vocab, int d_model, int layers, int heads, int ffn,
                        std::uint64_t seed) {
  ModelConfig mc;
  mc.src_vocab_size = src_vocab;
  mc.tgt_vocab_size = tgt_vocab;
  mc.d_model = d_model;
  mc.layers = layers;
  mc.heads = heads;
  mc.ffn_dim = ffn;
  mc.dropout = 0.0;
  mc.label_smoothing = 0.0;
  mc.seed = seed;
  return mc;
}

}  // namespace

TEST_CASE("criterion 1: ensemble averaging exactness and argmax invariance") {
  Stopwatch timer;
  // Part A: ensemble_step equals the componentwise mean within 1e-12.
  Rng rng(20250101);
  double worst = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::size_t v = 2 + uniform_index(rng, 999);
    std::size_t n = 1 + uniform_index(rng, 8);
    std::vector<TokenDistribution> dists;
    for (std::size_t i = 0; i < n; ++i) dists.push_back(random_simplex(rng, v));
    auto avg = ensemble_step(dists);
    for (std::size_t k = 0; k < v; ++k) {
      long double expect = 0.0L;
      for (const auto& d : dists) expect += d.probs[k];
      expect /= static_cast<long double>(n);
      worst = std::max(worst, std::abs(avg.probs[k] - static_cast<double>(expect)));
    }
  }
  bool mean_ok = worst < 1e-12;

  // Part B: N identical checkpoints decode token-identically on 100 sources.
  auto dir = oracles::scratch_dir("acceptance_1");
  ModelConfig mc = desk_config(40, 44, 32, 2, 4, 64, 7);
  auto model = init_model<float>(mc);
  Vocabulary src_vocab, tgt_vocab;
  for (int i = 0; i < mc.src_vocab_size - kNumReserved; ++i) src_vocab.add("s" + std::to_string(i));
  for (int i = 0; i < mc.tgt_vocab_size - kNumReserved; ++i) tgt_vocab.add("t" + std::to_string(i));
  save_checkpoint(model, src_vocab, tgt_vocab, {}, dir + "/m.ckpt");
  std::vector<Checkpoint> one_ckpt, four_ckpts;
  one_ckpt.push_back(load_checkpoint(dir + "/m.ckpt"));
  for (int i = 0; i < 4; ++i) four_ckpts.push_back(load_checkpoint(dir + "/m.ckpt"));
  EnsembleSpec one = make_ensemble(one_ckpt);
  EnsembleSpec four = make_ensemble(four_ckpts);
  DecodeConfig dc;
  dc.beam_size = 4;
  dc.max_len = 12;
  int mismatches = 0;
  Rng source_rng(99);
  for (int s = 0; s < 100; ++s) {
    auto src = random_source_ids(source_rng, mc.src_vocab_size, 3, 8);
    if (beam_search(one, src, kBosId, dc).ids != beam_search(four, src, kBosId, dc).ids)
      ++mismatches;
  }
  bool decode_ok = mismatches == 0;

  bool pass = mean_ok && decode_ok && timer.seconds() < 60.0;
  report(1, "Eq. 1 exactness (mean within 1e-12, identical-ensemble decode)", pass,
         "worst mean deviation " + fmt(worst) + ", decode mismatches " +
             std::to_string(mismatches) + ", " + fmt(timer.seconds()) + "s");
  CHECK(mean_ok);
  CHECK(decode_ok);
  CHECK(timer.seconds() < 60.0);
}

TEST_CASE("criterion 2: gradient fidelity against central finite differences") {
  Stopwatch timer;
  ModelConfig mc = desk_config(30, 34, 32, 2, 4, 64, 11);
  mc.label_smoothing = 0.1;
  auto model = init_model<double>(mc);
  Rng rng(2200);
  std::vector<TrainingExample> batch;
  for (int i = 0; i < 4; ++i) {
    TrainingExample ex;
    ex.src = random_source_ids(rng, mc.src_vocab_size, 3, 7);
    auto tgt = random_source_ids(rng, mc.tgt_vocab_size, 3, 7);
    ex.dec_in.assign(tgt.begin(), tgt.end() - 1);  // [<s>] tokens
    ex.labels.assign(tgt.begin() + 1, tgt.end());  // tokens [</s>]
    batch.push_back(std::move(ex));
  }
  auto result = gradient_check(model, batch, 1e-5, 256, 4242);
  bool pass = result.max_rel_error < 1e-4 && result.coords_checked >= 200 &&
              timer.seconds() < 120.0;
  report(2, "gradient fidelity (double precision, 2-layer d32)", pass,
         "max relative error " + fmt(result.max_rel_error) + " over " +
             std::to_string(result.coords_checked) + " coordinates, " + fmt(timer.seconds()) +
             "s");
  CHECK(result.coords_checked >= 200);
  CHECK(result.max_rel_error < 1e-4);
  CHECK(timer.seconds() < 120.0);
}

TEST_CASE("criterion 3: overfit sanity on a 64-pair toy corpus") {
  Stopwatch timer;
  // 64 random word-level pairs.
  Corpus corpus;
  Rng gen(31337);
  for (int i = 0; i < 64; ++i) {
    TaggedSentencePair pair;
    int src_len = 3 + static_cast<int>(uniform_index(gen, 6));
    int tgt_len = 3 + static_cast<int>(uniform_index(gen, 6));
    for (int k = 0; k < src_len; ++k)
      pair.source.push_back("s" + std::to_string(uniform_index(gen, 30)));
    for (int k = 0; k < tgt_len; ++k)
      pair.target.push_back("t" + std::to_string(uniform_index(gen, 30)));
    corpus.pairs.push_back(std::move(pair));
  }
  std::vector<std::vector<std::string>> src_side, tgt_side;
  for (const auto& p : corpus.pairs) {
    src_side.push_back(p.source);
    tgt_side.push_back(p.target);
  }
  Vocabulary src_vocab = Vocabulary::build(src_side);
  Vocabulary tgt_vocab = Vocabulary::build(tgt_side);

  ModelConfig mc = desk_config(src_vocab.size(), tgt_vocab.size(), 64, 2, 4, 256, 404);
  auto model = init_model<float>(mc);
  TrainOptions topts;
  topts.steps = 2000;
  topts.batch_size = 16;
  topts.lr_factor = 2.0;
  topts.warmup_steps = 400;
  topts.seed = 808;
  topts.label_smoothing = 0.0;
  topts.stop_at_loss = 0.05;
  topts.eval_every = 50;
  auto state = train(model, encode_corpus(corpus, src_vocab, tgt_vocab), topts);
  double final_loss = evaluate_loss(model, encode_corpus(corpus, src_vocab, tgt_vocab), 0.0);

  EnsembleSpec spec;
  spec.members = {&model};
  spec.src_vocab = &src_vocab;
  spec.tgt_vocab = &tgt_vocab;
  DecodeConfig dc;
  dc.beam_size = 4;
  dc.max_len = 16;
  EvalResult eval = evaluate_system(spec, corpus, dc);

  bool pass = state.step <= 2000 && final_loss < 0.1 && eval.cased.score >= 99.0 &&
              timer.seconds() < 600.0;
  report(3, "overfit sanity (loss < 0.1, self-test BLEU >= 99 within 2000 steps)", pass,
         "steps " + std::to_string(state.step) + ", loss " + fmt(final_loss) + ", BLEU " +
             fmt(eval.cased.score) + ", " + fmt(timer.seconds()) + "s");
  CHECK(state.step <= 2000);
  CHECK(final_loss < 0.1);
  CHECK(eval.cased.score >= 99.0);
  CHECK(timer.seconds() < 600.0);
}

TEST_CASE("criterion 4: tag steering, sensitive generator vs tag-blind control") {
  Stopwatch timer;
  SteeringConfig cfg;
  cfg.vocab_words = 40;
  cfg.train_sources = 600;
  cfg.held_out = 200;
  cfg.min_len = 3;
  cfg.max_len = 6;
  cfg.seed = 1907;
  cfg.d_model = 64;
  cfg.layers = 2;
  cfg.heads = 4;
  cfg.ffn_dim = 128;
  cfg.steps = 1200;
  cfg.batch_size = 16;
  cfg.lr_factor = 2.0;
  cfg.warmup_steps = 200;
  cfg.beam = 4;
  auto rep = run_tag_steering_experiment(cfg);

  bool tagged_ok = rep.tagged_clean_match >= 0.95 && rep.tagged_noisy_match >= 0.95;
  bool blind_ok = rep.blind_clean_match >= 0.35 && rep.blind_clean_match <= 0.65 &&
                  rep.blind_noisy_match >= 0.35 && rep.blind_noisy_match <= 0.65;
  bool pass = tagged_ok && blind_ok && timer.seconds() < 900.0;
  report(4, "tag steering (tagged >= 95% per tag, blind within 50% +/- 15)", pass,
         "tagged clean/noisy " + fmt(rep.tagged_clean_match) + "/" + fmt(rep.tagged_noisy_match) +
             ", blind " + fmt(rep.blind_clean_match) + "/" + fmt(rep.blind_noisy_match) + ", " +
             fmt(timer.seconds()) + "s");
  CHECK(rep.tagged_clean_match >= 0.95);
  CHECK(rep.tagged_noisy_match >= 0.95);
  CHECK(rep.blind_clean_match >= 0.35);
  CHECK(rep.blind_clean_match <= 0.65);
  CHECK(rep.blind_noisy_match >= 0.35);
  CHECK(rep.blind_noisy_match <= 0.65);
  CHECK(timer.seconds() < 900.0);
}

TEST_CASE("criterion 5: back-translation pipeline integrity and determinism") {
  Stopwatch timer;
  const auto run_pipeline = [&](const std::string& out_dir) {
    SteeringConfig cfg;
    cfg.vocab_words = 12;
    cfg.train_sources = 40;
    cfg.held_out = 0;
    cfg.min_len = 2;
    cfg.max_len = 4;
    cfg.seed = 555;
    StyleCorpus sc = make_style_corpus(cfg);

    MonoCorpus mono;
    mono.language = "plain";
    Rng rng(derive_seed(cfg.seed, "mono"));
    for (int i = 0; i < 25; ++i) {
      std::vector<std::string> s;
      int len = 2 + static_cast<int>(uniform_index(rng, 3));
      for (int k = 0; k < len; ++k)
        s.push_back("w" + std::to_string(uniform_index(rng, cfg.vocab_words)));
      mono.sentences.push_back(std::move(s));
    }

    Corpus gen_corpus =
        build_generator_corpus(sc.clean_final, sc.noisy_final, derive_seed(cfg.seed, "gen-mix"));
    std::vector<std::vector<std::string>> gsrc, gtgt;
    for (const auto& p : gen_corpus.pairs) {
      gsrc.push_back(p.source);
      gtgt.push_back(p.target);
    }
    for (const auto& s : mono.sentences) gsrc.push_back(s);
    Vocabulary gen_src_vocab = Vocabulary::build(gsrc);
    Vocabulary gen_tgt_vocab = Vocabulary::build(gtgt);
    ModelConfig mc = desk_config(gen_src_vocab.size(), gen_tgt_vocab.size(), 32, 1, 2, 64, 21);
    mc.label_smoothing = 0.1;
    Seq2SeqModel generator = init_model<float>(mc);
    TrainOptions topts;
    topts.steps = 150;
    topts.batch_size = 8;
    topts.lr_factor = 2.0;
    topts.warmup_steps = 50;
    topts.seed = derive_seed(cfg.seed, "train");
    auto state = train(generator, encode_corpus(gen_corpus, gen_src_vocab, gen_tgt_vocab), topts);

    EnsembleSpec spec;
    spec.members = {&generator};
    spec.src_vocab = &gen_src_vocab;
    spec.tgt_vocab = &gen_tgt_vocab;
    spec.trained_start_tokens = state.observed_start_tokens;
    DecodeConfig dc;
    dc.beam_size = 2;
    dc.max_len = 8;
    PseudoSourceResult pseudo =
        generate_pseudo_sources(spec, mono, dc, sc.clean_final.source_lang,
                                sc.clean_final.target_lang);

    Corpus augmented = assemble_training_set(sc.clean_final, sc.noisy_final, pseudo.corpus,
                                             MixingMode::Sensitive, derive_seed(cfg.seed, "mix"));
    write_parallel(augmented, out_dir + "/aug.src", out_dir + "/aug.tgt");
    write_origins(augmented, out_dir + "/aug.orig");

    struct Outcome {
      std::size_t clean, noisy, synth_kept, dropped, mono_count, augmented;
    };
    return Outcome{sc.clean_final.size(), sc.noisy_final.size(),  pseudo.corpus.size(),
                   pseudo.dropped_empty,  mono.size(),            augmented.size()};
  };

  auto dir1 = oracles::scratch_dir("acceptance_5a");
  auto dir2 = oracles::scratch_dir("acceptance_5b");
  auto first = run_pipeline(dir1);
  auto second = run_pipeline(dir2);

  bool accounting = first.augmented == first.clean + first.noisy + first.synth_kept &&
                    first.synth_kept + first.dropped == first.mono_count;
  const auto file_bytes = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  bool deterministic = file_bytes(dir1 + "/aug.src") == file_bytes(dir2 + "/aug.src") &&
                       file_bytes(dir1 + "/aug.tgt") == file_bytes(dir2 + "/aug.tgt") &&
                       file_bytes(dir1 + "/aug.orig") == file_bytes(dir2 + "/aug.orig") &&
                       !file_bytes(dir1 + "/aug.src").empty();
  bool pass = accounting && deterministic;
  report(5, "back-translation pipeline integrity (accounting + byte-identical rerun)", pass,
         "augmented " + std::to_string(first.augmented) + " = " + std::to_string(first.clean) +
             "+" + std::to_string(first.noisy) + "+" + std::to_string(first.synth_kept) +
             ", dropped " + std::to_string(first.dropped) + ", deterministic " +
             (deterministic ? "yes" : "no") + ", " + fmt(timer.seconds()) + "s");
  CHECK(accounting);
  CHECK(deterministic);
  CHECK(first.augmented == second.augmented);
}

TEST_CASE("criterion 6: BLEU equals the brute-force clipped-count oracle") {
  Stopwatch timer;
  const std::vector<std::string> words = {"the", "cat", "sat",  "on",  "a",    "mat.",
                                          "dog", "ran", "far,", "and", "fast", "away!"};
  Rng rng(6006);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> refs, hyps;
    std::size_t sentences = 3 + uniform_index(rng, 8);
    for (std::size_t s = 0; s < sentences; ++s) {
      std::vector<std::string> ref_tokens, hyp_tokens;
      std::size_t len = 1 + uniform_index(rng, 14);
      for (std::size_t i = 0; i < len; ++i) {
        std::string w = words[uniform_index(rng, words.size())];
        ref_tokens.push_back(w);
        hyp_tokens.push_back(uniform_real(rng) < 0.2 ? words[uniform_index(rng, words.size())]
                                                     : w);
      }
      refs.push_back(join(ref_tokens));
      hyps.push_back(join(hyp_tokens));
    }
    auto oracle = oracles::bleu_oracle(hyps, refs);
    auto report_impl = corpus_bleu(hyps, refs);
    worst = std::max(worst, std::abs(oracle.score - report_impl.score));
  }
  bool oracle_ok = worst < 1e-9;

  std::vector<std::string> identical = {"the cat sat on the mat.", "a dog ran far, fast away!"};
  bool identity_ok = corpus_bleu(identical, identical).score == 100.0;
  bool zero_ok = corpus_bleu({"p q r s"}, {"w x y z"}).score == 0.0 &&
                 corpus_bleu({"the cat x dog"}, {"the cat sat on a mat"}).score == 0.0;

  bool pass = oracle_ok && identity_ok && zero_ok;
  report(6, "BLEU oracle equivalence (20 corpora, 1e-9; identity 100; zero 4-gram 0)", pass,
         "worst |impl - oracle| " + fmt(worst) + ", " + fmt(timer.seconds()) + "s");
  CHECK(oracle_ok);
  CHECK(identity_ok);
  CHECK(zero_ok);
}

TEST_CASE("criterion 7: BPE laws (round trip, prefix monotonicity, oracle fixture)") {
  Stopwatch timer;
  // Fixture: the classic learning vocabulary against the recount oracle.
  std::vector<std::vector<std::string>> classic;
  for (int i = 0; i < 5; ++i) classic.push_back({"low"});
  for (int i = 0; i < 2; ++i) classic.push_back({"lower"});
  for (int i = 0; i < 6; ++i) classic.push_back({"newest"});
  for (int i = 0; i < 3; ++i) classic.push_back({"widest"});
  auto fixture_model = learn_bpe(classic, 4);
  auto fixture_oracle = oracles::bpe_merge_oracle(classic, 4);
  bool fixture_ok = fixture_model.merges.size() == fixture_oracle.size();
  if (fixture_ok)
    for (std::size_t i = 0; i < fixture_oracle.size(); ++i)
      if (fixture_model.merges[i] != fixture_oracle[i]) fixture_ok = false;

  // Round trip on 1000 property-generated sentences over a training corpus.
  Rng rng(7007);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d", "e", "f", "g", "h"};
  std::vector<std::vector<std::string>> training;
  for (int s = 0; s < 120; ++s) {
    std::vector<std::string> sentence;
    std::size_t len = 1 + uniform_index(rng, 6);
    for (std::size_t w = 0; w < len; ++w) {
      std::string word;
      std::size_t wl = 1 + uniform_index(rng, 7);
      for (std::size_t i = 0; i < wl; ++i) word += alphabet[uniform_index(rng, alphabet.size())];
      sentence.push_back(word);
    }
    training.push_back(sentence);
  }
  auto model = learn_bpe(training, 64);
  std::size_t round_trip_failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> sentence;
    std::size_t len = 1 + uniform_index(rng, 7);
    for (std::size_t w = 0; w < len; ++w) {
      std::string word;
      std::size_t wl = 1 + uniform_index(rng, 9);
      for (std::size_t i = 0; i < wl; ++i) word += alphabet[uniform_index(rng, alphabet.size())];
      sentence.push_back(word);
    }
    if (decode_bpe(apply_bpe(model, sentence)) != join(sentence)) ++round_trip_failures;
  }
  bool round_trip_ok = round_trip_failures == 0;

  // Prefix monotonicity for k vs k+1 merges.
  bool prefix_ok = true;
  for (std::size_t k = 0; k < 24 && prefix_ok; ++k) {
    auto small = learn_bpe(training, k);
    auto big = learn_bpe(training, k + 1);
    if (big.merges.size() < small.merges.size()) prefix_ok = false;
    for (std::size_t i = 0; i < small.merges.size() && prefix_ok; ++i)
      if (big.merges[i] != small.merges[i]) prefix_ok = false;
  }

  bool pass = fixture_ok && round_trip_ok && prefix_ok;
  report(7, "BPE laws (decode o apply identity x1000, prefix monotonicity, merge oracle)", pass,
         std::string("fixture ") + (fixture_ok ? "ok" : "MISMATCH") + ", round-trip failures " +
             std::to_string(round_trip_failures) + ", prefix " + (prefix_ok ? "ok" : "BROKEN") +
             ", " + fmt(timer.seconds()) + "s");
  CHECK(fixture_ok);
  CHECK(round_trip_ok);
  CHECK(prefix_ok);
}

TEST_CASE("criterion 8: length-reward isotonicity and beam-1/greedy equivalence") {
  Stopwatch timer;
  // Isotonicity on fixed 10-hypothesis n-best lists over the design sweep.
  Rng rng(8080);
  bool isotonic = true;
  for (int list = 0; list < 40 && isotonic; ++list) {
    std::vector<NBestEntry> pool;
    for (int h = 0; h < 10; ++h) {
      NBestEntry e;
      e.length = 1 + uniform_index(rng, 20);
      e.logp = -uniform_real(rng) * 25.0;
      e.ids.assign(e.length, h);
      pool.push_back(std::move(e));
    }
    std::size_t previous = 0;
    bool first = true;
    for (double reward = -0.4; reward <= 0.8 + 1e-9; reward += 0.2) {
      std::size_t selected = rescore(pool, reward).length;
      if (!first && selected < previous) isotonic = false;
      previous = selected;
      first = false;
    }
  }

  // beam_size = 1 equals greedy on 100 random sources.
  ModelConfig mc = desk_config(36, 40, 32, 2, 4, 64, 88);
  auto model = init_model<float>(mc);
  EnsembleSpec spec;
  spec.members = {&model};
  DecodeConfig dc;
  dc.beam_size = 1;
  dc.max_len = 12;
  Rng source_rng(881);
  int mismatches = 0;
  for (int s = 0; s < 100; ++s) {
    auto src = random_source_ids(source_rng, mc.src_vocab_size, 2, 9);
    if (beam_search(spec, src, kBosId, dc).ids != greedy_decode(spec, src, kBosId, 12).ids)
      ++mismatches;
  }
  bool greedy_ok = mismatches == 0;

  bool pass = isotonic && greedy_ok;
  report(8, "length-reward isotonicity and beam-1 == greedy on 100 sources", pass,
         std::string("isotonic ") + (isotonic ? "yes" : "NO") + ", greedy mismatches " +
             std::to_string(mismatches) + ", " + fmt(timer.seconds()) + "s");
  CHECK(isotonic);
  CHECK(greedy_ok);
}

TEST_CASE("criterion 9: dataset accounting at the published row counts") {
  Stopwatch timer;
  auto dir = oracles::scratch_dir("acceptance_9");

  // En2Fr stand-ins: clean training 2,207,962; noisy 36,058 / 852 / 1,020.
  const std::size_t kCleanTrain = 2207962;
  const std::size_t kNoisyTrainEn2Fr = 36058, kNoisyValidEn2Fr = 852, kNoisyTestEn2Fr = 1020;
  // Fr2En stand-ins: monolingual 2,244,020; noisy 19,161 / 886 / 1,022.
  const std::size_t kMonoFr2En = 2244020;
  const std::size_t kNoisyTrainFr2En = 19161, kNoisyValidFr2En = 886, kNoisyTestFr2En = 1022;

  bool counts_ok = true;
  std::size_t mixed_total = 0;
  {
    write_numbered_lines(dir + "/clean.en", kCleanTrain, "e");
    write_numbered_lines(dir + "/clean.fr", kCleanTrain, "f");
    write_numbered_lines(dir + "/noisy_train.en", kNoisyTrainEn2Fr, "ne");
    write_numbered_lines(dir + "/noisy_train.fr", kNoisyTrainEn2Fr, "nf");
    write_numbered_lines(dir + "/noisy_valid.en", kNoisyValidEn2Fr, "ve");
    write_numbered_lines(dir + "/noisy_valid.fr", kNoisyValidEn2Fr, "vf");
    write_numbered_lines(dir + "/noisy_test.en", kNoisyTestEn2Fr, "te");
    write_numbered_lines(dir + "/noisy_test.fr", kNoisyTestEn2Fr, "tf");

    Corpus clean = load_parallel(dir + "/clean.en", dir + "/clean.fr", PairOrigin::CleanParallel,
                                 "en", "fr")
                       .corpus;
    counts_ok &= corpus_stats(clean, "clean-train").total() == kCleanTrain;
    Corpus noisy_train = load_parallel(dir + "/noisy_train.en", dir + "/noisy_train.fr",
                                       PairOrigin::NoisyParallel, "en", "fr")
                             .corpus;
    counts_ok &=
        corpus_stats(noisy_train, "noisy-train").counts[PairOrigin::NoisyParallel] ==
        kNoisyTrainEn2Fr;
    {
      Corpus noisy_valid = load_parallel(dir + "/noisy_valid.en", dir + "/noisy_valid.fr",
                                         PairOrigin::NoisyParallel, "en", "fr")
                               .corpus;
      counts_ok &= corpus_stats(noisy_valid, "noisy-valid").total() == kNoisyValidEn2Fr;
      Corpus noisy_test = load_parallel(dir + "/noisy_test.en", dir + "/noisy_test.fr",
                                        PairOrigin::NoisyParallel, "en", "fr")
                              .corpus;
      counts_ok &= corpus_stats(noisy_test, "noisy-test").total() == kNoisyTestEn2Fr;
    }

    // Mixing the En2Fr training rows reproduces the summed row count.
    std::vector<Corpus> parts;
    parts.push_back(std::move(clean));
    parts.push_back(std::move(noisy_train));
    Corpus mixed = mix(std::move(parts), 42);
    auto stats = corpus_stats(mixed, "en2fr-train");
    mixed_total = stats.total();
    counts_ok &= mixed_total == kCleanTrain + kNoisyTrainEn2Fr;
    counts_ok &= stats.counts[PairOrigin::CleanParallel] == kCleanTrain;
    counts_ok &= stats.counts[PairOrigin::NoisyParallel] == kNoisyTrainEn2Fr;
  }

  bool fr2en_ok = true;
  {
    write_numbered_lines(dir + "/mono.en", kMonoFr2En, "m");
    MonoCorpus mono = load_monolingual(dir + "/mono.en", "en");
    fr2en_ok &= mono.size() == kMonoFr2En;
  }
  {
    write_numbered_lines(dir + "/fr2en_train.fr", kNoisyTrainFr2En, "a");
    write_numbered_lines(dir + "/fr2en_train.en", kNoisyTrainFr2En, "b");
    write_numbered_lines(dir + "/fr2en_valid.fr", kNoisyValidFr2En, "c");
    write_numbered_lines(dir + "/fr2en_valid.en", kNoisyValidFr2En, "d");
    write_numbered_lines(dir + "/fr2en_test.fr", kNoisyTestFr2En, "e");
    write_numbered_lines(dir + "/fr2en_test.en", kNoisyTestFr2En, "f");
    fr2en_ok &= load_parallel(dir + "/fr2en_train.fr", dir + "/fr2en_train.en",
                              PairOrigin::NoisyParallel, "fr", "en")
                    .corpus.size() == kNoisyTrainFr2En;
    fr2en_ok &= load_parallel(dir + "/fr2en_valid.fr", dir + "/fr2en_valid.en",
                              PairOrigin::NoisyParallel, "fr", "en")
                    .corpus.size() == kNoisyValidFr2En;
    fr2en_ok &= load_parallel(dir + "/fr2en_test.fr", dir + "/fr2en_test.en",
                              PairOrigin::NoisyParallel, "fr", "en")
                    .corpus.size() == kNoisyTestFr2En;
  }
  std::filesystem::remove_all(dir);

  bool pass = counts_ok && fr2en_ok;
  report(9, "dataset accounting (2,207,962/36,058/852/1,020 and 2,244,020/19,161/886/1,022)",
         pass,
         "en2fr mixed total " + std::to_string(mixed_total) + ", " + fmt(timer.seconds()) + "s");
  CHECK(counts_ok);
  CHECK(fr2en_ok);
}
