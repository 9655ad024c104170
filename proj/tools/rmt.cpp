// rmt — batch command-line entry points for the noisy-text translation
// toolkit: BPE, corpus tagging/mixing, training, back-translation, decoding,
// scoring, and the bundled experiments. Logs go to stderr; data goes to
// files (scores print to stdout).

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>

#include "robustmt/backtrans.hpp"
#include "robustmt/corpus.hpp"
#include "robustmt/decode.hpp"
#include "robustmt/errors.hpp"
#include "robustmt/eval.hpp"
#include "robustmt/experiment.hpp"
#include "robustmt/model.hpp"
#include "robustmt/subword.hpp"
#include "robustmt/text.hpp"
#include "robustmt/util.hpp"

namespace fs = std::filesystem;
using namespace rmt;

namespace {

void require_file(const std::string& path, const std::string& key) {
  if (!fs::exists(path))
    throw ConfigError("config key `" + key + "`: path does not exist: " + path);
}

// Expands `--config file` into subcommand flags: every config key doubles a
// long flag (underscores may stand in for dashes). Explicit command-line
// flags win over config values; unknown keys are rejected by name.
std::vector<std::string> expand_config_args(CLI::App& app, std::vector<std::string> args) {
  if (args.empty() || args.front().rfind("-", 0) == 0) return args;
  auto config_it = std::find(args.begin(), args.end(), "--config");
  if (config_it == args.end()) return args;
  if (config_it + 1 == args.end()) throw ConfigError("--config needs a file path");
  CLI::App* sub = app.get_subcommand_no_throw(args.front());
  if (sub == nullptr) return args;
  const std::string path = *(config_it + 1);
  require_file(path, "config");
  auto kv = parse_kv_file(path);
  args.erase(config_it, config_it + 2);

  std::set<std::string> explicit_flags;
  for (const auto& a : args)
    if (a.rfind("--", 0) == 0) explicit_flags.insert(a);

  for (const auto& [key, value] : kv) {
    std::string flag = "--" + key;
    CLI::Option* opt = sub->get_option_no_throw(flag);
    if (opt == nullptr) {
      std::string dashed = flag;
      for (auto& c : dashed)
        if (c == '_') c = '-';
      opt = sub->get_option_no_throw(dashed);
      if (opt != nullptr) flag = dashed;
    }
    if (opt == nullptr) throw ConfigError("unknown config key `" + key + "`");
    if (explicit_flags.count(flag)) continue;
    if (opt->get_expected_min() == 0) {  // boolean flag
      if (value == "true" || value == "1" || value == "yes")
        args.push_back(flag);
      else if (!(value == "false" || value == "0" || value == "no"))
        throw ConfigError("config key `" + key + "` expects a boolean, got `" + value + "`");
      continue;
    }
    auto values = split_whitespace(value);
    if (values.empty()) throw ConfigError("config key `" + key + "` has an empty value");
    args.push_back(flag);
    for (auto& v : values) args.push_back(std::move(v));
  }
  return args;
}

std::vector<std::vector<std::string>> load_tokenized(const std::string& path) {
  std::vector<std::vector<std::string>> out;
  for (const auto& line : read_lines(path)) out.push_back(split_whitespace(line));
  return out;
}

PairOrigin origin_from_name(const std::string& name) {
  if (name == "clean") return PairOrigin::CleanParallel;
  if (name == "noisy") return PairOrigin::NoisyParallel;
  if (name == "synthetic") return PairOrigin::SyntheticBacktranslated;
  throw ConfigError("unknown origin `" + name + "` (want clean|noisy|synthetic)");
}

std::string tokens_to_surface(const std::vector<std::string>& tokens) {
  return detokenize(split_whitespace(decode_bpe(tokens)));
}

// Shared model-dimension flags.
struct ModelFlags {
  int d_model = 64, layers = 2, heads = 4, ffn_dim = 256, max_positions = 320;
  double dropout = 0.1, label_smoothing = 0.1;
  void attach(CLI::App* cmd) {
    cmd->add_option("--d-model", d_model, "model width");
    cmd->add_option("--layers", layers, "encoder/decoder layers");
    cmd->add_option("--heads", heads, "attention heads");
    cmd->add_option("--ffn", ffn_dim, "feed-forward width");
    cmd->add_option("--max-positions", max_positions, "maximum sequence positions");
    cmd->add_option("--dropout", dropout, "dropout rate");
    cmd->add_option("--label-smoothing", label_smoothing, "label smoothing");
  }
  ModelConfig to_config(int src_vocab, int tgt_vocab, std::uint64_t seed) const {
    ModelConfig mc;
    mc.src_vocab_size = src_vocab;
    mc.tgt_vocab_size = tgt_vocab;
    mc.d_model = d_model;
    mc.layers = layers;
    mc.heads = heads;
    mc.ffn_dim = ffn_dim;
    mc.max_positions = max_positions;
    mc.dropout = dropout;
    mc.label_smoothing = label_smoothing;
    mc.seed = seed;
    return mc;
  }
};

struct TrainFlags {
  int steps = 1000, batch_size = 16, warmup = 400, checkpoint_every = 0, log_every = 50;
  double lr_factor = 1.0, stop_at_loss = -1.0;
  void attach(CLI::App* cmd) {
    cmd->add_option("--steps", steps, "training steps");
    cmd->add_option("--batch-size", batch_size, "sentences per step");
    cmd->add_option("--warmup", warmup, "warmup steps of the inverse-sqrt schedule");
    cmd->add_option("--lr-factor", lr_factor, "learning-rate scale factor");
    cmd->add_option("--stop-at-loss", stop_at_loss, "stop early below this full-corpus loss");
    cmd->add_option("--checkpoint-every", checkpoint_every, "snapshot cadence in steps");
    cmd->add_option("--log-every", log_every, "stderr logging cadence");
  }
  TrainOptions to_options(std::uint64_t seed) const {
    TrainOptions t;
    t.steps = steps;
    t.batch_size = batch_size;
    t.warmup_steps = warmup;
    t.lr_factor = lr_factor;
    t.stop_at_loss = stop_at_loss;
    t.checkpoint_every = checkpoint_every;
    t.log_every = log_every;
    t.seed = seed;
    return t;
  }
};

std::map<std::string, std::string> train_meta(const TrainState& state) {
  std::string starts;
  for (int id : state.observed_start_tokens) {
    if (!starts.empty()) starts += ",";
    starts += std::to_string(id);
  }
  return {{"start_tokens", starts}};
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_bpe_learn(const std::vector<std::string>& inputs, std::size_t merges,
                  const std::string& out_merges, const std::string& out_vocab) {
  std::vector<std::vector<std::string>> corpus;
  for (const auto& path : inputs) {
    require_file(path, "input");
    auto lines = load_tokenized(path);
    corpus.insert(corpus.end(), lines.begin(), lines.end());
  }
  SubwordModel model = learn_bpe(corpus, merges);
  model.save(out_merges, out_vocab);
  std::cerr << "bpe-learn: " << model.merges.size() << " merges, vocab " << model.vocab.size()
            << "\n";
  return 0;
}

int cmd_bpe_apply(const std::string& merges_path, const std::string& vocab_path,
                  const std::string& input, const std::string& output) {
  require_file(merges_path, "merges");
  require_file(vocab_path, "vocab");
  require_file(input, "input");
  SubwordModel model = SubwordModel::load(merges_path, vocab_path);
  std::vector<std::string> out_lines;
  for (const auto& line : read_lines(input))
    out_lines.push_back(join(apply_bpe(model, split_whitespace(line))));
  write_lines(output, out_lines);
  return 0;
}

int cmd_tag(const std::string& src, const std::string& tgt, const std::string& kind,
            const std::string& side, const std::string& origin, const std::string& out_src,
            const std::string& out_tgt) {
  require_file(src, "src");
  require_file(tgt, "tgt");
  DomainTag tag;
  tag.kind = kind == "clean" ? DomainKind::Clean : DomainKind::Noisy;
  if (kind != "clean" && kind != "noisy")
    throw ConfigError("unknown kind `" + kind + "` (want clean|noisy)");
  if (side == "source")
    tag.side = TagSide::SourceStart;
  else if (side == "target")
    tag.side = TagSide::TargetStart;
  else
    throw ConfigError("unknown side `" + side + "` (want source|target)");
  auto loaded = load_parallel(src, tgt, origin_from_name(origin));
  for (auto& pair : loaded.corpus.pairs) pair = tag_pair(pair, tag);
  write_parallel(loaded.corpus, out_src, out_tgt);
  std::cerr << "tag: " << loaded.corpus.size() << " pairs tagged " << tag.surface() << ", "
            << loaded.stats.dropped_empty << " empty dropped\n";
  return 0;
}

int cmd_mix(const std::vector<std::string>& srcs, const std::vector<std::string>& tgts,
            const std::vector<std::string>& origins, std::vector<int> repeats, std::uint64_t seed,
            const std::string& out_src, const std::string& out_tgt, const std::string& out_origins,
            const std::string& stats_json) {
  if (srcs.size() != tgts.size() || srcs.size() != origins.size())
    throw ConfigError("mix: --src, --tgt and --origin need one entry per corpus");
  if (repeats.empty()) repeats.assign(srcs.size(), 1);
  if (repeats.size() != srcs.size())
    throw ConfigError("mix: --repeat needs one entry per corpus");
  std::vector<Corpus> corpora;
  for (std::size_t i = 0; i < srcs.size(); ++i) {
    require_file(srcs[i], "src");
    require_file(tgts[i], "tgt");
    auto loaded = load_parallel(srcs[i], tgts[i], origin_from_name(origins[i]), "src", "tgt",
                                /*allow_tags=*/true);
    if (repeats[i] < 1) throw ConfigError("mix: repeat factors must be >= 1");
    for (int r = 0; r < repeats[i]; ++r) corpora.push_back(loaded.corpus);
  }
  Corpus mixed = mix(std::move(corpora), seed);
  write_parallel(mixed, out_src, out_tgt);
  if (!out_origins.empty()) write_origins(mixed, out_origins);
  StatsReport stats = corpus_stats(mixed, "mixed");
  std::cerr << stats.to_text();
  if (!stats_json.empty()) write_lines(stats_json, {stats.to_json()});
  return 0;
}

int cmd_train(const std::string& src, const std::string& tgt, const std::string& src_vocab_path,
              const std::string& tgt_vocab_path, const std::string& checkpoint,
              const std::string& loss_curve, const ModelFlags& mf, const TrainFlags& tf,
              std::uint64_t seed) {
  require_file(src, "src");
  require_file(tgt, "tgt");
  auto loaded = load_parallel(src, tgt, PairOrigin::CleanParallel, "src", "tgt",
                              /*allow_tags=*/true);
  const Corpus& corpus = loaded.corpus;
  if (corpus.pairs.empty()) throw Error("train: no usable pairs in the corpus");

  Vocabulary src_vocab, tgt_vocab;
  if (!src_vocab_path.empty() && fs::exists(src_vocab_path)) {
    src_vocab = Vocabulary::load(src_vocab_path);
  } else {
    std::vector<std::vector<std::string>> side;
    for (const auto& p : corpus.pairs) side.push_back(p.source);
    src_vocab = Vocabulary::build(side);
    if (!src_vocab_path.empty()) src_vocab.save(src_vocab_path);
  }
  if (!tgt_vocab_path.empty() && fs::exists(tgt_vocab_path)) {
    tgt_vocab = Vocabulary::load(tgt_vocab_path);
  } else {
    std::vector<std::vector<std::string>> side;
    for (const auto& p : corpus.pairs) side.push_back(p.target);
    tgt_vocab = Vocabulary::build(side);
    if (!tgt_vocab_path.empty()) tgt_vocab.save(tgt_vocab_path);
  }

  ModelConfig mc = mf.to_config(src_vocab.size(), tgt_vocab.size(), derive_seed(seed, "init"));
  Seq2SeqModel model = init_model<float>(mc);
  TrainOptions topts = tf.to_options(derive_seed(seed, "train"));
  auto examples = encode_corpus(corpus, src_vocab, tgt_vocab);
  TrainState state;
  if (topts.checkpoint_every > 0 && !checkpoint.empty())
    topts.checkpoint_hook = [&](int step) {
      save_checkpoint(model, src_vocab, tgt_vocab, train_meta(state), checkpoint);
      std::cerr << "train: checkpoint at step " << step << "\n";
    };
  state = train(model, examples, topts);
  save_checkpoint(model, src_vocab, tgt_vocab, train_meta(state), checkpoint);
  if (!loss_curve.empty()) {
    std::vector<std::string> lines;
    for (const auto& [step, loss_v] : state.loss_curve)
      lines.push_back(std::to_string(step) + "\t" + std::to_string(loss_v));
    write_lines(loss_curve, lines);
  }
  std::cerr << "train: " << state.step << " steps, final loss " << state.final_loss
            << (state.diverged ? " (diverged, restored snapshot)" : "") << "\n";
  return state.diverged ? 1 : 0;
}

int cmd_decode(const std::vector<std::string>& checkpoints, const std::string& input,
               const std::string& output, const std::string& nbest_path, std::size_t nbest,
               const std::string& source_tag, const std::string& start_tag, int beam,
               double length_reward, int max_len) {
  require_file(input, "input");
  std::vector<Checkpoint> loaded;
  for (const auto& path : checkpoints) {
    require_file(path, "checkpoint");
    loaded.push_back(load_checkpoint(path));
  }
  EnsembleSpec ensemble = make_ensemble(loaded);

  int start_token = kBosId;
  if (start_tag == "clean_s")
    start_token = kCleanSTagId;
  else if (start_tag == "noisy_s")
    start_token = kNoisySTagId;
  else if (start_tag != "bos")
    throw ConfigError("unknown start tag `" + start_tag + "` (want bos|clean_s|noisy_s)");

  DecodeConfig dc;
  dc.beam_size = beam;
  dc.length_reward = length_reward;
  dc.max_len = max_len;

  std::vector<std::string> out_lines, nbest_lines;
  auto lines = read_lines(input);
  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    auto tokens = split_whitespace(lines[idx]);
    if (source_tag == "clean" || source_tag == "noisy") {
      if (tokens.empty() || !DomainTag::is_tag_surface(tokens.front())) {
        DomainTag tag{source_tag == "clean" ? DomainKind::Clean : DomainKind::Noisy,
                      TagSide::SourceStart};
        tokens.insert(tokens.begin(), tag.surface());
      }
    } else if (source_tag != "none") {
      throw ConfigError("unknown source tag `" + source_tag + "` (want none|clean|noisy)");
    }
    std::vector<int> src_ids = encode_source_ids(*ensemble.src_vocab, tokens);
    auto pool = beam_search_nbest(ensemble, src_ids, start_token, dc, std::max<std::size_t>(1, nbest));
    const auto to_tokens = [&](const BeamHypothesis& h) {
      std::vector<std::string> toks;
      for (std::size_t i = 1; i < h.ids.size(); ++i)
        if (h.ids[i] >= kNumReserved) toks.push_back(ensemble.tgt_vocab->symbol(h.ids[i]));
      return toks;
    };
    out_lines.push_back(tokens_to_surface(to_tokens(pool.front())));
    if (!nbest_path.empty())
      for (const auto& h : pool)
        nbest_lines.push_back(
            format_nbest_line(idx, tokens_to_surface(to_tokens(h)), h.logp, h.length()));
  }
  write_lines(output, out_lines);
  if (!nbest_path.empty()) write_lines(nbest_path, nbest_lines);
  std::cerr << "decode: " << out_lines.size() << " sentences\n";
  return 0;
}

int cmd_score(const std::string& hyp, const std::string& ref, const std::string& tok,
              bool lowercase, bool smooth, const std::string& json_out) {
  require_file(hyp, "hyp");
  require_file(ref, "ref");
  if (tok != "intl") throw ConfigError("unsupported tokenization `" + tok + "` (only intl)");
  auto hyps = read_lines(hyp);
  auto refs = read_lines(ref);
  BleuOptions opts;
  opts.lowercase = lowercase;
  opts.smooth = smooth;
  BleuReport report = corpus_bleu(hyps, refs, opts);
  std::cout << report.to_text() << "\n";
  if (!lowercase) {
    BleuOptions lower = opts;
    lower.lowercase = true;
    std::cout << corpus_bleu(hyps, refs, lower).to_text() << "\n";
  }
  if (!json_out.empty()) write_lines(json_out, {report.to_json()});
  return 0;
}

int cmd_backtranslate(const std::string& plan_path) {
  require_file(plan_path, "plan");
  auto plan = parse_kv_file(plan_path);
  const std::set<std::string> known = {
      "clean_src", "clean_tgt", "noisy_src",  "noisy_tgt",  "mono",       "mono_lang",
      "src_lang",  "tgt_lang",  "mode",       "seed",       "steps",      "batch_size",
      "d_model",   "layers",    "heads",      "ffn_dim",    "dropout",    "beam",
      "max_len",   "out_src",   "out_tgt",    "out_origins", "generator_checkpoint",
      "lr_factor", "warmup",    "max_positions"};
  for (const auto& [key, value] : plan)
    if (!known.count(key)) throw ConfigError("unknown plan key `" + key + "`");
  const auto need = [&](const std::string& key) -> const std::string& {
    auto it = plan.find(key);
    if (it == plan.end()) throw ConfigError("plan is missing key `" + key + "`");
    return it->second;
  };
  const auto get_or = [&](const std::string& key, const std::string& fallback) {
    auto it = plan.find(key);
    return it == plan.end() ? fallback : it->second;
  };
  for (const char* key : {"clean_src", "clean_tgt", "noisy_src", "noisy_tgt", "mono"})
    require_file(need(key), key);

  const std::string src_lang = get_or("src_lang", "src");
  const std::string tgt_lang = get_or("tgt_lang", "tgt");
  const std::uint64_t seed = std::stoull(get_or("seed", "1"));
  Corpus clean = load_parallel(need("clean_src"), need("clean_tgt"), PairOrigin::CleanParallel,
                               src_lang, tgt_lang)
                     .corpus;
  Corpus noisy = load_parallel(need("noisy_src"), need("noisy_tgt"), PairOrigin::NoisyParallel,
                               src_lang, tgt_lang)
                     .corpus;
  MonoCorpus mono = load_monolingual(need("mono"), get_or("mono_lang", tgt_lang));

  Corpus gen_corpus = build_generator_corpus(clean, noisy, derive_seed(seed, "gen-mix"));
  std::vector<std::vector<std::string>> gen_src, gen_tgt;
  for (const auto& p : gen_corpus.pairs) {
    gen_src.push_back(p.source);
    gen_tgt.push_back(p.target);
  }
  for (const auto& s : mono.sentences) gen_src.push_back(s);
  Vocabulary gen_src_vocab = Vocabulary::build(gen_src);
  Vocabulary gen_tgt_vocab = Vocabulary::build(gen_tgt);

  ModelConfig mc;
  mc.src_vocab_size = gen_src_vocab.size();
  mc.tgt_vocab_size = gen_tgt_vocab.size();
  mc.d_model = std::stoi(get_or("d_model", "64"));
  mc.layers = std::stoi(get_or("layers", "2"));
  mc.heads = std::stoi(get_or("heads", "4"));
  mc.ffn_dim = std::stoi(get_or("ffn_dim", "256"));
  mc.dropout = std::stod(get_or("dropout", "0.1"));
  mc.max_positions = std::stoi(get_or("max_positions", "320"));
  mc.seed = derive_seed(seed, "generator-init");
  Seq2SeqModel generator = init_model<float>(mc);
  TrainOptions topts;
  topts.steps = std::stoi(get_or("steps", "800"));
  topts.batch_size = std::stoi(get_or("batch_size", "16"));
  topts.lr_factor = std::stod(get_or("lr_factor", "2.0"));
  topts.warmup_steps = std::stoi(get_or("warmup", "200"));
  topts.seed = derive_seed(seed, "generator-train");
  topts.log_every = 100;
  TrainState state = train(generator, encode_corpus(gen_corpus, gen_src_vocab, gen_tgt_vocab), topts);
  std::cerr << "backtranslate: generator trained, final loss " << state.final_loss << "\n";
  if (auto it = plan.find("generator_checkpoint"); it != plan.end())
    save_checkpoint(generator, gen_src_vocab, gen_tgt_vocab, train_meta(state), it->second);

  EnsembleSpec gen_spec;
  gen_spec.members = {&generator};
  gen_spec.src_vocab = &gen_src_vocab;
  gen_spec.tgt_vocab = &gen_tgt_vocab;
  gen_spec.trained_start_tokens = state.observed_start_tokens;
  DecodeConfig dc;
  dc.beam_size = std::stoi(get_or("beam", "4"));
  dc.max_len = std::stoi(get_or("max_len", "64"));
  PseudoSourceResult pseudo = generate_pseudo_sources(gen_spec, mono, dc, src_lang, tgt_lang);
  std::cerr << "backtranslate: " << pseudo.corpus.size() << " pseudo pairs, "
            << pseudo.dropped_empty << " dropped\n";

  MixingMode mode = get_or("mode", "sensitive") == "insensitive" ? MixingMode::Insensitive
                                                                 : MixingMode::Sensitive;
  Corpus augmented =
      assemble_training_set(clean, noisy, pseudo.corpus, mode, derive_seed(seed, "assemble"));
  write_parallel(augmented, need("out_src"), need("out_tgt"));
  if (auto it = plan.find("out_origins"); it != plan.end()) write_origins(augmented, it->second);
  std::cerr << corpus_stats(augmented, "augmented").to_text();
  return 0;
}

int cmd_experiment_steering(const SteeringConfig& config, const std::string& out_prefix) {
  SteeringReport report = run_tag_steering_experiment(config);
  std::cout << report.to_text();
  if (!out_prefix.empty()) {
    write_lines(out_prefix + ".txt", {report.to_text()});
    write_lines(out_prefix + ".json", {report.to_json()});
  }
  return 0;
}

int cmd_experiment_comparison(ComparisonConfig config, const std::string& clean_src,
                              const std::string& clean_tgt, const std::string& noisy_src,
                              const std::string& noisy_tgt, const std::string& mono,
                              const std::string& test_src, const std::string& test_tgt,
                              const std::string& out_prefix) {
  for (const auto& [path, key] :
       std::vector<std::pair<std::string, std::string>>{{clean_src, "clean-src"},
                                                        {clean_tgt, "clean-tgt"},
                                                        {noisy_src, "noisy-src"},
                                                        {noisy_tgt, "noisy-tgt"},
                                                        {mono, "mono"},
                                                        {test_src, "test-src"},
                                                        {test_tgt, "test-tgt"}})
    require_file(path, key);
  config.clean = load_parallel(clean_src, clean_tgt, PairOrigin::CleanParallel).corpus;
  config.noisy = load_parallel(noisy_src, noisy_tgt, PairOrigin::NoisyParallel).corpus;
  config.mono = load_monolingual(mono, "tgt");
  config.testset = load_parallel(test_src, test_tgt, PairOrigin::NoisyParallel).corpus;
  ComparisonReport report = run_comparison_experiment(config);
  std::cout << report.to_text();
  if (!out_prefix.empty()) {
    write_lines(out_prefix + ".txt", {report.to_text()});
    write_lines(out_prefix + ".json", {report.to_json()});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noisy-text machine translation toolkit"};
  app.require_subcommand(1);

  // ----- bpe-learn -----
  auto* bpe_learn = app.add_subcommand("bpe-learn", "learn a byte-pair encoding");
  std::vector<std::string> bl_inputs;
  std::size_t bl_merges = 8000;
  std::string bl_out_merges, bl_out_vocab;
  bpe_learn->add_option("--input", bl_inputs, "tokenized input files")->required();
  bpe_learn->add_option("--merges", bl_merges, "number of merges");
  bpe_learn->add_option("--out-merges", bl_out_merges, "merge file to write")->required();
  bpe_learn->add_option("--out-vocab", bl_out_vocab, "vocab file to write")->required();

  // ----- bpe-apply -----
  auto* bpe_apply = app.add_subcommand("bpe-apply", "segment text with a learned BPE");
  std::string ba_merges, ba_vocab, ba_input, ba_output;
  bpe_apply->add_option("--merges", ba_merges)->required();
  bpe_apply->add_option("--vocab", ba_vocab)->required();
  bpe_apply->add_option("--input", ba_input)->required();
  bpe_apply->add_option("--output", ba_output)->required();

  // ----- tag -----
  auto* tag_cmd = app.add_subcommand("tag", "prepend a domain tag to a parallel corpus");
  std::string tg_src, tg_tgt, tg_kind, tg_side = "source", tg_origin = "clean", tg_out_src,
                                       tg_out_tgt;
  tag_cmd->add_option("--src", tg_src)->required();
  tag_cmd->add_option("--tgt", tg_tgt)->required();
  tag_cmd->add_option("--kind", tg_kind, "clean|noisy")->required();
  tag_cmd->add_option("--side", tg_side, "source|target");
  tag_cmd->add_option("--origin", tg_origin, "clean|noisy|synthetic");
  tag_cmd->add_option("--out-src", tg_out_src)->required();
  tag_cmd->add_option("--out-tgt", tg_out_tgt)->required();

  // ----- mix -----
  auto* mix_cmd = app.add_subcommand("mix", "concatenate and shuffle corpora");
  std::vector<std::string> mx_srcs, mx_tgts, mx_origins;
  std::vector<int> mx_repeats;
  std::uint64_t mx_seed = 1;
  std::string mx_out_src, mx_out_tgt, mx_out_origins, mx_stats_json;
  mix_cmd->add_option("--src", mx_srcs)->required();
  mix_cmd->add_option("--tgt", mx_tgts)->required();
  mix_cmd->add_option("--origin", mx_origins)->required();
  mix_cmd->add_option("--repeat", mx_repeats, "integer up-sampling factor per corpus");
  mix_cmd->add_option("--seed", mx_seed);
  mix_cmd->add_option("--out-src", mx_out_src)->required();
  mix_cmd->add_option("--out-tgt", mx_out_tgt)->required();
  mix_cmd->add_option("--out-origins", mx_out_origins);
  mix_cmd->add_option("--stats-json", mx_stats_json);

  // ----- train -----
  auto* train_cmd = app.add_subcommand("train", "train a translation model");
  std::string tr_src, tr_tgt, tr_src_vocab, tr_tgt_vocab, tr_checkpoint, tr_loss_curve;
  std::uint64_t tr_seed = 1;
  ModelFlags tr_mf;
  TrainFlags tr_tf;
  train_cmd->add_option("--src", tr_src)->required();
  train_cmd->add_option("--tgt", tr_tgt)->required();
  train_cmd->add_option("--src-vocab", tr_src_vocab, "vocab file (loaded if present, else built)");
  train_cmd->add_option("--tgt-vocab", tr_tgt_vocab);
  train_cmd->add_option("--checkpoint", tr_checkpoint)->required();
  train_cmd->add_option("--loss-curve", tr_loss_curve, "step<TAB>loss output");
  train_cmd->add_option("--seed", tr_seed);
  tr_mf.attach(train_cmd);
  tr_tf.attach(train_cmd);

  // ----- decode -----
  auto* decode_cmd = app.add_subcommand("decode", "beam-decode a source file");
  std::vector<std::string> dc_checkpoints;
  std::string dc_input, dc_output, dc_nbest_path, dc_source_tag = "none", dc_start_tag = "bos";
  std::size_t dc_nbest = 1;
  int dc_beam = 4, dc_max_len = 64;
  double dc_reward = 0.0;
  decode_cmd->add_option("--checkpoint", dc_checkpoints, "one or more checkpoints (ensemble)")
      ->required();
  decode_cmd->add_option("--input", dc_input)->required();
  decode_cmd->add_option("--output", dc_output)->required();
  decode_cmd->add_option("--nbest-file", dc_nbest_path);
  decode_cmd->add_option("--nbest", dc_nbest, "n-best size");
  decode_cmd->add_option("--source-tag", dc_source_tag, "none|clean|noisy");
  decode_cmd->add_option("--start-tag", dc_start_tag, "bos|clean_s|noisy_s");
  decode_cmd->add_option("--beam", dc_beam);
  decode_cmd->add_option("--length-reward", dc_reward);
  decode_cmd->add_option("--max-len", dc_max_len);

  // ----- score -----
  auto* score_cmd = app.add_subcommand("score", "corpus BLEU with intl tokenization");
  std::string sc_hyp, sc_ref, sc_tok = "intl", sc_json;
  bool sc_lower = false, sc_smooth = false;
  score_cmd->add_option("--hyp", sc_hyp)->required();
  score_cmd->add_option("--ref", sc_ref)->required();
  score_cmd->add_option("--tok", sc_tok, "tokenization mode (intl)");
  score_cmd->add_flag("--lowercase", sc_lower);
  score_cmd->add_flag("--smooth", sc_smooth);
  score_cmd->add_option("--json", sc_json, "also write a JSON report");

  // ----- backtranslate -----
  auto* bt_cmd = app.add_subcommand("backtranslate", "run the reversed noisy-generation pipeline");
  std::string bt_plan;
  bt_cmd->add_option("--plan", bt_plan, "flat key-value plan file")->required();

  // ----- experiment -----
  auto* exp_cmd = app.add_subcommand("experiment", "tag-steering or four-system comparison");
  std::string ex_mode = "steering", ex_out;
  SteeringConfig ex_steering;
  ComparisonConfig ex_comparison;
  std::string ex_clean_src, ex_clean_tgt, ex_noisy_src, ex_noisy_tgt, ex_mono, ex_test_src,
      ex_test_tgt;
  std::uint64_t ex_seed = 11;
  exp_cmd->add_option("--mode", ex_mode, "steering|comparison");
  exp_cmd->add_option("--out", ex_out, "report path prefix (.txt/.json)");
  exp_cmd->add_option("--seed", ex_seed);
  exp_cmd->add_option("--train-sources", ex_steering.train_sources);
  exp_cmd->add_option("--held-out", ex_steering.held_out);
  exp_cmd->add_option("--vocab-words", ex_steering.vocab_words);
  exp_cmd->add_option("--steps", ex_steering.steps);
  exp_cmd->add_option("--batch-size", ex_steering.batch_size);
  exp_cmd->add_option("--d-model", ex_steering.d_model);
  exp_cmd->add_option("--layers", ex_steering.layers);
  exp_cmd->add_option("--heads", ex_steering.heads);
  exp_cmd->add_option("--ffn", ex_steering.ffn_dim);
  exp_cmd->add_option("--beam", ex_steering.beam);
  exp_cmd->add_option("--clean-src", ex_clean_src);
  exp_cmd->add_option("--clean-tgt", ex_clean_tgt);
  exp_cmd->add_option("--noisy-src", ex_noisy_src);
  exp_cmd->add_option("--noisy-tgt", ex_noisy_tgt);
  exp_cmd->add_option("--mono", ex_mono);
  exp_cmd->add_option("--test-src", ex_test_src);
  exp_cmd->add_option("--test-tgt", ex_test_tgt);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config_args(app, args);
    std::vector<const char*> cargv;
    cargv.push_back(argv[0]);
    for (const auto& a : args) cargv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::ParseError& e) {
      return app.exit(e);
    }

    if (bpe_learn->parsed())
      return cmd_bpe_learn(bl_inputs, bl_merges, bl_out_merges, bl_out_vocab);
    if (bpe_apply->parsed()) return cmd_bpe_apply(ba_merges, ba_vocab, ba_input, ba_output);
    if (tag_cmd->parsed())
      return cmd_tag(tg_src, tg_tgt, tg_kind, tg_side, tg_origin, tg_out_src, tg_out_tgt);
    if (mix_cmd->parsed())
      return cmd_mix(mx_srcs, mx_tgts, mx_origins, mx_repeats, mx_seed, mx_out_src, mx_out_tgt,
                     mx_out_origins, mx_stats_json);
    if (train_cmd->parsed())
      return cmd_train(tr_src, tr_tgt, tr_src_vocab, tr_tgt_vocab, tr_checkpoint, tr_loss_curve,
                       tr_mf, tr_tf, tr_seed);
    if (decode_cmd->parsed())
      return cmd_decode(dc_checkpoints, dc_input, dc_output, dc_nbest_path, dc_nbest,
                        dc_source_tag, dc_start_tag, dc_beam, dc_reward, dc_max_len);
    if (score_cmd->parsed())
      return cmd_score(sc_hyp, sc_ref, sc_tok, sc_lower, sc_smooth, sc_json);
    if (bt_cmd->parsed()) return cmd_backtranslate(bt_plan);
    if (exp_cmd->parsed()) {
      if (ex_mode == "steering") {
        ex_steering.seed = ex_seed;
        return cmd_experiment_steering(ex_steering, ex_out);
      }
      if (ex_mode == "comparison") {
        ex_comparison.seed = ex_seed;
        ex_comparison.steps = ex_steering.steps;
        ex_comparison.batch_size = ex_steering.batch_size;
        ex_comparison.d_model = ex_steering.d_model;
        ex_comparison.layers = ex_steering.layers;
        ex_comparison.heads = ex_steering.heads;
        ex_comparison.ffn_dim = ex_steering.ffn_dim;
        ex_comparison.beam = ex_steering.beam;
        return cmd_experiment_comparison(ex_comparison, ex_clean_src, ex_clean_tgt, ex_noisy_src,
                                         ex_noisy_tgt, ex_mono, ex_test_src, ex_test_tgt, ex_out);
      }
      throw ConfigError("unknown experiment mode `" + ex_mode + "`");
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
