#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "robustmt/corpus.hpp"
#include "robustmt/subword.hpp"
#include "robustmt/tensor.hpp"

namespace rmt {

// ---------------------------------------------------------------------------
// A reduced pre-norm encoder-decoder transformer: multi-head attention,
// position-wise feed-forward, residual connections, sinusoidal positions,
// label smoothing, and a target embedding tied to the output projection.
// Training runs in single precision by default; the double instantiation
// exists for finite-difference gradient verification.
// ---------------------------------------------------------------------------

struct ModelConfig {
  int src_vocab_size = 0;
  int tgt_vocab_size = 0;
  int d_model = 64;
  int layers = 2;
  int heads = 4;
  int ffn_dim = 256;
  double dropout = 0.1;
  int max_positions = 320;  // must cover 256 content tokens plus begin/end
  double label_smoothing = 0.1;
  std::uint64_t seed = 1;

  int head_dim() const { return d_model / heads; }
  void validate() const;  // throws ConfigError
};

struct TokenDistribution {
  std::vector<double> probs;
  int position = 0;
};

template <typename T>
struct NamedTensor {
  std::string name;
  Mat<T> value;
};

template <typename T>
struct Seq2SeqModelT {
  ModelConfig config;
  std::vector<NamedTensor<T>> params;
  std::unordered_map<std::string, int> param_index;
  Mat<T> positional;  // derived sinusoidal table, not a parameter

  Mat<T>& tensor(const std::string& name);
  const Mat<T>& tensor(const std::string& name) const;
};

using Seq2SeqModel = Seq2SeqModelT<float>;

// Deterministic initialization from config.seed; equal seeds give
// bit-identical parameters. Values are drawn in double and cast, so the
// float and double instantiations of one seed correspond.
template <typename T>
Seq2SeqModelT<T> init_model(const ModelConfig& config);

Seq2SeqModelT<double> to_double(const Seq2SeqModel& model);

// FNV-1a over all parameter bytes in declaration order.
template <typename T>
std::uint64_t model_checksum(const Seq2SeqModelT<T>& model);

// ---------------------------------------------------------------------------
// Inference path (no autodiff tape).
// ---------------------------------------------------------------------------

template <typename T>
struct EncodedSource {
  Mat<T> memory;  // (src_len x d_model)
};

template <typename T>
EncodedSource<T> encode_source_states(const Seq2SeqModelT<T>& model, const std::vector<int>& src_ids);

// Full decoder pass over the prefix; returns (prefix_len x tgt_vocab) logits.
template <typename T>
Mat<T> decoder_logits(const Seq2SeqModelT<T>& model, const EncodedSource<T>& enc,
                      const std::vector<int>& prefix_ids);

// One next-token distribution per prefix position (softmax in double).
// The prefix includes the start token (begin or domain tag). Causal: the
// distribution at position t depends only on prefix positions <= t and the
// full source.
template <typename T>
std::vector<TokenDistribution> forward(const Seq2SeqModelT<T>& model,
                                       const std::vector<int>& src_ids,
                                       const std::vector<int>& prefix_ids);

// Mean over non-pad positions of the label-smoothed negative log-likelihood
// -((1-eps) log p[ref] + eps/V sum_k log p[k]), with log clamped at
// log(1e-30) so degenerate inputs stay finite.
double loss(const std::vector<TokenDistribution>& distributions, const std::vector<int>& reference_ids,
            double smoothing);

// ---------------------------------------------------------------------------
// Training.
// ---------------------------------------------------------------------------

struct TrainingExample {
  std::vector<int> src;     // [tag|<s>] tokens </s>
  std::vector<int> dec_in;  // [tag|<s>] tokens
  std::vector<int> labels;  // tokens </s>
};

// [tag|<s>] + token ids + [</s>]; a tag surface at position 0 becomes the
// start token in place of <s>.
std::vector<int> encode_source_ids(const Vocabulary& vocab, const std::vector<std::string>& tokens);
TrainingExample make_training_example(const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                                      const TaggedSentencePair& pair);
std::vector<TrainingExample> encode_corpus(const Corpus& corpus, const Vocabulary& src_vocab,
                                           const Vocabulary& tgt_vocab);

struct TrainOptions {
  int steps = 1000;
  int batch_size = 16;
  double lr_factor = 1.0;  // lr = lr_factor * d^-0.5 * min(t^-0.5, t * warmup^-1.5)
  int warmup_steps = 400;
  std::uint64_t seed = 1;
  double label_smoothing = -1.0;  // < 0: take from the model config
  double stop_at_loss = -1.0;     // > 0: stop once full-corpus loss drops below
  int eval_every = 50;            // cadence for the stop_at_loss check
  int checkpoint_every = 0;       // snapshot cadence for divergence recovery
  int log_every = 0;              // stderr progress cadence, 0 = silent
  std::function<void(int step)> checkpoint_hook;  // runs every checkpoint_every steps
};

template <typename T>
struct TrainStateT {
  int step = 0;
  std::vector<std::pair<int, double>> loss_curve;  // (step, batch loss)
  bool diverged = false;
  double final_loss = 0.0;            // full-corpus loss after training, dropout off
  std::set<int> observed_start_tokens;  // decoder start ids seen in the data
  std::vector<Mat<T>> adam_m, adam_v;   // optimizer moments, one per parameter
};

using TrainState = TrainStateT<float>;

// Adam with the inverse-square-root warmup schedule. Single-threaded and
// bit-reproducible for a fixed seed. Non-finite loss restores the last
// snapshot and stops with state.diverged = true.
template <typename T>
TrainStateT<T> train(Seq2SeqModelT<T>& model, const std::vector<TrainingExample>& examples,
                     const TrainOptions& options);

// Full-corpus mean token loss on the inference path (dropout off).
template <typename T>
double evaluate_loss(const Seq2SeqModelT<T>& model, const std::vector<TrainingExample>& examples,
                     double smoothing);

// ---------------------------------------------------------------------------
// Gradient verification: analytic gradients vs central finite differences on
// a seeded sample of parameter coordinates. Relative error per coordinate is
// |ga - gn| / max(|ga|, |gn|, 1e-3); returns the worst over the sample.
// Double precision, dropout disabled.
// ---------------------------------------------------------------------------

struct GradCheckResult {
  double max_rel_error = 0.0;
  int coords_checked = 0;
};

GradCheckResult gradient_check(const Seq2SeqModelT<double>& model,
                               const std::vector<TrainingExample>& batch, double epsilon,
                               int num_coords = 256, std::uint64_t seed = 1);

// ---------------------------------------------------------------------------
// Checkpoints: self-describing little-endian container with a JSON header
// (config, vocabularies, free-form metadata) followed by named tensors.
// ---------------------------------------------------------------------------

struct Checkpoint {
  Seq2SeqModel model;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
  std::map<std::string, std::string> meta;
};

void save_checkpoint(const Seq2SeqModel& model, const Vocabulary& src_vocab,
                     const Vocabulary& tgt_vocab, const std::map<std::string, std::string>& meta,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Loads tensors into an existing model; the file's config must match
// model.config (ShapeError otherwise).
void load_checkpoint_into(Seq2SeqModel& model, const std::string& path);

// Instantiated for float and double in model.cpp.
extern template struct Seq2SeqModelT<float>;
extern template struct Seq2SeqModelT<double>;

}  // namespace rmt
