#include "robustmt/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "robustmt/autodiff.hpp"
#include "robustmt/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace rmt {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void ModelConfig::validate() const {
  if (src_vocab_size <= 0 || tgt_vocab_size <= 0)
    throw ConfigError("vocab sizes must be positive");
  if (d_model <= 0 || layers <= 0 || heads <= 0 || ffn_dim <= 0)
    throw ConfigError("model dimensions must be positive");
  if (d_model % heads != 0)
    throw ConfigError("d_model (" + std::to_string(d_model) + ") not divisible by heads (" +
                      std::to_string(heads) + ")");
  if (max_positions < 258)
    throw ConfigError("max_positions must be >= 258 (256 content tokens plus begin/end)");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0)
    throw ConfigError("label_smoothing must be in [0, 1)");
}

namespace {

json config_to_json(const ModelConfig& c) {
  return json{{"src_vocab_size", c.src_vocab_size},
              {"tgt_vocab_size", c.tgt_vocab_size},
              {"d_model", c.d_model},
              {"layers", c.layers},
              {"heads", c.heads},
              {"ffn_dim", c.ffn_dim},
              {"dropout", c.dropout},
              {"max_positions", c.max_positions},
              {"label_smoothing", c.label_smoothing},
              {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.src_vocab_size = j.at("src_vocab_size").get<int>();
  c.tgt_vocab_size = j.at("tgt_vocab_size").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.max_positions = j.at("max_positions").get<int>();
  c.label_smoothing = j.at("label_smoothing").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

bool same_shape_config(const ModelConfig& a, const ModelConfig& b) {
  return a.src_vocab_size == b.src_vocab_size && a.tgt_vocab_size == b.tgt_vocab_size &&
         a.d_model == b.d_model && a.layers == b.layers && a.heads == b.heads &&
         a.ffn_dim == b.ffn_dim && a.max_positions == b.max_positions;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameter registry and initialization
// ---------------------------------------------------------------------------

template <typename T>
Mat<T>& Seq2SeqModelT<T>::tensor(const std::string& name) {
  auto it = param_index.find(name);
  if (it == param_index.end()) throw ShapeError("no such parameter: " + name);
  return params[static_cast<std::size_t>(it->second)].value;
}

template <typename T>
const Mat<T>& Seq2SeqModelT<T>::tensor(const std::string& name) const {
  auto it = param_index.find(name);
  if (it == param_index.end()) throw ShapeError("no such parameter: " + name);
  return params[static_cast<std::size_t>(it->second)].value;
}

namespace {

template <typename T>
void add_param(Seq2SeqModelT<T>& m, const std::string& name, int rows, int cols) {
  m.param_index.emplace(name, static_cast<int>(m.params.size()));
  m.params.push_back({name, Mat<T>::Zero(rows, cols)});
}

template <typename T>
void add_attention_block(Seq2SeqModelT<T>& m, const std::string& prefix, int d) {
  for (const char* w : {"wq", "wk", "wv", "wo"}) add_param(m, prefix + w, d, d);
  for (const char* b : {"bq", "bk", "bv", "bo"}) add_param(m, prefix + b, 1, d);
}

template <typename T>
void add_layer_norm(Seq2SeqModelT<T>& m, const std::string& prefix, int d) {
  add_param(m, prefix + "g", 1, d);
  add_param(m, prefix + "b", 1, d);
}

template <typename T>
void add_ffn_block(Seq2SeqModelT<T>& m, const std::string& prefix, int d, int ffn) {
  add_param(m, prefix + "w1", d, ffn);
  add_param(m, prefix + "b1", 1, ffn);
  add_param(m, prefix + "w2", ffn, d);
  add_param(m, prefix + "b2", 1, d);
}

template <typename T>
Mat<T> sinusoidal_positions(int max_positions, int d) {
  Mat<T> pe(max_positions, d);
  for (int p = 0; p < max_positions; ++p) {
    for (int i = 0; i < d; i += 2) {
      double angle = p * std::exp(-(static_cast<double>(i) / d) * std::log(10000.0));
      pe(p, i) = static_cast<T>(std::sin(angle));
      if (i + 1 < d) pe(p, i + 1) = static_cast<T>(std::cos(angle));
    }
  }
  return pe;
}

// Shapes and the derived position table, parameters all zero.
template <typename T>
Seq2SeqModelT<T> model_shell(const ModelConfig& config) {
  config.validate();
  Seq2SeqModelT<T> m;
  m.config = config;
  const int d = config.d_model;
  add_param(m, "src_embed", config.src_vocab_size, d);
  add_param(m, "tgt_embed", config.tgt_vocab_size, d);
  for (int l = 0; l < config.layers; ++l) {
    std::string p = "enc." + std::to_string(l) + ".";
    add_layer_norm(m, p + "ln1.", d);
    add_attention_block(m, p + "attn.", d);
    add_layer_norm(m, p + "ln2.", d);
    add_ffn_block(m, p + "ffn.", d, config.ffn_dim);
  }
  add_layer_norm(m, "enc.ln_out.", d);
  for (int l = 0; l < config.layers; ++l) {
    std::string p = "dec." + std::to_string(l) + ".";
    add_layer_norm(m, p + "ln1.", d);
    add_attention_block(m, p + "self.", d);
    add_layer_norm(m, p + "ln2.", d);
    add_attention_block(m, p + "cross.", d);
    add_layer_norm(m, p + "ln3.", d);
    add_ffn_block(m, p + "ffn.", d, config.ffn_dim);
  }
  add_layer_norm(m, "dec.ln_out.", d);
  m.positional = sinusoidal_positions<T>(config.max_positions, d);
  return m;
}

// Last dotted component of a parameter name: "wq", "bq", "w1", "g", ...
std::string_view leaf_name(const std::string& name) {
  auto dot = name.rfind('.');
  return std::string_view(name).substr(dot == std::string::npos ? 0 : dot + 1);
}

}  // namespace

template <typename T>
Seq2SeqModelT<T> init_model(const ModelConfig& config) {
  Seq2SeqModelT<T> m = model_shell<T>(config);
  Rng rng(config.seed);
  const double embed_limit = std::sqrt(3.0 / static_cast<double>(config.d_model));
  for (auto& p : m.params) {
    const std::string_view leaf = leaf_name(p.name);
    if (p.name == "src_embed" || p.name == "tgt_embed") {
      uniform_init(p.value, rng, embed_limit);
    } else if (leaf == "g") {
      p.value.setOnes();
    } else if (leaf.front() == 'b') {
      // biases and layer-norm shifts stay zero
    } else {
      xavier_init(p.value, rng);
    }
  }
  return m;
}

Seq2SeqModelT<double> to_double(const Seq2SeqModel& model) {
  Seq2SeqModelT<double> out = model_shell<double>(model.config);
  for (std::size_t i = 0; i < model.params.size(); ++i)
    out.params[i].value = model.params[i].value.cast<double>();
  return out;
}

template <typename T>
std::uint64_t model_checksum(const Seq2SeqModelT<T>& model) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& p : model.params)
    h = fnv1a(p.value.data(), static_cast<std::size_t>(p.value.size()) * sizeof(T), h);
  return h;
}

// ---------------------------------------------------------------------------
// Inference path
// ---------------------------------------------------------------------------

namespace {

template <typename T>
Mat<T> affine(const Mat<T>& x, const Mat<T>& w, const Mat<T>& b) {
  Mat<T> y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

template <typename T>
Mat<T> layer_norm_plain(const Mat<T>& x, const Mat<T>& g, const Mat<T>& b) {
  Mat<T> out(x.rows(), x.cols());
  const T eps = T(1e-6);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    T mean = x.row(r).mean();
    T var = (x.row(r).array() - mean).square().mean();
    out.row(r) = ((x.row(r).array() - mean) / std::sqrt(var + eps)) * g.row(0).array() +
                 b.row(0).array();
  }
  return out;
}

template <typename T>
Mat<T> softmax_rows_plain(Mat<T> scores, bool causal) {
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index limit = causal ? std::min(r + 1, scores.cols()) : scores.cols();
    T max_v = scores.row(r).head(limit).maxCoeff();
    T sum = T(0);
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      if (c < limit) {
        scores(r, c) = std::exp(scores(r, c) - max_v);
        sum += scores(r, c);
      } else {
        scores(r, c) = T(0);
      }
    }
    scores.row(r) /= sum;
  }
  return scores;
}

template <typename T>
Mat<T> mha_plain(const Seq2SeqModelT<T>& m, const std::string& prefix, const Mat<T>& q_in,
                 const Mat<T>& kv_in, bool causal) {
  const int heads = m.config.heads;
  const int dk = m.config.head_dim();
  Mat<T> q = affine(q_in, m.tensor(prefix + "wq"), m.tensor(prefix + "bq"));
  Mat<T> k = affine(kv_in, m.tensor(prefix + "wk"), m.tensor(prefix + "bk"));
  Mat<T> v = affine(kv_in, m.tensor(prefix + "wv"), m.tensor(prefix + "bv"));
  Mat<T> ctx(q.rows(), q.cols());
  const T inv_sqrt_dk = T(1) / std::sqrt(static_cast<T>(dk));
  for (int h = 0; h < heads; ++h) {
    auto qh = q.middleCols(h * dk, dk);
    auto kh = k.middleCols(h * dk, dk);
    auto vh = v.middleCols(h * dk, dk);
    Mat<T> scores = qh * kh.transpose() * inv_sqrt_dk;
    Mat<T> attn = softmax_rows_plain(std::move(scores), causal);
    ctx.middleCols(h * dk, dk) = attn * vh;
  }
  return affine(ctx, m.tensor(prefix + "wo"), m.tensor(prefix + "bo"));
}

template <typename T>
Mat<T> ffn_plain(const Seq2SeqModelT<T>& m, const std::string& prefix, const Mat<T>& x) {
  Mat<T> h = affine(x, m.tensor(prefix + "w1"), m.tensor(prefix + "b1"));
  h = h.cwiseMax(T(0));
  return affine(h, m.tensor(prefix + "w2"), m.tensor(prefix + "b2"));
}

template <typename T>
Mat<T> embed_plain(const Seq2SeqModelT<T>& m, const std::string& table,
                   const std::vector<int>& ids) {
  const Mat<T>& emb = m.tensor(table);
  Mat<T> x(static_cast<Eigen::Index>(ids.size()), m.config.d_model);
  const T scale = std::sqrt(static_cast<T>(m.config.d_model));
  for (std::size_t i = 0; i < ids.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) =
        emb.row(ids[i]) * scale + m.positional.row(static_cast<Eigen::Index>(i));
  return x;
}

void check_ids(const std::vector<int>& ids, int vocab_size, int max_positions, const char* what) {
  if (ids.empty()) throw ShapeError(std::string(what) + ": empty id sequence");
  if (ids.size() > static_cast<std::size_t>(max_positions))
    throw ShapeError(std::string(what) + ": sequence longer than max_positions");
  for (int id : ids)
    if (id < 0 || id >= vocab_size)
      throw ShapeError(std::string(what) + ": id " + std::to_string(id) + " out of range [0, " +
                       std::to_string(vocab_size) + ")");
}

}  // namespace

template <typename T>
EncodedSource<T> encode_source_states(const Seq2SeqModelT<T>& model,
                                      const std::vector<int>& src_ids) {
  check_ids(src_ids, model.config.src_vocab_size, model.config.max_positions, "source");
  Mat<T> x = embed_plain(model, "src_embed", src_ids);
  for (int l = 0; l < model.config.layers; ++l) {
    std::string p = "enc." + std::to_string(l) + ".";
    Mat<T> a = layer_norm_plain(x, model.tensor(p + "ln1.g"), model.tensor(p + "ln1.b"));
    x += mha_plain(model, p + "attn.", a, a, /*causal=*/false);
    Mat<T> f = layer_norm_plain(x, model.tensor(p + "ln2.g"), model.tensor(p + "ln2.b"));
    x += ffn_plain(model, p + "ffn.", f);
  }
  EncodedSource<T> enc;
  enc.memory = layer_norm_plain(x, model.tensor("enc.ln_out.g"), model.tensor("enc.ln_out.b"));
  return enc;
}

template <typename T>
Mat<T> decoder_logits(const Seq2SeqModelT<T>& model, const EncodedSource<T>& enc,
                      const std::vector<int>& prefix_ids) {
  check_ids(prefix_ids, model.config.tgt_vocab_size, model.config.max_positions, "target prefix");
  Mat<T> y = embed_plain(model, "tgt_embed", prefix_ids);
  for (int l = 0; l < model.config.layers; ++l) {
    std::string p = "dec." + std::to_string(l) + ".";
    Mat<T> a = layer_norm_plain(y, model.tensor(p + "ln1.g"), model.tensor(p + "ln1.b"));
    y += mha_plain(model, p + "self.", a, a, /*causal=*/true);
    Mat<T> c = layer_norm_plain(y, model.tensor(p + "ln2.g"), model.tensor(p + "ln2.b"));
    y += mha_plain(model, p + "cross.", c, enc.memory, /*causal=*/false);
    Mat<T> f = layer_norm_plain(y, model.tensor(p + "ln3.g"), model.tensor(p + "ln3.b"));
    y += ffn_plain(model, p + "ffn.", f);
  }
  y = layer_norm_plain(y, model.tensor("dec.ln_out.g"), model.tensor("dec.ln_out.b"));
  return y * model.tensor("tgt_embed").transpose();
}

template <typename T>
std::vector<TokenDistribution> forward(const Seq2SeqModelT<T>& model,
                                       const std::vector<int>& src_ids,
                                       const std::vector<int>& prefix_ids) {
  EncodedSource<T> enc = encode_source_states(model, src_ids);
  Mat<T> logits = decoder_logits(model, enc, prefix_ids);
  std::vector<TokenDistribution> out;
  out.reserve(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    TokenDistribution dist;
    dist.position = static_cast<int>(r);
    dist.probs.resize(static_cast<std::size_t>(logits.cols()));
    double max_v = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < logits.cols(); ++c)
      max_v = std::max(max_v, static_cast<double>(logits(r, c)));
    double sum = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      double e = std::exp(static_cast<double>(logits(r, c)) - max_v);
      dist.probs[static_cast<std::size_t>(c)] = e;
      sum += e;
    }
    for (double& p : dist.probs) p /= sum;
    out.push_back(std::move(dist));
  }
  return out;
}

double loss(const std::vector<TokenDistribution>& distributions,
            const std::vector<int>& reference_ids, double smoothing) {
  if (distributions.size() != reference_ids.size())
    throw ShapeError("loss: " + std::to_string(distributions.size()) + " distributions vs " +
                     std::to_string(reference_ids.size()) + " references");
  const auto clamped_log = [](double p) { return std::log(std::max(p, 1e-30)); };
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < distributions.size(); ++i) {
    int ref = reference_ids[i];
    if (ref == kPadId) continue;
    const auto& probs = distributions[i].probs;
    if (ref < 0 || static_cast<std::size_t>(ref) >= probs.size())
      throw ShapeError("loss: reference id out of range");
    const double v = static_cast<double>(probs.size());
    double value = (1.0 - smoothing) * clamped_log(probs[static_cast<std::size_t>(ref)]);
    if (smoothing > 0.0) {
      double sum_log = 0.0;
      for (double p : probs) sum_log += clamped_log(p);
      value += smoothing / v * sum_log;
    }
    total -= value;
    ++count;
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Training graph
// ---------------------------------------------------------------------------

namespace {

template <typename T>
class BatchGraph {
 public:
  BatchGraph(const Seq2SeqModelT<T>& model, std::vector<Mat<T>>* grads, bool training,
             Rng* dropout_rng)
      : model_(model), grads_(grads), training_(training), dropout_rng_(dropout_rng) {}

  Graph<T>& graph() { return g_; }

  int pnode(const std::string& name) {
    int idx = model_.param_index.at(name);
    auto it = param_nodes_.find(idx);
    if (it != param_nodes_.end()) return it->second;
    int id = g_.parameter(model_.params[static_cast<std::size_t>(idx)].value,
                          &(*grads_)[static_cast<std::size_t>(idx)]);
    param_nodes_.emplace(idx, id);
    return id;
  }

  int embed(const std::string& table, const std::vector<int>& ids) {
    int e = g_.gather_rows(pnode(table), ids);
    e = g_.scale(e, std::sqrt(static_cast<T>(model_.config.d_model)));
    Mat<T> pe = model_.positional.topRows(static_cast<Eigen::Index>(ids.size()));
    e = g_.add(e, g_.input(std::move(pe)));
    return apply_dropout(e);
  }

  int mha(const std::string& prefix, int q_in, int kv_in, bool causal) {
    const int heads = model_.config.heads;
    const int dk = model_.config.head_dim();
    int q = g_.add_rowvec(g_.matmul(q_in, pnode(prefix + "wq")), pnode(prefix + "bq"));
    int k = g_.add_rowvec(g_.matmul(kv_in, pnode(prefix + "wk")), pnode(prefix + "bk"));
    int v = g_.add_rowvec(g_.matmul(kv_in, pnode(prefix + "wv")), pnode(prefix + "bv"));
    std::vector<int> parts;
    parts.reserve(static_cast<std::size_t>(heads));
    const T inv_sqrt_dk = T(1) / std::sqrt(static_cast<T>(dk));
    for (int h = 0; h < heads; ++h) {
      int qh = g_.slice_cols(q, h * dk, dk);
      int kh = g_.slice_cols(k, h * dk, dk);
      int vh = g_.slice_cols(v, h * dk, dk);
      int scores = g_.scale(g_.matmul_nt(qh, kh), inv_sqrt_dk);
      int attn = g_.softmax_rows(scores, causal);
      parts.push_back(g_.matmul(attn, vh));
    }
    int ctx = g_.concat_cols(parts);
    int out = g_.add_rowvec(g_.matmul(ctx, pnode(prefix + "wo")), pnode(prefix + "bo"));
    return apply_dropout(out);
  }

  int ffn(const std::string& prefix, int x) {
    int h = g_.relu(g_.add_rowvec(g_.matmul(x, pnode(prefix + "w1")), pnode(prefix + "b1")));
    int out = g_.add_rowvec(g_.matmul(h, pnode(prefix + "w2")), pnode(prefix + "b2"));
    return apply_dropout(out);
  }

  int layer_norm(const std::string& prefix, int x) {
    return g_.layer_norm(x, pnode(prefix + "g"), pnode(prefix + "b"));
  }

  int encoder(const std::vector<int>& src) {
    int x = embed("src_embed", src);
    for (int l = 0; l < model_.config.layers; ++l) {
      std::string p = "enc." + std::to_string(l) + ".";
      int a = layer_norm(p + "ln1.", x);
      x = g_.add(x, mha(p + "attn.", a, a, /*causal=*/false));
      x = g_.add(x, ffn(p + "ffn.", layer_norm(p + "ln2.", x)));
    }
    return layer_norm("enc.ln_out.", x);
  }

  int decoder(int memory, const std::vector<int>& dec_in) {
    int y = embed("tgt_embed", dec_in);
    for (int l = 0; l < model_.config.layers; ++l) {
      std::string p = "dec." + std::to_string(l) + ".";
      int a = layer_norm(p + "ln1.", y);
      y = g_.add(y, mha(p + "self.", a, a, /*causal=*/true));
      int c = layer_norm(p + "ln2.", y);
      y = g_.add(y, mha(p + "cross.", c, memory, /*causal=*/false));
      y = g_.add(y, ffn(p + "ffn.", layer_norm(p + "ln3.", y)));
    }
    return layer_norm("dec.ln_out.", y);
  }

  // Summed smoothed cross entropy of one example; adds its token count.
  int sentence_loss(const TrainingExample& ex, double smoothing, std::size_t* tokens) {
    check_ids(ex.src, model_.config.src_vocab_size, model_.config.max_positions, "source");
    check_ids(ex.dec_in, model_.config.tgt_vocab_size, model_.config.max_positions, "target prefix");
    int memory = encoder(ex.src);
    int y = decoder(memory, ex.dec_in);
    int logits = g_.matmul_nt(y, pnode("tgt_embed"));
    std::size_t count = 0;
    int ce = g_.cross_entropy_sum(logits, ex.labels, smoothing, kPadId, &count);
    if (tokens) *tokens += count;
    return ce;
  }

 private:
  int apply_dropout(int x) {
    return g_.dropout(x, model_.config.dropout, *dropout_rng_, training_);
  }

  const Seq2SeqModelT<T>& model_;
  Graph<T> g_;
  std::vector<Mat<T>>* grads_;
  bool training_;
  Rng* dropout_rng_;
  std::unordered_map<int, int> param_nodes_;
};

template <typename T>
std::vector<Mat<T>> make_grad_buffers(const Seq2SeqModelT<T>& model) {
  std::vector<Mat<T>> grads;
  grads.reserve(model.params.size());
  for (const auto& p : model.params)
    grads.push_back(Mat<T>::Zero(p.value.rows(), p.value.cols()));
  return grads;
}

// Batch loss value and gradient (mean over contributing tokens).
template <typename T>
double batch_loss_and_grad(const Seq2SeqModelT<T>& model,
                           const std::vector<const TrainingExample*>& batch, double smoothing,
                           std::vector<Mat<T>>* grads, bool training, Rng* dropout_rng,
                           bool want_grad) {
  BatchGraph<T> bg(model, grads, training, dropout_rng);
  std::size_t tokens = 0;
  int total = -1;
  for (const auto* ex : batch) {
    int ce = bg.sentence_loss(*ex, smoothing, &tokens);
    total = total < 0 ? ce : bg.graph().add(total, ce);
  }
  if (tokens == 0) return 0.0;
  double value = static_cast<double>(bg.graph().value(total)(0, 0)) / static_cast<double>(tokens);
  if (want_grad)
    bg.graph().backward(total, static_cast<T>(1.0 / static_cast<double>(tokens)));
  return value;
}

}  // namespace

// ---------------------------------------------------------------------------
// Encoding helpers
// ---------------------------------------------------------------------------

std::vector<int> encode_source_ids(const Vocabulary& vocab, const std::vector<std::string>& tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size() + 2);
  std::size_t start = 0;
  if (!tokens.empty() && DomainTag::is_tag_surface(tokens[0])) {
    ids.push_back(vocab.id(tokens[0]));
    start = 1;
  } else {
    ids.push_back(kBosId);
  }
  for (std::size_t i = start; i < tokens.size(); ++i) ids.push_back(vocab.id(tokens[i]));
  ids.push_back(kEosId);
  return ids;
}

TrainingExample make_training_example(const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                                       const TaggedSentencePair& pair) {
  TrainingExample ex;
  ex.src = encode_source_ids(src_vocab, pair.source);
  int start = kBosId;
  std::size_t begin = 0;
  if (!pair.target.empty() && DomainTag::is_tag_surface(pair.target[0])) {
    start = tgt_vocab.id(pair.target[0]);
    begin = 1;
  }
  ex.dec_in.push_back(start);
  for (std::size_t i = begin; i < pair.target.size(); ++i) {
    ex.dec_in.push_back(tgt_vocab.id(pair.target[i]));
    ex.labels.push_back(tgt_vocab.id(pair.target[i]));
  }
  ex.labels.push_back(kEosId);
  return ex;
}

std::vector<TrainingExample> encode_corpus(const Corpus& corpus, const Vocabulary& src_vocab,
                                           const Vocabulary& tgt_vocab) {
  std::vector<TrainingExample> out;
  out.reserve(corpus.pairs.size());
  for (const auto& pair : corpus.pairs)
    out.push_back(make_training_example(src_vocab, tgt_vocab, pair));
  return out;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

template <typename T>
double evaluate_loss(const Seq2SeqModelT<T>& model, const std::vector<TrainingExample>& examples,
                     double smoothing) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& ex : examples) {
    EncodedSource<T> enc = encode_source_states(model, ex.src);
    Mat<T> logits = decoder_logits(model, enc, ex.dec_in);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      int ref = ex.labels[static_cast<std::size_t>(r)];
      if (ref == kPadId) continue;
      double max_v = static_cast<double>(logits.row(r).maxCoeff());
      double sum_exp = 0.0;
      double sum_z = 0.0;
      for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        double z = static_cast<double>(logits(r, c));
        sum_exp += std::exp(z - max_v);
        sum_z += z;
      }
      double lse = max_v + std::log(sum_exp);
      double expected = (1.0 - smoothing) * static_cast<double>(logits(r, ref)) +
                        smoothing / static_cast<double>(logits.cols()) * sum_z;
      total += lse - expected;
      ++tokens;
    }
  }
  return tokens == 0 ? 0.0 : total / static_cast<double>(tokens);
}

template <typename T>
TrainStateT<T> train(Seq2SeqModelT<T>& model, const std::vector<TrainingExample>& examples,
                     const TrainOptions& options) {
  if (examples.empty()) throw Error("train: no training examples");
  const double smoothing =
      options.label_smoothing >= 0.0 ? options.label_smoothing : model.config.label_smoothing;

  TrainStateT<T> state;
  for (const auto& ex : examples)
    if (!ex.dec_in.empty()) state.observed_start_tokens.insert(ex.dec_in[0]);
  state.adam_m.reserve(model.params.size());
  state.adam_v.reserve(model.params.size());
  for (const auto& p : model.params) {
    state.adam_m.push_back(Mat<T>::Zero(p.value.rows(), p.value.cols()));
    state.adam_v.push_back(Mat<T>::Zero(p.value.rows(), p.value.cols()));
  }
  auto grads = make_grad_buffers(model);

  // Last-good snapshot for divergence recovery.
  std::vector<Mat<T>> snapshot;
  auto take_snapshot = [&]() {
    snapshot.clear();
    for (const auto& p : model.params) snapshot.push_back(p.value);
  };
  take_snapshot();

  Rng order_rng(derive_seed(options.seed, "batch-order"));
  Rng dropout_rng(derive_seed(options.seed, "dropout"));
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  deterministic_shuffle(order, order_rng());
  std::size_t cursor = 0;

  const double beta1 = 0.9, beta2 = 0.98, adam_eps = 1e-9;
  const double d_scale = std::pow(static_cast<double>(model.config.d_model), -0.5);
  const double warmup = static_cast<double>(std::max(1, options.warmup_steps));
  double beta1_t = 1.0, beta2_t = 1.0;

  bool stopped_early = false;
  for (int step = 1; step <= options.steps && !stopped_early; ++step) {
    std::vector<const TrainingExample*> batch;
    batch.reserve(static_cast<std::size_t>(options.batch_size));
    for (int b = 0; b < options.batch_size; ++b) {
      if (cursor >= order.size()) {
        deterministic_shuffle(order, order_rng());
        cursor = 0;
      }
      batch.push_back(&examples[order[cursor++]]);
    }

    for (auto& g : grads) g.setZero();
    double batch_loss =
        batch_loss_and_grad(model, batch, smoothing, &grads, /*training=*/true, &dropout_rng,
                            /*want_grad=*/true);
    if (!std::isfinite(batch_loss)) {
      for (std::size_t i = 0; i < model.params.size(); ++i) model.params[i].value = snapshot[i];
      state.diverged = true;
      state.step = step - 1;
      std::cerr << "train: non-finite loss at step " << step << ", restored last snapshot\n";
      break;
    }
    state.loss_curve.emplace_back(step, batch_loss);
    state.step = step;

    const double t = static_cast<double>(step);
    const double lr = options.lr_factor * d_scale *
                      std::min(1.0 / std::sqrt(t), t / (warmup * std::sqrt(warmup)));
    beta1_t *= beta1;
    beta2_t *= beta2;
    const T bias1 = static_cast<T>(1.0 / (1.0 - beta1_t));
    const T bias2 = static_cast<T>(1.0 / (1.0 - beta2_t));
    for (std::size_t i = 0; i < model.params.size(); ++i) {
      auto& m = state.adam_m[i];
      auto& v = state.adam_v[i];
      const auto& g = grads[i];
      m = m * static_cast<T>(beta1) + g * static_cast<T>(1.0 - beta1);
      v.array() = v.array() * static_cast<T>(beta2) +
                  g.array().square() * static_cast<T>(1.0 - beta2);
      model.params[i].value.array() -=
          static_cast<T>(lr) * (m.array() * bias1) /
          ((v.array() * bias2).sqrt() + static_cast<T>(adam_eps));
    }

    if (options.checkpoint_every > 0 && step % options.checkpoint_every == 0) {
      take_snapshot();
      if (options.checkpoint_hook) options.checkpoint_hook(step);
    }
    if (options.log_every > 0 && step % options.log_every == 0)
      std::cerr << "train: step " << step << " loss " << batch_loss << "\n";
    if (options.stop_at_loss > 0.0 && options.eval_every > 0 && step % options.eval_every == 0) {
      double full = evaluate_loss(model, examples, smoothing);
      if (full < options.stop_at_loss) stopped_early = true;
    }
  }

  state.final_loss = evaluate_loss(model, examples, smoothing);
  return state;
}

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------

GradCheckResult gradient_check(const Seq2SeqModelT<double>& model,
                               const std::vector<TrainingExample>& batch, double epsilon,
                               int num_coords, std::uint64_t seed) {
  if (batch.empty()) throw Error("gradient_check: empty batch");
  if (num_coords <= 0) throw Error("gradient_check: need at least one coordinate");

  Seq2SeqModelT<double> m = model;  // perturbable copy
  std::vector<const TrainingExample*> refs;
  refs.reserve(batch.size());
  for (const auto& ex : batch) refs.push_back(&ex);
  const double smoothing = m.config.label_smoothing;

  Rng unused_rng(0);
  auto grads = make_grad_buffers(m);
  double base = batch_loss_and_grad(m, refs, smoothing, &grads, /*training=*/false, &unused_rng,
                                    /*want_grad=*/true);
  if (!std::isfinite(base)) throw Error("gradient_check: non-finite loss");

  auto loss_only = [&]() {
    auto dummy = make_grad_buffers(m);
    double v = batch_loss_and_grad(m, refs, smoothing, &dummy, /*training=*/false, &unused_rng,
                                   /*want_grad=*/false);
    if (!std::isfinite(v)) throw Error("gradient_check: non-finite loss under perturbation");
    return v;
  };

  // Cumulative parameter sizes for numel-weighted coordinate sampling.
  std::vector<std::size_t> cumulative;
  std::size_t total_numel = 0;
  for (const auto& p : m.params) {
    total_numel += static_cast<std::size_t>(p.value.size());
    cumulative.push_back(total_numel);
  }

  Rng rng(seed);
  GradCheckResult result;
  for (int k = 0; k < num_coords; ++k) {
    std::size_t param_idx, flat;
    if (k % 2 == 0) {
      // numel-weighted draw
      std::size_t target = static_cast<std::size_t>(uniform_index(rng, total_numel));
      param_idx = 0;
      while (cumulative[param_idx] <= target) ++param_idx;
      flat = target - (param_idx == 0 ? 0 : cumulative[param_idx - 1]);
    } else {
      // uniform over parameters, then over coordinates: covers small tensors
      param_idx = static_cast<std::size_t>(uniform_index(rng, m.params.size()));
      flat = static_cast<std::size_t>(
          uniform_index(rng, static_cast<std::uint64_t>(m.params[param_idx].value.size())));
    }
    auto& tensor = m.params[param_idx].value;
    const Eigen::Index r = static_cast<Eigen::Index>(flat) / tensor.cols();
    const Eigen::Index c = static_cast<Eigen::Index>(flat) % tensor.cols();
    const double original = tensor(r, c);
    tensor(r, c) = original + epsilon;
    const double plus = loss_only();
    tensor(r, c) = original - epsilon;
    const double minus = loss_only();
    tensor(r, c) = original;
    const double numeric = (plus - minus) / (2.0 * epsilon);
    const double analytic = grads[param_idx](r, c);
    const double rel =
        std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-3});
    result.max_rel_error = std::max(result.max_rel_error, rel);
    ++result.coords_checked;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

void write_exact(std::ofstream& out, const void* data, std::size_t size) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw CheckpointError("checkpoint write failure");
}

void read_exact(std::ifstream& in, void* data, std::size_t size) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
  if (in.gcount() != static_cast<std::streamsize>(size))
    throw CheckpointError("truncated or unreadable checkpoint");
}

constexpr char kMagic[8] = {'R', 'M', 'T', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

json vocab_to_json(const Vocabulary& vocab) {
  return json(vocab.symbols());
}

Vocabulary vocab_from_json(const json& j) {
  Vocabulary vocab;
  const auto symbols = j.get<std::vector<std::string>>();
  if (symbols.size() < static_cast<std::size_t>(kNumReserved))
    throw CheckpointError("checkpoint vocabulary is missing the reserved block");
  for (int i = 0; i < kNumReserved; ++i)
    if (symbols[static_cast<std::size_t>(i)] != reserved_tokens()[static_cast<std::size_t>(i)])
      throw CheckpointError("checkpoint vocabulary reserved block is corrupt");
  for (std::size_t i = kNumReserved; i < symbols.size(); ++i) vocab.add(symbols[i]);
  return vocab;
}

}  // namespace

void save_checkpoint(const Seq2SeqModel& model, const Vocabulary& src_vocab,
                     const Vocabulary& tgt_vocab, const std::map<std::string, std::string>& meta,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  write_exact(out, kMagic, sizeof(kMagic));
  write_exact(out, &kVersion, sizeof(kVersion));
  json header{{"config", config_to_json(model.config)},
              {"src_vocab", vocab_to_json(src_vocab)},
              {"tgt_vocab", vocab_to_json(tgt_vocab)},
              {"meta", meta},
              {"dtype", "f32"},
              {"endianness", "little"}};
  const std::string header_text = header.dump();
  const std::uint64_t header_len = header_text.size();
  write_exact(out, &header_len, sizeof(header_len));
  write_exact(out, header_text.data(), header_text.size());
  const std::uint64_t n_tensors = model.params.size();
  write_exact(out, &n_tensors, sizeof(n_tensors));
  for (const auto& p : model.params) {
    const std::uint16_t name_len = static_cast<std::uint16_t>(p.name.size());
    write_exact(out, &name_len, sizeof(name_len));
    write_exact(out, p.name.data(), p.name.size());
    const std::uint8_t dtype = 1;  // f32
    write_exact(out, &dtype, sizeof(dtype));
    const std::uint64_t rows = static_cast<std::uint64_t>(p.value.rows());
    const std::uint64_t cols = static_cast<std::uint64_t>(p.value.cols());
    write_exact(out, &rows, sizeof(rows));
    write_exact(out, &cols, sizeof(cols));
    write_exact(out, p.value.data(), static_cast<std::size_t>(p.value.size()) * sizeof(float));
  }
  out.flush();
  if (!out) throw CheckpointError("checkpoint write failure: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  read_exact(in, magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("bad checkpoint magic: " + path);
  std::uint32_t version = 0;
  read_exact(in, &version, sizeof(version));
  if (version != kVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  std::uint64_t header_len = 0;
  read_exact(in, &header_len, sizeof(header_len));
  if (header_len > (1ULL << 32)) throw CheckpointError("implausible checkpoint header size");
  std::string header_text(header_len, '\0');
  read_exact(in, header_text.data(), header_text.size());
  json header = json::parse(header_text, nullptr, /*allow_exceptions=*/false);
  if (header.is_discarded()) throw CheckpointError("corrupt checkpoint header JSON");
  if (header.value("endianness", "little") != "little")
    throw CheckpointError("unsupported checkpoint endianness");

  Checkpoint ckpt;
  ckpt.model = model_shell<float>(config_from_json(header.at("config")));
  ckpt.src_vocab = vocab_from_json(header.at("src_vocab"));
  ckpt.tgt_vocab = vocab_from_json(header.at("tgt_vocab"));
  if (header.contains("meta"))
    ckpt.meta = header.at("meta").get<std::map<std::string, std::string>>();
  if (ckpt.src_vocab.size() != ckpt.model.config.src_vocab_size ||
      ckpt.tgt_vocab.size() != ckpt.model.config.tgt_vocab_size)
    throw CheckpointError("checkpoint vocab sizes disagree with config");

  std::uint64_t n_tensors = 0;
  read_exact(in, &n_tensors, sizeof(n_tensors));
  if (n_tensors != ckpt.model.params.size())
    throw ShapeError("checkpoint holds " + std::to_string(n_tensors) + " tensors, config needs " +
                     std::to_string(ckpt.model.params.size()));
  std::vector<bool> seen(ckpt.model.params.size(), false);
  for (std::uint64_t t = 0; t < n_tensors; ++t) {
    std::uint16_t name_len = 0;
    read_exact(in, &name_len, sizeof(name_len));
    std::string name(name_len, '\0');
    read_exact(in, name.data(), name.size());
    std::uint8_t dtype = 0;
    read_exact(in, &dtype, sizeof(dtype));
    if (dtype != 1) throw CheckpointError("unsupported tensor dtype in checkpoint");
    std::uint64_t rows = 0, cols = 0;
    read_exact(in, &rows, sizeof(rows));
    read_exact(in, &cols, sizeof(cols));
    auto it = ckpt.model.param_index.find(name);
    if (it == ckpt.model.param_index.end())
      throw ShapeError("unexpected tensor in checkpoint: " + name);
    Mat<float>& dst = ckpt.model.params[static_cast<std::size_t>(it->second)].value;
    if (rows != static_cast<std::uint64_t>(dst.rows()) ||
        cols != static_cast<std::uint64_t>(dst.cols()))
      throw ShapeError("shape mismatch for tensor " + name);
    read_exact(in, dst.data(), static_cast<std::size_t>(dst.size()) * sizeof(float));
    if (!all_finite(dst)) throw CheckpointError("non-finite values in tensor " + name);
    seen[static_cast<std::size_t>(it->second)] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) throw ShapeError("checkpoint is missing tensor " + ckpt.model.params[i].name);
  return ckpt;
}

void load_checkpoint_into(Seq2SeqModel& model, const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (!same_shape_config(ckpt.model.config, model.config))
    throw ShapeError("checkpoint config does not match the target model configuration");
  for (std::size_t i = 0; i < model.params.size(); ++i)
    model.params[i].value = ckpt.model.params[i].value;
}

// ---------------------------------------------------------------------------
// Explicit instantiations
// ---------------------------------------------------------------------------

template struct Seq2SeqModelT<float>;
template struct Seq2SeqModelT<double>;
template Seq2SeqModelT<float> init_model<float>(const ModelConfig&);
template Seq2SeqModelT<double> init_model<double>(const ModelConfig&);
template std::uint64_t model_checksum<float>(const Seq2SeqModelT<float>&);
template std::uint64_t model_checksum<double>(const Seq2SeqModelT<double>&);
template EncodedSource<float> encode_source_states<float>(const Seq2SeqModelT<float>&,
                                                          const std::vector<int>&);
template EncodedSource<double> encode_source_states<double>(const Seq2SeqModelT<double>&,
                                                            const std::vector<int>&);
template Mat<float> decoder_logits<float>(const Seq2SeqModelT<float>&, const EncodedSource<float>&,
                                          const std::vector<int>&);
template Mat<double> decoder_logits<double>(const Seq2SeqModelT<double>&,
                                            const EncodedSource<double>&, const std::vector<int>&);
template std::vector<TokenDistribution> forward<float>(const Seq2SeqModelT<float>&,
                                                       const std::vector<int>&,
                                                       const std::vector<int>&);
template std::vector<TokenDistribution> forward<double>(const Seq2SeqModelT<double>&,
                                                        const std::vector<int>&,
                                                        const std::vector<int>&);
template double evaluate_loss<float>(const Seq2SeqModelT<float>&,
                                     const std::vector<TrainingExample>&, double);
template double evaluate_loss<double>(const Seq2SeqModelT<double>&,
                                      const std::vector<TrainingExample>&, double);
template TrainStateT<float> train<float>(Seq2SeqModelT<float>&,
                                         const std::vector<TrainingExample>&, const TrainOptions&);
template TrainStateT<double> train<double>(Seq2SeqModelT<double>&,
                                           const std::vector<TrainingExample>&,
                                           const TrainOptions&);

}  // namespace rmt
