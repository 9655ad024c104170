#include "robustmt/decode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "robustmt/errors.hpp"

namespace rmt {

EnsembleSpec make_ensemble(const std::vector<Checkpoint>& checkpoints) {
  if (checkpoints.empty()) throw Error("make_ensemble: no checkpoints");
  EnsembleSpec spec;
  const auto& first = checkpoints.front();
  spec.src_vocab = &first.src_vocab;
  spec.tgt_vocab = &first.tgt_vocab;
  for (const auto& ckpt : checkpoints) {
    if (!(ckpt.src_vocab == first.src_vocab) || !(ckpt.tgt_vocab == first.tgt_vocab))
      throw Error("make_ensemble: members do not share vocabularies");
    spec.members.push_back(&ckpt.model);
    auto it = ckpt.meta.find("start_tokens");
    if (it != ckpt.meta.end()) {
      std::stringstream ss(it->second);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) spec.trained_start_tokens.insert(std::stoi(item));
    }
  }
  return spec;
}

TokenDistribution ensemble_step(const std::vector<TokenDistribution>& member_distributions) {
  if (member_distributions.empty()) throw Error("ensemble_step: no member distributions");
  const std::size_t vocab = member_distributions.front().probs.size();
  for (const auto& d : member_distributions)
    if (d.probs.size() != vocab)
      throw ShapeError("ensemble_step: member distribution lengths differ");
  // Pairwise (tree) summation: an ensemble of identical members then averages
  // bit-exactly for power-of-two N, so it decodes identically to one member.
  std::vector<std::vector<double>> level;
  level.reserve(member_distributions.size());
  for (const auto& d : member_distributions) level.push_back(d.probs);
  while (level.size() > 1) {
    std::vector<std::vector<double>> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      for (std::size_t k = 0; k < vocab; ++k) level[i][k] += level[i + 1][k];
      next.push_back(std::move(level[i]));
    }
    if (level.size() % 2 == 1) next.push_back(std::move(level.back()));
    level = std::move(next);
  }
  TokenDistribution out;
  out.position = member_distributions.front().position;
  out.probs = std::move(level.front());
  const double inv_n = 1.0 / static_cast<double>(member_distributions.size());
  for (double& p : out.probs) p *= inv_n;
  return out;
}

namespace {

// Next-token distribution for one prefix under the ensemble, with per-member
// cached encoder states.
template <typename MemoryVec>
TokenDistribution ensemble_next(const EnsembleSpec& ensemble, const MemoryVec& memories,
                                const std::vector<int>& prefix) {
  std::vector<TokenDistribution> member_dists;
  member_dists.reserve(ensemble.members.size());
  for (std::size_t m = 0; m < ensemble.members.size(); ++m) {
    const Seq2SeqModel& model = *ensemble.members[m];
    Mat<float> logits = decoder_logits(model, memories[m], prefix);
    const Eigen::Index last = logits.rows() - 1;
    TokenDistribution dist;
    dist.position = static_cast<int>(prefix.size()) - 1;
    dist.probs.resize(static_cast<std::size_t>(logits.cols()));
    double max_v = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < logits.cols(); ++c)
      max_v = std::max(max_v, static_cast<double>(logits(last, c)));
    double sum = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      double e = std::exp(static_cast<double>(logits(last, c)) - max_v);
      dist.probs[static_cast<std::size_t>(c)] = e;
      sum += e;
    }
    for (double& p : dist.probs) p /= sum;
    member_dists.push_back(std::move(dist));
  }
  return ensemble_step(member_dists);
}

std::vector<EncodedSource<float>> encode_members(const EnsembleSpec& ensemble,
                                                 const std::vector<int>& src_ids) {
  if (ensemble.members.empty()) throw Error("decode: empty ensemble");
  if (src_ids.empty()) throw Error("decode: empty source");
  std::vector<EncodedSource<float>> memories;
  memories.reserve(ensemble.members.size());
  for (const auto* model : ensemble.members)
    memories.push_back(encode_source_states(*model, src_ids));
  return memories;
}

double hyp_score(const BeamHypothesis& h, double length_reward) {
  return h.logp + length_reward * static_cast<double>(h.length());
}

// Deterministic total order: score desc, then shorter, then smaller ids.
bool better(const BeamHypothesis& a, const BeamHypothesis& b, double reward) {
  double sa = hyp_score(a, reward), sb = hyp_score(b, reward);
  if (sa != sb) return sa > sb;
  if (a.ids.size() != b.ids.size()) return a.ids.size() < b.ids.size();
  return a.ids < b.ids;
}

std::vector<BeamHypothesis> run_beam(const EnsembleSpec& ensemble, const std::vector<int>& src_ids,
                                     int start_token, const DecodeConfig& config) {
  if (config.beam_size < 1) throw Error("beam_search: beam_size must be >= 1");
  auto memories = encode_members(ensemble, src_ids);
  if (!ensemble.trained_start_tokens.empty() &&
      !ensemble.trained_start_tokens.count(start_token))
    throw Error("beam_search: start token " + std::to_string(start_token) +
                " was not seen at training time");

  std::vector<BeamHypothesis> beam{BeamHypothesis{{start_token}, 0.0, false}};
  for (int step = 0; step < config.max_len; ++step) {
    bool any_unfinished = false;
    std::vector<BeamHypothesis> candidates;
    for (const auto& hyp : beam) {
      if (hyp.finished) {
        candidates.push_back(hyp);  // incumbent, not expanded
        continue;
      }
      any_unfinished = true;
      TokenDistribution dist = ensemble_next(ensemble, memories, hyp.ids);
      for (std::size_t tok = 0; tok < dist.probs.size(); ++tok) {
        if (static_cast<int>(tok) == kPadId) continue;
        BeamHypothesis next = hyp;
        next.ids.push_back(static_cast<int>(tok));
        next.logp += std::log(std::max(dist.probs[tok], 1e-300));
        next.finished = static_cast<int>(tok) == kEosId;
        candidates.push_back(std::move(next));
      }
    }
    if (!any_unfinished) break;
    std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(config.beam_size),
                                             candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), [&](const BeamHypothesis& a, const BeamHypothesis& b) {
                        return better(a, b, config.length_reward);
                      });
    candidates.resize(keep);
    beam = std::move(candidates);
  }
  std::sort(beam.begin(), beam.end(), [&](const BeamHypothesis& a, const BeamHypothesis& b) {
    if (a.finished != b.finished) return a.finished;  // finished first
    return better(a, b, config.length_reward);
  });
  return beam;
}

}  // namespace

BeamHypothesis beam_search(const EnsembleSpec& ensemble, const std::vector<int>& src_ids,
                           int start_token, const DecodeConfig& config) {
  return run_beam(ensemble, src_ids, start_token, config).front();
}

std::vector<BeamHypothesis> beam_search_nbest(const EnsembleSpec& ensemble,
                                              const std::vector<int>& src_ids, int start_token,
                                              const DecodeConfig& config, std::size_t n) {
  auto beam = run_beam(ensemble, src_ids, start_token, config);
  if (beam.size() > n) beam.resize(n);
  return beam;
}

BeamHypothesis greedy_decode(const EnsembleSpec& ensemble, const std::vector<int>& src_ids,
                             int start_token, int max_len) {
  auto memories = encode_members(ensemble, src_ids);
  BeamHypothesis hyp{{start_token}, 0.0, false};
  for (int step = 0; step < max_len && !hyp.finished; ++step) {
    TokenDistribution dist = ensemble_next(ensemble, memories, hyp.ids);
    std::size_t best = 0;
    double best_p = -1.0;
    for (std::size_t tok = 0; tok < dist.probs.size(); ++tok) {
      if (static_cast<int>(tok) == kPadId) continue;
      if (dist.probs[tok] > best_p) {
        best_p = dist.probs[tok];
        best = tok;
      }
    }
    hyp.ids.push_back(static_cast<int>(best));
    hyp.logp += std::log(std::max(best_p, 1e-300));
    hyp.finished = static_cast<int>(best) == kEosId;
  }
  return hyp;
}

const NBestEntry& rescore(const std::vector<NBestEntry>& hypotheses, double length_reward) {
  if (hypotheses.empty()) throw Error("rescore: empty n-best list");
  const NBestEntry* best = nullptr;
  for (const auto& h : hypotheses) {
    if (!best) {
      best = &h;
      continue;
    }
    double sh = h.logp + length_reward * static_cast<double>(h.length);
    double sb = best->logp + length_reward * static_cast<double>(best->length);
    if (sh > sb || (sh == sb && (h.length < best->length ||
                                 (h.length == best->length && h.ids < best->ids))))
      best = &h;
  }
  return *best;
}

std::string format_nbest_line(std::size_t sentence_index, const std::string& text, double logp,
                              std::size_t length) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << sentence_index << " ||| " << text << " ||| " << logp << " ||| " << length;
  return out.str();
}

}  // namespace rmt
