#pragma once

#include <set>
#include <string>
#include <vector>

#include "robustmt/model.hpp"

namespace rmt {

// ---------------------------------------------------------------------------
// Beam search with a per-token additive length reward, over one model or an
// ensemble whose per-step output distributions are averaged componentwise in
// probability space.
// ---------------------------------------------------------------------------

struct BeamHypothesis {
  std::vector<int> ids;  // start token, emitted tokens, then </s> if finished
  double logp = 0.0;     // sum of per-step log of the chosen-token probability
  bool finished = false;

  // Emitted target tokens: start excluded, </s> excluded.
  std::size_t length() const {
    std::size_t n = ids.empty() ? 0 : ids.size() - 1;
    if (finished && n > 0) --n;
    return n;
  }
};

enum class AveragingSpace { Probability };

struct EnsembleSpec {
  std::vector<const Seq2SeqModel*> members;
  AveragingSpace averaging = AveragingSpace::Probability;
  const Vocabulary* src_vocab = nullptr;
  const Vocabulary* tgt_vocab = nullptr;
  // Decoder start ids the members were trained with (from checkpoint
  // metadata); empty means unknown, which skips the tag/model check.
  std::set<int> trained_start_tokens;
};

// Validates member compatibility (shared vocabularies) and builds the spec.
EnsembleSpec make_ensemble(const std::vector<Checkpoint>& checkpoints);

// Componentwise arithmetic mean of the member distributions (Eq. of the
// ensembling method: y_t = sum_i y_t^i / N).
TokenDistribution ensemble_step(const std::vector<TokenDistribution>& member_distributions);

struct DecodeConfig {
  int beam_size = 4;
  double length_reward = 0.0;
  int max_len = 64;  // emitted-token cap
};

// Standard beam expansion over ensemble-averaged distributions. Hypothesis
// score = logp + length_reward * emitted token count. Finished hypotheses
// stay in the beam as incumbents and are not expanded. Returns the best
// finished hypothesis (best unfinished if nothing finished by max_len).
BeamHypothesis beam_search(const EnsembleSpec& ensemble, const std::vector<int>& src_ids,
                           int start_token, const DecodeConfig& config);

// Full sorted candidate pool from the same search, best first.
std::vector<BeamHypothesis> beam_search_nbest(const EnsembleSpec& ensemble,
                                              const std::vector<int>& src_ids, int start_token,
                                              const DecodeConfig& config, std::size_t n);

// Independent argmax decoder used as the beam_size=1 reference.
BeamHypothesis greedy_decode(const EnsembleSpec& ensemble, const std::vector<int>& src_ids,
                             int start_token, int max_len);

// ---------------------------------------------------------------------------
// N-best rescoring.
// ---------------------------------------------------------------------------

struct NBestEntry {
  std::vector<int> ids;
  double logp = 0.0;
  std::size_t length = 0;
};

// argmax of logp + reward * length; ties break to the shorter hypothesis,
// then to the lexicographically smaller id sequence.
const NBestEntry& rescore(const std::vector<NBestEntry>& hypotheses, double length_reward);

// "sentence_index ||| detokenized text ||| logp ||| length"
std::string format_nbest_line(std::size_t sentence_index, const std::string& text, double logp,
                              std::size_t length);

}  // namespace rmt
