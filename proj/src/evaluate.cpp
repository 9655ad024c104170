#include <iostream>

#include "robustmt/eval.hpp"
#include "robustmt/subword.hpp"
#include "robustmt/text.hpp"
#include "robustmt/util.hpp"

namespace rmt {

namespace {

// subword tokens -> plain words -> detokenized surface text
std::string tokens_to_surface(const std::vector<std::string>& tokens) {
  return detokenize(split_whitespace(decode_bpe(tokens)));
}

}  // namespace

EvalResult evaluate_system(const EnsembleSpec& ensemble, const Corpus& testset,
                           const DecodeConfig& config, int start_token) {
  if (testset.pairs.empty()) throw Error("evaluate_system: empty testset");
  if (!ensemble.src_vocab || !ensemble.tgt_vocab)
    throw Error("evaluate_system: ensemble is missing vocabularies");

  EvalResult result;
  std::vector<std::string> references;
  references.reserve(testset.pairs.size());
  result.hypotheses.reserve(testset.pairs.size());
  for (const auto& pair : testset.pairs) {
    std::string hyp_text;
    try {
      std::vector<int> src_ids = encode_source_ids(*ensemble.src_vocab, pair.source);
      BeamHypothesis hyp = beam_search(ensemble, src_ids, start_token, config);
      std::vector<std::string> tokens;
      for (std::size_t i = 1; i < hyp.ids.size(); ++i)
        if (hyp.ids[i] >= kNumReserved) tokens.push_back(ensemble.tgt_vocab->symbol(hyp.ids[i]));
      hyp_text = tokens_to_surface(tokens);
    } catch (const Error& e) {
      ++result.decode_errors;
      std::cerr << "evaluate_system: decode error: " << e.what() << "\n";
      hyp_text.clear();
    }
    result.hypotheses.push_back(std::move(hyp_text));
    references.push_back(tokens_to_surface(pair.target));
  }

  BleuOptions cased;
  result.cased = corpus_bleu(result.hypotheses, references, cased);
  BleuOptions lower;
  lower.lowercase = true;
  result.lowercased = corpus_bleu(result.hypotheses, references, lower);
  return result;
}

}  // namespace rmt
