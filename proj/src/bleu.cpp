#include "robustmt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "robustmt/errors.hpp"
#include "robustmt/text.hpp"
#include "robustmt/util.hpp"

namespace rmt {

namespace {

std::string lowercase_ascii(const std::string& text) {
  std::string out = text;
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

// n-gram key: tokens joined by \x1f (tokens never contain control bytes
// after whitespace splitting).
std::string ngram_key(const std::vector<std::string>& tokens, std::size_t start, std::size_t n) {
  std::string key;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) key += '\x1f';
    key += tokens[start + i];
  }
  return key;
}

}  // namespace

BleuReport corpus_bleu(const std::vector<std::string>& hypotheses,
                       const std::vector<std::string>& references,
                       const BleuOptions& options) {
  if (hypotheses.size() != references.size())
    throw Error("corpus_bleu: " + std::to_string(hypotheses.size()) + " hypotheses vs " +
                std::to_string(references.size()) + " references");

  BleuReport report;
  report.lowercased = options.lowercase;
  report.smoothed = options.smooth;

  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    std::string hyp_text = options.lowercase ? lowercase_ascii(hypotheses[s]) : hypotheses[s];
    std::string ref_text = options.lowercase ? lowercase_ascii(references[s]) : references[s];
    auto hyp = intl_tokenize(hyp_text);
    auto ref = intl_tokenize(ref_text);
    report.hyp_len += hyp.size();
    report.ref_len += ref.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      if (hyp.size() < n) continue;
      std::unordered_map<std::string, std::size_t> ref_counts;
      if (ref.size() >= n)
        for (std::size_t i = 0; i + n <= ref.size(); ++i) ++ref_counts[ngram_key(ref, i, n)];
      std::unordered_map<std::string, std::size_t> hyp_counts;
      for (std::size_t i = 0; i + n <= hyp.size(); ++i) ++hyp_counts[ngram_key(hyp, i, n)];
      std::size_t matched = 0;
      std::size_t total = 0;
      for (const auto& [key, count] : hyp_counts) {
        total += count;
        auto it = ref_counts.find(key);
        if (it != ref_counts.end()) matched += std::min(count, it->second);
      }
      report.matched[n - 1] += matched;
      report.total[n - 1] += total;
    }
  }

  // Precisions and geometric mean. With exponential smoothing, each
  // zero-match order n is scored as 1 / (2^k * total_n) with k counting the
  // zero orders seen so far.
  double log_precision_sum = 0.0;
  bool any_zero = false;
  int smooth_exponent = 0;
  for (std::size_t n = 0; n < 4; ++n) {
    double p = 0.0;
    if (report.total[n] == 0) {
      p = 0.0;
      any_zero = true;
    } else if (report.matched[n] == 0) {
      if (options.smooth) {
        ++smooth_exponent;
        p = 1.0 / (std::pow(2.0, smooth_exponent) * static_cast<double>(report.total[n]));
      } else {
        p = 0.0;
        any_zero = true;
      }
    } else {
      p = static_cast<double>(report.matched[n]) / static_cast<double>(report.total[n]);
    }
    report.precisions[n] = p;
    if (p > 0.0) log_precision_sum += std::log(p);
  }

  if (report.hyp_len == 0) {
    report.brevity_penalty = 0.0;
    report.score = 0.0;
    return report;
  }
  report.brevity_penalty =
      report.hyp_len >= report.ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(report.ref_len) / static_cast<double>(report.hyp_len));
  report.score = any_zero ? 0.0
                          : report.brevity_penalty * std::exp(log_precision_sum / 4.0) * 100.0;
  return report;
}

std::string BleuReport::to_text() const {
  std::ostringstream out;
  out.precision(10);
  out << "BLEU = " << score;
  out << "  " << precisions[0] * 100 << "/" << precisions[1] * 100 << "/" << precisions[2] * 100
      << "/" << precisions[3] * 100;
  out << "  BP = " << brevity_penalty;
  out << "  hyp_len = " << hyp_len << "  ref_len = " << ref_len;
  out << "  tok = " << tokenization << (lowercased ? " (lowercased)" : "")
      << (smoothed ? " (smoothed)" : "");
  return out.str();
}

std::string BleuReport::to_json() const {
  std::ostringstream out;
  out.precision(17);
  out << "{\"score\":" << score << ",\"brevity_penalty\":" << brevity_penalty
      << ",\"hyp_len\":" << hyp_len << ",\"ref_len\":" << ref_len << ",\"precisions\":["
      << precisions[0] << "," << precisions[1] << "," << precisions[2] << "," << precisions[3]
      << "],\"matched\":[" << matched[0] << "," << matched[1] << "," << matched[2] << ","
      << matched[3] << "],\"total\":[" << total[0] << "," << total[1] << "," << total[2] << ","
      << total[3] << "],\"tokenization\":\"" << tokenization << "\",\"lowercased\":"
      << (lowercased ? "true" : "false") << ",\"smoothed\":" << (smoothed ? "true" : "false")
      << "}";
  return out.str();
}

}  // namespace rmt
