#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "robustmt/corpus.hpp"

namespace rmt {

// ---------------------------------------------------------------------------
// Vocabulary: symbol <-> id map with the reserved block at the lowest ids.
// ---------------------------------------------------------------------------

class Vocabulary {
 public:
  Vocabulary();

  // Adds a symbol if absent; returns its id either way.
  int add(const std::string& symbol);
  // Returns the symbol's id, or kUnkId if absent.
  int id(const std::string& symbol) const;
  bool contains(const std::string& symbol) const;
  const std::string& symbol(int id) const;
  int size() const { return static_cast<int>(id_to_symbol_.size()); }

  // Builds a vocabulary from tokenized sentences: reserved block first, then
  // symbols by descending frequency (ties broken lexicographically).
  static Vocabulary build(const std::vector<std::vector<std::string>>& sentences);

  // "symbol<TAB>id" lines.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& other) const { return id_to_symbol_ == other.id_to_symbol_; }
  const std::vector<std::string>& symbols() const { return id_to_symbol_; }

 private:
  std::vector<std::string> id_to_symbol_;
  std::unordered_map<std::string, int> symbol_to_id_;
};

// ---------------------------------------------------------------------------
// Byte-pair encoding.
//
// Learning operates on words as codepoint symbols with the end-of-word
// marker "</w>" fused onto the final character; segmentation output uses the
// word-internal "@@" continuation suffix. Merge order is the learning order;
// frequency ties break to the lexicographically smallest pair, which makes
// learning reproducible across platforms.
// ---------------------------------------------------------------------------

struct SubwordModel {
  std::vector<std::pair<std::string, std::string>> merges;
  Vocabulary vocab;
  std::string continuation_marker = "@@";
  std::string end_of_word_marker = "</w>";

  // merge pair -> rank, derived from `merges`.
  std::unordered_map<std::string, int> merge_rank;
  void rebuild_rank_index();

  void save(const std::string& merges_path, const std::string& vocab_path) const;
  static SubwordModel load(const std::string& merges_path, const std::string& vocab_path);
};

// Learns up to num_merges merges; stops early when no pair occurs at least
// twice. num_merges = 0 yields a character-level model. Empty corpus is an
// error. Merges whose joined symbol would collide with a reserved token are
// skipped, so segmentation can never emit a reserved token from raw text.
SubwordModel learn_bpe(const std::vector<std::vector<std::string>>& corpus,
                       std::size_t num_merges);

// Greedy application of the merge list per word (lowest rank first). Symbols
// whose surface form is not in the model vocabulary come out as "<unk>".
std::vector<std::string> apply_bpe(const SubwordModel& model,
                                   const std::vector<std::string>& sentence);

// Joins subwords back into a plain sentence, resolving "@@" continuation
// markers and dropping reserved tokens.
std::string decode_bpe(const std::vector<std::string>& tokens);

}  // namespace rmt
