#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "robustmt/errors.hpp"

namespace rmt {

// ---------------------------------------------------------------------------
// Reserved tokens. These occupy the lowest vocabulary ids in every model and
// never appear in raw corpus text (loaders reject them).
// ---------------------------------------------------------------------------

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;
inline constexpr int kCleanTagId = 4;   // <clean>   source-side
inline constexpr int kNoisyTagId = 5;   // <noisy>   source-side
inline constexpr int kCleanSTagId = 6;  // <clean_s> target-side
inline constexpr int kNoisySTagId = 7;  // <noisy_s> target-side
inline constexpr int kNumReserved = 8;

const std::vector<std::string>& reserved_tokens();
bool is_reserved_token(const std::string& token);

// ---------------------------------------------------------------------------
// Domain tags.
// ---------------------------------------------------------------------------

enum class DomainKind { Clean, Noisy };
enum class TagSide { SourceStart, TargetStart };

// A domain tag is a distinct vocabulary item prepended at position 0 of the
// tagged side; it takes over the begin-of-sequence role for that side (the
// decoder start token in TargetStart mode, the encoder's first input in
// SourceStart mode).
struct DomainTag {
  DomainKind kind = DomainKind::Clean;
  TagSide side = TagSide::SourceStart;

  const std::string& surface() const;
  int token_id() const;

  static std::optional<DomainTag> from_surface(const std::string& token);
  static bool is_tag_surface(const std::string& token);

  bool operator==(const DomainTag&) const = default;
};

enum class PairOrigin { CleanParallel, NoisyParallel, SyntheticBacktranslated };
const char* origin_name(PairOrigin origin);

// ---------------------------------------------------------------------------
// Corpus types.
// ---------------------------------------------------------------------------

struct TaggedSentencePair {
  std::vector<std::string> source;
  std::vector<std::string> target;
  std::optional<DomainTag> tag;
  PairOrigin origin = PairOrigin::CleanParallel;

  bool operator==(const TaggedSentencePair&) const = default;
};

struct Corpus {
  std::vector<TaggedSentencePair> pairs;
  std::string source_lang = "src";
  std::string target_lang = "tgt";

  std::size_t size() const { return pairs.size(); }
};

struct MonoCorpus {
  std::vector<std::vector<std::string>> sentences;
  std::string language = "mono";

  std::size_t size() const { return sentences.size(); }
};

struct LoadStats {
  std::size_t kept = 0;
  std::size_t dropped_empty = 0;
};

struct ParallelLoadResult {
  Corpus corpus;
  LoadStats stats;
};

struct FilterResult {
  Corpus corpus;
  std::size_t removed = 0;
};

// Per-origin counts plus a coarse length histogram (bucket width 16 over
// max(source, target) length, tag token excluded).
struct StatsReport {
  std::string label;
  std::map<PairOrigin, std::size_t> counts;
  std::map<std::size_t, std::size_t> length_histogram;

  std::size_t total() const;
  std::string to_text() const;
  std::string to_json() const;
};

// ---------------------------------------------------------------------------
// Operations.
// ---------------------------------------------------------------------------

// Pairs line i of the source file with line i of the target file. Lines that
// are empty on either side are dropped and counted. Line-count mismatch is an
// AlignmentError; a reserved token in the text is a ContaminationError.
// With allow_tags=true a single reserved domain tag is accepted at position 0
// of a side (for reading back corpora prepared by `tag`/`mix`); reserved
// tokens anywhere else still reject.
ParallelLoadResult load_parallel(const std::string& source_path, const std::string& target_path,
                                 PairOrigin origin, const std::string& source_lang = "src",
                                 const std::string& target_lang = "tgt", bool allow_tags = false);

// One sentence per line; blank lines dropped, order preserved.
MonoCorpus load_monolingual(const std::string& path, const std::string& language);

// Prepends the tag token at position 0 of the designated side. The pair must
// be untagged; tagging twice is an InvariantError.
TaggedSentencePair tag_pair(const TaggedSentencePair& pair, DomainTag tag);

// Removes the position-0 reserved token, restoring the original pair.
TaggedSentencePair untag_pair(const TaggedSentencePair& pair);

// Swaps source and target of every pair and the corpus direction labels.
// Tags are removed; re-tagging happens after reversal.
Corpus reverse_direction(const Corpus& corpus);

// Keeps pairs whose source and target are both <= max_len tokens (tag token
// excluded from the count). Applied after subword segmentation.
FilterResult filter_by_length(const Corpus& corpus, std::size_t max_len = 256);

// Concatenates the corpora (which must share direction) and applies a
// deterministic seed-driven shuffle. Origins and tags are preserved; no
// up/down-sampling happens here.
Corpus mix(std::vector<Corpus> corpora, std::uint64_t seed);

StatsReport corpus_stats(const Corpus& corpus, const std::string& label = "");

// Writes a corpus as two aligned files (tokens joined by single spaces).
void write_parallel(const Corpus& corpus, const std::string& source_path,
                    const std::string& target_path);
// Sidecar of one origin name per line, aligned with the corpus files.
void write_origins(const Corpus& corpus, const std::string& path);

}  // namespace rmt
