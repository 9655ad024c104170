#include "robustmt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "robustmt/util.hpp"

namespace rmt {

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> tokens = {
      "<pad>", "<unk>", "<s>", "</s>", "<clean>", "<noisy>", "<clean_s>", "<noisy_s>"};
  return tokens;
}

bool is_reserved_token(const std::string& token) {
  const auto& r = reserved_tokens();
  return std::find(r.begin(), r.end(), token) != r.end();
}

const std::string& DomainTag::surface() const {
  return reserved_tokens()[static_cast<std::size_t>(token_id())];
}

int DomainTag::token_id() const {
  if (side == TagSide::SourceStart)
    return kind == DomainKind::Clean ? kCleanTagId : kNoisyTagId;
  return kind == DomainKind::Clean ? kCleanSTagId : kNoisySTagId;
}

std::optional<DomainTag> DomainTag::from_surface(const std::string& token) {
  if (token == "<clean>") return DomainTag{DomainKind::Clean, TagSide::SourceStart};
  if (token == "<noisy>") return DomainTag{DomainKind::Noisy, TagSide::SourceStart};
  if (token == "<clean_s>") return DomainTag{DomainKind::Clean, TagSide::TargetStart};
  if (token == "<noisy_s>") return DomainTag{DomainKind::Noisy, TagSide::TargetStart};
  return std::nullopt;
}

bool DomainTag::is_tag_surface(const std::string& token) {
  return from_surface(token).has_value();
}

const char* origin_name(PairOrigin origin) {
  switch (origin) {
    case PairOrigin::CleanParallel: return "clean_parallel";
    case PairOrigin::NoisyParallel: return "noisy_parallel";
    case PairOrigin::SyntheticBacktranslated: return "synthetic_backtranslated";
  }
  return "unknown";
}

namespace {

// Rejects reserved tokens in a freshly loaded sentence. In prepared mode a
// single domain tag is allowed at position 0.
void check_contamination(const std::vector<std::string>& tokens, bool allow_leading_tag,
                         const std::string& path, std::size_t lineno) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!is_reserved_token(tokens[i])) continue;
    if (allow_leading_tag && i == 0 && DomainTag::is_tag_surface(tokens[i])) continue;
    throw ContaminationError(path + ":" + std::to_string(lineno) + ": reserved token `" +
                             tokens[i] + "` in corpus text");
  }
}

}  // namespace

ParallelLoadResult load_parallel(const std::string& source_path, const std::string& target_path,
                                 PairOrigin origin, const std::string& source_lang,
                                 const std::string& target_lang, bool allow_tags) {
  auto src_lines = read_lines(source_path);
  auto tgt_lines = read_lines(target_path);
  if (src_lines.size() != tgt_lines.size())
    throw AlignmentError("line counts differ: " + source_path + " has " +
                         std::to_string(src_lines.size()) + " lines, " + target_path + " has " +
                         std::to_string(tgt_lines.size()));
  ParallelLoadResult result;
  result.corpus.source_lang = source_lang;
  result.corpus.target_lang = target_lang;
  result.corpus.pairs.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    TaggedSentencePair pair;
    pair.source = split_whitespace(src_lines[i]);
    pair.target = split_whitespace(tgt_lines[i]);
    pair.origin = origin;
    if (pair.source.empty() || pair.target.empty()) {
      ++result.stats.dropped_empty;
      continue;
    }
    check_contamination(pair.source, allow_tags, source_path, i + 1);
    check_contamination(pair.target, allow_tags, target_path, i + 1);
    if (allow_tags) {
      auto src_tag = DomainTag::from_surface(pair.source.front());
      auto tgt_tag = DomainTag::from_surface(pair.target.front());
      if (src_tag && src_tag->side == TagSide::SourceStart) pair.tag = src_tag;
      if (tgt_tag && tgt_tag->side == TagSide::TargetStart) pair.tag = tgt_tag;
    }
    result.corpus.pairs.push_back(std::move(pair));
    ++result.stats.kept;
  }
  return result;
}

MonoCorpus load_monolingual(const std::string& path, const std::string& language) {
  MonoCorpus mono;
  mono.language = language;
  auto lines = read_lines(path);
  mono.sentences.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto tokens = split_whitespace(lines[i]);
    if (tokens.empty()) continue;
    check_contamination(tokens, false, path, i + 1);
    mono.sentences.push_back(std::move(tokens));
  }
  return mono;
}

TaggedSentencePair tag_pair(const TaggedSentencePair& pair, DomainTag tag) {
  if (pair.tag.has_value())
    throw InvariantError("pair is already tagged with " + pair.tag->surface());
  if (pair.source.empty() || pair.target.empty())
    throw InvariantError("cannot tag a pair with an empty side");
  // Guard against a stray tag token even when the tag field is unset.
  if (DomainTag::is_tag_surface(pair.source.front()) ||
      DomainTag::is_tag_surface(pair.target.front()))
    throw InvariantError("pair already carries a tag token at position 0");
  TaggedSentencePair tagged = pair;
  tagged.tag = tag;
  auto& side_tokens = tag.side == TagSide::SourceStart ? tagged.source : tagged.target;
  side_tokens.insert(side_tokens.begin(), tag.surface());
  return tagged;
}

TaggedSentencePair untag_pair(const TaggedSentencePair& pair) {
  if (!pair.tag.has_value()) return pair;
  TaggedSentencePair plain = pair;
  auto& side_tokens =
      pair.tag->side == TagSide::SourceStart ? plain.source : plain.target;
  if (side_tokens.empty() || side_tokens.front() != pair.tag->surface())
    throw InvariantError("tag field and position-0 token disagree");
  side_tokens.erase(side_tokens.begin());
  plain.tag.reset();
  return plain;
}

Corpus reverse_direction(const Corpus& corpus) {
  Corpus reversed;
  reversed.source_lang = corpus.target_lang;
  reversed.target_lang = corpus.source_lang;
  reversed.pairs.reserve(corpus.pairs.size());
  for (const auto& pair : corpus.pairs) {
    TaggedSentencePair flipped = untag_pair(pair);
    std::swap(flipped.source, flipped.target);
    reversed.pairs.push_back(std::move(flipped));
  }
  return reversed;
}

namespace {

std::size_t content_length(const std::vector<std::string>& tokens) {
  std::size_t n = tokens.size();
  if (n > 0 && DomainTag::is_tag_surface(tokens.front())) --n;
  return n;
}

}  // namespace

FilterResult filter_by_length(const Corpus& corpus, std::size_t max_len) {
  FilterResult result;
  result.corpus.source_lang = corpus.source_lang;
  result.corpus.target_lang = corpus.target_lang;
  for (const auto& pair : corpus.pairs) {
    if (content_length(pair.source) <= max_len && content_length(pair.target) <= max_len)
      result.corpus.pairs.push_back(pair);
    else
      ++result.removed;
  }
  return result;
}

Corpus mix(std::vector<Corpus> corpora, std::uint64_t seed) {
  if (corpora.empty()) throw InvariantError("mix: no corpora given");
  Corpus mixed;
  mixed.source_lang = corpora.front().source_lang;
  mixed.target_lang = corpora.front().target_lang;
  std::size_t total = 0;
  for (const auto& c : corpora) {
    if (c.source_lang != mixed.source_lang || c.target_lang != mixed.target_lang)
      throw InvariantError("mix: direction mismatch (" + c.source_lang + "->" + c.target_lang +
                           " vs " + mixed.source_lang + "->" + mixed.target_lang + ")");
    total += c.pairs.size();
  }
  mixed.pairs.reserve(total);
  for (auto& c : corpora) {
    for (auto& pair : c.pairs) mixed.pairs.push_back(std::move(pair));
    c.pairs.clear();
    c.pairs.shrink_to_fit();
  }
  deterministic_shuffle(mixed.pairs, seed);
  return mixed;
}

std::size_t StatsReport::total() const {
  std::size_t t = 0;
  for (const auto& [origin, count] : counts) t += count;
  return t;
}

StatsReport corpus_stats(const Corpus& corpus, const std::string& label) {
  StatsReport report;
  report.label = label;
  for (const auto& pair : corpus.pairs) {
    ++report.counts[pair.origin];
    std::size_t len = std::max(content_length(pair.source), content_length(pair.target));
    ++report.length_histogram[len / 16 * 16];
  }
  return report;
}

std::string StatsReport::to_text() const {
  std::ostringstream out;
  if (!label.empty()) out << "split\t" << label << "\n";
  for (const auto& [origin, count] : counts) out << origin_name(origin) << "\t" << count << "\n";
  out << "total\t" << total() << "\n";
  for (const auto& [bucket, count] : length_histogram)
    out << "len[" << bucket << "-" << bucket + 15 << "]\t" << count << "\n";
  return out.str();
}

std::string StatsReport::to_json() const {
  std::ostringstream out;
  out << "{";
  out << "\"label\":\"" << label << "\",\"counts\":{";
  bool first = true;
  for (const auto& [origin, count] : counts) {
    if (!first) out << ",";
    first = false;
    out << "\"" << origin_name(origin) << "\":" << count;
  }
  out << "},\"total\":" << total() << ",\"length_histogram\":{";
  first = true;
  for (const auto& [bucket, count] : length_histogram) {
    if (!first) out << ",";
    first = false;
    out << "\"" << bucket << "\":" << count;
  }
  out << "}}";
  return out.str();
}

void write_parallel(const Corpus& corpus, const std::string& source_path,
                    const std::string& target_path) {
  std::vector<std::string> src_lines, tgt_lines;
  src_lines.reserve(corpus.pairs.size());
  tgt_lines.reserve(corpus.pairs.size());
  for (const auto& pair : corpus.pairs) {
    src_lines.push_back(join(pair.source));
    tgt_lines.push_back(join(pair.target));
  }
  write_lines(source_path, src_lines);
  write_lines(target_path, tgt_lines);
}

void write_origins(const Corpus& corpus, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(corpus.pairs.size());
  for (const auto& pair : corpus.pairs) lines.emplace_back(origin_name(pair.origin));
  write_lines(path, lines);
}

}  // namespace rmt
