#include "robustmt/subword.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include "robustmt/util.hpp"

namespace rmt {

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() {
  for (const auto& token : reserved_tokens()) {
    symbol_to_id_.emplace(token, static_cast<int>(id_to_symbol_.size()));
    id_to_symbol_.push_back(token);
  }
}

int Vocabulary::add(const std::string& symbol) {
  auto it = symbol_to_id_.find(symbol);
  if (it != symbol_to_id_.end()) return it->second;
  int new_id = static_cast<int>(id_to_symbol_.size());
  symbol_to_id_.emplace(symbol, new_id);
  id_to_symbol_.push_back(symbol);
  return new_id;
}

int Vocabulary::id(const std::string& symbol) const {
  auto it = symbol_to_id_.find(symbol);
  return it == symbol_to_id_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(const std::string& symbol) const {
  return symbol_to_id_.count(symbol) > 0;
}

const std::string& Vocabulary::symbol(int id) const {
  if (id < 0 || id >= size()) throw Error("vocabulary id out of range: " + std::to_string(id));
  return id_to_symbol_[static_cast<std::size_t>(id)];
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sentences) {
  std::map<std::string, std::size_t> freq;
  for (const auto& sentence : sentences)
    for (const auto& token : sentence)
      if (!is_reserved_token(token)) ++freq[token];
  std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab;
  for (const auto& [symbol, count] : items) vocab.add(symbol);
  return vocab;
}

void Vocabulary::save(const std::string& path) const {
  std::vector<std::string> lines;
  lines.reserve(id_to_symbol_.size());
  for (std::size_t i = 0; i < id_to_symbol_.size(); ++i)
    lines.push_back(id_to_symbol_[i] + "\t" + std::to_string(i));
  write_lines(path, lines);
}

Vocabulary Vocabulary::load(const std::string& path) {
  Vocabulary vocab;
  auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto tab = lines[i].find('\t');
    if (tab == std::string::npos)
      throw IoError(path + ":" + std::to_string(i + 1) + ": expected `symbol<TAB>id`");
    std::string symbol = lines[i].substr(0, tab);
    int id = std::stoi(lines[i].substr(tab + 1));
    if (id < kNumReserved) {
      if (symbol != reserved_tokens()[static_cast<std::size_t>(id)])
        throw IoError(path + ": reserved id " + std::to_string(id) + " maps to `" + symbol + "`");
      continue;
    }
    int got = vocab.add(symbol);
    if (got != id)
      throw IoError(path + ": non-contiguous id " + std::to_string(id) + " for `" + symbol + "`");
  }
  return vocab;
}

// ---------------------------------------------------------------------------
// BPE learning
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kEow = "</w>";

bool ends_with_eow(const std::string& symbol) {
  return symbol.size() >= kEow.size() &&
         symbol.compare(symbol.size() - kEow.size(), kEow.size(), kEow) == 0;
}

// The token text a symbol produces in segmentation output: word-final symbols
// lose the "</w>" marker, word-internal ones gain the "@@" suffix.
std::string surface_form(const std::string& symbol) {
  if (ends_with_eow(symbol)) return symbol.substr(0, symbol.size() - kEow.size());
  return symbol + "@@";
}

// Splits a word into its initial symbol sequence: one symbol per codepoint,
// with "</w>" fused onto the final one.
std::vector<std::string> word_symbols(const std::string& word) {
  auto cps = utf8_decode(word);
  std::vector<std::string> symbols;
  symbols.reserve(cps.size());
  for (std::size_t i = 0; i < cps.size(); ++i) {
    std::string s;
    utf8_append(s, cps[i]);
    if (i + 1 == cps.size()) s += kEow;
    symbols.push_back(std::move(s));
  }
  return symbols;
}

struct PairStat {
  long long count = 0;
  std::set<std::size_t> words;
};

using SymbolPair = std::pair<std::string, std::string>;

}  // namespace

SubwordModel learn_bpe(const std::vector<std::vector<std::string>>& corpus,
                       std::size_t num_merges) {
  // Distinct-word counts.
  std::map<std::string, long long> word_freq;
  for (const auto& sentence : corpus)
    for (const auto& token : sentence) ++word_freq[token];
  if (word_freq.empty()) throw Error("learn_bpe: empty corpus");

  std::vector<std::vector<std::string>> words;
  std::vector<long long> freqs;
  words.reserve(word_freq.size());
  // Both positional forms of every training character are producible when
  // segmenting unseen words, so both go into the alphabet.
  std::set<std::string> alphabet;
  for (const auto& [word, freq] : word_freq) {
    words.push_back(word_symbols(word));
    freqs.push_back(freq);
    for (const auto& s : words.back()) {
      std::string ch = ends_with_eow(s) ? s.substr(0, s.size() - kEow.size()) : s;
      alphabet.insert(ch);
      alphabet.insert(ch + std::string(kEow));
    }
  }

  std::map<SymbolPair, PairStat> stats;
  auto add_word_pairs = [&](std::size_t w, long long sign) {
    const auto& symbols = words[w];
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto& stat = stats[{symbols[i], symbols[i + 1]}];
      stat.count += sign * freqs[w];
      if (sign > 0)
        stat.words.insert(w);
    }
  };
  for (std::size_t w = 0; w < words.size(); ++w) add_word_pairs(w, +1);

  SubwordModel model;
  std::set<std::string> merged_symbols(alphabet.begin(), alphabet.end());

  for (std::size_t m = 0; m < num_merges; ++m) {
    // Best pair by count, lexicographic tie-break; pairs that would merge
    // into a reserved surface are excluded.
    const SymbolPair* best = nullptr;
    long long best_count = 0;
    for (const auto& [pair, stat] : stats) {
      if (stat.count < 2 || stat.count < best_count) continue;
      if (is_reserved_token(surface_form(pair.first + pair.second))) continue;
      if (!best || stat.count > best_count || pair < *best) {
        best = &pair;
        best_count = stat.count;
      }
    }
    if (!best) break;  // exhausted: no pair occurs at least twice

    const SymbolPair merge = *best;
    const std::string joined = merge.first + merge.second;
    model.merges.push_back(merge);
    merged_symbols.insert(joined);

    // Rewrite every word containing the pair, updating pair stats.
    std::vector<std::size_t> touched(stats[merge].words.begin(), stats[merge].words.end());
    for (std::size_t w : touched) {
      add_word_pairs(w, -1);
      auto& symbols = words[w];
      std::vector<std::string> rewritten;
      rewritten.reserve(symbols.size());
      std::size_t i = 0;
      while (i < symbols.size()) {
        if (i + 1 < symbols.size() && symbols[i] == merge.first &&
            symbols[i + 1] == merge.second) {
          rewritten.push_back(joined);
          i += 2;
        } else {
          rewritten.push_back(symbols[i]);
          ++i;
        }
      }
      symbols = std::move(rewritten);
      add_word_pairs(w, +1);
    }
  }

  // Vocabulary: reserved block plus every producible surface form, sorted.
  std::set<std::string> surfaces;
  for (const auto& s : merged_symbols) surfaces.insert(surface_form(s));
  for (const auto& surface : surfaces)
    if (!is_reserved_token(surface)) model.vocab.add(surface);
  model.rebuild_rank_index();
  return model;
}

// ---------------------------------------------------------------------------
// BPE application
// ---------------------------------------------------------------------------

void SubwordModel::rebuild_rank_index() {
  merge_rank.clear();
  for (std::size_t r = 0; r < merges.size(); ++r)
    merge_rank.emplace(merges[r].first + " " + merges[r].second, static_cast<int>(r));
}

namespace {

std::vector<std::string> segment_word(const SubwordModel& model, const std::string& word) {
  auto symbols = word_symbols(word);
  while (symbols.size() > 1) {
    int best_rank = -1;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = model.merge_rank.find(symbols[i] + " " + symbols[i + 1]);
      if (it != model.merge_rank.end() && (best_rank < 0 || it->second < best_rank))
        best_rank = it->second;
    }
    if (best_rank < 0) break;
    const auto& merge = model.merges[static_cast<std::size_t>(best_rank)];
    std::vector<std::string> rewritten;
    rewritten.reserve(symbols.size());
    std::size_t i = 0;
    while (i < symbols.size()) {
      if (i + 1 < symbols.size() && symbols[i] == merge.first && symbols[i + 1] == merge.second) {
        rewritten.push_back(merge.first + merge.second);
        i += 2;
      } else {
        rewritten.push_back(symbols[i]);
        ++i;
      }
    }
    symbols = std::move(rewritten);
  }
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (const auto& s : symbols) {
    std::string surface = surface_form(s);
    out.push_back(model.vocab.contains(surface) ? surface : reserved_tokens()[kUnkId]);
  }
  return out;
}

}  // namespace

std::vector<std::string> apply_bpe(const SubwordModel& model,
                                   const std::vector<std::string>& sentence) {
  std::vector<std::string> out;
  std::unordered_map<std::string, std::vector<std::string>> cache;
  for (const auto& word : sentence) {
    if (word.empty()) continue;
    auto it = cache.find(word);
    if (it == cache.end()) it = cache.emplace(word, segment_word(model, word)).first;
    out.insert(out.end(), it->second.begin(), it->second.end());
  }
  return out;
}

std::string decode_bpe(const std::vector<std::string>& tokens) {
  std::vector<std::string> words;
  std::string current;
  bool open = false;
  for (const auto& token : tokens) {
    if (is_reserved_token(token)) continue;
    if (token.size() >= 2 && token.compare(token.size() - 2, 2, "@@") == 0) {
      current += token.substr(0, token.size() - 2);
      open = true;
    } else {
      current += token;
      words.push_back(current);
      current.clear();
      open = false;
    }
  }
  if (open || !current.empty()) words.push_back(current);
  return join(words);
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

void SubwordModel::save(const std::string& merges_path, const std::string& vocab_path) const {
  std::vector<std::string> lines;
  lines.reserve(merges.size() + 1);
  lines.emplace_back("#version: 0.2");
  for (const auto& [left, right] : merges) lines.push_back(left + " " + right);
  write_lines(merges_path, lines);
  vocab.save(vocab_path);
}

SubwordModel SubwordModel::load(const std::string& merges_path, const std::string& vocab_path) {
  SubwordModel model;
  auto lines = read_lines(merges_path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    auto space = line.find(' ');
    if (space == std::string::npos || space + 1 >= line.size())
      throw IoError(merges_path + ":" + std::to_string(i + 1) + ": expected `left right`");
    model.merges.emplace_back(line.substr(0, space), line.substr(space + 1));
  }
  model.vocab = Vocabulary::load(vocab_path);
  model.rebuild_rank_index();
  return model;
}

}  // namespace rmt
