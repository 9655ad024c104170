#include "robustmt/text.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "robustmt/util.hpp"

namespace rmt {

// ---------------------------------------------------------------------------
// Unicode category tables
// ---------------------------------------------------------------------------

namespace {

struct CodepointRange {
  char32_t lo, hi;
};

#include "unicode_tables.inc"

template <std::size_t N>
bool in_ranges(const CodepointRange (&ranges)[N], char32_t cp) {
  auto it = std::upper_bound(std::begin(ranges), std::end(ranges), cp,
                             [](char32_t v, const CodepointRange& r) { return v < r.lo; });
  if (it == std::begin(ranges)) return false;
  --it;
  return cp >= it->lo && cp <= it->hi;
}

}  // namespace

bool is_unicode_punct(char32_t cp) { return in_ranges(kPunctuationRanges, cp); }
bool is_unicode_symbol(char32_t cp) { return in_ranges(kSymbolRanges, cp); }
bool is_unicode_number(char32_t cp) { return in_ranges(kNumberRanges, cp); }

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case U'\t': case U'\n': case U'\v': case U'\f': case U'\r': case U' ':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

namespace {

constexpr char kNbsp[] = "\xC2\xA0";  // U+00A0

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (true) {
    std::size_t hit = text.find(from, pos);
    if (hit == std::string::npos) {
      out.append(text, pos, std::string::npos);
      return out;
    }
    out.append(text, pos, hit - pos);
    out.append(to);
    pos = hit + from.size();
  }
}

std::string collapse_spaces(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool prev_space = false;
  for (char c : text) {
    if (c == ' ') {
      if (!prev_space) out += c;
      prev_space = true;
    } else {
      out += c;
      prev_space = false;
    }
  }
  return out;
}

std::string trim_spaces(const std::string& text) {
  std::size_t begin = text.find_first_not_of(' ');
  if (begin == std::string::npos) return "";
  std::size_t end = text.find_last_not_of(' ');
  return text.substr(begin, end - begin + 1);
}

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

// (\d)\xA0(\d) -> \1.\2, non-overlapping left-to-right.
std::string group_digits_over_nbsp(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_ascii_digit(text[i]) && i + 3 < text.size() && text[i + 1] == '\xC2' &&
        text[i + 2] == '\xA0' && is_ascii_digit(text[i + 3])) {
      out += text[i];
      out += '.';
      out += text[i + 3];
      i += 4;
    } else {
      out += text[i++];
    }
  }
  return out;
}

// Any unicode space character -> ASCII space.
std::string unify_unicode_spaces(const std::string& text) {
  auto cps = utf8_decode(text);
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : cps) {
    if (cp != U'\t' && cp != U'\n' && cp != U'\r' && is_unicode_space(cp))
      out += ' ';
    else
      utf8_append(out, cp);
  }
  return out;
}

// ") X" -> ")X" for X in [.!:?;,]
std::string attach_punct_after_paren(const std::string& text) {
  static const std::string punct = ".!:?;,";
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == ')' && i + 2 < text.size() && text[i + 1] == ' ' &&
        punct.find(text[i + 2]) != std::string::npos) {
      out += ')';
      out += text[i + 2];
      i += 3;
    } else {
      out += text[i++];
    }
  }
  return out;
}

// (\d) % -> \1%
std::string attach_percent_to_digit(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_ascii_digit(text[i]) && i + 2 < text.size() && text[i + 1] == ' ' &&
        text[i + 2] == '%') {
      out += text[i];
      out += '%';
      i += 3;
    } else {
      out += text[i++];
    }
  }
  return out;
}

// letter + curly single quote + letter -> letter ' letter (ASCII letters, as
// in the Moses rule).
std::string fix_letter_apostrophes(const std::string& text, std::string_view quote) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_ascii_letter(text[i]) && text.compare(i + 1, quote.size(), quote) == 0 &&
        i + 1 + quote.size() < text.size() && is_ascii_letter(text[i + 1 + quote.size()])) {
      out += text[i];
      out += '\'';
      out += text[i + 1 + quote.size()];
      i += 2 + quote.size();
    } else {
      out += text[i++];
    }
  }
  return out;
}

// "([,.]+) -> \1"  (English quotation-comma order)
std::string move_punct_inside_quote(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '"') {
      std::size_t j = i + 1;
      while (j < text.size() && (text[j] == ',' || text[j] == '.')) ++j;
      if (j > i + 1) {
        out.append(text, i + 1, j - i - 1);
        out += '"';
        i = j;
        continue;
      }
    }
    out += text[i++];
  }
  return out;
}

}  // namespace

const std::vector<NormalizeRule>& normalization_rules() {
  static const std::vector<NormalizeRule> rules = {
      {"A1", "\\r", ""},
      {"B1", "(\\d)\\xA0(\\d)", "\\1.\\2"},
      {"B2", "\\xA0%", "%"},
      {"B3", "n\xC2\xBA\\xA0", "n\xC2\xBA "},
      {"B4", "\\xA0:", ":"},
      {"B5", "\\xA0\xC2\xBA" "C", " \xC2\xBA" "C"},
      {"B6", "\\xA0cm", " cm"},
      {"B7", "\\xA0?", "?"},
      {"B8", "\\xA0!", "!"},
      {"B9", "\\xA0;", ";"},
      {"B10", ",\\xA0", ", "},
      {"C1", "<any unicode space>", " "},
      {"D1", "(", " ("},
      {"D2", ")", ") "},
      {"D3", "<space run>", " "},
      {"D4", ") (\\p=[.!:?;,])", ")\\p"},
      {"D5", "( ", "("},
      {"D6", " )", ")"},
      {"D7", "(\\d) %", "\\1%"},
      {"D8", " :", ":"},
      {"D9", " ;", ";"},
      {"E1", "`", "'"},
      {"E2", "''", " \" "},
      {"E3", "\xE2\x80\x9E", "\""},
      {"E4", "\xE2\x80\x9C", "\""},
      {"E5", "\xE2\x80\x9D", "\""},
      {"E6", "\xE2\x80\x93", "-"},
      {"E7", "\xE2\x80\x94", " - "},
      {"E8", "<space run>", " "},
      {"E9", "\xC2\xB4", "'"},
      {"E10", "(\\w)\xE2\x80\x98(\\w)", "\\1'\\2"},
      {"E11", "(\\w)\xE2\x80\x99(\\w)", "\\1'\\2"},
      {"E12", "\xE2\x80\x98", "\""},
      {"E13", "\xE2\x80\x9A", "\""},
      {"E14", "\xE2\x80\x99", "\""},
      {"E15", "''", "\""},
      {"E16", "\xE2\x80\xA6", "..."},
      {"F1", " \xC2\xAB ", " \""},
      {"F2", "\xC2\xAB ", "\""},
      {"F3", "\xC2\xAB", "\""},
      {"F4", " \xC2\xBB ", "\" "},
      {"F5", " \xC2\xBB", "\""},
      {"F6", "\xC2\xBB", "\""},
      {"G1", "\"(\\q=[,.]+)", "\\q\""},
      {"H1", "<space run>", " "},
      {"H2", "<trim>", ""},
  };
  return rules;
}

std::string normalization_rules_text() {
  std::ostringstream out;
  for (const auto& rule : normalization_rules()) {
    out << rule.id << "\t" << rule.pattern << "\t" << rule.replacement << "\n";
  }
  return out.str();
}

std::string normalize(const std::string& text) {
  std::string s = replace_all(text, "\r", "");  // A1
  // B: no-break-space specific rules (run before space unification so
  // regular spaces are not affected).
  s = group_digits_over_nbsp(s);                                    // B1
  s = replace_all(s, std::string(kNbsp) + "%", "%");                // B2
  s = replace_all(s, std::string("n\xC2\xBA") + kNbsp, "n\xC2\xBA ");  // B3
  s = replace_all(s, std::string(kNbsp) + ":", ":");                // B4
  s = replace_all(s, std::string(kNbsp) + "\xC2\xBA" + "C", " \xC2\xBA" "C");  // B5
  s = replace_all(s, std::string(kNbsp) + "cm", " cm");             // B6
  s = replace_all(s, std::string(kNbsp) + "?", "?");                // B7
  s = replace_all(s, std::string(kNbsp) + "!", "!");                // B8
  s = replace_all(s, std::string(kNbsp) + ";", ";");                // B9
  s = replace_all(s, std::string(",") + kNbsp, ", ");               // B10
  s = unify_unicode_spaces(s);                                      // C1
  // D: parenthesis spacing and stray spaces before : ;
  s = replace_all(s, "(", " (");       // D1
  s = replace_all(s, ")", ") ");       // D2
  s = collapse_spaces(s);              // D3
  s = attach_punct_after_paren(s);     // D4
  s = replace_all(s, "( ", "(");       // D5
  s = replace_all(s, " )", ")");       // D6
  s = attach_percent_to_digit(s);      // D7
  s = replace_all(s, " :", ":");       // D8
  s = replace_all(s, " ;", ";");       // D9
  // E: quote and dash variants
  s = replace_all(s, "`", "'");                    // E1
  s = replace_all(s, "''", " \" ");                // E2
  s = replace_all(s, "\xE2\x80\x9E", "\"");        // E3 „
  s = replace_all(s, "\xE2\x80\x9C", "\"");        // E4 “
  s = replace_all(s, "\xE2\x80\x9D", "\"");        // E5 ”
  s = replace_all(s, "\xE2\x80\x93", "-");         // E6 –
  s = replace_all(s, "\xE2\x80\x94", " - ");       // E7 —
  s = collapse_spaces(s);                          // E8
  s = replace_all(s, "\xC2\xB4", "'");             // E9 ´
  s = fix_letter_apostrophes(s, "\xE2\x80\x98");   // E10 ‘
  s = fix_letter_apostrophes(s, "\xE2\x80\x99");   // E11 ’
  s = replace_all(s, "\xE2\x80\x98", "\"");        // E12 ‘
  s = replace_all(s, "\xE2\x80\x9A", "\"");        // E13 ‚
  s = replace_all(s, "\xE2\x80\x99", "\"");        // E14 ’
  s = replace_all(s, "''", "\"");                  // E15
  s = replace_all(s, "\xE2\x80\xA6", "...");       // E16 …
  // F: French quotes
  s = replace_all(s, " \xC2\xAB ", " \"");  // F1
  s = replace_all(s, "\xC2\xAB ", "\"");    // F2
  s = replace_all(s, "\xC2\xAB", "\"");     // F3
  s = replace_all(s, " \xC2\xBB ", "\" ");  // F4
  s = replace_all(s, " \xC2\xBB", "\"");    // F5
  s = replace_all(s, "\xC2\xBB", "\"");     // F6
  s = move_punct_inside_quote(s);           // G1
  s = collapse_spaces(s);                   // H1
  s = trim_spaces(s);                       // H2
  return s;
}

// ---------------------------------------------------------------------------
// intl tokenization
// ---------------------------------------------------------------------------

std::vector<std::string> intl_tokenize(const std::string& text) {
  auto cps = utf8_decode(text);

  // Pass 1: punctuation preceded by a non-number -> "x p " (non-overlapping).
  std::vector<char32_t> pass1;
  pass1.reserve(cps.size() * 2);
  for (std::size_t i = 0; i < cps.size();) {
    if (i + 1 < cps.size() && !is_unicode_number(cps[i]) && is_unicode_punct(cps[i + 1])) {
      pass1.push_back(cps[i]);
      pass1.push_back(U' ');
      pass1.push_back(cps[i + 1]);
      pass1.push_back(U' ');
      i += 2;
    } else {
      pass1.push_back(cps[i]);
      ++i;
    }
  }

  // Pass 2: punctuation followed by a non-number -> " p x".
  std::vector<char32_t> pass2;
  pass2.reserve(pass1.size() * 2);
  for (std::size_t i = 0; i < pass1.size();) {
    if (i + 1 < pass1.size() && is_unicode_punct(pass1[i]) && !is_unicode_number(pass1[i + 1])) {
      pass2.push_back(U' ');
      pass2.push_back(pass1[i]);
      pass2.push_back(U' ');
      pass2.push_back(pass1[i + 1]);
      i += 2;
    } else {
      pass2.push_back(pass1[i]);
      ++i;
    }
  }

  // Pass 3: isolate symbols.
  std::vector<char32_t> pass3;
  pass3.reserve(pass2.size() * 2);
  for (char32_t cp : pass2) {
    if (is_unicode_symbol(cp)) {
      pass3.push_back(U' ');
      pass3.push_back(cp);
      pass3.push_back(U' ');
    } else {
      pass3.push_back(cp);
    }
  }

  // Split on unicode whitespace.
  std::vector<std::string> tokens;
  std::string current;
  for (char32_t cp : pass3) {
    if (is_unicode_space(cp)) {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    } else {
      utf8_append(current, cp);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// ---------------------------------------------------------------------------
// Detokenization
// ---------------------------------------------------------------------------

namespace {

bool is_closing_punct(const std::string& t) {
  static const std::vector<std::string> closing = {".", ",",  "!",  "?",   ":",  ";",
                                                   "%", ")",  "]",  "}",   "...", "\xC2\xBB",
                                                   "\xE2\x80\x9D", "\xE2\x80\xA6"};
  return std::find(closing.begin(), closing.end(), t) != closing.end();
}

bool is_opening_token(const std::string& t) {
  static const std::vector<std::string> opening = {
      "(", "[", "{", "$", "\xC2\xA3", "\xE2\x82\xAC", "\xC2\xBF", "\xC2\xA1",
      "\xC2\xAB", "\xE2\x80\x9C", "\xE2\x80\x9E"};
  return std::find(opening.begin(), opening.end(), t) != opening.end();
}

// 's 'll n't ... attach to the word on their left.
bool is_contraction(const std::string& t) {
  if (t == "n't") return true;
  if (t.size() >= 2 && t[0] == '\'' && is_ascii_letter(t[1])) return true;
  return false;
}

}  // namespace

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  bool pending_space = false;
  int double_quotes = 0;
  int single_quotes = 0;
  for (const auto& token : tokens) {
    if (token.empty()) continue;
    if (is_closing_punct(token) || is_contraction(token)) {
      out += token;
      pending_space = true;
    } else if (is_opening_token(token)) {
      if (pending_space && !out.empty()) out += ' ';
      out += token;
      pending_space = false;
    } else if (token == "\"") {
      if (double_quotes % 2 == 0) {  // opening
        if (pending_space && !out.empty()) out += ' ';
        out += token;
        pending_space = false;
      } else {  // closing
        out += token;
        pending_space = true;
      }
      ++double_quotes;
    } else if (token == "'") {
      if (single_quotes % 2 == 0) {
        if (pending_space && !out.empty()) out += ' ';
        out += token;
        pending_space = false;
      } else {
        out += token;
        pending_space = true;
      }
      ++single_quotes;
    } else {
      if (pending_space && !out.empty()) out += ' ';
      out += token;
      pending_space = true;
    }
  }
  return out;
}

}  // namespace rmt
