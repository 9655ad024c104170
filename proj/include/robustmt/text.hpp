#pragma once

#include <string>
#include <vector>

namespace rmt {

// ---------------------------------------------------------------------------
// Scoring-side text handling: Moses-style punctuation normalization and
// detokenization, and the language-independent "intl" tokenization used for
// BLEU. All three are pure, deterministic, and idempotent.
// ---------------------------------------------------------------------------

// One entry of the normalization rule table (see normalization_rules()).
struct NormalizeRule {
  const char* id;
  const char* pattern;      // human-readable pattern, \xA0 = NBSP, \d = digit
  const char* replacement;  // \1 \2 refer to captured digits
};

// The ordered, bit-exact rule table applied by normalize(). Shipped as a
// fixture so downstream tooling can rely on the exact behavior.
const std::vector<NormalizeRule>& normalization_rules();
std::string normalization_rules_text();

// Moses-equivalent punctuation normalization: digit grouping over no-break
// spaces, no-break/unicode space unification, parenthesis spacing, quote and
// dash variants, French quotes, ellipsis, and final whitespace collapse+trim.
std::string normalize(const std::string& text);

// sacreBLEU international tokenization: splits punctuation (category P) off
// non-digit neighbors, isolates symbols (category S), then splits on unicode
// whitespace. Digit-internal punctuation ("3.5") is preserved.
std::vector<std::string> intl_tokenize(const std::string& text);

// Moses-style English detokenization: closing punctuation attaches left,
// opening brackets and currency attach right, straight quotes alternate by
// parity, apostrophe contractions attach left.
std::string detokenize(const std::vector<std::string>& tokens);

// Unicode general-category tests backing the intl tokenizer.
bool is_unicode_punct(char32_t cp);
bool is_unicode_symbol(char32_t cp);
bool is_unicode_number(char32_t cp);
bool is_unicode_space(char32_t cp);

}  // namespace rmt
