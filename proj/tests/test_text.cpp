#include <doctest.h>

#include <fstream>

#include "oracles.hpp"
#include "robustmt/text.hpp"
#include "robustmt/util.hpp"

using namespace rmt;

namespace {

// fixture TSV: input<TAB>expected, UTF-8
std::vector<std::pair<std::string, std::string>> load_cases(const std::string& name) {
  std::vector<std::pair<std::string, std::string>> cases;
  for (const auto& line : read_lines(std::string(RMT_FIXTURES_DIR) + "/" + name)) {
    auto tab = line.find('\t');
    REQUIRE(tab != std::string::npos);
    cases.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return cases;
}

std::string random_text(Rng& rng) {
  static const std::vector<std::string> pieces = {
      "a", "b", "Zq", "12", "3",  " ", "  ", ".", ",", "!", "?", "(", ")", "\"", "'",
      "«", "»", "“", "”", "’", "—", "–", " ", "…",
      "café", "%", ":", ";"};
  std::string out;
  std::size_t n = uniform_index(rng, 12);
  for (std::size_t i = 0; i < n; ++i) out += pieces[uniform_index(rng, pieces.size())];
  return out;
}

}  // namespace

TEST_SUITE("text") {

TEST_CASE("normalize matches the shipped fixture cases bit-exactly") {
  for (const auto& [input, expected] : load_cases("normalize_cases.tsv")) {
    CAPTURE(input);
    CHECK(normalize(input) == expected);
  }
}

TEST_CASE("normalize is idempotent") {
  for (const auto& [input, expected] : load_cases("normalize_cases.tsv")) {
    CAPTURE(input);
    CHECK(normalize(expected) == expected);
  }
  Rng rng(20240811);
  for (int i = 0; i < 2000; ++i) {
    std::string text = random_text(rng);
    std::string once = normalize(text);
    CAPTURE(text);
    CHECK(normalize(once) == once);
  }
}

TEST_CASE("normalization rule table matches the shipped fixture") {
  std::ifstream in(std::string(RMT_FIXTURES_DIR) + "/normalize_rules.tsv", std::ios::binary);
  REQUIRE(in.good());
  std::string fixture((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(normalization_rules_text() == fixture);
}

TEST_CASE("intl tokenization matches fixtures") {
  for (const auto& [input, expected] : load_cases("intl_cases.tsv")) {
    CAPTURE(input);
    CHECK(join(intl_tokenize(input)) == expected);
  }
  CHECK(intl_tokenize("").empty());
  CHECK(intl_tokenize("Hello, world!") ==
        std::vector<std::string>{"Hello", ",", "world", "!"});
}

TEST_CASE("intl tokenization is a fixpoint under re-tokenization") {
  Rng rng(777);
  for (int i = 0; i < 2000; ++i) {
    std::string text = random_text(rng);
    auto tokens = intl_tokenize(text);
    auto again = intl_tokenize(join(tokens));
    CAPTURE(text);
    CHECK(again == tokens);
  }
}

TEST_CASE("detokenize matches fixtures") {
  for (const auto& [input, expected] : load_cases("detok_cases.tsv")) {
    CAPTURE(input);
    CHECK(detokenize(split_whitespace(input)) == expected);
  }
  CHECK(detokenize({}) == "");
  CHECK(detokenize({"token"}) == "token");
  CHECK(detokenize({"Hello", ",", "world", "!"}) == "Hello, world!");
}

TEST_CASE("unicode category tables behave") {
  CHECK(is_unicode_punct(U'.'));
  CHECK(is_unicode_punct(U'¿'));
  CHECK(!is_unicode_punct(U'a'));
  CHECK(is_unicode_symbol(U'$'));
  CHECK(is_unicode_symbol(U'€'));
  CHECK(!is_unicode_symbol(U'.'));
  CHECK(is_unicode_number(U'7'));
  CHECK(is_unicode_number(U'٠'));  // Arabic-Indic digit
  CHECK(!is_unicode_number(U'x'));
  CHECK(is_unicode_space(U' '));
  CHECK(is_unicode_space(U' '));
  CHECK(!is_unicode_space(U'_'));
}

}  // TEST_SUITE
