#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "robustmt/errors.hpp"

namespace rmt {

// ---------------------------------------------------------------------------
// Deterministic randomness.
//
// All randomness in the toolkit flows through mt19937_64 plus the explicit
// samplers below. The standard <random> distributions are implementation
// defined, so we never use them; these samplers give bit-identical streams
// on every platform.
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to hash stage labels into sub-seeds.
inline std::uint64_t mix_bits(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a per-stage seed from a top-level seed and a stage label, so one
// CLI seed drives every pipeline stage reproducibly.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return mix_bits(base ^ h);
}

inline double uniform_real(Rng& rng) {
  // 53 random bits -> [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection; unbiased and portable.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) throw Error("uniform_index: empty range");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

// ---------------------------------------------------------------------------
// Strings and files.
// ---------------------------------------------------------------------------

std::vector<std::string> split_whitespace(std::string_view line);
std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");

// Reads a whole UTF-8 text file into lines. CRLF is tolerated (the \r is
// stripped); invalid UTF-8 raises IoError with the line number.
std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

bool is_valid_utf8(std::string_view text);

// Decodes the codepoint starting at byte offset `i`; advances `i` past it.
// Throws IoError on malformed input.
char32_t utf8_next(std::string_view text, std::size_t& i);
void utf8_append(std::string& out, char32_t cp);
std::vector<char32_t> utf8_decode(std::string_view text);
std::string utf8_encode(const std::vector<char32_t>& cps);

// ---------------------------------------------------------------------------
// Flat key-value configuration files: `key = value` lines, '#' comments.
// Used for pipeline plan files. Unknown-key checking is the caller's job
// since the legal key set depends on the subcommand.
// ---------------------------------------------------------------------------

std::map<std::string, std::string> parse_kv_file(const std::string& path);
std::map<std::string, std::string> parse_kv_text(std::string_view text);

// FNV-1a over raw bytes; used for parameter checksums in tests and logs.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 1469598103934665603ULL);

}  // namespace rmt
