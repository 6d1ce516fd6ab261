#include "dalab/features.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "dalab/errors.hpp"

namespace dalab {

namespace {

enum Template : std::uint8_t {
  kWord = 1,
  kPrefix1,
  kPrefix2,
  kPrefix3,
  kSuffix1,
  kSuffix2,
  kSuffix3,
  kShape,
  kCapitalized,
  kHasDigit,
  kPrevWord,
  kNextWord,
};

}  // namespace

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string word_shape(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    char k = static_cast<char>(c);
    if (std::isupper(c)) k = 'X';
    else if (std::islower(c)) k = 'x';
    else if (std::isdigit(c)) k = 'd';
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  return out;
}

FeatureExtractor::FeatureExtractor(int hash_bits) : hash_bits_(hash_bits) {
  if (hash_bits < 1 || hash_bits > 30)
    throw ConfigError(fmt::format("hash_bits must lie in [1, 30], got {}", hash_bits));
}

std::uint32_t FeatureExtractor::hash(std::uint8_t template_id, std::string_view value) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  mix(template_id);
  for (unsigned char c : value) mix(c);
  return static_cast<std::uint32_t>(h & (dim() - 1));
}

std::vector<std::vector<std::uint32_t>> FeatureExtractor::extract(
    std::span<const std::string> tokens) const {
  std::vector<std::string> lower;
  lower.reserve(tokens.size());
  for (const auto& t : tokens) lower.push_back(lowercase(t));

  std::vector<std::vector<std::uint32_t>> out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& raw = tokens[i];
    const std::string& w = lower[i];
    auto& f = out[i];
    f.reserve(12);
    f.push_back(hash(kWord, w));
    for (std::size_t k = 1; k <= 3 && k <= w.size(); ++k) {
      f.push_back(hash(static_cast<std::uint8_t>(kPrefix1 + k - 1), std::string_view(w).substr(0, k)));
      f.push_back(hash(static_cast<std::uint8_t>(kSuffix1 + k - 1), std::string_view(w).substr(w.size() - k)));
    }
    f.push_back(hash(kShape, word_shape(raw)));
    const bool cap = !raw.empty() && std::isupper(static_cast<unsigned char>(raw[0]));
    f.push_back(hash(kCapitalized, cap ? "1" : "0"));
    const bool digit = std::any_of(raw.begin(), raw.end(),
                                   [](unsigned char c) { return std::isdigit(c) != 0; });
    f.push_back(hash(kHasDigit, digit ? "1" : "0"));
    f.push_back(hash(kPrevWord, i == 0 ? std::string_view("<s>") : std::string_view(lower[i - 1])));
    f.push_back(hash(kNextWord, i + 1 == tokens.size() ? std::string_view("</s>")
                                                       : std::string_view(lower[i + 1])));
  }
  return out;
}

}  // namespace dalab
