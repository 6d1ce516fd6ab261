#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dalab {

/// Hashes each token's context into a fixed-size sparse index space.
///
/// Templates, in order: lowercased word; lowercased prefixes and suffixes
/// of length 1-3 (only those not longer than the word); word shape (upper
/// -> X, lower -> x, digit -> d, runs collapsed); capitalized flag;
/// contains-digit flag; previous and next lowercased word (with <s>/</s>
/// at the sentence edges). A feature is FNV-1a-64 of its template id and
/// value, masked to hash_bits.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(int hash_bits = 18);

  int hash_bits() const noexcept { return hash_bits_; }
  std::uint32_t dim() const noexcept { return std::uint32_t{1} << hash_bits_; }

  /// One index list per token. Identical context gives identical lists.
  std::vector<std::vector<std::uint32_t>> extract(std::span<const std::string> tokens) const;

  std::uint32_t hash(std::uint8_t template_id, std::string_view value) const noexcept;

 private:
  int hash_bits_;
};

std::string lowercase(std::string_view s);
std::string word_shape(std::string_view s);

}  // namespace dalab
