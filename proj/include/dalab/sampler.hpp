#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dalab/corpus.hpp"
#include "dalab/rng.hpp"
#include "dalab/schedule.hpp"

namespace dalab {

/// Fractional remainder carried between batches so that the integer source
/// counts track the cumulative sum of B * r_t.
struct QuotaAccumulator {
  // Extended precision keeps B * r + carry exact for double ratios, so the
  // realized total never drifts away from the sum of B * r.
  long double carry = 0.0L;
};

/// count = floor(B * r + carry); the remainder becomes the new carry.
std::pair<std::size_t, QuotaAccumulator> source_quota(std::int64_t batch_size, double ratio,
                                                      QuotaAccumulator acc);

/// Cycles through a fixed set of sentences in shuffled passes. Each pass is
/// a fresh permutation drawn from the pool's own generator.
class SentencePool {
 public:
  SentencePool(std::span<const TaggedSentence> sentences, Domain domain, std::uint64_t seed);

  /// Next n sentence indices; reshuffles whenever a pass is exhausted.
  /// Throws EmptyPoolError if n > 0 and the pool has no sentences.
  std::vector<std::size_t> draw(std::size_t n);

  const TaggedSentence& sentence(std::size_t index) const { return sentences_[index]; }
  std::span<const TaggedSentence> sentences() const noexcept { return sentences_; }
  std::size_t size() const noexcept { return sentences_.size(); }
  Domain domain() const noexcept { return domain_; }
  std::size_t cursor() const noexcept { return cursor_; }
  const std::vector<std::size_t>& permutation() const noexcept { return permutation_; }

 private:
  void reshuffle();

  std::span<const TaggedSentence> sentences_;
  Domain domain_;
  SplitMix64 rng_;
  std::vector<std::size_t> permutation_;
  std::size_t cursor_ = 0;
};

struct BatchItem {
  const TaggedSentence* sentence;
  Domain domain;
  std::size_t index;  // position in the owning pool
};

struct MixedBatch {
  std::int64_t step = 0;
  std::vector<BatchItem> items;

  std::size_t count(Domain d) const noexcept;
};

/// Source items first, then target. Throws ConfigError if t is outside
/// [1, plan.total_steps()].
MixedBatch next_batch(SentencePool& source, SentencePool& target, const TrainingPlan& plan,
                      std::int64_t t, QuotaAccumulator& acc);

/// Pool seed for one domain of a run: derive_seed(run_seed, domain stream).
std::uint64_t pool_seed(std::uint64_t run_seed, Domain domain) noexcept;

/// Owns the two pools and the quota carry for one run.
class MixedSampler {
 public:
  MixedSampler(std::span<const TaggedSentence> source, std::span<const TaggedSentence> target,
               TrainingPlan plan, std::uint64_t run_seed);

  /// Batch for the next step (1, 2, ...).
  MixedBatch next();

  std::int64_t step() const noexcept { return step_; }
  double ratio_at_next() const { return ratio_at(plan_.policy(), step_ + 1); }
  const TrainingPlan& plan() const noexcept { return plan_; }

 private:
  SentencePool source_;
  SentencePool target_;
  TrainingPlan plan_;
  QuotaAccumulator acc_;
  std::int64_t step_ = 0;
};

}  // namespace dalab
