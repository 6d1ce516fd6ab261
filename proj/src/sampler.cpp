#include "dalab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "dalab/errors.hpp"

namespace dalab {

std::pair<std::size_t, QuotaAccumulator> source_quota(std::int64_t batch_size, double ratio,
                                                      QuotaAccumulator acc) {
  if (!(ratio >= 0.0 && ratio <= 1.0))
    throw ConfigError(fmt::format("source ratio must lie in [0, 1], got {}", ratio));
  const long double b = static_cast<long double>(batch_size);
  const long double want = b * ratio + acc.carry;
  const long double whole = std::min(std::floor(want), b);
  return {static_cast<std::size_t>(whole), QuotaAccumulator{want - whole}};
}

SentencePool::SentencePool(std::span<const TaggedSentence> sentences, Domain domain,
                           std::uint64_t seed)
    : sentences_(sentences), domain_(domain), rng_(seed), permutation_(sentences.size()) {
  std::iota(permutation_.begin(), permutation_.end(), std::size_t{0});
  reshuffle();
}

void SentencePool::reshuffle() {
  shuffle(std::span<std::size_t>(permutation_), rng_);
  cursor_ = 0;
}

std::vector<std::size_t> SentencePool::draw(std::size_t n) {
  if (n > 0 && sentences_.empty())
    throw EmptyPoolError(fmt::format("cannot draw {} sentence(s) from the empty {} pool", n,
                                     domain_name(domain_)));
  std::vector<std::size_t> out;
  out.reserve(n);
  while (out.size() < n) {
    if (cursor_ == permutation_.size()) reshuffle();
    out.push_back(permutation_[cursor_++]);
  }
  return out;
}

std::size_t MixedBatch::count(Domain d) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [d](const BatchItem& i) { return i.domain == d; }));
}

MixedBatch next_batch(SentencePool& source, SentencePool& target, const TrainingPlan& plan,
                      std::int64_t t, QuotaAccumulator& acc) {
  if (t < 1 || t > plan.total_steps())
    throw ConfigError(fmt::format("step {} outside [1, {}]", t, plan.total_steps()));
  const auto [quota, next_acc] = source_quota(plan.batch_size(), ratio_at(plan.policy(), t), acc);
  const auto b = static_cast<std::size_t>(plan.batch_size());

  MixedBatch batch;
  batch.step = t;
  batch.items.reserve(b);
  for (std::size_t i : source.draw(quota))
    batch.items.push_back({&source.sentence(i), Domain::Source, i});
  for (std::size_t i : target.draw(b - quota))
    batch.items.push_back({&target.sentence(i), Domain::Target, i});
  acc = next_acc;
  return batch;
}

std::uint64_t pool_seed(std::uint64_t run_seed, Domain domain) noexcept {
  return derive_seed(run_seed, 0x706f6f6c00ULL + static_cast<std::uint64_t>(domain));
}

MixedSampler::MixedSampler(std::span<const TaggedSentence> source,
                           std::span<const TaggedSentence> target, TrainingPlan plan,
                           std::uint64_t run_seed)
    : source_(source, Domain::Source, pool_seed(run_seed, Domain::Source)),
      target_(target, Domain::Target, pool_seed(run_seed, Domain::Target)),
      plan_(std::move(plan)) {}

MixedBatch MixedSampler::next() {
  auto batch = next_batch(source_, target_, plan_, step_ + 1, acc_);
  ++step_;
  return batch;
}

}  // namespace dalab
