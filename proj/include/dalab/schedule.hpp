#pragma once

#include <cstdint>
#include <string>
#include <variant>

namespace dalab {

/// Exponentially decaying source proportion r_S(t) = alpha * lambda^(t-1).
/// Both parameters lie strictly inside (0, 1); the constructor enforces it.
class AnnealingSchedule {
 public:
  AnnealingSchedule(double alpha, double lambda);

  double alpha() const noexcept { return alpha_; }
  double lambda() const noexcept { return lambda_; }

  friend bool operator==(const AnnealingSchedule&, const AnnealingSchedule&) = default;

 private:
  double alpha_;
  double lambda_;
};

struct TargetOnly {
  friend bool operator==(const TargetOnly&, const TargetOnly&) = default;
};

struct FixedRatio {
  double rho;
  friend bool operator==(const FixedRatio&, const FixedRatio&) = default;
};

struct TwoPhase {
  std::int64_t source_steps;
  friend bool operator==(const TwoPhase&, const TwoPhase&) = default;
};

struct Annealed {
  AnnealingSchedule schedule;
  friend bool operator==(const Annealed&, const Annealed&) = default;
};

/// The four ways a run can mix source and target data:
/// Vanilla (TargetOnly), MULT (FixedRatio), INIT (TwoPhase) and data
/// annealing (Annealed).
class MixPolicy {
 public:
  using Variant = std::variant<TargetOnly, FixedRatio, TwoPhase, Annealed>;

  static MixPolicy target_only() { return MixPolicy(TargetOnly{}); }
  static MixPolicy fixed_ratio(double rho);
  static MixPolicy two_phase(std::int64_t source_steps);
  static MixPolicy annealed(AnnealingSchedule schedule) {
    return MixPolicy(Annealed{schedule});
  }

  const Variant& variant() const noexcept { return variant_; }
  bool is_annealed() const noexcept { return std::holds_alternative<Annealed>(variant_); }
  std::string describe() const;

  friend bool operator==(const MixPolicy&, const MixPolicy&) = default;

 private:
  explicit MixPolicy(Variant v) : variant_(v) {}
  Variant variant_;
};

/// B sentences per batch, m batches in total.
class TrainingPlan {
 public:
  TrainingPlan(std::int64_t batch_size, std::int64_t total_steps, MixPolicy policy);

  std::int64_t batch_size() const noexcept { return batch_size_; }
  std::int64_t total_steps() const noexcept { return total_steps_; }
  const MixPolicy& policy() const noexcept { return policy_; }

 private:
  std::int64_t batch_size_;
  std::int64_t total_steps_;
  MixPolicy policy_;
};

// Steps are 1-based batch indices. Passing t < 1 throws ConfigError.
double source_ratio_at(const AnnealingSchedule& schedule, std::int64_t t);
double target_ratio_at(const AnnealingSchedule& schedule, std::int64_t t);
double ratio_at(const MixPolicy& policy, std::int64_t t);

/// Expected number of source sentences over the whole plan,
/// B * alpha * (1 - lambda^m) / (1 - lambda). Throws UnsupportedPolicyError
/// unless the plan is annealed.
double exact_source_budget(const TrainingPlan& plan);

/// Limit of exact_source_budget as m grows: B * alpha / (1 - lambda).
double approx_source_budget(std::int64_t batch_size, const AnnealingSchedule& schedule);

/// Inverts approx_source_budget for alpha. Throws InfeasibleBudgetError when
/// the result falls outside (0, 1).
double alpha_for_budget(double source_budget, double lambda, std::int64_t batch_size);

}  // namespace dalab
