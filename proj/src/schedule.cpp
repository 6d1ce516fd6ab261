#include "dalab/schedule.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dalab/errors.hpp"

namespace dalab {

namespace {

bool open_unit(double x) { return x > 0.0 && x < 1.0; }

void check_step(std::int64_t t) {
  if (t < 1) throw ConfigError(fmt::format("step index must be >= 1, got {}", t));
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

AnnealingSchedule::AnnealingSchedule(double alpha, double lambda)
    : alpha_(alpha), lambda_(lambda) {
  if (!open_unit(alpha)) throw ConfigError(fmt::format("alpha must lie in (0, 1), got {}", alpha));
  if (!open_unit(lambda))
    throw ConfigError(fmt::format("lambda must lie in (0, 1), got {}", lambda));
}

MixPolicy MixPolicy::fixed_ratio(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0))
    throw ConfigError(fmt::format("fixed source ratio must lie in [0, 1], got {}", rho));
  return MixPolicy(FixedRatio{rho});
}

MixPolicy MixPolicy::two_phase(std::int64_t source_steps) {
  if (source_steps < 1)
    throw ConfigError(fmt::format("two-phase source_steps must be >= 1, got {}", source_steps));
  return MixPolicy(TwoPhase{source_steps});
}

std::string MixPolicy::describe() const {
  return std::visit(
      Overloaded{
          [](const TargetOnly&) { return std::string("target_only"); },
          [](const FixedRatio& p) { return fmt::format("fixed_ratio(rho={})", p.rho); },
          [](const TwoPhase& p) { return fmt::format("two_phase(source_steps={})", p.source_steps); },
          [](const Annealed& p) {
            return fmt::format("annealed(alpha={}, lambda={})", p.schedule.alpha(),
                               p.schedule.lambda());
          },
      },
      variant_);
}

TrainingPlan::TrainingPlan(std::int64_t batch_size, std::int64_t total_steps, MixPolicy policy)
    : batch_size_(batch_size), total_steps_(total_steps), policy_(policy) {
  if (batch_size < 1) throw ConfigError(fmt::format("batch_size must be >= 1, got {}", batch_size));
  if (total_steps < 1)
    throw ConfigError(fmt::format("total_steps must be >= 1, got {}", total_steps));
}

double source_ratio_at(const AnnealingSchedule& schedule, std::int64_t t) {
  check_step(t);
  return schedule.alpha() * std::pow(schedule.lambda(), static_cast<double>(t - 1));
}

double target_ratio_at(const AnnealingSchedule& schedule, std::int64_t t) {
  return 1.0 - source_ratio_at(schedule, t);
}

double ratio_at(const MixPolicy& policy, std::int64_t t) {
  check_step(t);
  return std::visit(Overloaded{
                        [](const TargetOnly&) { return 0.0; },
                        [](const FixedRatio& p) { return p.rho; },
                        [t](const TwoPhase& p) { return t <= p.source_steps ? 1.0 : 0.0; },
                        [t](const Annealed& p) { return source_ratio_at(p.schedule, t); },
                    },
                    policy.variant());
}

double exact_source_budget(const TrainingPlan& plan) {
  const auto* annealed = std::get_if<Annealed>(&plan.policy().variant());
  if (annealed == nullptr)
    throw UnsupportedPolicyError("exact source budget is only defined for annealed policies, got " +
                                 plan.policy().describe());
  const auto& s = annealed->schedule;
  // 1 - lambda^m via expm1 keeps full precision when lambda^m is close to 1.
  const double tail = -std::expm1(static_cast<double>(plan.total_steps()) * std::log(s.lambda()));
  return static_cast<double>(plan.batch_size()) * s.alpha() * tail / (1.0 - s.lambda());
}

double approx_source_budget(std::int64_t batch_size, const AnnealingSchedule& schedule) {
  if (batch_size < 1) throw ConfigError(fmt::format("batch_size must be >= 1, got {}", batch_size));
  return static_cast<double>(batch_size) * schedule.alpha() / (1.0 - schedule.lambda());
}

double alpha_for_budget(double source_budget, double lambda, std::int64_t batch_size) {
  if (!(source_budget > 0.0))
    throw ConfigError(fmt::format("source budget must be > 0, got {}", source_budget));
  if (!open_unit(lambda)) throw ConfigError(fmt::format("lambda must lie in (0, 1), got {}", lambda));
  if (batch_size < 1) throw ConfigError(fmt::format("batch_size must be >= 1, got {}", batch_size));
  const double alpha = source_budget * (1.0 - lambda) / static_cast<double>(batch_size);
  if (!open_unit(alpha))
    throw InfeasibleBudgetError(
        fmt::format("source budget {} with lambda={} and batch_size={} needs alpha={}, outside (0, 1)",
                    source_budget, lambda, batch_size, alpha),
        alpha);
  return alpha;
}

}  // namespace dalab
