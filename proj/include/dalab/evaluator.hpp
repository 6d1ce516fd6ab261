#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dalab/corpus.hpp"

namespace dalab {

struct ChunkSpan {
  std::string type;
  std::size_t start;  // inclusive
  std::size_t end;    // exclusive

  auto operator<=>(const ChunkSpan&) const = default;
};

/// Lenient BIO decoding: an I-x that does not continue an x chunk opens a
/// new one. Labels other than B-x/I-x count as outside.
std::vector<ChunkSpan> extract_chunks(std::span<const std::string> labels);

struct TypeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Counts are doubles because aggregated reports hold per-run means.
  double gold_count = 0.0;
  double pred_count = 0.0;
  double correct_count = 0.0;
  /// Number of aggregated runs in which this type did not occur at all.
  int missing_runs = 0;
};

struct EvalReport {
  double token_accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double gold_chunks = 0.0;
  double pred_chunks = 0.0;
  double correct_chunks = 0.0;
  double tokens = 0.0;
  bool chunk_metrics = true;  // false for plain-tag tasks (accuracy only)
  int runs = 1;
  std::map<std::string, TypeScore> per_type;
};

/// Harmonic mean, 0 when p + r = 0.
double f1_score(double precision, double recall) noexcept;

using LabelSequences = std::vector<std::vector<std::string>>;

/// Throws ShapeMismatchError naming the first sentence whose length (or
/// presence) differs.
EvalReport score(const LabelSequences& gold, const LabelSequences& pred,
                 LabelScheme scheme = LabelScheme::BIO);

/// Mean of every scalar over the runs. A type absent from a run contributes
/// zeros to the means and increments missing_runs.
EvalReport aggregate_runs(std::span<const EvalReport> reports);

/// {"record":"overall",...} followed by one {"record":"type",...} per type.
std::vector<nlohmann::json> report_records(const EvalReport& report);
EvalReport report_from_records(const std::vector<nlohmann::json>& records);

}  // namespace dalab
