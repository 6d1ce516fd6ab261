#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dalab/corpus.hpp"
#include "dalab/evaluator.hpp"
#include "dalab/model.hpp"
#include "dalab/schedule.hpp"

namespace dalab {

enum class Task { Ner, Pos, Chunk, Synth };
enum class Paradigm { Vanilla, Mult, Init, Da };

std::string to_string(Task t);
std::string to_string(Paradigm p);
Task parse_task(const std::string& s);
Paradigm parse_paradigm(const std::string& s);
LabelScheme task_scheme(Task t) noexcept;

struct Bounds {
  double lo;
  double hi;
};

struct ExperimentConfig {
  Task task = Task::Synth;
  Paradigm paradigm = Paradigm::Da;

  std::string source_train;
  std::string source_dev;
  std::string target_train;
  std::string target_dev;
  std::string target_test;
  std::size_t source_token_column = 0;
  std::size_t source_label_column = 1;
  std::size_t target_token_column = 0;
  std::size_t target_label_column = 1;

  std::int64_t batch_size = 32;
  std::int64_t total_steps = 3000;
  std::optional<double> alpha;
  std::optional<double> lambda;
  /// When set (and alpha is not), alpha is derived as D_S * (1 - lambda) / B.
  std::optional<double> source_budget;
  std::optional<double> mult_ratio;
  std::optional<std::int64_t> init_source_steps;
  int init_candidates = 3;
  /// Closed ranges checked for alpha and lambda; nullopt disables the check.
  std::optional<Bounds> alpha_bounds = Bounds{0.9, 0.99};
  std::optional<Bounds> lambda_bounds = Bounds{0.9, 0.99};

  std::vector<std::uint64_t> seeds{1};
  double subsample_fraction = 1.0;
  ModelConfig model;
  OptimizerConfig optimizer;
  std::int64_t eval_every = 200;

  std::string output_dir = "runs";
  bool save_checkpoints = true;
  int jobs = 1;
};

/// Every key accepted by set_config_value, in a stable order.
const std::vector<std::string>& config_keys();

/// Assigns one key=value pair; throws ConfigError for unknown keys or
/// unparsable values.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Flat UTF-8 "key = value" lines; '#' starts a comment.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});

/// Checks paradigm-specific requirements and ranges; throws ConfigError.
void validate(const ExperimentConfig& config);

/// alpha after applying source_budget, if any.
double resolved_alpha(const ExperimentConfig& config);
MixPolicy policy_for(const ExperimentConfig& config);
TrainingPlan plan_for(const ExperimentConfig& config);

nlohmann::json config_to_json(const ExperimentConfig& config);

struct ExperimentData {
  Corpus source_train;
  Corpus source_dev;  // may be empty except for INIT
  Corpus target_train;
  Corpus target_dev;
  Corpus target_test;
};

ExperimentData load_data(const ExperimentConfig& config);

struct StepRecord {
  std::int64_t t;
  double source_ratio;
  std::size_t source_count;
  std::size_t target_count;
  double loss;
};

struct DevPoint {
  std::int64_t t;
  double f1;
  double accuracy;
};

struct InitCandidate {
  int index;
  std::uint64_t seed;
  double score;
};

struct RunRecord {
  std::uint64_t seed = 0;
  Paradigm paradigm = Paradigm::Vanilla;
  std::vector<StepRecord> steps;
  std::vector<DevPoint> dev_curve;
  std::vector<InitCandidate> init_candidates;
  std::optional<int> init_selected;
  EvalReport dev;
  EvalReport test;
  double wall_seconds = 0.0;  // kept out of record.jsonl
};

struct RunResult {
  RunRecord record;
  NeuralCrfModel model;
};

/// Evaluates one head on a corpus whose labels must belong to that head.
EvalReport evaluate(const NeuralCrfModel& model, Domain head, const Corpus& corpus);

/// One complete run (all phases) for one seed.
RunResult run_seed(const ExperimentConfig& config, const ExperimentData& data, std::uint64_t seed);

/// Directory that holds the files of one run.
std::filesystem::path run_directory(const ExperimentConfig& config, std::uint64_t seed);

/// record.jsonl lines: config, steps, dev curve, INIT bookkeeping, final
/// reports. Fully determined by (config, data, seed).
std::vector<nlohmann::json> record_lines(const ExperimentConfig& config, const RunRecord& record);

/// Writes record.jsonl, timing.json and (optionally) model.ckpt.
void write_run(const ExperimentConfig& config, const RunResult& result);

/// Runs every seed and persists each run.
std::vector<RunRecord> cmd_train(const ExperimentConfig& config);
std::vector<RunRecord> cmd_train(const ExperimentConfig& config, const ExperimentData& data);

struct ScheduleRow {
  std::int64_t step;
  double source_ratio;
  double target_ratio;
  std::size_t source_count;
  std::size_t cum_source;
};

struct ScheduleTable {
  std::vector<ScheduleRow> rows;
  double exact_budget;
  double approx_budget;
};

ScheduleTable cmd_schedule(double alpha, double lambda, std::int64_t batch_size,
                           std::int64_t total_steps);
/// CSV with header step,source_ratio,target_ratio,source_count,cum_source
/// and two '#'-prefixed footer rows for the exact and approximate budgets.
void write_schedule_csv(std::ostream& out, const ScheduleTable& table);

void cmd_subsample(const std::string& in_path, double fraction, std::uint64_t seed,
                   const std::string& out_path, const ConllOptions& options = {});

/// Writes {source,target}.{train,dev,test}.conll under out_dir.
void cmd_synth(const SynthConfig& config, const std::filesystem::path& out_dir);

struct MetricRange {
  double mean;
  double min;
  double max;
};

struct ParadigmSummary {
  std::string paradigm;
  std::vector<std::uint64_t> seeds;
  EvalReport dev;
  EvalReport test;
  std::map<std::string, MetricRange> test_ranges;  // f1, precision, recall, token_accuracy
};

/// Aggregates every record.jsonl under run_dir by paradigm, sorted by name.
std::vector<ParadigmSummary> cmd_report(const std::filesystem::path& run_dir);
std::vector<nlohmann::json> summary_records(const std::vector<ParadigmSummary>& summaries);
void write_summary_table(std::ostream& out, const std::vector<ParadigmSummary>& summaries);

}  // namespace dalab
