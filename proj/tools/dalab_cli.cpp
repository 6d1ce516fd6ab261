// dalab: command-line harness for data-annealing transfer experiments.
//
// Exit codes: 0 success, 1 configuration error, 2 data error,
// 3 internal invariant violation.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dalab/corpus.hpp"
#include "dalab/errors.hpp"
#include "dalab/experiment.hpp"

namespace {

using namespace dalab;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 1;
  if (dynamic_cast<const DataError*>(&e)) return 2;
  return 3;
}

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

struct TrainArgs {
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

void add_config_flags(CLI::App* cmd, TrainArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value experiment config file");
  for (const auto& key : config_keys()) {
    cmd->add_option_function<std::string>(
        flag_name(key), [&args, key](const std::string& v) { args.overrides[key] = v; },
        "overrides config key '" + key + "'");
  }
}

ExperimentConfig resolve_config(const TrainArgs& args, bool force_init) {
  ExperimentConfig config;
  if (!args.config_path.empty()) config = load_config_file(args.config_path, config);
  for (const auto& [key, value] : args.overrides) set_config_value(config, key, value);
  if (force_init) config.paradigm = Paradigm::Init;
  validate(config);
  return config;
}

int run_train(const TrainArgs& args, bool force_init) {
  const ExperimentConfig config = resolve_config(args, force_init);
  const auto records = cmd_train(config);
  for (const auto& r : records)
    std::cout << fmt::format("{} seed={} dev_f1={:.4f} test_f1={:.4f} test_acc={:.4f} -> {}\n",
                             to_string(r.paradigm), r.seed, r.dev.f1, r.test.f1,
                             r.test.token_accuracy, run_directory(config, r.seed).string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-annealing transfer learning lab"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train one paradigm over every configured seed");
  add_config_flags(train, train_args);

  TrainArgs init_args;
  auto* init = app.add_subcommand("init", "train with paradigm=init (source-only candidates, then fine-tune)");
  add_config_flags(init, init_args);

  double alpha = 0.9, lambda = 0.99;
  std::int64_t batch_size = 32, total_steps = 3000;
  std::string schedule_out;
  auto* schedule = app.add_subcommand("schedule", "print the per-step annealing schedule as CSV");
  schedule->add_option("--alpha", alpha, "initial source proportion")->capture_default_str();
  schedule->add_option("--lambda", lambda, "per-step decay rate")->capture_default_str();
  schedule->add_option("--batch-size", batch_size)->capture_default_str();
  schedule->add_option("--total-steps", total_steps)->capture_default_str();
  schedule->add_option("--out", schedule_out, "write CSV here instead of stdout");

  std::string sub_in, sub_out;
  double fraction = 1.0;
  std::uint64_t sub_seed = 1;
  std::size_t token_column = 0, label_column = 1;
  auto* sub = app.add_subcommand("subsample", "keep a seeded random fraction of a corpus");
  sub->add_option("input", sub_in, "CoNLL corpus")->required();
  sub->add_option("--fraction", fraction)->required();
  sub->add_option("--seed", sub_seed)->capture_default_str();
  sub->add_option("--out", sub_out)->required();
  sub->add_option("--token-column", token_column)->capture_default_str();
  sub->add_option("--label-column", label_column)->capture_default_str();

  SynthConfig synth_config;
  std::string synth_out = "synth";
  auto* synth = app.add_subcommand("synth", "generate a formal/informal synthetic corpus pair");
  synth->add_option("--source-sentences", synth_config.source_sentences)->capture_default_str();
  synth->add_option("--target-sentences", synth_config.target_sentences)->capture_default_str();
  synth->add_option("--noise-rate", synth_config.noise_rate)->capture_default_str();
  synth->add_option("--seed", synth_config.seed)->capture_default_str();
  synth->add_option("--out", synth_out, "output directory")->capture_default_str();

  std::string report_dir;
  bool report_jsonl_only = false;
  auto* report = app.add_subcommand("report", "aggregate finished runs by paradigm");
  report->add_option("run_dir", report_dir)->required();
  report->add_flag("--jsonl", report_jsonl_only, "print JSON-lines only");

  std::vector<std::string> stats_files;
  bool stats_plain = false;
  auto* stats = app.add_subcommand("stats", "corpus statistics as CSV (name,split,sentences,tokens)");
  stats->add_option("files", stats_files, "split=path or path")->required();
  stats->add_option("--token-column", token_column)->capture_default_str();
  stats->add_option("--label-column", label_column)->capture_default_str();
  stats->add_flag("--plain-tags", stats_plain, "labels are plain tags rather than BIO");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*train) return run_train(train_args, false);
    if (*init) return run_train(init_args, true);
    if (*schedule) {
      const auto table = cmd_schedule(alpha, lambda, batch_size, total_steps);
      if (schedule_out.empty()) {
        write_schedule_csv(std::cout, table);
      } else {
        std::ofstream out(schedule_out);
        if (!out) throw DataError(fmt::format("cannot write '{}'", schedule_out));
        write_schedule_csv(out, table);
      }
      return 0;
    }
    if (*sub) {
      ConllOptions opts;
      opts.token_column = token_column;
      opts.label_column = label_column;
      opts.scheme = LabelScheme::PlainTags;
      cmd_subsample(sub_in, fraction, sub_seed, sub_out, opts);
      return 0;
    }
    if (*synth) {
      cmd_synth(synth_config, synth_out);
      return 0;
    }
    if (*report) {
      const auto summaries = cmd_report(report_dir);
      const auto records = summary_records(summaries);
      {
        std::ofstream out(std::filesystem::path(report_dir) / "report.jsonl", std::ios::binary);
        for (const auto& r : records) out << r.dump() << '\n';
      }
      if (report_jsonl_only) {
        for (const auto& r : records) std::cout << r.dump() << '\n';
      } else {
        write_summary_table(std::cout, summaries);
      }
      return 0;
    }
    if (*stats) {
      std::vector<CorpusStats> rows;
      for (const auto& arg : stats_files) {
        const auto eq = arg.find('=');
        const std::string split = eq == std::string::npos ? "all" : arg.substr(0, eq);
        const std::string path = eq == std::string::npos ? arg : arg.substr(eq + 1);
        ConllOptions opts;
        opts.token_column = token_column;
        opts.label_column = label_column;
        opts.scheme = stats_plain ? LabelScheme::PlainTags : LabelScheme::BIO;
        rows.push_back(corpus_stats(read_conll_file(path, opts), split));
      }
      write_stats_csv(std::cout, rows);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "dalab: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 1;
}
