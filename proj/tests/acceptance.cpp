// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Heavy criteria (5-7) train real models on synthetic data
// written under --workdir.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "crf_oracle.hpp"
#include "dalab/crf.hpp"
#include "dalab/evaluator.hpp"
#include "dalab/experiment.hpp"
#include "dalab/sampler.hpp"
#include "dalab/schedule.hpp"
#include "eval_fixture.hpp"
#include "model_oracle.hpp"

using namespace dalab;
namespace fs = std::filesystem;
// Wide enough that sums of B * r for double r are exact.
using Exact = boost::multiprecision::cpp_bin_float_50;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, std::string what) {
    if (!ok) pass = false;
    notes.push_back(fmt::format("{} {}", ok ? "ok  " : "FAIL", std::move(what)));
  }
  void info(std::string what) { notes.push_back("info " + std::move(what)); }
};

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// ---------------------------------------------------------------- 1

Outcome schedule_arithmetic() {
  Outcome o;
  double worst_sum = 0.0;
  const std::vector<std::pair<double, double>> params = {
      {0.9, 0.99}, {0.95, 0.9}, {0.5, 0.999}, {0.99, 0.995}, {0.1, 0.5}, {0.93, 0.9999}};
  for (const auto& [alpha, lambda] : params)
    for (std::int64_t B : {1, 16, 32, 100}) {
      const TrainingPlan plan(B, 10000, MixPolicy::annealed(AnnealingSchedule(alpha, lambda)));
      long double sum = 0.0L, power = 1.0L;
      for (std::int64_t m = 1; m <= 10000; ++m) {
        sum += static_cast<long double>(B) * alpha * power;
        power *= lambda;
        const TrainingPlan pm(B, m, plan.policy());
        worst_sum = std::max(worst_sum, rel_err(exact_source_budget(pm), double(sum)));
      }
    }
  o.require(worst_sum <= 1e-9, fmt::format("closed-form vs brute-force budget, m = 1..10000: worst rel err {:.2e}", worst_sum));

  double worst_approx = 0.0;
  for (double alpha : {0.9, 0.95, 0.99})
    for (std::int64_t B : {16, 32})
      for (std::int64_t m = 2000; m <= 20000; m += 500) {
        const AnnealingSchedule sched(alpha, 0.99);
        const TrainingPlan p(B, m, MixPolicy::annealed(sched));
        worst_approx = std::max(worst_approx, rel_err(exact_source_budget(p), approx_source_budget(B, sched)));
      }
  o.require(worst_approx < 0.01, fmt::format("exact vs approximate budget, lambda=0.99, m >= 2000: worst rel diff {:.2e}", worst_approx));

  double worst_inv = 0.0;
  SplitMix64 rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const double alpha = rng.uniform(0.01, 0.99);
    const double lambda = rng.uniform(0.5, 0.9999);
    const std::int64_t B = 1 + std::int64_t(rng.below(128));
    const double budget = approx_source_budget(B, AnnealingSchedule(alpha, lambda));
    worst_inv = std::max(worst_inv, rel_err(alpha_for_budget(budget, lambda, B), alpha));
  }
  o.require(worst_inv <= 1e-12, fmt::format("alpha_for_budget inverts the approximate budget: worst rel err {:.2e}", worst_inv));
  return o;
}

// ---------------------------------------------------------------- 2

Outcome sampler_quota() {
  Outcome o;
  SplitMix64 rng(77);
  const std::vector<std::pair<std::string, std::function<double(std::int64_t)>>> sequences = {
      {"annealed 0.9/0.99", [](std::int64_t t) { return 0.9 * std::pow(0.99, double(t - 1)); }},
      {"annealed 0.9/0.9995", [](std::int64_t t) { return 0.9 * std::pow(0.9995, double(t - 1)); }},
      {"constant 1/3", [](std::int64_t) { return 1.0 / 3.0; }},
      {"alternating 0/1", [](std::int64_t t) { return double(t % 2); }},
      {"uniform random", [&rng](std::int64_t) { return rng.uniform(); }},
      {"tiny ratios", [&rng](std::int64_t) { return rng.uniform() * 1e-3; }},
  };
  for (std::int64_t B : {1, 7, 16, 32, 100})
    for (const auto& [name, ratio] : sequences) {
      QuotaAccumulator acc;
      Exact expected = 0;
      std::int64_t realized = 0;
      Exact worst = 0;
      for (std::int64_t t = 1; t <= 10000; ++t) {
        const double r = ratio(t);
        auto [count, next] = source_quota(B, r, acc);
        acc = next;
        realized += std::int64_t(count);
        expected += Exact(B) * Exact(r);
        worst = std::max(worst, Exact(abs(Exact(realized) - expected)));
      }
      o.require(worst < 1, fmt::format("B={:<3} {:<20} max |realized - sum B r| = {}", B, name, worst.str(18)));
    }
  return o;
}

// ---------------------------------------------------------------- 3

Outcome crf_numerics() {
  Outcome o;
  SplitMix64 rng(31337);

  const std::vector<TaggedSentence> sentences = {
      {{"Anna"}, {"B-PER"}},
      {{"in", "Paris"}, {"O", "B-LOC"}},
      {{"Anna", "Lee", "left"}, {"B-PER", "I-PER", "O"}},
      {{"Paris", "and", "Anna", "Lee"}, {"B-LOC", "O", "B-PER", "I-PER"}},
      {{"Lee", "Lee"}, {"I-PER", "B-PER"}},
  };
  const LabelSet labels({"O", "B-PER", "I-PER", "B-LOC"}, LabelScheme::BIO);
  const LabelSet small({"O", "B-PER", "I-PER"}, LabelScheme::BIO);
  std::size_t failures = 0, checked = 0;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int hidden = 1 + int(rng.below(8));
    const auto model = NeuralCrfModel::random(ModelConfig{4, hidden, 0.5}, small, labels, rng.next());
    const auto& s = sentences[std::size_t(i) % sentences.size()];
    const auto r = oracle::finite_difference_check(model, Domain::Target, s, 1e-5, 1e-4, 1e-6);
    failures += r.failures;
    checked += r.checked;
    worst = std::max(worst, r.worst_rel);
  }
  o.require(failures == 0, fmt::format("gradients vs central differences (h=1e-5) on 20 instances: {} of {} parameters outside 1e-4 rel", failures, checked));

  std::size_t instances = 0, z_bad = 0, path_bad = 0;
  double worst_z = 0.0;
  for (int K = 1; K <= 64; ++K)
    for (int T = 1; T <= 12; ++T) {
      if (std::pow(double(K), double(T)) > 4096.0) break;
      for (int rep = 0; rep < 4; ++rep) {
        auto [scores, trans] = oracle::random_instance(T, K, rng, rep % 2 == 1);
        const auto e = oracle::enumerate(scores, trans);
        const double z = log_partition(scores, trans);
        worst_z = std::max(worst_z, std::abs(z - e.log_z));
        z_bad += std::abs(z - e.log_z) > 1e-9 ? 1 : 0;
        const auto path = viterbi(scores, trans);
        path_bad += (path != e.best_path || std::abs(path_score(scores, trans, path) - e.best_score) > 1e-9) ? 1 : 0;
        ++instances;
      }
    }
  o.require(z_bad == 0, fmt::format("log partition vs enumeration on {} instances with K^T <= 4096: max abs err {:.2e}", instances, worst_z));
  o.require(path_bad == 0, fmt::format("viterbi path and score vs enumeration (lowest-index tie-break): {} mismatches", path_bad));
  return o;
}

// ---------------------------------------------------------------- 4

Outcome evaluator_oracle() {
  Outcome o;
  const std::vector<std::string> orphan = {"I-PER", "O", "B-LOC", "I-ORG", "I-ORG", "B-PER", "B-PER"};
  const std::vector<ChunkSpan> expected = {{"PER", 0, 1}, {"LOC", 2, 3}, {"ORG", 3, 5}, {"PER", 5, 6}, {"PER", 6, 7}};
  o.require(extract_chunks(orphan) == expected, "chunk extraction with orphan I- and adjacent B- labels");

  const auto fx = fixture::twelve_sentences();
  const fixture::Expected e;
  const auto r = score(fx.gold, fx.pred);
  o.require(r.gold_chunks == e.gold && r.pred_chunks == e.pred && r.correct_chunks == e.correct,
            fmt::format("12-sentence fixture chunk counts gold/pred/correct = {}/{}/{}", r.gold_chunks, r.pred_chunks, r.correct_chunks));
  o.require(r.precision == 0.5 && r.recall == 0.5 && r.f1 == 0.5, fmt::format("fixture P/R/F1 = {}/{}/{}", r.precision, r.recall, r.f1));
  o.require(std::abs(r.token_accuracy - e.token_correct / e.tokens) < 1e-15, fmt::format("fixture token accuracy = {}", r.token_accuracy));
  bool types_ok = r.per_type.size() == 4;
  for (const auto& [type, c] : {std::pair{"PER", e.per}, std::pair{"LOC", e.loc}, std::pair{"ORG", e.org}, std::pair{"MISC", e.misc}}) {
    if (!r.per_type.count(type)) {
      types_ok = false;
      continue;
    }
    const auto& s = r.per_type.at(type);
    const double p = c.pred > 0 ? c.correct / c.pred : 0.0;
    const double rc = c.gold > 0 ? c.correct / c.gold : 0.0;
    const double f = p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
    types_ok = types_ok && s.gold_count == c.gold && s.pred_count == c.pred && s.correct_count == c.correct &&
               std::abs(s.precision - p) < 1e-15 && std::abs(s.recall - rc) < 1e-15 && std::abs(s.f1 - f) < 1e-15;
  }
  o.require(types_ok, "fixture per-type counts and P/R/F1");

  const auto perfect = score(fx.gold, fx.gold);
  bool all_one = perfect.token_accuracy == 1.0 && perfect.precision == 1.0 && perfect.recall == 1.0 && perfect.f1 == 1.0;
  for (const auto& [type, s] : perfect.per_type) all_one = all_one && s.precision == 1.0 && s.recall == 1.0 && s.f1 == 1.0;
  o.require(all_one, "perfect prediction scores exactly 1.0 everywhere");
  return o;
}

// ---------------------------------------------------------------- 5-7

struct Workspace {
  fs::path root;
  ExperimentConfig base;
};

Workspace prepare(const fs::path& root) {
  fs::create_directories(root / "data");
  const auto pair = synth_transfer_pair({2500, 1400, 0.3, 2024});
  const Split src = split_train_dev_test(pair.source);
  auto slice = [&](std::size_t from, std::size_t to, const std::string& name) {
    Corpus c = pair.target;
    c.name = name;
    c.sentences.assign(pair.target.sentences.begin() + std::ptrdiff_t(from),
                       pair.target.sentences.begin() + std::ptrdiff_t(to));
    return c;
  };
  write_conll_file((root / "data/source.train.conll").string(), src.train);
  write_conll_file((root / "data/source.dev.conll").string(), src.dev);
  write_conll_file((root / "data/target.train.conll").string(), slice(0, 200, "target.train"));
  write_conll_file((root / "data/target.dev.conll").string(), slice(200, 400, "target.dev"));
  write_conll_file((root / "data/target.test.conll").string(), slice(400, 1400, "target.test"));

  ExperimentConfig c;
  c.task = Task::Synth;
  c.source_train = (root / "data/source.train.conll").string();
  c.source_dev = (root / "data/source.dev.conll").string();
  c.target_train = (root / "data/target.train.conll").string();
  c.target_dev = (root / "data/target.dev.conll").string();
  c.target_test = (root / "data/target.test.conll").string();
  c.batch_size = 16;
  c.total_steps = 3000;
  c.alpha = 0.9;
  c.lambda = 0.995;
  c.lambda_bounds.reset();
  c.mult_ratio = 0.5;
  c.init_source_steps = 1000;
  c.seeds = {1, 2, 3, 4, 5};
  c.model = ModelConfig{16, 32, 0.1};
  return {root, c};
}

ExperimentConfig with(const Workspace& w, Paradigm p, const std::string& sub, double fraction = 1.0) {
  ExperimentConfig c = w.base;
  c.paradigm = p;
  c.subsample_fraction = fraction;
  c.output_dir = (w.root / sub).string();
  return c;
}

std::vector<double> test_f1(const std::vector<RunRecord>& runs) {
  std::vector<double> out;
  for (const auto& r : runs) out.push_back(r.test.f1);
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

std::string percent(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += fmt::format("{}{:.2f}", s.empty() ? "" : " ", 100 * x);
  return s;
}

Outcome transfer_effect(const Workspace& w) {
  Outcome o;
  const auto vanilla = test_f1(cmd_train(with(w, Paradigm::Vanilla, "transfer")));
  const auto mult = test_f1(cmd_train(with(w, Paradigm::Mult, "transfer")));
  const auto da = test_f1(cmd_train(with(w, Paradigm::Da, "transfer")));
  const auto init = test_f1(cmd_train(with(w, Paradigm::Init, "transfer")));
  o.info("target-test F1 per seed (x100)");
  o.info(fmt::format("  vanilla {}  mean {:.2f}", percent(vanilla), 100 * mean(vanilla)));
  o.info(fmt::format("  mult    {}  mean {:.2f}", percent(mult), 100 * mean(mult)));
  o.info(fmt::format("  init    {}  mean {:.2f}", percent(init), 100 * mean(init)));
  o.info(fmt::format("  da      {}  mean {:.2f}", percent(da), 100 * mean(da)));
  int wins = 0;
  for (std::size_t i = 0; i < da.size(); ++i) wins += da[i] > vanilla[i] ? 1 : 0;
  o.require(wins >= 4, fmt::format("DA beats Vanilla in {} of 5 seeds (need >= 4)", wins));
  const double gain = 100 * (mean(da) - mean(vanilla));
  o.require(gain > 1.0, fmt::format("mean DA - Vanilla = {:+.2f} F1 points (need > 1.0)", gain));
  const double vs_mult = 100 * (mean(da) - mean(mult));
  o.require(vs_mult >= -0.3, fmt::format("mean DA - MULT = {:+.2f} F1 points (need >= -0.3)", vs_mult));

  std::ostringstream table;
  write_summary_table(table, cmd_report(w.root / "transfer"));
  std::istringstream lines(table.str());
  for (std::string line; std::getline(lines, line);) o.info("  " + line);
  return o;
}

Outcome dataset_size(const Workspace& w) {
  Outcome o;
  double prev_da = -1.0;
  bool monotone = true;
  for (double f : {0.1, 0.2, 0.5}) {
    const std::string sub = fmt::format("size-{}", f);
    auto v = with(w, Paradigm::Vanilla, sub, f);
    auto d = with(w, Paradigm::Da, sub, f);
    v.save_checkpoints = d.save_checkpoints = false;
    const double mv = mean(test_f1(cmd_train(v)));
    const double md = mean(test_f1(cmd_train(d)));
    o.require(md >= mv, fmt::format("fraction {:.1f} ({} sentences): DA {:.2f} vs Vanilla {:.2f}", f,
                                    std::max<long long>(1, std::llround(f * 200)), 100 * md, 100 * mv));
    if (md < prev_da) monotone = false;
    o.info(fmt::format("  DA mean F1 at fraction {:.1f} = {:.2f}", f, 100 * md));
    prev_da = md;
  }
  o.require(monotone, "DA mean F1 is non-decreasing in the target fraction");
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Outcome determinism(const Workspace& w) {
  Outcome o;
  const fs::path first_root = w.root / "transfer-first";
  for (Paradigm p : {Paradigm::Vanilla, Paradigm::Mult, Paradigm::Init, Paradigm::Da}) {
    const auto config = with(w, p, "transfer");
    const fs::path dir = fs::path(config.output_dir) / to_string(p);
    if (!fs::exists(dir)) cmd_train(config);
    fs::create_directories(first_root);
    fs::rename(dir, first_root / to_string(p));
    cmd_train(config);
    std::size_t compared = 0;
    bool same = true;
    for (std::uint64_t seed : config.seeds)
      for (const char* file : {"record.jsonl", "model.ckpt"}) {
        const auto a = first_root / to_string(p) / fmt::format("seed-{}", seed) / file;
        const auto b = run_directory(config, seed) / file;
        same = same && fs::exists(a) && fs::exists(b) && slurp(a) == slurp(b);
        ++compared;
      }
    fs::remove_all(first_root / to_string(p));
    o.require(same, fmt::format("{}: identical config re-run gives byte-identical output ({} files compared)",
                                to_string(p), compared));
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dalab acceptance suite"};
  std::string workdir = "acceptance_work";
  std::vector<int> only;
  app.add_option("--workdir", workdir, "scratch directory for corpora and runs");
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const fs::path root = fs::absolute(workdir);
  fs::remove_all(root);
  fs::create_directories(root);
  auto wanted = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };

  std::optional<Workspace> workspace;
  auto ws = [&]() -> const Workspace& {
    if (!workspace) workspace = prepare(root);
    return *workspace;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"schedule arithmetic", schedule_arithmetic},
      {"sampler quota", sampler_quota},
      {"CRF numerics", crf_numerics},
      {"evaluator oracle", evaluator_oracle},
      {"transfer effect (DA > Vanilla, DA >= MULT)", [&] { return transfer_effect(ws()); }},
      {"dataset-size trend", [&] { return dataset_size(ws()); }},
      {"determinism", [&] { return determinism(ws()); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int k = int(i) + 1;
    if (!wanted(k)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.require(false, fmt::format("exception: {}", e.what()));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& n : o.notes) std::cout << "    " << n << '\n';
    std::cout << fmt::format("criterion {} {}: {} ({:.2f} s)\n", k, criteria[i].first, o.pass ? "PASS" : "FAIL", secs)
              << std::flush;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (failed ? fmt::format("{} criteria FAILED\n", failed) : std::string("all criteria passed\n"));
  return failed ? 1 : 0;
}
