#include "dalab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "dalab/errors.hpp"
#include "dalab/sampler.hpp"

namespace dalab {

namespace fs = std::filesystem;

// -------------------------------------------------------------------- enums

std::string to_string(Task t) {
  switch (t) {
    case Task::Ner: return "ner";
    case Task::Pos: return "pos";
    case Task::Chunk: return "chunk";
    case Task::Synth: return "synth";
  }
  return "?";
}

std::string to_string(Paradigm p) {
  switch (p) {
    case Paradigm::Vanilla: return "vanilla";
    case Paradigm::Mult: return "mult";
    case Paradigm::Init: return "init";
    case Paradigm::Da: return "da";
  }
  return "?";
}

Task parse_task(const std::string& s) {
  for (Task t : {Task::Ner, Task::Pos, Task::Chunk, Task::Synth})
    if (to_string(t) == s) return t;
  throw ConfigError(fmt::format("unknown task '{}' (expected ner, pos, chunk or synth)", s));
}

Paradigm parse_paradigm(const std::string& s) {
  for (Paradigm p : {Paradigm::Vanilla, Paradigm::Mult, Paradigm::Init, Paradigm::Da})
    if (to_string(p) == s) return p;
  throw ConfigError(fmt::format("unknown paradigm '{}' (expected vanilla, mult, init or da)", s));
}

LabelScheme task_scheme(Task t) noexcept {
  return t == Task::Pos ? LabelScheme::PlainTags : LabelScheme::BIO;
}

// ------------------------------------------------------------------- config

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(fmt::format("config key '{}': cannot parse '{}' as a number", key, value));
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(fmt::format("config key '{}': expected true/false, got '{}'", key, value));
}

std::vector<std::string> split_commas(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::optional<Bounds> parse_bounds(const std::string& key, const std::string& value) {
  if (value == "none") return std::nullopt;
  const auto parts = split_commas(value);
  if (parts.size() != 2)
    throw ConfigError(fmt::format("config key '{}': expected 'lo,hi' or 'none', got '{}'", key, value));
  Bounds b{parse_number<double>(key, parts[0]), parse_number<double>(key, parts[1])};
  if (!(b.lo <= b.hi)) throw ConfigError(fmt::format("config key '{}': lo > hi", key));
  return b;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "task",           "paradigm",         "source_train",        "source_dev",
      "target_train",   "target_dev",       "target_test",         "source_token_column",
      "source_label_column", "target_token_column", "target_label_column", "batch_size",
      "total_steps",    "alpha",            "lambda",              "source_budget",
      "mult_ratio",     "init_source_steps", "init_candidates",    "alpha_bounds",
      "lambda_bounds",  "seeds",            "subsample_fraction",  "hash_bits",
      "hidden_dim",     "init_scale",       "step_size",           "l2",
      "eval_every",     "output_dir",       "save_checkpoints",    "jobs"};
  return keys;
}

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  auto size = [&] { return parse_number<std::size_t>(key, v); };
  auto i64 = [&] { return parse_number<std::int64_t>(key, v); };
  auto real = [&] { return parse_number<double>(key, v); };

  if (key == "task") c.task = parse_task(v);
  else if (key == "paradigm") c.paradigm = parse_paradigm(v);
  else if (key == "source_train") c.source_train = v;
  else if (key == "source_dev") c.source_dev = v;
  else if (key == "target_train") c.target_train = v;
  else if (key == "target_dev") c.target_dev = v;
  else if (key == "target_test") c.target_test = v;
  else if (key == "source_token_column") c.source_token_column = size();
  else if (key == "source_label_column") c.source_label_column = size();
  else if (key == "target_token_column") c.target_token_column = size();
  else if (key == "target_label_column") c.target_label_column = size();
  else if (key == "batch_size") c.batch_size = i64();
  else if (key == "total_steps") c.total_steps = i64();
  else if (key == "alpha") c.alpha = real();
  else if (key == "lambda") c.lambda = real();
  else if (key == "source_budget") c.source_budget = real();
  else if (key == "mult_ratio") c.mult_ratio = real();
  else if (key == "init_source_steps") c.init_source_steps = i64();
  else if (key == "init_candidates") c.init_candidates = parse_number<int>(key, v);
  else if (key == "alpha_bounds") c.alpha_bounds = parse_bounds(key, v);
  else if (key == "lambda_bounds") c.lambda_bounds = parse_bounds(key, v);
  else if (key == "seeds") {
    c.seeds.clear();
    for (const auto& s : split_commas(v)) c.seeds.push_back(parse_number<std::uint64_t>(key, s));
  } else if (key == "subsample_fraction") c.subsample_fraction = real();
  else if (key == "hash_bits") c.model.hash_bits = parse_number<int>(key, v);
  else if (key == "hidden_dim") c.model.hidden_dim = parse_number<int>(key, v);
  else if (key == "init_scale") c.model.init_scale = real();
  else if (key == "step_size") c.optimizer.step_size = real();
  else if (key == "l2") c.optimizer.l2 = real();
  else if (key == "eval_every") c.eval_every = i64();
  else if (key == "output_dir") c.output_dir = v;
  else if (key == "save_checkpoints") c.save_checkpoints = parse_bool(key, v);
  else if (key == "jobs") c.jobs = parse_number<int>(key, v);
  else throw ConfigError(fmt::format("unknown config key '{}'", key));
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("config line {}: expected key = value", line_no));
    set_config_value(base, trim(std::string_view(body).substr(0, eq)), body.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  return parse_config(in, std::move(base));
}

namespace {

void check_bounds(const char* name, double value, const std::optional<Bounds>& bounds) {
  if (bounds && (value < bounds->lo || value > bounds->hi))
    throw ConfigError(fmt::format("{}={} is outside the tuning range [{}, {}] (set {}_bounds to "
                                  "widen or 'none' to disable)",
                                  name, value, bounds->lo, bounds->hi, name));
}

}  // namespace

double resolved_alpha(const ExperimentConfig& c) {
  if (c.alpha) return *c.alpha;
  if (c.source_budget && c.lambda) return alpha_for_budget(*c.source_budget, *c.lambda, c.batch_size);
  throw ConfigError("paradigm da needs alpha (or source_budget) and lambda");
}

void validate(const ExperimentConfig& c) {
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (c.total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (c.seeds.empty()) throw ConfigError("at least one seed is required");
  if (c.init_candidates < 1) throw ConfigError("init_candidates must be >= 1");
  if (!(c.subsample_fraction > 0.0 && c.subsample_fraction <= 1.0))
    throw ConfigError(fmt::format("subsample_fraction must lie in (0, 1], got {}", c.subsample_fraction));
  if (c.eval_every < 0) throw ConfigError("eval_every must be >= 0 (0 disables dev tracking)");
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (c.model.hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (c.model.hash_bits < 1 || c.model.hash_bits > 30) throw ConfigError("hash_bits must lie in [1, 30]");
  if (c.target_train.empty() || c.target_dev.empty() || c.target_test.empty())
    throw ConfigError("target_train, target_dev and target_test are required");
  if (c.paradigm != Paradigm::Vanilla && c.source_train.empty())
    throw ConfigError(fmt::format("paradigm {} needs source_train", to_string(c.paradigm)));

  switch (c.paradigm) {
    case Paradigm::Vanilla: break;
    case Paradigm::Da: {
      if (!c.lambda) throw ConfigError("paradigm da needs lambda");
      if (c.alpha && c.source_budget) throw ConfigError("set either alpha or source_budget, not both");
      const double alpha = resolved_alpha(c);
      check_bounds("alpha", alpha, c.alpha_bounds);
      check_bounds("lambda", *c.lambda, c.lambda_bounds);
      AnnealingSchedule(alpha, *c.lambda);
      break;
    }
    case Paradigm::Mult:
      if (!c.mult_ratio) throw ConfigError("paradigm mult needs mult_ratio");
      MixPolicy::fixed_ratio(*c.mult_ratio);
      break;
    case Paradigm::Init:
      if (!c.init_source_steps) throw ConfigError("paradigm init needs init_source_steps");
      if (*c.init_source_steps < 1 || *c.init_source_steps >= c.total_steps)
        throw ConfigError(fmt::format("init_source_steps must lie in [1, total_steps), got {}",
                                      *c.init_source_steps));
      if (c.source_dev.empty()) throw ConfigError("paradigm init needs source_dev for model selection");
      break;
  }
}

MixPolicy policy_for(const ExperimentConfig& c) {
  switch (c.paradigm) {
    case Paradigm::Vanilla: return MixPolicy::target_only();
    case Paradigm::Mult: return MixPolicy::fixed_ratio(c.mult_ratio.value_or(0.5));
    case Paradigm::Init: return MixPolicy::two_phase(c.init_source_steps.value_or(1));
    case Paradigm::Da: return MixPolicy::annealed(AnnealingSchedule(resolved_alpha(c), c.lambda.value_or(0.0)));
  }
  throw InvariantError("unhandled paradigm");
}

TrainingPlan plan_for(const ExperimentConfig& c) {
  return TrainingPlan(c.batch_size, c.total_steps, policy_for(c));
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  auto opt = [](const auto& o) -> nlohmann::json {
    if (o) return *o;
    return nullptr;
  };
  auto bounds = [](const std::optional<Bounds>& b) -> nlohmann::json {
    if (!b) return "none";
    return nlohmann::json::array({b->lo, b->hi});
  };
  nlohmann::json j = {
      {"task", to_string(c.task)},
      {"paradigm", to_string(c.paradigm)},
      {"source_train", c.source_train},
      {"source_dev", c.source_dev},
      {"target_train", c.target_train},
      {"target_dev", c.target_dev},
      {"target_test", c.target_test},
      {"source_token_column", c.source_token_column},
      {"source_label_column", c.source_label_column},
      {"target_token_column", c.target_token_column},
      {"target_label_column", c.target_label_column},
      {"batch_size", c.batch_size},
      {"total_steps", c.total_steps},
      {"alpha", opt(c.alpha)},
      {"lambda", opt(c.lambda)},
      {"source_budget", opt(c.source_budget)},
      {"mult_ratio", opt(c.mult_ratio)},
      {"init_source_steps", opt(c.init_source_steps)},
      {"init_candidates", c.init_candidates},
      {"alpha_bounds", bounds(c.alpha_bounds)},
      {"lambda_bounds", bounds(c.lambda_bounds)},
      {"seeds", c.seeds},
      {"subsample_fraction", c.subsample_fraction},
      {"hash_bits", c.model.hash_bits},
      {"hidden_dim", c.model.hidden_dim},
      {"init_scale", c.model.init_scale},
      {"step_size", c.optimizer.step_size},
      {"l2", c.optimizer.l2},
      {"eval_every", c.eval_every},
  };
  if (c.paradigm == Paradigm::Da) {
    const double alpha = resolved_alpha(c);
    const AnnealingSchedule s(alpha, *c.lambda);
    j["resolved_alpha"] = alpha;
    j["exact_source_budget"] = exact_source_budget(plan_for(c));
    j["approx_source_budget"] = approx_source_budget(c.batch_size, s);
  }
  return j;
}

// --------------------------------------------------------------------- data

ExperimentData load_data(const ExperimentConfig& c) {
  const auto scheme = task_scheme(c.task);
  auto read = [&](const std::string& path, Domain domain, std::size_t tok, std::size_t lab) {
    return read_conll_file(path, ConllOptions{tok, lab, scheme, path, domain});
  };
  ExperimentData d;
  if (!c.source_train.empty())
    d.source_train = read(c.source_train, Domain::Source, c.source_token_column, c.source_label_column);
  if (!c.source_dev.empty())
    d.source_dev = read(c.source_dev, Domain::Source, c.source_token_column, c.source_label_column);
  d.target_train = read(c.target_train, Domain::Target, c.target_token_column, c.target_label_column);
  d.target_dev = read(c.target_dev, Domain::Target, c.target_token_column, c.target_label_column);
  d.target_test = read(c.target_test, Domain::Target, c.target_token_column, c.target_label_column);
  return d;
}

// --------------------------------------------------------------------- runs

namespace {

struct EncodedCorpus {
  std::vector<EncodedSentence> sentences;
  LabelSequences gold;
  LabelScheme scheme = LabelScheme::BIO;
};

EncodedCorpus encode_corpus(const NeuralCrfModel& model, Domain head, const Corpus& corpus) {
  EncodedCorpus out;
  out.scheme = model.head(head).labels.scheme();
  out.sentences.reserve(corpus.sentences.size());
  for (const auto& s : corpus.sentences) {
    out.sentences.push_back(model.encode(head, s));
    out.gold.push_back(s.labels);
  }
  return out;
}

EvalReport evaluate_encoded(const NeuralCrfModel& model, Domain head, const EncodedCorpus& data) {
  LabelSequences pred;
  pred.reserve(data.sentences.size());
  const auto& labels = model.head(head).labels;
  for (const auto& s : data.sentences) {
    std::vector<std::string> p;
    for (int id : model.predict_ids(head, s)) p.push_back(labels.at(id));
    pred.push_back(std::move(p));
  }
  return score(data.gold, pred, data.scheme);
}

double selection_score(const EvalReport& r) {
  return r.chunk_metrics ? r.f1 : r.token_accuracy;
}

LabelSet label_union(LabelScheme scheme, std::initializer_list<const Corpus*> corpora) {
  LabelSet out(scheme);
  for (const Corpus* c : corpora)
    if (!c->sentences.empty()) out = merge_labels(std::move(out), *c);
  if (out.size() == 0) out.add(scheme == LabelScheme::BIO ? "O" : "_");
  return out;
}

// Mutable state of one training trajectory.
struct Trajectory {
  NeuralCrfModel model;
  AdaGrad optimizer;
  MixedSampler sampler;
  std::vector<StepRecord> steps;
  std::vector<DevPoint> dev_curve;
};

struct Encoded {
  EncodedCorpus source_train;
  EncodedCorpus target_train;
  EncodedCorpus target_dev;
};

void advance(Trajectory& tr, const Encoded& enc, std::int64_t until, std::int64_t eval_every,
             bool track_dev) {
  std::vector<EncodedItem> items;
  while (tr.sampler.step() < until) {
    const double ratio = tr.sampler.ratio_at_next();
    const MixedBatch batch = tr.sampler.next();
    items.clear();
    for (const auto& item : batch.items) {
      const auto& pool = item.domain == Domain::Source ? enc.source_train : enc.target_train;
      items.push_back({&pool.sentences[item.index], item.domain});
    }
    const double loss = train_step(tr.model, tr.optimizer, items);
    const auto src = batch.count(Domain::Source);
    tr.steps.push_back({batch.step, ratio, src, batch.items.size() - src, loss});
    if (track_dev && eval_every > 0 && batch.step % eval_every == 0) {
      const auto r = evaluate_encoded(tr.model, Domain::Target, enc.target_dev);
      tr.dev_curve.push_back({batch.step, r.f1, r.token_accuracy});
    }
  }
}

void check_record(const ExperimentConfig& c, const RunRecord& r) {
  if (static_cast<std::int64_t>(r.steps.size()) != c.total_steps)
    throw InvariantError(fmt::format("run recorded {} steps, expected {}", r.steps.size(), c.total_steps));
  std::int64_t total = 0;
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& s = r.steps[i];
    if (s.t != static_cast<std::int64_t>(i) + 1)
      throw InvariantError(fmt::format("step record {} has t={}", i, s.t));
    total += static_cast<std::int64_t>(s.source_count + s.target_count);
  }
  if (total != c.batch_size * c.total_steps)
    throw InvariantError(fmt::format("run consumed {} sentences, expected {}", total,
                                     c.batch_size * c.total_steps));
}

}  // namespace

EvalReport evaluate(const NeuralCrfModel& model, Domain head, const Corpus& corpus) {
  return evaluate_encoded(model, head, encode_corpus(model, head, corpus));
}

RunResult run_seed(const ExperimentConfig& c, const ExperimentData& data, std::uint64_t seed) {
  validate(c);
  const auto start = std::chrono::steady_clock::now();
  const auto scheme = task_scheme(c.task);
  const LabelSet source_labels = label_union(scheme, {&data.source_train, &data.source_dev});
  const LabelSet target_labels =
      label_union(scheme, {&data.target_train, &data.target_dev, &data.target_test});

  const Corpus target_train = c.subsample_fraction < 1.0
                                  ? subsample(data.target_train, c.subsample_fraction,
                                              derive_seed(seed, 0x73756273ULL))
                                  : data.target_train;

  auto make_trajectory = [&](std::uint64_t traj_seed, const TrainingPlan& plan) {
    NeuralCrfModel model =
        NeuralCrfModel::random(c.model, source_labels, target_labels, derive_seed(traj_seed, 0x6d6f64ULL));
    AdaGrad opt(model, c.optimizer);
    MixedSampler sampler(data.source_train.sentences, target_train.sentences, plan, traj_seed);
    return Trajectory{std::move(model), std::move(opt), std::move(sampler), {}, {}};
  };

  // Feature extraction depends only on the hash width, so any model with
  // this config encodes identically.
  const NeuralCrfModel encoder_model = NeuralCrfModel::zeros(
      ModelConfig{c.model.hash_bits, 1, c.model.init_scale}, source_labels, target_labels);
  Encoded enc{encode_corpus(encoder_model, Domain::Source, data.source_train),
              encode_corpus(encoder_model, Domain::Target, target_train),
              encode_corpus(encoder_model, Domain::Target, data.target_dev)};

  RunRecord record;
  record.seed = seed;
  record.paradigm = c.paradigm;
  const TrainingPlan plan = plan_for(c);

  std::optional<Trajectory> chosen;
  if (c.paradigm == Paradigm::Init) {
    const auto source_steps = *c.init_source_steps;
    const EncodedCorpus source_dev = encode_corpus(encoder_model, Domain::Source, data.source_dev);
    for (int i = 0; i < c.init_candidates; ++i) {
      const std::uint64_t cand_seed = derive_seed(seed, 0x1000ULL + static_cast<std::uint64_t>(i));
      Trajectory tr = make_trajectory(cand_seed, plan);
      advance(tr, enc, source_steps, c.eval_every, true);
      const double s = selection_score(evaluate_encoded(tr.model, Domain::Source, source_dev));
      record.init_candidates.push_back({i, cand_seed, s});
      if (!chosen || s > record.init_candidates[std::size_t(*record.init_selected)].score) {
        record.init_selected = i;
        chosen.emplace(std::move(tr));
      }
    }
  } else {
    chosen.emplace(make_trajectory(seed, plan));
  }

  Trajectory& tr = *chosen;
  advance(tr, enc, c.total_steps, c.eval_every, true);
  record.steps = std::move(tr.steps);
  record.dev_curve = std::move(tr.dev_curve);
  record.dev = evaluate_encoded(tr.model, Domain::Target, enc.target_dev);
  record.test = evaluate(tr.model, Domain::Target, data.target_test);
  check_record(c, record);
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return RunResult{std::move(record), std::move(tr.model)};
}

fs::path run_directory(const ExperimentConfig& c, std::uint64_t seed) {
  return fs::path(c.output_dir) / to_string(c.paradigm) / fmt::format("seed-{}", seed);
}

std::vector<nlohmann::json> record_lines(const ExperimentConfig& c, const RunRecord& r) {
  std::vector<nlohmann::json> out;
  out.push_back({{"record", "config"}, {"seed", r.seed}, {"config", config_to_json(c)}});
  for (const auto& s : r.steps)
    out.push_back({{"record", "step"},
                   {"t", s.t},
                   {"source_ratio", s.source_ratio},
                   {"source_count", s.source_count},
                   {"target_count", s.target_count},
                   {"loss", s.loss}});
  for (const auto& d : r.dev_curve)
    out.push_back({{"record", "dev_eval"}, {"t", d.t}, {"f1", d.f1}, {"token_accuracy", d.accuracy}});
  for (const auto& cand : r.init_candidates)
    out.push_back({{"record", "init_candidate"},
                   {"candidate", cand.index},
                   {"seed", cand.seed},
                   {"source_dev_score", cand.score}});
  if (r.init_selected) out.push_back({{"record", "init_selected"}, {"candidate", *r.init_selected}});
  for (const auto& [split, report] : {std::pair{"dev", &r.dev}, std::pair{"test", &r.test}})
    for (auto j : report_records(*report)) {
      j["split"] = split;
      out.push_back(std::move(j));
    }
  return out;
}

void write_run(const ExperimentConfig& c, const RunResult& result) {
  const fs::path dir = run_directory(c, result.record.seed);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(fmt::format("cannot create run directory '{}': {}", dir.string(), ec.message()));
  {
    std::ofstream out(dir / "record.jsonl", std::ios::binary);
    for (const auto& line : record_lines(c, result.record)) out << line.dump() << '\n';
    if (!out) throw DataError(fmt::format("cannot write '{}'", (dir / "record.jsonl").string()));
  }
  {
    std::ofstream out(dir / "timing.json", std::ios::binary);
    out << nlohmann::json{{"wall_seconds", result.record.wall_seconds}}.dump() << '\n';
  }
  if (c.save_checkpoints) result.model.save_file((dir / "model.ckpt").string());
}

std::vector<RunRecord> cmd_train(const ExperimentConfig& c, const ExperimentData& data) {
  validate(c);
  std::vector<std::optional<RunRecord>> records(c.seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < c.seeds.size(); i = next++) {
      try {
        RunResult result = run_seed(c, data, c.seeds[i]);
        write_run(c, result);
        records[i] = std::move(result.record);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(c.jobs), c.seeds.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<RunRecord> out;
  for (auto& r : records) out.push_back(std::move(*r));
  return out;
}

std::vector<RunRecord> cmd_train(const ExperimentConfig& c) {
  validate(c);
  return cmd_train(c, load_data(c));
}

// ----------------------------------------------------------------- schedule

ScheduleTable cmd_schedule(double alpha, double lambda, std::int64_t batch_size,
                           std::int64_t total_steps) {
  const AnnealingSchedule schedule(alpha, lambda);
  const TrainingPlan plan(batch_size, total_steps, MixPolicy::annealed(schedule));
  ScheduleTable table;
  table.rows.reserve(static_cast<std::size_t>(total_steps));
  QuotaAccumulator acc;
  std::size_t cum = 0;
  for (std::int64_t t = 1; t <= total_steps; ++t) {
    const double r = source_ratio_at(schedule, t);
    const auto [count, next] = source_quota(batch_size, r, acc);
    acc = next;
    cum += count;
    table.rows.push_back({t, r, target_ratio_at(schedule, t), count, cum});
  }
  table.exact_budget = exact_source_budget(plan);
  table.approx_budget = approx_source_budget(batch_size, schedule);
  return table;
}

void write_schedule_csv(std::ostream& out, const ScheduleTable& table) {
  out << "step,source_ratio,target_ratio,source_count,cum_source\n";
  for (const auto& r : table.rows)
    out << fmt::format("{},{},{},{},{}\n", r.step, r.source_ratio, r.target_ratio, r.source_count,
                       r.cum_source);
  out << fmt::format("# exact_budget,{}\n", table.exact_budget);
  out << fmt::format("# approx_budget,{}\n", table.approx_budget);
}

// --------------------------------------------------------- corpora commands

void cmd_subsample(const std::string& in_path, double fraction, std::uint64_t seed,
                   const std::string& out_path, const ConllOptions& options) {
  write_conll_file(out_path, subsample(read_conll_file(in_path, options), fraction, seed));
}

void cmd_synth(const SynthConfig& config, const fs::path& out_dir) {
  const SynthPair pair = synth_transfer_pair(config);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError(fmt::format("cannot create '{}': {}", out_dir.string(), ec.message()));
  for (const auto& [name, corpus] : {std::pair{"source", &pair.source}, std::pair{"target", &pair.target}}) {
    const Split split = split_train_dev_test(*corpus);
    write_conll_file((out_dir / fmt::format("{}.train.conll", name)).string(), split.train);
    write_conll_file((out_dir / fmt::format("{}.dev.conll", name)).string(), split.dev);
    write_conll_file((out_dir / fmt::format("{}.test.conll", name)).string(), split.test);
  }
}

// ------------------------------------------------------------------- report

namespace {

struct LoadedRun {
  std::string paradigm;
  std::uint64_t seed;
  EvalReport dev;
  EvalReport test;
};

LoadedRun load_run(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  LoadedRun run;
  std::vector<nlohmann::json> dev, test;
  std::string line;
  bool have_config = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
    const auto kind = j.at("record").get<std::string>();
    if (kind == "config") {
      have_config = true;
      run.paradigm = j.at("config").at("paradigm").get<std::string>();
      run.seed = j.at("seed").get<std::uint64_t>();
    } else if (kind == "overall" || kind == "type") {
      (j.at("split").get<std::string>() == "dev" ? dev : test).push_back(j);
    }
  }
  if (!have_config) throw DataError(fmt::format("{}: no config record", path.string()));
  run.dev = report_from_records(dev);
  run.test = report_from_records(test);
  return run;
}

}  // namespace

std::vector<ParadigmSummary> cmd_report(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir))
    throw DataError(fmt::format("run directory '{}' does not exist", run_dir.string()));
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(run_dir))
    if (entry.is_regular_file() && entry.path().filename() == "record.jsonl") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::map<std::string, std::vector<LoadedRun>> groups;
  for (const auto& f : files) {
    LoadedRun run = load_run(f);
    groups[run.paradigm].push_back(std::move(run));
  }
  if (groups.empty())
    throw DataError(fmt::format("no record.jsonl files under '{}'", run_dir.string()));

  std::vector<ParadigmSummary> out;
  for (auto& [paradigm, runs] : groups) {
    std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
    ParadigmSummary s;
    s.paradigm = paradigm;
    std::vector<EvalReport> dev, test;
    for (const auto& r : runs) {
      s.seeds.push_back(r.seed);
      dev.push_back(r.dev);
      test.push_back(r.test);
    }
    s.dev = aggregate_runs(dev);
    s.test = aggregate_runs(test);
    auto range = [&](auto field) {
      MetricRange m{0.0, field(test.front()), field(test.front())};
      for (const auto& r : test) {
        m.min = std::min(m.min, field(r));
        m.max = std::max(m.max, field(r));
      }
      m.mean = field(s.test);
      return m;
    };
    s.test_ranges["f1"] = range([](const EvalReport& r) { return r.f1; });
    s.test_ranges["precision"] = range([](const EvalReport& r) { return r.precision; });
    s.test_ranges["recall"] = range([](const EvalReport& r) { return r.recall; });
    s.test_ranges["token_accuracy"] = range([](const EvalReport& r) { return r.token_accuracy; });
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<nlohmann::json> summary_records(const std::vector<ParadigmSummary>& summaries) {
  std::vector<nlohmann::json> out;
  for (const auto& s : summaries) {
    nlohmann::json head = {{"record", "paradigm"}, {"paradigm", s.paradigm}, {"seeds", s.seeds}};
    for (const auto& [name, m] : s.test_ranges)
      head[name] = {{"mean", m.mean}, {"min", m.min}, {"max", m.max}};
    out.push_back(std::move(head));
    for (const auto& [split, report] : {std::pair{"dev", &s.dev}, std::pair{"test", &s.test}})
      for (auto j : report_records(*report)) {
        j["paradigm"] = s.paradigm;
        j["split"] = split;
        out.push_back(std::move(j));
      }
  }
  return out;
}

void write_summary_table(std::ostream& out, const std::vector<ParadigmSummary>& summaries) {
  out << fmt::format("{:<10} {:>5} {:>8} {:>8} {:>8} {:>8} {:>17}\n", "paradigm", "runs", "P", "R",
                     "F1", "A", "F1 [min, max]");
  for (const auto& s : summaries) {
    const auto& f1 = s.test_ranges.at("f1");
    out << fmt::format("{:<10} {:>5} {:>8.2f} {:>8.2f} {:>8.2f} {:>8.2f}   [{:.2f}, {:.2f}]\n",
                       s.paradigm, s.seeds.size(), 100 * s.test.precision, 100 * s.test.recall,
                       100 * s.test.f1, 100 * s.test.token_accuracy, 100 * f1.min, 100 * f1.max);
  }
}

}  // namespace dalab
