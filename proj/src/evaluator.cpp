#include "dalab/evaluator.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "dalab/errors.hpp"

namespace dalab {

std::vector<ChunkSpan> extract_chunks(std::span<const std::string> labels) {
  std::vector<ChunkSpan> out;
  bool open = false;
  auto close = [&](std::size_t at) {
    if (open) out.back().end = at;
    open = false;
  };
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::string_view l = labels[i];
    const bool begin = l.starts_with("B-") && l.size() > 2;
    const bool inside = l.starts_with("I-") && l.size() > 2;
    if (inside && open && out.back().type == l.substr(2)) continue;
    close(i);
    if (begin || inside) {
      out.push_back({std::string(l.substr(2)), i, i + 1});
      open = true;
    }
  }
  close(labels.size());
  return out;
}

double f1_score(double precision, double recall) noexcept {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

namespace {

double ratio(double num, double den) noexcept { return den > 0.0 ? num / den : 0.0; }

void finalize(TypeScore& s) {
  s.precision = ratio(s.correct_count, s.pred_count);
  s.recall = ratio(s.correct_count, s.gold_count);
  s.f1 = f1_score(s.precision, s.recall);
}

}  // namespace

EvalReport score(const LabelSequences& gold, const LabelSequences& pred, LabelScheme scheme) {
  if (gold.size() != pred.size()) {
    const auto first = std::min(gold.size(), pred.size());
    throw ShapeMismatchError(fmt::format("gold has {} sentences, prediction has {}; first "
                                         "unmatched sentence is {}",
                                         gold.size(), pred.size(), first),
                             first);
  }
  EvalReport r;
  r.chunk_metrics = scheme == LabelScheme::BIO;
  double matching = 0.0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size())
      throw ShapeMismatchError(fmt::format("sentence {} has {} gold labels but {} predicted", s,
                                           gold[s].size(), pred[s].size()),
                               s);
    for (std::size_t t = 0; t < gold[s].size(); ++t) matching += gold[s][t] == pred[s][t] ? 1.0 : 0.0;
    r.tokens += static_cast<double>(gold[s].size());
    if (!r.chunk_metrics) continue;

    const auto g = extract_chunks(gold[s]);
    const auto p = extract_chunks(pred[s]);
    const std::set<ChunkSpan> gold_set(g.begin(), g.end());
    for (const auto& c : g) r.per_type[c.type].gold_count += 1.0;
    for (const auto& c : p) {
      auto& ts = r.per_type[c.type];
      ts.pred_count += 1.0;
      if (gold_set.contains(c)) ts.correct_count += 1.0;
    }
  }
  r.token_accuracy = ratio(matching, r.tokens);
  for (auto& [type, ts] : r.per_type) {
    finalize(ts);
    r.gold_chunks += ts.gold_count;
    r.pred_chunks += ts.pred_count;
    r.correct_chunks += ts.correct_count;
  }
  r.precision = ratio(r.correct_chunks, r.pred_chunks);
  r.recall = ratio(r.correct_chunks, r.gold_chunks);
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

EvalReport aggregate_runs(std::span<const EvalReport> reports) {
  if (reports.empty()) throw ConfigError("cannot aggregate an empty list of reports");
  std::set<std::string> types;
  for (const auto& r : reports)
    for (const auto& [t, _] : r.per_type) types.insert(t);

  EvalReport out;
  out.chunk_metrics = reports.front().chunk_metrics;
  out.runs = 0;
  for (const auto& r : reports) {
    out.token_accuracy += r.token_accuracy;
    out.precision += r.precision;
    out.recall += r.recall;
    out.f1 += r.f1;
    out.gold_chunks += r.gold_chunks;
    out.pred_chunks += r.pred_chunks;
    out.correct_chunks += r.correct_chunks;
    out.tokens += r.tokens;
    out.runs += r.runs;
    for (const auto& t : types) {
      auto& acc = out.per_type[t];
      auto it = r.per_type.find(t);
      if (it == r.per_type.end()) {
        ++acc.missing_runs;
        continue;
      }
      acc.precision += it->second.precision;
      acc.recall += it->second.recall;
      acc.f1 += it->second.f1;
      acc.gold_count += it->second.gold_count;
      acc.pred_count += it->second.pred_count;
      acc.correct_count += it->second.correct_count;
      acc.missing_runs += it->second.missing_runs;
    }
  }
  const double n = static_cast<double>(reports.size());
  for (double* x : {&out.token_accuracy, &out.precision, &out.recall, &out.f1, &out.gold_chunks,
                    &out.pred_chunks, &out.correct_chunks, &out.tokens})
    *x /= n;
  for (auto& [_, ts] : out.per_type)
    for (double* x : {&ts.precision, &ts.recall, &ts.f1, &ts.gold_count, &ts.pred_count,
                      &ts.correct_count})
      *x /= n;
  return out;
}

std::vector<nlohmann::json> report_records(const EvalReport& r) {
  std::vector<nlohmann::json> out;
  out.push_back({{"record", "overall"},
                 {"token_accuracy", r.token_accuracy},
                 {"precision", r.precision},
                 {"recall", r.recall},
                 {"f1", r.f1},
                 {"gold_chunks", r.gold_chunks},
                 {"pred_chunks", r.pred_chunks},
                 {"correct_chunks", r.correct_chunks},
                 {"tokens", r.tokens},
                 {"chunk_metrics", r.chunk_metrics},
                 {"runs", r.runs}});
  for (const auto& [type, ts] : r.per_type)
    out.push_back({{"record", "type"},
                   {"type", type},
                   {"precision", ts.precision},
                   {"recall", ts.recall},
                   {"f1", ts.f1},
                   {"gold_count", ts.gold_count},
                   {"pred_count", ts.pred_count},
                   {"correct_count", ts.correct_count},
                   {"missing_runs", ts.missing_runs}});
  return out;
}

EvalReport report_from_records(const std::vector<nlohmann::json>& records) {
  EvalReport r;
  bool seen_overall = false;
  for (const auto& j : records) {
    const auto kind = j.at("record").get<std::string>();
    if (kind == "overall") {
      seen_overall = true;
      r.token_accuracy = j.at("token_accuracy").get<double>();
      r.precision = j.at("precision").get<double>();
      r.recall = j.at("recall").get<double>();
      r.f1 = j.at("f1").get<double>();
      r.gold_chunks = j.at("gold_chunks").get<double>();
      r.pred_chunks = j.at("pred_chunks").get<double>();
      r.correct_chunks = j.at("correct_chunks").get<double>();
      r.tokens = j.at("tokens").get<double>();
      r.chunk_metrics = j.at("chunk_metrics").get<bool>();
      r.runs = j.at("runs").get<int>();
    } else if (kind == "type") {
      TypeScore ts;
      ts.precision = j.at("precision").get<double>();
      ts.recall = j.at("recall").get<double>();
      ts.f1 = j.at("f1").get<double>();
      ts.gold_count = j.at("gold_count").get<double>();
      ts.pred_count = j.at("pred_count").get<double>();
      ts.correct_count = j.at("correct_count").get<double>();
      ts.missing_runs = j.at("missing_runs").get<int>();
      r.per_type[j.at("type").get<std::string>()] = ts;
    }
  }
  if (!seen_overall) throw DataError("report records lack an 'overall' entry");
  return r;
}

}  // namespace dalab
