#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dalab/crf.hpp"
#include "dalab/errors.hpp"
#include "dalab/evaluator.hpp"
#include "dalab/experiment.hpp"
#include "dalab/sampler.hpp"
#include "dalab/schedule.hpp"

namespace py = pybind11;
using namespace dalab;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::list to_python(const std::vector<nlohmann::json>& records) {
  py::list out;
  for (const auto& r : records) out.append(to_python(r));
  return out;
}

Transition transition_from(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 3)
    throw ShapeMismatchError("transitions must be a square (K+2) x (K+2) matrix", 0);
  Transition t(int(m.rows()) - 2);
  for (int i = 0; i < int(m.rows()); ++i)
    for (int j = 0; j < int(m.cols()); ++j)
      if (!t.fixed(i, j)) t.set(i, j, m(i, j));
  return t;
}

void check_scores(const Matrix& scores, const Transition& t) {
  if (scores.cols() != t.num_labels())
    throw ShapeMismatchError("scores must have K columns for (K+2) x (K+2) transitions", 0);
}

ExperimentConfig make_config(const std::string& path, const std::map<std::string, std::string>& overrides) {
  ExperimentConfig c = path.empty() ? ExperimentConfig{} : load_config_file(path);
  for (const auto& [k, v] : overrides) set_config_value(c, k, v);
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Data-annealing transfer learning for sequence labeling";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<InvariantError>(m, "InvariantError", base.ptr());

  m.def("source_ratio", [](double alpha, double lambda, std::int64_t t) {
    return source_ratio_at(AnnealingSchedule(alpha, lambda), t);
  }, py::arg("alpha"), py::arg("lambda_"), py::arg("t"));
  m.def("exact_source_budget", [](double alpha, double lambda, std::int64_t batch_size, std::int64_t total_steps) {
    return exact_source_budget(TrainingPlan(batch_size, total_steps, MixPolicy::annealed({alpha, lambda})));
  }, py::arg("alpha"), py::arg("lambda_"), py::arg("batch_size"), py::arg("total_steps"));
  m.def("approx_source_budget", [](double alpha, double lambda, std::int64_t batch_size) {
    return approx_source_budget(batch_size, AnnealingSchedule(alpha, lambda));
  }, py::arg("alpha"), py::arg("lambda_"), py::arg("batch_size"));
  m.def("alpha_for_budget", &alpha_for_budget, py::arg("source_budget"), py::arg("lambda_"),
        py::arg("batch_size"));
  m.def("source_quota", [](std::int64_t batch_size, double ratio, double carry) {
    auto [count, acc] = source_quota(batch_size, ratio, QuotaAccumulator{carry});
    return std::pair{count, static_cast<double>(acc.carry)};
  }, py::arg("batch_size"), py::arg("ratio"), py::arg("carry") = 0.0,
     "Returns (count, new carry).");

  m.def("schedule_table", [](double alpha, double lambda, std::int64_t batch_size, std::int64_t total_steps) {
    const auto table = cmd_schedule(alpha, lambda, batch_size, total_steps);
    py::list rows;
    for (const auto& r : table.rows)
      rows.append(py::make_tuple(r.step, r.source_ratio, r.target_ratio, r.source_count, r.cum_source));
    py::dict out;
    out["rows"] = rows;
    out["exact_budget"] = table.exact_budget;
    out["approx_budget"] = table.approx_budget;
    return out;
  }, py::arg("alpha"), py::arg("lambda_"), py::arg("batch_size"), py::arg("total_steps"));

  py::class_<TaggedSentence>(m, "TaggedSentence")
      .def(py::init<std::vector<std::string>, std::vector<std::string>>(), py::arg("tokens"), py::arg("labels"))
      .def_readwrite("tokens", &TaggedSentence::tokens)
      .def_readwrite("labels", &TaggedSentence::labels)
      .def("__len__", &TaggedSentence::size);

  py::class_<Corpus>(m, "Corpus")
      .def_readonly("name", &Corpus::name)
      .def_readonly("sentences", &Corpus::sentences)
      .def_property_readonly("labels", [](const Corpus& c) { return c.label_set.labels(); })
      .def_property_readonly("entity_types", [](const Corpus& c) { return c.label_set.entity_types(); })
      .def("token_count", &Corpus::token_count)
      .def("__len__", [](const Corpus& c) { return c.sentences.size(); });

  m.def("read_conll", [](const std::string& path, std::size_t token_column, std::size_t label_column,
                         bool plain_tags) {
    ConllOptions o;
    o.token_column = token_column;
    o.label_column = label_column;
    o.scheme = plain_tags ? LabelScheme::PlainTags : LabelScheme::BIO;
    o.name = path;
    return read_conll_file(path, o);
  }, py::arg("path"), py::arg("token_column") = 0, py::arg("label_column") = 1, py::arg("plain_tags") = false);
  m.def("write_conll", &write_conll_file, py::arg("path"), py::arg("corpus"));
  m.def("subsample", &subsample, py::arg("corpus"), py::arg("fraction"), py::arg("seed"));
  m.def("synth_transfer_pair", [](std::size_t source_sentences, std::size_t target_sentences,
                                  double noise_rate, std::uint64_t seed) {
    auto p = synth_transfer_pair({source_sentences, target_sentences, noise_rate, seed});
    return std::pair{std::move(p.source), std::move(p.target)};
  }, py::arg("source_sentences") = 1000, py::arg("target_sentences") = 200, py::arg("noise_rate") = 0.3,
     py::arg("seed") = 1);

  m.def("extract_chunks", [](const std::vector<std::string>& labels) {
    py::list out;
    for (const auto& c : extract_chunks(labels)) out.append(py::make_tuple(c.type, c.start, c.end));
    return out;
  }, py::arg("labels"));
  m.def("score", [](const LabelSequences& gold, const LabelSequences& pred, bool plain_tags) {
    return to_python(report_records(score(gold, pred, plain_tags ? LabelScheme::PlainTags : LabelScheme::BIO)));
  }, py::arg("gold"), py::arg("pred"), py::arg("plain_tags") = false,
     "Overall record followed by one record per entity type.");

  m.def("log_partition", [](const Matrix& scores, const Matrix& transitions) {
    const auto t = transition_from(transitions);
    check_scores(scores, t);
    return log_partition(scores, t);
  }, py::arg("scores"), py::arg("transitions"));
  m.def("viterbi", [](const Matrix& scores, const Matrix& transitions) {
    const auto t = transition_from(transitions);
    check_scores(scores, t);
    return viterbi(scores, t);
  }, py::arg("scores"), py::arg("transitions"));
  m.def("marginals", [](const Matrix& scores, const Matrix& transitions) {
    const auto t = transition_from(transitions);
    check_scores(scores, t);
    return forward_backward(scores, t).unary;
  }, py::arg("scores"), py::arg("transitions"));

  m.def("config_keys", &config_keys);
  m.def("train", [](const std::string& config_path, const std::map<std::string, std::string>& overrides) {
    const auto c = make_config(config_path, overrides);
    std::vector<RunRecord> runs;
    {
      py::gil_scoped_release release;
      runs = cmd_train(c);
    }
    py::list out;
    for (const auto& r : runs) out.append(to_python(record_lines(c, r)));
    return out;
  }, py::arg("config_path") = "", py::arg("overrides") = std::map<std::string, std::string>{},
     "Runs every seed; returns the record lines of each run.");
  m.def("report", [](const std::filesystem::path& run_dir) {
    return to_python(summary_records(cmd_report(run_dir)));
  }, py::arg("run_dir"));
  m.def("synth", [](const std::filesystem::path& out_dir, std::size_t source_sentences,
                    std::size_t target_sentences, double noise_rate, std::uint64_t seed) {
    cmd_synth({source_sentences, target_sentences, noise_rate, seed}, out_dir);
  }, py::arg("out_dir"), py::arg("source_sentences") = 1000, py::arg("target_sentences") = 200,
     py::arg("noise_rate") = 0.3, py::arg("seed") = 1);
}
