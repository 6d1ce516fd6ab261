#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dalab/corpus.hpp"
#include "dalab/crf.hpp"
#include "dalab/features.hpp"
#include "dalab/sampler.hpp"

namespace dalab {

struct ModelConfig {
  int hash_bits = 18;
  int hidden_dim = 64;
  double init_scale = 0.1;  // parameters start uniform in [-init_scale, init_scale]
};

struct TaskHead {
  LabelSet labels;
  Matrix emission;  // hidden_dim x K
  Transition transition;
};

/// A sentence after feature extraction and label lookup for one head.
struct EncodedSentence {
  std::vector<std::vector<std::uint32_t>> features;
  std::vector<int> labels;  // empty when unlabeled

  std::size_t size() const noexcept { return features.size(); }
};

/// Shared hashed-feature encoder (tanh(W^T phi)) feeding two linear-chain
/// CRF heads, one per domain. Both heads read the same encoder matrix.
class NeuralCrfModel {
 public:
  static NeuralCrfModel random(const ModelConfig& config, LabelSet source_labels,
                               LabelSet target_labels, std::uint64_t seed);
  static NeuralCrfModel zeros(const ModelConfig& config, LabelSet source_labels,
                              LabelSet target_labels);

  const ModelConfig& config() const noexcept { return config_; }
  const FeatureExtractor& extractor() const noexcept { return extractor_; }
  int hidden_dim() const noexcept { return config_.hidden_dim; }

  Matrix& encoder() noexcept { return encoder_; }
  const Matrix& encoder() const noexcept { return encoder_; }
  TaskHead& head(Domain d) noexcept { return heads_[static_cast<std::size_t>(d)]; }
  const TaskHead& head(Domain d) const noexcept { return heads_[static_cast<std::size_t>(d)]; }

  /// Throws LabelMismatchError for labels outside the head's label set.
  EncodedSentence encode(Domain head, const TaggedSentence& sentence) const;
  EncodedSentence encode_tokens(std::span<const std::string> tokens) const;

  /// T x hidden_dim activations.
  Matrix hidden(const EncodedSentence& sentence) const;
  /// T x K emission scores of the chosen head.
  Matrix emission_scores(Domain head, const EncodedSentence& sentence) const;
  Matrix emission_scores(Domain head, const TaggedSentence& sentence) const;

  double sentence_nll(Domain head, const EncodedSentence& sentence) const;
  double sentence_nll(Domain head, const TaggedSentence& sentence) const;

  std::vector<int> predict_ids(Domain head, const EncodedSentence& sentence) const;
  std::vector<std::string> predict(Domain head, std::span<const std::string> tokens) const;

  /// Binary checkpoint; see docs/checkpoint-format.md.
  void save(std::ostream& out) const;
  static NeuralCrfModel load(std::istream& in);
  void save_file(const std::string& path) const;
  static NeuralCrfModel load_file(const std::string& path);

  bool operator==(const NeuralCrfModel& other) const;

 private:
  NeuralCrfModel(const ModelConfig& config, LabelSet source_labels, LabelSet target_labels);

  ModelConfig config_;
  FeatureExtractor extractor_;
  Matrix encoder_;  // dim x hidden_dim
  std::array<TaskHead, 2> heads_;
};

/// Gradient of a (weighted) sum of sentence losses. Encoder rows are kept
/// sparse: only rows of features that occurred are stored.
class Gradients {
 public:
  explicit Gradients(const NeuralCrfModel& model);

  /// Pointer to the hidden_dim-long gradient row for feature f, created
  /// zeroed on first use.
  double* encoder_row(std::uint32_t feature);
  /// nullptr when the row was never touched.
  const double* find_encoder_row(std::uint32_t feature) const;
  const std::vector<std::uint32_t>& encoder_rows() const noexcept { return rows_; }
  /// Dense copy, dim x hidden_dim. Intended for tests on small models.
  Matrix dense_encoder() const;

  Matrix& emission(Domain d) noexcept { return emission_[static_cast<std::size_t>(d)]; }
  const Matrix& emission(Domain d) const noexcept { return emission_[static_cast<std::size_t>(d)]; }
  /// (K+2) x (K+2); fixed -inf entries always hold 0.
  Matrix& transition(Domain d) noexcept { return transition_[static_cast<std::size_t>(d)]; }
  const Matrix& transition(Domain d) const noexcept {
    return transition_[static_cast<std::size_t>(d)];
  }
  bool touched(Domain d) const noexcept { return touched_[static_cast<std::size_t>(d)]; }
  void mark(Domain d) noexcept { touched_[static_cast<std::size_t>(d)] = true; }

  void scale(double factor);

 private:
  std::uint32_t dim_;
  int hidden_;
  std::vector<std::uint32_t> rows_;
  std::unordered_map<std::uint32_t, std::size_t> slot_;
  std::vector<double> row_data_;
  std::array<Matrix, 2> emission_;
  std::array<Matrix, 2> transition_;
  std::array<bool, 2> touched_{false, false};
};

/// Adds weight * d(nll)/d(params) to `grads` and returns the unweighted
/// loss. If `marginals` is non-null it receives the forward-backward output.
double accumulate_gradients(const NeuralCrfModel& model, Domain head,
                            const EncodedSentence& sentence, Gradients& grads,
                            double weight = 1.0, Marginals* marginals = nullptr);

Gradients gradients(const NeuralCrfModel& model, Domain head, const TaggedSentence& sentence);

struct OptimizerConfig {
  double step_size = 0.1;
  double l2 = 1e-6;
  double epsilon = 1e-8;
};

/// AdaGrad with L2 decay, applied lazily to the parameters a batch touches
/// (encoder rows of observed features, and whole heads that received items).
class AdaGrad {
 public:
  AdaGrad(const NeuralCrfModel& model, OptimizerConfig config);

  void apply(NeuralCrfModel& model, const Gradients& grads);

  const OptimizerConfig& config() const noexcept { return config_; }
  const Matrix& encoder_accumulator() const noexcept { return encoder_acc_; }
  const Matrix& emission_accumulator(Domain d) const noexcept {
    return emission_acc_[static_cast<std::size_t>(d)];
  }
  const Matrix& transition_accumulator(Domain d) const noexcept {
    return transition_acc_[static_cast<std::size_t>(d)];
  }

 private:
  OptimizerConfig config_;
  Matrix encoder_acc_;
  std::array<Matrix, 2> emission_acc_;
  std::array<Matrix, 2> transition_acc_;
};

struct EncodedItem {
  const EncodedSentence* sentence;
  Domain domain;
};

/// One optimizer update on the mean loss of the items; returns that mean.
double train_step(NeuralCrfModel& model, AdaGrad& optimizer, std::span<const EncodedItem> items);
double train_step(NeuralCrfModel& model, AdaGrad& optimizer, const MixedBatch& batch);

}  // namespace dalab
