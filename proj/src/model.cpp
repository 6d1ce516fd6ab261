#include "dalab/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "dalab/errors.hpp"
#include "dalab/rng.hpp"

namespace dalab {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'D', 'A', 'L', 'A', 'B', 'C', 'K', 'P'};
constexpr std::uint32_t kFormatVersion = 1;

TaskHead make_head(LabelSet labels, int hidden) {
  const int k = static_cast<int>(labels.size());
  if (k < 1) throw ConfigError("a task head needs at least one label");
  TaskHead h{std::move(labels), Matrix::Zero(hidden, k), Transition(k)};
  return h;
}

}  // namespace

NeuralCrfModel::NeuralCrfModel(const ModelConfig& config, LabelSet source_labels,
                               LabelSet target_labels)
    : config_(config),
      extractor_(config.hash_bits),
      heads_{make_head(std::move(source_labels), config.hidden_dim),
             make_head(std::move(target_labels), config.hidden_dim)} {
  if (config.hidden_dim < 1)
    throw ConfigError(fmt::format("hidden_dim must be >= 1, got {}", config.hidden_dim));
  encoder_ = Matrix::Zero(extractor_.dim(), config.hidden_dim);
}

NeuralCrfModel NeuralCrfModel::zeros(const ModelConfig& config, LabelSet source_labels,
                                     LabelSet target_labels) {
  return NeuralCrfModel(config, std::move(source_labels), std::move(target_labels));
}

NeuralCrfModel NeuralCrfModel::random(const ModelConfig& config, LabelSet source_labels,
                                      LabelSet target_labels, std::uint64_t seed) {
  NeuralCrfModel m(config, std::move(source_labels), std::move(target_labels));
  SplitMix64 rng(derive_seed(seed, 0x696e6974ULL));
  const double a = config.init_scale;
  auto fill = [&](Matrix& x) {
    double* p = x.data();
    for (Eigen::Index i = 0; i < x.size(); ++i) p[i] = rng.uniform(-a, a);
  };
  fill(m.encoder_);
  for (auto& h : m.heads_) {
    fill(h.emission);
    const int n = h.transition.num_labels() + 2;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (!h.transition.fixed(i, j)) h.transition.set(i, j, rng.uniform(-a, a));
  }
  return m;
}

EncodedSentence NeuralCrfModel::encode_tokens(std::span<const std::string> tokens) const {
  return {extractor_.extract(tokens), {}};
}

EncodedSentence NeuralCrfModel::encode(Domain d, const TaggedSentence& sentence) const {
  if (sentence.tokens.size() != sentence.labels.size())
    throw DataError(fmt::format("sentence has {} tokens and {} labels", sentence.tokens.size(),
                                sentence.labels.size()));
  EncodedSentence out = encode_tokens(sentence.tokens);
  const auto& labels = head(d).labels;
  out.labels.reserve(sentence.labels.size());
  for (const auto& l : sentence.labels) {
    const auto id = labels.find(l);
    if (!id)
      throw LabelMismatchError(
          fmt::format("label '{}' is not in the {} head's label set", l, domain_name(d)));
    out.labels.push_back(*id);
  }
  return out;
}

Matrix NeuralCrfModel::hidden(const EncodedSentence& sentence) const {
  const auto T = static_cast<Eigen::Index>(sentence.size());
  Matrix h = Matrix::Zero(T, config_.hidden_dim);
  for (Eigen::Index t = 0; t < T; ++t)
    for (std::uint32_t f : sentence.features[std::size_t(t)]) h.row(t) += encoder_.row(f);
  return h.array().tanh().matrix();
}

Matrix NeuralCrfModel::emission_scores(Domain d, const EncodedSentence& sentence) const {
  return hidden(sentence) * head(d).emission;
}

Matrix NeuralCrfModel::emission_scores(Domain d, const TaggedSentence& sentence) const {
  return emission_scores(d, encode_tokens(sentence.tokens));
}

double NeuralCrfModel::sentence_nll(Domain d, const EncodedSentence& sentence) const {
  if (sentence.labels.size() != sentence.size())
    throw DataError("sentence_nll needs a labeled sentence");
  const Matrix scores = emission_scores(d, sentence);
  const auto& trans = head(d).transition;
  return std::max(0.0, log_partition(scores, trans) - path_score(scores, trans, sentence.labels));
}

double NeuralCrfModel::sentence_nll(Domain d, const TaggedSentence& sentence) const {
  return sentence_nll(d, encode(d, sentence));
}

std::vector<int> NeuralCrfModel::predict_ids(Domain d, const EncodedSentence& sentence) const {
  return viterbi(emission_scores(d, sentence), head(d).transition);
}

std::vector<std::string> NeuralCrfModel::predict(Domain d, std::span<const std::string> tokens) const {
  const auto ids = predict_ids(d, encode_tokens(tokens));
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(head(d).labels.at(id));
  return out;
}

bool NeuralCrfModel::operator==(const NeuralCrfModel& o) const {
  if (config_.hash_bits != o.config_.hash_bits || config_.hidden_dim != o.config_.hidden_dim)
    return false;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& a = heads_[i];
    const auto& b = o.heads_[i];
    if (!(a.labels == b.labels) || a.emission != b.emission ||
        a.transition.raw() != b.transition.raw())
      return false;
  }
  return encoder_ == o.encoder_;
}

// ---------------------------------------------------------------- checkpoint

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError("checkpoint is truncated");
  return value;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw DataError("checkpoint is truncated");
  return s;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void get_matrix(std::istream& in, Matrix& m) {
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw DataError("checkpoint is truncated");
}

}  // namespace

void NeuralCrfModel::save(std::ostream& out) const {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(config_.hash_bits));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(config_.hidden_dim));
  put<double>(out, config_.init_scale);
  for (const auto& h : heads_) {
    put<std::uint8_t>(out, h.labels.scheme() == LabelScheme::BIO ? 0 : 1);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(h.labels.size()));
    for (const auto& l : h.labels.labels()) put_string(out, l);
    put_matrix(out, h.emission);
    put_matrix(out, h.transition.raw());
  }
  put_matrix(out, encoder_);
}

NeuralCrfModel NeuralCrfModel::load(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw DataError("not a dalab checkpoint (bad magic)");
  const auto version = get<std::uint32_t>(in);
  if (version != kFormatVersion)
    throw DataError(fmt::format("unsupported checkpoint version {}", version));
  ModelConfig config;
  config.hash_bits = static_cast<int>(get<std::uint32_t>(in));
  config.hidden_dim = static_cast<int>(get<std::uint32_t>(in));
  config.init_scale = get<double>(in);

  std::array<LabelSet, 2> labels;
  std::array<Matrix, 2> emission;
  std::array<Matrix, 2> transition;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto scheme = get<std::uint8_t>(in) == 0 ? LabelScheme::BIO : LabelScheme::PlainTags;
    const auto k = get<std::uint32_t>(in);
    std::vector<std::string> names;
    for (std::uint32_t j = 0; j < k; ++j) names.push_back(get_string(in));
    labels[i] = LabelSet(std::move(names), scheme);
    emission[i].resize(config.hidden_dim, k);
    get_matrix(in, emission[i]);
    transition[i].resize(k + 2, k + 2);
    get_matrix(in, transition[i]);
  }
  NeuralCrfModel m(config, labels[0], labels[1]);
  for (std::size_t i = 0; i < 2; ++i) {
    m.heads_[i].emission = std::move(emission[i]);
    m.heads_[i].transition.raw() = std::move(transition[i]);
  }
  get_matrix(in, m.encoder_);
  return m;
}

void NeuralCrfModel::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write checkpoint '{}'", path));
  save(out);
  if (!out) throw DataError(fmt::format("write to '{}' failed", path));
}

NeuralCrfModel NeuralCrfModel::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open checkpoint '{}'", path));
  return load(in);
}

// ----------------------------------------------------------------- gradients

Gradients::Gradients(const NeuralCrfModel& model)
    : dim_(model.extractor().dim()), hidden_(model.hidden_dim()) {
  for (Domain d : {Domain::Source, Domain::Target}) {
    const auto& h = model.head(d);
    emission_[static_cast<std::size_t>(d)] = Matrix::Zero(h.emission.rows(), h.emission.cols());
    transition_[static_cast<std::size_t>(d)] =
        Matrix::Zero(h.transition.raw().rows(), h.transition.raw().cols());
  }
}

double* Gradients::encoder_row(std::uint32_t feature) {
  auto [it, inserted] = slot_.try_emplace(feature, rows_.size());
  if (inserted) {
    rows_.push_back(feature);
    row_data_.resize(row_data_.size() + static_cast<std::size_t>(hidden_), 0.0);
  }
  return row_data_.data() + it->second * static_cast<std::size_t>(hidden_);
}

const double* Gradients::find_encoder_row(std::uint32_t feature) const {
  auto it = slot_.find(feature);
  if (it == slot_.end()) return nullptr;
  return row_data_.data() + it->second * static_cast<std::size_t>(hidden_);
}

Matrix Gradients::dense_encoder() const {
  Matrix out = Matrix::Zero(dim_, hidden_);
  for (std::size_t r = 0; r < rows_.size(); ++r)
    for (int k = 0; k < hidden_; ++k)
      out(rows_[r], k) = row_data_[r * static_cast<std::size_t>(hidden_) + std::size_t(k)];
  return out;
}

void Gradients::scale(double factor) {
  for (auto& x : row_data_) x *= factor;
  for (auto& m : emission_) m *= factor;
  for (auto& m : transition_) m *= factor;
}

double accumulate_gradients(const NeuralCrfModel& model, Domain d, const EncodedSentence& sentence,
                            Gradients& grads, double weight, Marginals* marginals) {
  const auto T = static_cast<Eigen::Index>(sentence.size());
  if (T == 0) throw DataError("cannot train on an empty sentence");
  if (sentence.labels.size() != sentence.size())
    throw DataError("gradient computation needs a labeled sentence");
  const auto& head = model.head(d);
  const auto K = static_cast<Eigen::Index>(head.labels.size());
  for (int y : sentence.labels)
    if (y < 0 || y >= K) throw LabelMismatchError(fmt::format("label id {} out of range", y));

  const Matrix h = model.hidden(sentence);
  const Matrix scores = h * head.emission;
  Marginals m = forward_backward(scores, head.transition);
  const double loss =
      std::max(0.0, m.log_z - path_score(scores, head.transition, sentence.labels));

  // d loss / d scores = marginals - gold indicators
  Matrix g = m.unary;
  for (Eigen::Index t = 0; t < T; ++t) g(t, sentence.labels[std::size_t(t)]) -= 1.0;

  grads.mark(d);
  grads.emission(d).noalias() += weight * (h.transpose() * g);

  Matrix& tg = grads.transition(d);
  const int bos = head.transition.bos();
  const int eos = head.transition.eos();
  for (Eigen::Index j = 0; j < K; ++j) {
    tg(bos, j) += weight * m.unary(0, j);
    tg(j, eos) += weight * m.unary(T - 1, j);
  }
  tg(bos, sentence.labels.front()) -= weight;
  tg(sentence.labels.back(), eos) -= weight;
  for (Eigen::Index t = 0; t + 1 < T; ++t) {
    tg.topLeftCorner(K, K) += weight * m.pairwise[std::size_t(t)];
    tg(sentence.labels[std::size_t(t)], sentence.labels[std::size_t(t + 1)]) -= weight;
  }

  const Matrix dpre =
      ((g * head.emission.transpose()).array() * (1.0 - h.array().square())).matrix() * weight;
  const int hidden = model.hidden_dim();
  for (Eigen::Index t = 0; t < T; ++t) {
    const double* src = dpre.row(t).data();
    for (std::uint32_t f : sentence.features[std::size_t(t)]) {
      double* row = grads.encoder_row(f);
      for (int k = 0; k < hidden; ++k) row[k] += src[k];
    }
  }

  if (marginals != nullptr) *marginals = std::move(m);
  return loss;
}

Gradients gradients(const NeuralCrfModel& model, Domain d, const TaggedSentence& sentence) {
  Gradients g(model);
  accumulate_gradients(model, d, model.encode(d, sentence), g);
  return g;
}

// ----------------------------------------------------------------- optimizer

AdaGrad::AdaGrad(const NeuralCrfModel& model, OptimizerConfig config) : config_(config) {
  if (!(config.step_size > 0.0))
    throw ConfigError(fmt::format("step_size must be > 0, got {}", config.step_size));
  if (!(config.l2 >= 0.0)) throw ConfigError(fmt::format("l2 must be >= 0, got {}", config.l2));
  encoder_acc_ = Matrix::Zero(model.encoder().rows(), model.encoder().cols());
  for (Domain d : {Domain::Source, Domain::Target}) {
    const auto i = static_cast<std::size_t>(d);
    const auto& h = model.head(d);
    emission_acc_[i] = Matrix::Zero(h.emission.rows(), h.emission.cols());
    transition_acc_[i] = Matrix::Zero(h.transition.raw().rows(), h.transition.raw().cols());
  }
}

namespace {

inline void adagrad_update(double& param, double& acc, double grad, const OptimizerConfig& c) {
  const double g = grad + c.l2 * param;
  acc += g * g;
  param -= c.step_size * g / (std::sqrt(acc) + c.epsilon);
}

}  // namespace

void AdaGrad::apply(NeuralCrfModel& model, const Gradients& grads) {
  const int hidden = model.hidden_dim();
  Matrix& w = model.encoder();
  for (std::uint32_t f : grads.encoder_rows()) {
    const double* g = grads.find_encoder_row(f);
    double* p = w.row(f).data();
    double* a = encoder_acc_.row(f).data();
    for (int k = 0; k < hidden; ++k) adagrad_update(p[k], a[k], g[k], config_);
  }
  for (Domain d : {Domain::Source, Domain::Target}) {
    if (!grads.touched(d)) continue;
    const auto i = static_cast<std::size_t>(d);
    auto& head = model.head(d);
    {
      double* p = head.emission.data();
      double* a = emission_acc_[i].data();
      const double* g = grads.emission(d).data();
      for (Eigen::Index k = 0; k < head.emission.size(); ++k) adagrad_update(p[k], a[k], g[k], config_);
    }
    Matrix& t = head.transition.raw();
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c)
        if (!head.transition.fixed(int(r), int(c)))
          adagrad_update(t(r, c), transition_acc_[i](r, c), grads.transition(d)(r, c), config_);
  }
}

double train_step(NeuralCrfModel& model, AdaGrad& optimizer, std::span<const EncodedItem> items) {
  if (items.empty()) throw ConfigError("train_step needs a non-empty batch");
  Gradients grads(model);
  const double weight = 1.0 / static_cast<double>(items.size());
  double loss = 0.0;
  for (const auto& item : items)
    loss += accumulate_gradients(model, item.domain, *item.sentence, grads, weight);
  optimizer.apply(model, grads);
  return loss * weight;
}

double train_step(NeuralCrfModel& model, AdaGrad& optimizer, const MixedBatch& batch) {
  std::vector<EncodedSentence> encoded;
  encoded.reserve(batch.items.size());
  for (const auto& item : batch.items) encoded.push_back(model.encode(item.domain, *item.sentence));
  std::vector<EncodedItem> items;
  items.reserve(encoded.size());
  for (std::size_t i = 0; i < encoded.size(); ++i) items.push_back({&encoded[i], batch.items[i].domain});
  return train_step(model, optimizer, items);
}

}  // namespace dalab
