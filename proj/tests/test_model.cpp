#include <doctest.h>

#include <sstream>

#include "dalab/errors.hpp"
#include "dalab/model.hpp"
#include "model_oracle.hpp"

using namespace dalab;

namespace {

LabelSet bio(std::vector<std::string> labels) { return LabelSet(std::move(labels), LabelScheme::BIO); }

ModelConfig small(int hash_bits = 6, int hidden = 4) { return ModelConfig{hash_bits, hidden, 0.1}; }

TaggedSentence sent(std::vector<std::string> tokens, std::vector<std::string> labels) {
  return {std::move(tokens), std::move(labels)};
}

const TaggedSentence kParis = sent({"Anna", "visited", "Paris", "today"}, {"B-PER", "O", "B-LOC", "O"});

NeuralCrfModel tiny_random(std::uint64_t seed, int hash_bits = 6, int hidden = 4) {
  return NeuralCrfModel::random(small(hash_bits, hidden), bio({"O", "B-PER", "B-LOC"}),
                                bio({"O", "B-LOC", "B-PER", "I-PER"}), seed);
}

}  // namespace

TEST_CASE("feature extraction is a pure function of context") {
  const FeatureExtractor fx(10);
  const std::vector<std::string> a = {"The", "Cat", "sat"};
  const auto f1 = fx.extract(a);
  const auto f2 = fx.extract(a);
  CHECK(f1 == f2);
  REQUIRE(f1.size() == 3);
  for (const auto& tok : f1)
    for (auto idx : tok) CHECK(idx < fx.dim());
  // "Cat" has 3 prefixes and 3 suffixes: 1 + 6 + shape + 2 flags + 2 neighbours.
  CHECK(f1[1].size() == 12);
  CHECK(word_shape("McDonald99") == "XxXxd");
  CHECK(lowercase("ABc") == "abc");
  // Same token, different neighbour: the neighbour feature differs.
  const std::vector<std::string> b = {"The", "Cat", "ran"};
  CHECK(fx.extract(b)[1] != f1[1]);
  CHECK_THROWS_AS(FeatureExtractor(0), ConfigError);
}

TEST_CASE("emission scores") {
  const auto zero = NeuralCrfModel::zeros(small(), bio({"O", "B-PER", "B-LOC"}), bio({"O", "B-LOC"}));
  const Matrix s = zero.emission_scores(Domain::Source, kParis);
  CHECK(s.rows() == 4);
  CHECK(s.cols() == 3);
  CHECK(s.isZero(0.0));

  const auto m = tiny_random(5);
  const TaggedSentence one = sent({"Paris"}, {"B-LOC"});
  const Matrix e = m.emission_scores(Domain::Source, one);
  CHECK(e.rows() == 1);
  CHECK(e.cols() == 3);
  CHECK(m.emission_scores(Domain::Target, kParis) == m.emission_scores(Domain::Target, kParis));
}

TEST_CASE("sentence nll") {
  const auto zero = NeuralCrfModel::zeros(small(), bio({"O", "B-PER"}), bio({"O", "B-PER"}));
  CHECK(zero.sentence_nll(Domain::Source, sent({"a", "b"}, {"O", "B-PER"})) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));

  SplitMix64 rng(8);
  for (int i = 0; i < 20; ++i) {
    const auto m = tiny_random(rng.next());
    CHECK(m.sentence_nll(Domain::Target, sent({"Anna", "Lee", "in", "Paris"},
                                               {"B-PER", "I-PER", "O", "B-LOC"})) >= 0.0);
  }
  CHECK_THROWS_AS(zero.sentence_nll(Domain::Source, sent({"x"}, {"B-LOC"})), LabelMismatchError);
}

TEST_CASE("gradients match central finite differences") {
  SplitMix64 rng(1234);
  const std::vector<TaggedSentence> sentences = {
      sent({"Anna"}, {"B-PER"}),
      sent({"in", "Paris"}, {"O", "B-LOC"}),
      sent({"Anna", "Lee", "left"}, {"B-PER", "I-PER", "O"}),
      sent({"Paris", "and", "Anna", "Lee"}, {"B-LOC", "O", "B-PER", "I-PER"}),
  };
  for (int rep = 0; rep < 8; ++rep) {
    const int hidden = 1 + int(rng.below(8));
    const auto model = NeuralCrfModel::random(ModelConfig{4, hidden, 0.5}, bio({"O", "B-PER", "B-LOC"}),
                                              bio({"O", "B-PER", "I-PER", "B-LOC"}), rng.next());
    const auto& s = sentences[std::size_t(rep) % sentences.size()];
    for (Domain d : {Domain::Source, Domain::Target}) {
      if (d == Domain::Source && std::find(s.labels.begin(), s.labels.end(), "I-PER") != s.labels.end())
        continue;
      const auto check = oracle::finite_difference_check(model, d, s);
      INFO("worst ", check.worst_name, " rel ", check.worst_rel);
      CHECK(check.failures == 0);
      CHECK(check.checked > 0);
    }
  }
}

TEST_CASE("non-selected head receives exactly zero gradient") {
  const auto m = tiny_random(3);
  const Gradients g = gradients(m, Domain::Target, sent({"Anna", "Lee"}, {"B-PER", "I-PER"}));
  CHECK(g.emission(Domain::Source).isZero(0.0));
  CHECK(g.transition(Domain::Source).isZero(0.0));
  CHECK_FALSE(g.touched(Domain::Source));
  CHECK(g.touched(Domain::Target));
  CHECK_FALSE(g.emission(Domain::Target).isZero(0.0));
}

TEST_CASE("position marginals from the gradient pass sum to one") {
  const auto m = tiny_random(4);
  Gradients g(m);
  Marginals marg;
  accumulate_gradients(m, Domain::Target, m.encode(Domain::Target, kParis), g, 1.0, &marg);
  for (Eigen::Index t = 0; t < marg.unary.rows(); ++t)
    CHECK(std::abs(marg.unary.row(t).sum() - 1.0) < 1e-8);
}

TEST_CASE("viterbi prediction") {
  const auto zero = NeuralCrfModel::zeros(small(), bio({"O", "B-PER"}), bio({"B-LOC", "O"}));
  const std::vector<std::string> toks = {"a", "b", "c"};
  CHECK(zero.predict(Domain::Target, toks) == std::vector<std::string>{"B-LOC", "B-LOC", "B-LOC"});
  CHECK(tiny_random(1).predict(Domain::Source, kParis.tokens).size() == kParis.size());
}

TEST_CASE("overfitting a single sentence") {
  auto m = NeuralCrfModel::random(small(12, 16), bio({"O", "B-PER", "B-LOC"}),
                                  bio({"O", "B-PER", "B-LOC"}), 11);
  AdaGrad opt(m, OptimizerConfig{});
  const EncodedSentence enc = m.encode(Domain::Target, kParis);
  const EncodedItem item{&enc, Domain::Target};
  double loss = 0.0;
  for (int i = 0; i < 500; ++i) loss = train_step(m, opt, std::span(&item, 1));
  CHECK(m.sentence_nll(Domain::Target, kParis) < 0.01);
  CHECK(loss < 0.02);
  CHECK(m.predict(Domain::Target, kParis.tokens) == kParis.labels);
}

TEST_CASE("loss on a fixed batch does not increase") {
  auto m = NeuralCrfModel::random(small(12, 16), bio({"O", "B-PER", "I-PER", "B-LOC"}),
                                  bio({"O", "B-PER", "I-PER", "B-LOC"}), 21);
  AdaGrad opt(m, OptimizerConfig{});
  const std::vector<TaggedSentence> batch = {
      kParis,
      sent({"Bob", "Smith", "lives", "in", "Rome"}, {"B-PER", "I-PER", "O", "O", "B-LOC"}),
      sent({"nothing", "here"}, {"O", "O"}),
      sent({"Rome", "beat", "Paris"}, {"B-LOC", "O", "B-LOC"}),
  };
  std::vector<EncodedSentence> enc;
  for (const auto& s : batch) enc.push_back(m.encode(Domain::Target, s));
  std::vector<EncodedItem> items;
  for (const auto& e : enc) items.push_back({&e, Domain::Target});

  auto batch_loss = [&] {
    double sum = 0.0;
    for (const auto& e : enc) sum += m.sentence_nll(Domain::Target, e);
    return sum / static_cast<double>(enc.size());
  };
  double prev = batch_loss();
  for (int i = 0; i < 50; ++i) {
    train_step(m, opt, items);
    const double now = batch_loss();
    CHECK(now <= prev + 1e-3);
    prev = now;
  }
}

TEST_CASE("head isolation and shared encoder coupling") {
  const auto before = tiny_random(9, 8, 6);
  auto m = before;
  AdaGrad opt(m, OptimizerConfig{});
  const TaggedSentence tgt = sent({"Anna", "Lee"}, {"B-PER", "I-PER"});
  const TaggedSentence src = sent({"Anna", "in", "Paris"}, {"B-PER", "O", "B-LOC"});

  MixedBatch target_batch{1, {{&tgt, Domain::Target, 0}, {&tgt, Domain::Target, 0}}};
  for (int i = 0; i < 5; ++i) train_step(m, opt, target_batch);
  CHECK(m.head(Domain::Source).emission == before.head(Domain::Source).emission);
  CHECK(m.head(Domain::Source).transition.raw() == before.head(Domain::Source).transition.raw());
  CHECK(opt.emission_accumulator(Domain::Source).isZero(0.0));

  auto s = before;
  AdaGrad sopt(s, OptimizerConfig{});
  MixedBatch source_batch{1, {{&src, Domain::Source, 0}}};
  for (int i = 0; i < 5; ++i) train_step(s, sopt, source_batch);
  CHECK(s.head(Domain::Target).emission == before.head(Domain::Target).emission);
  CHECK(s.head(Domain::Target).transition.raw() == before.head(Domain::Target).transition.raw());
  CHECK(s.encoder() != before.encoder());
  CHECK(s.encoder().allFinite());
  CHECK((sopt.encoder_accumulator().array() >= 0.0).all());
}

TEST_CASE("mixed batches accumulate encoder gradients from both heads") {
  const auto base = tiny_random(17, 8, 4);
  const TaggedSentence tgt = sent({"Anna", "Lee"}, {"B-PER", "I-PER"});
  const TaggedSentence src = sent({"Anna", "in", "Paris"}, {"B-PER", "O", "B-LOC"});
  Gradients both(base);
  accumulate_gradients(base, Domain::Source, base.encode(Domain::Source, src), both, 0.5);
  accumulate_gradients(base, Domain::Target, base.encode(Domain::Target, tgt), both, 0.5);
  Gradients a = gradients(base, Domain::Source, src);
  Gradients b = gradients(base, Domain::Target, tgt);
  const Matrix expected = 0.5 * (a.dense_encoder() + b.dense_encoder());
  CHECK((both.dense_encoder() - expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(both.touched(Domain::Source));
  CHECK(both.touched(Domain::Target));
}

TEST_CASE("training is deterministic") {
  auto run = [] {
    auto m = tiny_random(42, 10, 8);
    AdaGrad opt(m, OptimizerConfig{});
    MixedBatch batch{1, {{&kParis, Domain::Source, 0}}};
    const TaggedSentence tgt = sent({"Anna", "Lee"}, {"B-PER", "I-PER"});
    MixedBatch tbatch{1, {{&tgt, Domain::Target, 0}, {&kParis, Domain::Source, 0}}};
    for (int i = 0; i < 20; ++i) train_step(m, opt, i % 2 ? batch : tbatch);
    return m;
  };
  CHECK(run() == run());
}

TEST_CASE("checkpoint round trip") {
  auto m = tiny_random(7, 8, 5);
  AdaGrad opt(m, OptimizerConfig{});
  MixedBatch batch{1, {{&kParis, Domain::Source, 0}}};
  for (int i = 0; i < 3; ++i) train_step(m, opt, batch);

  std::stringstream buf;
  m.save(buf);
  const auto bytes = buf.str();
  std::istringstream in(bytes);
  const auto back = NeuralCrfModel::load(in);
  CHECK(back == m);
  CHECK(back.predict(Domain::Target, kParis.tokens) == m.predict(Domain::Target, kParis.tokens));
  CHECK(back.emission_scores(Domain::Source, kParis) == m.emission_scores(Domain::Source, kParis));

  std::stringstream again;
  back.save(again);
  CHECK(again.str() == bytes);

  std::istringstream bad("NOTACKPT");
  CHECK_THROWS_AS(NeuralCrfModel::load(bad), DataError);
  std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(NeuralCrfModel::load(truncated), DataError);
}
