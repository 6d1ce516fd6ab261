#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dalab {

enum class Domain : std::uint8_t { Source = 0, Target = 1 };

const char* domain_name(Domain d) noexcept;

enum class LabelScheme : std::uint8_t { BIO, PlainTags };

/// Ordered, duplicate-free label inventory of one task.
class LabelSet {
 public:
  explicit LabelSet(LabelScheme scheme = LabelScheme::BIO) : scheme_(scheme) {}
  LabelSet(std::vector<std::string> labels, LabelScheme scheme);

  /// Appends the label if absent; returns its index either way. Under the
  /// BIO scheme a label that is neither "O" nor "B-x"/"I-x" throws DataError.
  int add(std::string_view label);

  std::optional<int> find(std::string_view label) const;
  /// Like find(), but throws LabelMismatchError for unknown labels.
  int index_of(std::string_view label) const;

  const std::string& at(int index) const { return labels_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  LabelScheme scheme() const noexcept { return scheme_; }

  /// Entity types ("PER" for B-PER/I-PER), sorted.
  std::vector<std::string> entity_types() const;

  bool operator==(const LabelSet& other) const {
    return scheme_ == other.scheme_ && labels_ == other.labels_;
  }

 private:
  LabelScheme scheme_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

bool is_bio_label(std::string_view label) noexcept;

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return tokens.size(); }
  bool operator==(const TaggedSentence&) const = default;
};

struct Corpus {
  std::string name;
  Domain domain = Domain::Source;
  LabelSet label_set;
  std::vector<TaggedSentence> sentences;

  std::size_t token_count() const noexcept;
};

struct ConllOptions {
  std::size_t token_column = 0;
  std::size_t label_column = 1;
  LabelScheme scheme = LabelScheme::BIO;
  std::string name = "corpus";
  Domain domain = Domain::Source;
};

/// Reads whitespace-separated column data. Blank lines separate sentences,
/// lines starting with "# " are skipped and CR characters are dropped.
Corpus read_conll(std::istream& in, const ConllOptions& options = {});
Corpus read_conll_file(const std::string& path, const ConllOptions& options = {});

/// Two tab-separated columns (token, label), blank line after each sentence.
void write_conll(std::ostream& out, const Corpus& corpus);
void write_conll_file(const std::string& path, const Corpus& corpus);

/// Checks sentence shape and label membership; throws DataError.
void check_corpus(const Corpus& corpus);

struct BioViolation {
  std::size_t sentence;
  std::size_t token;
  std::string reason;
  bool operator==(const BioViolation&) const = default;
};

std::vector<BioViolation> validate_bio(const Corpus& corpus);
std::vector<std::size_t> bio_violations(const std::vector<std::string>& labels);

/// Rewrites every unopened I-x to B-x. Idempotent.
Corpus repair_bio(const Corpus& corpus);

/// Keeps max(1, round(fraction * N)) sentences drawn without replacement,
/// in their original order.
Corpus subsample(const Corpus& corpus, double fraction, std::uint64_t seed);

/// Returns a corpus holding `labels` plus every label of `corpus` not yet in
/// it, appended in first-occurrence order.
LabelSet merge_labels(LabelSet labels, const Corpus& corpus);

struct CorpusStats {
  std::string name;
  std::string split;
  std::size_t sentences;
  std::size_t tokens;
};

CorpusStats corpus_stats(const Corpus& corpus, std::string split);
/// CSV with header "name,split,sentences,tokens".
void write_stats_csv(std::ostream& out, const std::vector<CorpusStats>& rows);

struct SynthConfig {
  std::size_t source_sentences = 1000;
  std::size_t target_sentences = 200;
  double noise_rate = 0.3;
  std::uint64_t seed = 1;
};

struct SynthPair {
  Corpus source;
  Corpus target;
};

/// Formal/informal corpus pair from a fixed template grammar. The source
/// side carries PER/LOC/ORG spans; the target side adds OTHER spans,
/// informal templates and per-token surface noise. Structure and noise draw
/// from separate streams, so the same seed with noise_rate = 0 yields the
/// clean counterpart of a noisy target corpus.
SynthPair synth_transfer_pair(const SynthConfig& config);

/// True when `token` occurs verbatim in the generator's clean vocabulary.
bool synth_in_vocabulary(std::string_view token);

struct Split {
  Corpus train;
  Corpus dev;
  Corpus test;
};

/// 80/10/10 split in corpus order; train takes the rounding remainder.
Split split_train_dev_test(const Corpus& corpus);

}  // namespace dalab
