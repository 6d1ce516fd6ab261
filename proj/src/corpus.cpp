#include "dalab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "dalab/errors.hpp"
#include "dalab/rng.hpp"

namespace dalab {

const char* domain_name(Domain d) noexcept {
  return d == Domain::Source ? "source" : "target";
}

bool is_bio_label(std::string_view label) noexcept {
  if (label == "O") return true;
  return label.size() > 2 && (label[0] == 'B' || label[0] == 'I') && label[1] == '-';
}

LabelSet::LabelSet(std::vector<std::string> labels, LabelScheme scheme) : scheme_(scheme) {
  for (const auto& l : labels) {
    if (find(l)) throw DataError(fmt::format("duplicate label '{}'", l));
    add(l);
  }
}

int LabelSet::add(std::string_view label) {
  if (auto found = find(label)) return *found;
  if (scheme_ == LabelScheme::BIO && !is_bio_label(label))
    throw DataError(fmt::format("label '{}' is not a BIO label (O, B-x, I-x)", label));
  const int idx = static_cast<int>(labels_.size());
  labels_.emplace_back(label);
  index_.emplace(labels_.back(), idx);
  return idx;
}

std::optional<int> LabelSet::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int LabelSet::index_of(std::string_view label) const {
  if (auto found = find(label)) return *found;
  throw LabelMismatchError(fmt::format("label '{}' is not in the label set", label));
}

std::vector<std::string> LabelSet::entity_types() const {
  std::set<std::string> types;
  if (scheme_ == LabelScheme::BIO)
    for (const auto& l : labels_)
      if (l != "O") types.insert(l.substr(2));
  return {types.begin(), types.end()};
}

std::size_t Corpus::token_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// "# ..." or a lone "#"; a token such as "#tag" or "#" followed by a tab is data.
bool is_comment(std::string_view line) {
  return line.starts_with('#') && (line.size() == 1 || line[1] == ' ');
}

}  // namespace

Corpus read_conll(std::istream& in, const ConllOptions& options) {
  Corpus corpus;
  corpus.name = options.name;
  corpus.domain = options.domain;
  corpus.label_set = LabelSet(options.scheme);
  const std::size_t needed = std::max(options.token_column, options.label_column) + 1;

  TaggedSentence current;
  auto flush = [&] {
    if (!current.tokens.empty()) corpus.sentences.push_back(std::move(current));
    current = {};
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::erase(line, '\r');
    const auto fields = split_ws(line);
    if (fields.empty()) {
      flush();
      continue;
    }
    if (is_comment(line)) continue;
    if (fields.size() < needed)
      throw MalformedLineError(
          fmt::format("{}: line {} has {} column(s), need at least {}", options.name, line_no,
                      fields.size(), needed),
          line_no);
    const auto label = fields[options.label_column];
    try {
      corpus.label_set.add(label);
    } catch (const DataError& e) {
      throw MalformedLineError(fmt::format("{}: line {}: {}", options.name, line_no, e.what()),
                               line_no);
    }
    current.tokens.emplace_back(fields[options.token_column]);
    current.labels.emplace_back(label);
  }
  flush();
  if (corpus.sentences.empty())
    throw EmptyCorpusError(fmt::format("{}: no sentences found", options.name));
  return corpus;
}

Corpus read_conll_file(const std::string& path, const ConllOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open corpus file '{}'", path));
  ConllOptions named = options;
  if (named.name == ConllOptions{}.name) named.name = path;
  return read_conll(in, named);
}

void write_conll(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus.sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) out << s.tokens[i] << '\t' << s.labels[i] << '\n';
    out << '\n';
  }
}

void write_conll_file(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write corpus file '{}'", path));
  write_conll(out, corpus);
  if (!out) throw DataError(fmt::format("write to '{}' failed", path));
}

void check_corpus(const Corpus& corpus) {
  if (corpus.sentences.empty())
    throw EmptyCorpusError(fmt::format("{}: corpus is empty", corpus.name));
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const auto& s = corpus.sentences[i];
    if (s.tokens.empty() || s.tokens.size() != s.labels.size())
      throw DataError(fmt::format("{}: sentence {} has {} tokens and {} labels", corpus.name, i,
                                  s.tokens.size(), s.labels.size()));
    for (const auto& l : s.labels) corpus.label_set.index_of(l);
  }
}

std::vector<std::size_t> bio_violations(const std::vector<std::string>& labels) {
  std::vector<std::size_t> out;
  std::string_view open_type;  // type of the chunk the previous token belongs to
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::string_view l = labels[i];
    if (l.starts_with("B-")) {
      open_type = l.substr(2);
    } else if (l.starts_with("I-")) {
      if (l.substr(2) != open_type) out.push_back(i);
      open_type = l.substr(2);
    } else {
      open_type = {};
    }
  }
  return out;
}

std::vector<BioViolation> validate_bio(const Corpus& corpus) {
  std::vector<BioViolation> out;
  for (std::size_t s = 0; s < corpus.sentences.size(); ++s) {
    const auto& labels = corpus.sentences[s].labels;
    for (std::size_t t : bio_violations(labels)) {
      const std::string prev = t == 0 ? "sentence start" : labels[t - 1];
      out.push_back({s, t, fmt::format("{} follows {}", labels[t], prev)});
    }
  }
  return out;
}

Corpus repair_bio(const Corpus& corpus) {
  Corpus out = corpus;
  for (auto& s : out.sentences)
    for (std::size_t t : bio_violations(s.labels)) {
      s.labels[t][0] = 'B';
      out.label_set.add(s.labels[t]);
    }
  return out;
}

Corpus subsample(const Corpus& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ConfigError(fmt::format("subsample fraction must lie in (0, 1], got {}", fraction));
  const std::size_t n = corpus.sentences.size();
  const auto keep = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))), 1, std::max<std::size_t>(n, 1));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  SplitMix64 rng(derive_seed(seed, 0x5ab5));
  // Partial Fisher-Yates: the first `keep` slots are a uniform sample.
  for (std::size_t i = 0; i < keep && i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(order[i], order[j]);
  }
  order.resize(std::min(keep, n));
  std::sort(order.begin(), order.end());

  Corpus out;
  out.name = corpus.name;
  out.domain = corpus.domain;
  out.label_set = corpus.label_set;
  out.sentences.reserve(order.size());
  for (std::size_t i : order) out.sentences.push_back(corpus.sentences[i]);
  return out;
}

LabelSet merge_labels(LabelSet labels, const Corpus& corpus) {
  for (const auto& l : corpus.label_set.labels()) labels.add(l);
  return labels;
}

CorpusStats corpus_stats(const Corpus& corpus, std::string split) {
  return {corpus.name, std::move(split), corpus.sentences.size(), corpus.token_count()};
}

void write_stats_csv(std::ostream& out, const std::vector<CorpusStats>& rows) {
  out << "name,split,sentences,tokens\n";
  for (const auto& r : rows) out << r.name << ',' << r.split << ',' << r.sentences << ',' << r.tokens << '\n';
}

Split split_train_dev_test(const Corpus& corpus) {
  const std::size_t n = corpus.sentences.size();
  const std::size_t dev = n / 10;
  const std::size_t test = n / 10;
  const std::size_t train = n - dev - test;
  auto slice = [&](std::size_t begin, std::size_t end) {
    Corpus c;
    c.name = corpus.name;
    c.domain = corpus.domain;
    c.label_set = corpus.label_set;
    c.sentences.assign(corpus.sentences.begin() + static_cast<std::ptrdiff_t>(begin),
                       corpus.sentences.begin() + static_cast<std::ptrdiff_t>(end));
    return c;
  };
  return {slice(0, train), slice(train, train + dev), slice(train + dev, n)};
}

}  // namespace dalab
