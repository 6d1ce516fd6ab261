// Template grammar behind synth_transfer_pair. The word lists and templates
// are part of the on-disk contract of `dalab synth`; changing them changes
// every generated corpus, so bump kGrammarVersion when editing.

#include <algorithm>
#include <array>
#include <cctype>
#include <string_view>
#include <string>
#include <unordered_set>
#include <vector>

#include <fmt/format.h>

#include "dalab/corpus.hpp"
#include "dalab/errors.hpp"
#include "dalab/rng.hpp"

namespace dalab {
namespace {

[[maybe_unused]] constexpr int kGrammarVersion = 1;

constexpr std::array kFirstNames = {
    "James",   "Mary",     "John",     "Patricia", "Robert",  "Jennifer", "Michael", "Linda",
    "William", "Elizabeth", "David",   "Barbara",  "Richard", "Susan",    "Joseph",  "Jessica",
    "Thomas",  "Sarah",    "Charles",  "Karen",    "Daniel",  "Nancy",    "Matthew", "Lisa",
    "Anthony", "Betty",    "Mark",     "Margaret", "Donald",  "Sandra",   "Steven",  "Ashley",
    "Paul",    "Kimberly", "Andrew",   "Emily",    "Joshua",  "Donna",    "Kenneth", "Michelle",
    "Kevin",   "Carol",    "Brian",    "Amanda",   "George",  "Melissa",  "Edward",  "Deborah",
    "Ronald",  "Stephanie"};

constexpr std::array kLastNames = {
    "Smith",   "Johnson",  "Williams", "Brown",    "Jones",  "Garcia",   "Miller",   "Davis",
    "Rodriguez", "Martinez", "Hernandez", "Lopez", "Gonzalez", "Wilson", "Anderson", "Taylor",
    "Moore",   "Jackson",  "Martin",   "Lee",      "Perez",  "Thompson", "White",    "Harris",
    "Sanchez", "Clark",    "Ramirez",  "Lewis",    "Robinson", "Walker", "Young",    "Allen",
    "King",    "Wright",   "Scott",    "Torres",   "Nguyen", "Hill",     "Flores",   "Baker"};

constexpr std::array kLocations = {
    "Paris",    "London",   "Berlin",   "Madrid",   "Rome",       "Tokyo",      "Beijing",
    "Moscow",   "Cairo",    "Lagos",    "Nairobi",  "Sydney",     "Toronto",    "Chicago",
    "Boston",   "Seattle",  "Denver",   "Dallas",   "Houston",    "Atlanta",    "Miami",
    "Phoenix",  "Austin",   "Portland", "Detroit",  "Vienna",     "Prague",     "Warsaw",
    "Dublin",   "Lisbon",   "Athens",   "Oslo",     "Stockholm",  "Helsinki",   "Brussels",
    "Geneva",   "Zurich",   "Mumbai",   "Delhi",    "Seoul",      "Bangkok",    "Jakarta",
    "Manila",   "Lima",     "Santiago", "Bogota",   "Havana",     "Texas",      "Ohio",
    "Florida",  "New York", "Los Angeles", "San Francisco", "Hong Kong", "Buenos Aires",
    "Cape Town", "Rio de Janeiro", "Salt Lake City", "Las Vegas", "New Delhi"};

constexpr std::array kOrganizations = {
    "United Nations", "World Bank",   "Red Cross",     "General Motors",  "Goldman Sachs",
    "Morgan Stanley", "Deutsche Bank", "Toyota",       "Siemens",         "Reuters",
    "Boeing",         "Airbus",       "Intel",         "Oracle",          "Nike",
    "Pfizer",         "NASA",         "FIFA",          "UNICEF",          "Harvard University",
    "Stanford University", "Oxford University", "Bank of England", "European Union",
    "Federal Reserve", "Supreme Court", "Ford",        "Honda",           "Samsung",
    "Nokia",          "Sony",         "IBM",           "Amazon",          "Netflix",
    "Walmart",        "Shell",        "Exxon",         "Chevron",         "Unilever",
    "Nestle"};

constexpr std::array kOther = {
    "iPhone",    "PlayStation", "Super Bowl", "World Cup",  "Coachella",  "Game of Thrones",
    "Star Wars", "Harry Potter", "Xbox",      "Grammys",    "Oscars",     "Olympics",
    "Black Friday", "Christmas", "Halloween", "Thanksgiving", "Instagram", "Snapchat",
    "TikTok",    "Fortnite",    "Minecraft",  "Pokemon",    "Spotify",    "YouTube",
    "Comic Con", "Mardi Gras",  "Fashion Week", "Champions League", "Stranger Things",
    "Breaking Bad"};

constexpr std::array kFormalTemplates = {
    "{PER} said on Monday that {ORG} would expand in {LOC} .",
    "{ORG} announced a new office in {LOC} .",
    "officials in {LOC} met with {PER} on Tuesday .",
    "{PER} , a spokesman for {ORG} , declined to comment .",
    "the {ORG} report was released in {LOC} last week .",
    "{PER} arrived in {LOC} for talks with {PER} .",
    "shares of {ORG} rose 3 percent in {LOC} trading .",
    "{PER} has led {ORG} since 2010 .",
    "the meeting between {PER} and {PER} took place in {LOC} .",
    "{ORG} and {ORG} agreed to a merger .",
    "{LOC} reported strong growth this quarter .",
    "{PER} told reporters in {LOC} that the deal was final .",
    "according to {ORG} , prices in {LOC} fell sharply .",
    "{PER} will visit {LOC} and {LOC} next month .",
    "the government of {LOC} criticized {ORG} .",
    "{PER} joined {ORG} as chief executive .",
    "analysts at {ORG} expect rates to rise .",
    "{PER} was born in {LOC} .",
    "{ORG} opened a factory near {LOC} .",
    "the mayor of {LOC} , {PER} , resigned ."};

constexpr std::array kInformalTemplates = {
    "omg {PER} is in {LOC} rn !!",
    "just saw {PER} at the mall lol",
    "cant believe {ORG} did that smh",
    "heading to {LOC} this weekend with {PER} :)",
    "watching {OTHER} with the fam tonight",
    "{OTHER} was amazing ! ! #blessed",
    "who else is going to {OTHER} in {LOC} ?",
    "{PER} posted about {OTHER} lmao",
    "my new {OTHER} is so good",
    "love u {PER} <3",
    "{ORG} customer service is the worst",
    "anyone in {LOC} want to grab food ?",
    "{PER} and {PER} at {OTHER} last night",
    "got a job at {ORG} !!! so happy"};

// Never produced by a template, so a substituted slang word is out of
// vocabulary for both domains.
constexpr std::array kSlang = {"tbh",    "ngl",     "bruh", "yall", "finna", "bae", "lowkey",
                               "highkey", "istg",   "ikr",  "af",   "fomo",  "sus", "yeet"};

// Share of target sentences drawn from the formal templates.
constexpr double kTargetFormalShare = 0.3;

template <std::size_t N>
std::string_view pick(const std::array<const char*, N>& items, SplitMix64& rng) {
  return items[static_cast<std::size_t>(rng.below(N))];
}

std::vector<std::string_view> words_of(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto j = s.find(' ', i);
    const auto end = j == std::string_view::npos ? s.size() : j;
    if (end > i) out.push_back(s.substr(i, end - i));
    i = end + 1;
  }
  return out;
}

void append_entity(TaggedSentence& s, std::string_view type, std::string_view surface) {
  bool first = true;
  for (auto w : words_of(surface)) {
    s.tokens.emplace_back(w);
    s.labels.push_back((first ? "B-" : "I-") + std::string(type));
    first = false;
  }
}

void append_person(TaggedSentence& s, SplitMix64& rng) {
  const auto form = rng.below(3);
  std::string surface;
  if (form == 0) {
    surface = pick(kFirstNames, rng);
  } else if (form == 1) {
    surface = pick(kLastNames, rng);
  } else {
    surface = std::string(pick(kFirstNames, rng)) + " " + std::string(pick(kLastNames, rng));
  }
  append_entity(s, "PER", surface);
}

TaggedSentence expand(std::string_view tmpl, SplitMix64& rng) {
  TaggedSentence s;
  for (auto w : words_of(tmpl)) {
    if (w == "{PER}") {
      append_person(s, rng);
    } else if (w == "{LOC}") {
      append_entity(s, "LOC", pick(kLocations, rng));
    } else if (w == "{ORG}") {
      append_entity(s, "ORG", pick(kOrganizations, rng));
    } else if (w == "{OTHER}") {
      append_entity(s, "OTHER", pick(kOther, rng));
    } else {
      s.tokens.emplace_back(w);
      s.labels.emplace_back("O");
    }
  }
  return s;
}

enum class Noise { Lowercase, Drop, Swap, Slang, Elongate };

// Applies one surface corruption that is guaranteed to change the token.
std::string corrupt(const std::string& token, bool outside_entity, SplitMix64& rng) {
  std::vector<Noise> ops;
  const bool has_upper = std::any_of(token.begin(), token.end(),
                                     [](unsigned char c) { return std::isupper(c) != 0; });
  if (has_upper) ops.push_back(Noise::Lowercase);
  if (token.size() >= 3) ops.push_back(Noise::Drop);
  bool swappable = false;
  for (std::size_t i = 1; i + 1 < token.size(); ++i) swappable |= token[i] != token[i + 1];
  if (token.size() >= 3 && swappable) ops.push_back(Noise::Swap);
  if (outside_entity) ops.push_back(Noise::Slang);
  ops.push_back(Noise::Elongate);

  std::string out = token;
  switch (ops[static_cast<std::size_t>(rng.below(ops.size()))]) {
    case Noise::Lowercase:
      for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      break;
    case Noise::Drop:
      out.erase(1 + static_cast<std::size_t>(rng.below(out.size() - 1)), 1);
      break;
    case Noise::Swap: {
      // The first character stays put; pick among swaps that change the string.
      std::vector<std::size_t> positions;
      for (std::size_t i = 1; i + 1 < out.size(); ++i)
        if (out[i] != out[i + 1]) positions.push_back(i);
      const auto i = positions[static_cast<std::size_t>(rng.below(positions.size()))];
      std::swap(out[i], out[i + 1]);
      break;
    }
    case Noise::Slang: {
      std::string_view slang = pick(kSlang, rng);
      if (slang == token) slang = kSlang[0] == token ? kSlang[1] : kSlang[0];
      out = slang;
      break;
    }
    case Noise::Elongate:
      out.push_back(out.back());
      break;
  }
  return out;
}

Corpus make_corpus(std::string name, Domain domain, std::vector<std::string> labels) {
  Corpus c;
  c.name = std::move(name);
  c.domain = domain;
  c.label_set = LabelSet(std::move(labels), LabelScheme::BIO);
  return c;
}

}  // namespace

SynthPair synth_transfer_pair(const SynthConfig& config) {
  if (config.source_sentences < 10 || config.target_sentences < 10)
    throw ConfigError(fmt::format("synthetic corpora need at least 10 sentences each, got {} and {}",
                                  config.source_sentences, config.target_sentences));
  if (!(config.noise_rate >= 0.0 && config.noise_rate <= 0.5))
    throw ConfigError(fmt::format("noise_rate must lie in [0, 0.5], got {}", config.noise_rate));
  SynthPair pair{
      make_corpus("synth-source", Domain::Source,
                  {"O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG"}),
      make_corpus("synth-target", Domain::Target,
                  {"O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG", "B-OTHER",
                   "I-OTHER"}),
  };

  SplitMix64 source_rng(derive_seed(config.seed, 1));
  for (std::size_t i = 0; i < config.source_sentences; ++i)
    pair.source.sentences.push_back(expand(pick(kFormalTemplates, source_rng), source_rng));

  SplitMix64 target_rng(derive_seed(config.seed, 2));
  SplitMix64 noise_rng(derive_seed(config.seed, 3));
  for (std::size_t i = 0; i < config.target_sentences; ++i) {
    const auto tmpl = target_rng.bernoulli(kTargetFormalShare) ? pick(kFormalTemplates, target_rng)
                                                               : pick(kInformalTemplates, target_rng);
    TaggedSentence s = expand(tmpl, target_rng);
    for (std::size_t t = 0; t < s.size(); ++t) {
      // One draw per token regardless of the outcome keeps the noise stream
      // aligned across noise rates.
      const double u = noise_rng.uniform();
      SplitMix64 token_rng = noise_rng.split();
      if (u < config.noise_rate) s.tokens[t] = corrupt(s.tokens[t], s.labels[t] == "O", token_rng);
    }
    pair.target.sentences.push_back(std::move(s));
  }
  return pair;
}

bool synth_in_vocabulary(std::string_view token) {
  static const std::unordered_set<std::string_view> vocab = [] {
    std::unordered_set<std::string_view> v;
    auto add_all = [&](const auto& list) {
      for (std::string_view item : list)
        for (auto w : words_of(item))
          if (!w.starts_with('{')) v.insert(w);
    };
    add_all(kFirstNames);
    add_all(kLastNames);
    add_all(kLocations);
    add_all(kOrganizations);
    add_all(kOther);
    add_all(kFormalTemplates);
    add_all(kInformalTemplates);
    return v;
  }();
  return vocab.contains(token);
}

}  // namespace dalab
