#pragma once

// Twelve gold/predicted sentence pairs with hand-counted chunk totals.

#include <string>
#include <vector>

#include "dalab/evaluator.hpp"

namespace dalab::fixture {

struct EvalCase {
  LabelSequences gold;
  LabelSequences pred;
};

inline EvalCase twelve_sentences() {
  EvalCase c;
  auto add = [&](std::vector<std::string> g, std::vector<std::string> p) {
    c.gold.push_back(std::move(g));
    c.pred.push_back(std::move(p));
  };
  // 1: exact match, one PER
  add({"B-PER", "I-PER", "O"}, {"B-PER", "I-PER", "O"});
  // 2: type confusion LOC -> ORG
  add({"B-PER", "O", "B-LOC"}, {"B-PER", "O", "B-ORG"});
  // 3: boundary error, pred too short
  add({"B-ORG", "I-ORG", "I-ORG"}, {"B-ORG", "I-ORG", "O"});
  // 4: orphan I- in pred opens a chunk that matches gold
  add({"O", "B-LOC", "O"}, {"O", "I-LOC", "O"});
  // 5: orphan I- of another type after B- splits the span
  add({"B-PER", "I-PER"}, {"B-PER", "I-LOC"});
  // 6: no gold chunks, one spurious pred
  add({"O", "O", "O"}, {"O", "B-MISC", "O"});
  // 7: gold chunk missed entirely
  add({"B-MISC", "O"}, {"O", "O"});
  // 8: adjacent B- chunks, both right
  add({"B-PER", "B-PER", "O"}, {"B-PER", "B-PER", "O"});
  // 9: gold orphan I- (lenient on gold too), pred right
  add({"I-ORG", "I-ORG", "O"}, {"B-ORG", "I-ORG", "O"});
  // 10: merged span in pred
  add({"B-LOC", "B-LOC"}, {"B-LOC", "I-LOC"});
  // 11: empty sentence
  add({}, {});
  // 12: two chunks, one right
  add({"B-LOC", "O", "B-PER", "I-PER"}, {"B-LOC", "O", "B-PER", "O"});
  return c;
}

// Hand counts for twelve_sentences().
//   sentence:  1  2  3  4  5  6  7  8  9 10 11 12
//   gold:      1  2  1  1  1  0  1  2  1  2  0  2  = 14
//   pred:      1  2  1  1  2  1  0  2  1  1  0  2  = 14
//   correct:   1  1  0  1  0  0  0  2  1  0  0  1  = 7
//   tokens 31, mismatching tokens 9
struct TypeCounts {
  double gold, pred, correct;
};

struct Expected {
  double gold = 14, pred = 14, correct = 7, tokens = 31, token_correct = 22;
  TypeCounts per{6, 6, 4};
  TypeCounts loc{5, 4, 2};
  TypeCounts org{2, 3, 1};
  TypeCounts misc{1, 1, 0};
};

}  // namespace dalab::fixture
