#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace dalab {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// (K+2) x (K+2) transition scores over K labels plus BOS (index K) and EOS
/// (index K+1). Entries into BOS and out of EOS are fixed at -inf.
class Transition {
 public:
  Transition() = default;
  explicit Transition(int num_labels);

  int num_labels() const noexcept { return num_labels_; }
  int bos() const noexcept { return num_labels_; }
  int eos() const noexcept { return num_labels_ + 1; }

  double start(int j) const { return m_(bos(), j); }
  double end(int i) const { return m_(i, eos()); }
  double between(int i, int j) const { return m_(i, j); }

  /// Whether (from, to) is one of the fixed -inf entries.
  bool fixed(int from, int to) const noexcept { return to == bos() || from == eos(); }

  /// Sets a trainable entry; throws std::out_of_range for fixed ones.
  void set(int from, int to, double value);

  Matrix& raw() noexcept { return m_; }
  const Matrix& raw() const noexcept { return m_; }

 private:
  int num_labels_ = 0;
  Matrix m_;
};

double path_score(const Matrix& scores, const Transition& trans, std::span<const int> path);

/// log of the sum over all K^T paths of exp(path score), by the forward
/// recursion in log space.
double log_partition(const Matrix& scores, const Transition& trans);

struct Marginals {
  double log_z = 0.0;
  Matrix unary;                 // T x K, P(y_t = k)
  std::vector<Matrix> pairwise;  // T-1 matrices K x K, P(y_t = i, y_{t+1} = j)
};

Marginals forward_backward(const Matrix& scores, const Transition& trans);

/// Highest-scoring path. Ties go to the lowest label index at each
/// backtracking decision, starting from the final position.
std::vector<int> viterbi(const Matrix& scores, const Transition& trans);

}  // namespace dalab
