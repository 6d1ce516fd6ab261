#include "dalab/crf.hpp"

#include <stdexcept>

#include "dalab/logspace.hpp"

namespace dalab {

Transition::Transition(int num_labels)
    : num_labels_(num_labels), m_(Matrix::Zero(num_labels + 2, num_labels + 2)) {
  m_.col(bos()).setConstant(kNegInf);
  m_.row(eos()).setConstant(kNegInf);
}

void Transition::set(int from, int to, double value) {
  if (fixed(from, to)) throw std::out_of_range("transition entry is fixed at -inf");
  m_(from, to) = value;
}

double path_score(const Matrix& scores, const Transition& trans, std::span<const int> path) {
  const auto T = static_cast<std::size_t>(scores.rows());
  if (path.size() != T) throw std::invalid_argument("path length differs from score rows");
  if (T == 0) return 0.0;
  double s = trans.start(path[0]);
  for (std::size_t t = 0; t < T; ++t) {
    s += scores(static_cast<Eigen::Index>(t), path[t]);
    if (t > 0) s += trans.between(path[t - 1], path[t]);
  }
  return s + trans.end(path[T - 1]);
}

namespace {

Matrix forward_table(const Matrix& scores, const Transition& trans) {
  const auto T = scores.rows();
  const auto K = scores.cols();
  Matrix alpha(T, K);
  std::vector<double> buf(static_cast<std::size_t>(K));
  for (Eigen::Index j = 0; j < K; ++j) alpha(0, j) = trans.start(int(j)) + scores(0, j);
  for (Eigen::Index t = 1; t < T; ++t)
    for (Eigen::Index j = 0; j < K; ++j) {
      for (Eigen::Index i = 0; i < K; ++i)
        buf[std::size_t(i)] = alpha(t - 1, i) + trans.between(int(i), int(j));
      alpha(t, j) = scores(t, j) + log_sum_exp(buf);
    }
  return alpha;
}

double finish(const Matrix& alpha, const Transition& trans) {
  const auto T = alpha.rows();
  const auto K = alpha.cols();
  std::vector<double> buf(static_cast<std::size_t>(K));
  for (Eigen::Index j = 0; j < K; ++j) buf[std::size_t(j)] = alpha(T - 1, j) + trans.end(int(j));
  return log_sum_exp(buf);
}

}  // namespace

double log_partition(const Matrix& scores, const Transition& trans) {
  if (scores.rows() == 0) return 0.0;
  return finish(forward_table(scores, trans), trans);
}

Marginals forward_backward(const Matrix& scores, const Transition& trans) {
  const auto T = scores.rows();
  const auto K = scores.cols();
  Marginals out;
  if (T == 0) return out;

  const Matrix alpha = forward_table(scores, trans);
  out.log_z = finish(alpha, trans);

  Matrix beta(T, K);
  std::vector<double> buf(static_cast<std::size_t>(K));
  for (Eigen::Index i = 0; i < K; ++i) beta(T - 1, i) = trans.end(int(i));
  for (Eigen::Index t = T - 2; t >= 0; --t)
    for (Eigen::Index i = 0; i < K; ++i) {
      for (Eigen::Index j = 0; j < K; ++j)
        buf[std::size_t(j)] = trans.between(int(i), int(j)) + scores(t + 1, j) + beta(t + 1, j);
      beta(t, i) = log_sum_exp(buf);
    }

  out.unary = ((alpha + beta).array() - out.log_z).exp().matrix();
  out.pairwise.reserve(static_cast<std::size_t>(T - 1));
  for (Eigen::Index t = 0; t + 1 < T; ++t) {
    Matrix p(K, K);
    for (Eigen::Index i = 0; i < K; ++i)
      for (Eigen::Index j = 0; j < K; ++j)
        p(i, j) = std::exp(alpha(t, i) + trans.between(int(i), int(j)) + scores(t + 1, j) +
                           beta(t + 1, j) - out.log_z);
    out.pairwise.push_back(std::move(p));
  }
  return out;
}

std::vector<int> viterbi(const Matrix& scores, const Transition& trans) {
  const auto T = scores.rows();
  const auto K = scores.cols();
  if (T == 0) return {};
  Matrix delta(T, K);
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> back(T, K);
  for (Eigen::Index j = 0; j < K; ++j) delta(0, j) = trans.start(int(j)) + scores(0, j);
  for (Eigen::Index t = 1; t < T; ++t)
    for (Eigen::Index j = 0; j < K; ++j) {
      int best = 0;
      double best_score = delta(t - 1, 0) + trans.between(0, int(j));
      for (Eigen::Index i = 1; i < K; ++i) {
        const double s = delta(t - 1, i) + trans.between(int(i), int(j));
        if (s > best_score) {
          best_score = s;
          best = int(i);
        }
      }
      delta(t, j) = best_score + scores(t, j);
      back(t, j) = best;
    }

  int last = 0;
  double best_score = delta(T - 1, 0) + trans.end(0);
  for (Eigen::Index j = 1; j < K; ++j) {
    const double s = delta(T - 1, j) + trans.end(int(j));
    if (s > best_score) {
      best_score = s;
      last = int(j);
    }
  }
  std::vector<int> path(static_cast<std::size_t>(T));
  path[std::size_t(T - 1)] = last;
  for (Eigen::Index t = T - 1; t > 0; --t) path[std::size_t(t - 1)] = back(t, path[std::size_t(t)]);
  return path;
}

}  // namespace dalab
