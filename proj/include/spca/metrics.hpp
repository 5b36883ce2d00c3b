#pragma once

// One-vs-rest confusion counts, plain accuracy and the Q metric
//   Q = (TP + TN) / (TP + TN + FP + FN)
// with the counts summed over all classes.

#include "spca/core.hpp"

#include <string>
#include <vector>

namespace spca {

struct ClassCounts {
  long tp = 0;
  long tn = 0;
  long fp = 0;
  long fn = 0;
  long total() const { return tp + tn + fp + fn; }
};

struct EvalReport {
  long n_test = 0;
  int n_classes = 0;
  std::vector<ClassCounts> confusion;  // one entry per class
  double plain_accuracy = 0.0;
  double q_accuracy = 0.0;

  ClassCounts summed() const {
    ClassCounts s;
    for (const auto& c : confusion) {
      s.tp += c.tp;
      s.tn += c.tn;
      s.fp += c.fp;
      s.fn += c.fn;
    }
    return s;
  }
};

inline EvalReport evaluate(const std::vector<int>& predicted, const std::vector<int>& truth, int n_classes) {
  if (predicted.size() != truth.size())
    throw ShapeMismatch("predicted has " + std::to_string(predicted.size()) + " labels, truth has " +
                        std::to_string(truth.size()));
  if (truth.empty()) throw ShapeMismatch("evaluate needs at least one test sample");
  if (n_classes < 1) throw InvalidArgument("n_classes must be >= 1");
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i] < 0 || truth[i] >= n_classes || predicted[i] < 0 || predicted[i] >= n_classes)
      throw ShapeMismatch("label at position " + std::to_string(i) + " is outside [0, " +
                          std::to_string(n_classes) + ")");

  EvalReport r;
  r.n_test = static_cast<long>(truth.size());
  r.n_classes = n_classes;
  r.confusion.assign(static_cast<std::size_t>(n_classes), ClassCounts{});
  long correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t == p) {
      ++correct;
      ++r.confusion[static_cast<std::size_t>(t)].tp;
    } else {
      ++r.confusion[static_cast<std::size_t>(t)].fn;
      ++r.confusion[static_cast<std::size_t>(p)].fp;
    }
  }
  // Every sample is a true negative for each class it neither is nor was predicted as.
  for (auto& c : r.confusion) c.tn = r.n_test - c.tp - c.fn - c.fp;

  const ClassCounts s = r.summed();
  r.plain_accuracy = static_cast<double>(correct) / static_cast<double>(r.n_test);
  r.q_accuracy = static_cast<double>(s.tp + s.tn) / static_cast<double>(s.total());
  return r;
}

}  // namespace spca
