#pragma once

#include <cstddef>

namespace gprm::bench {

/// Cost model for the recursive merge sort: sorting s elements costs
/// k*s*log2(s), merging them costs k*s, and sibling subtrees overlap. With p
/// leaves the predicted time is the critical path through the tree.
class MergeSortModel {
 public:
  explicit MergeSortModel(double k) : k_(k) {}

  /// k from a measured single-threaded time: T(1) = k*n*log2(n).
  static MergeSortModel fit(double seconds_one_thread, std::size_t n);
  /// k from a measured time at `leaves` leaves.
  static MergeSortModel fit(double seconds, std::size_t n, unsigned leaves);

  double k() const { return k_; }
  double predict(std::size_t n, unsigned leaves) const { return k_ * units(n, leaves); }
  double speedup(std::size_t n, unsigned leaves) const { return units(n, 1) / units(n, leaves); }

  /// predict() with k = 1.
  static double units(std::size_t n, unsigned leaves);

 private:
  double k_;
};

}  // namespace gprm::bench
