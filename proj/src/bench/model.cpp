#include "gprm/bench/model.hpp"

#include <algorithm>
#include <cmath>

#include "gprm/error.hpp"

namespace gprm::bench {

namespace {

double sort_cost(double s) { return s > 1 ? s * std::log2(s) : 0.0; }

double node_cost(double s, unsigned long long node, unsigned leaves) {
  if (node >= leaves) return sort_cost(s);
  return std::max(node_cost(s / 2, 2 * node, leaves), node_cost(s / 2, 2 * node + 1, leaves)) + s;
}

}  // namespace

double MergeSortModel::units(std::size_t n, unsigned leaves) {
  if (leaves == 0) throw RuntimeError("model: at least one leaf");
  return node_cost(static_cast<double>(n), 1, leaves);
}

MergeSortModel MergeSortModel::fit(double seconds_one_thread, std::size_t n) { return fit(seconds_one_thread, n, 1); }

MergeSortModel MergeSortModel::fit(double seconds, std::size_t n, unsigned leaves) {
  const double u = units(n, leaves);
  if (u <= 0) throw RuntimeError("model: problem too small to fit");
  return MergeSortModel(seconds / u);
}

}  // namespace gprm::bench
