#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gprm/kernel/registry.hpp"

namespace gprm::bench {

/// Ackermann function, iterative with an explicit stack.
std::int64_t ackermann(std::int64_t m, std::int64_t x);

// ---------------------------------------------------------------------------
// Merge sort: service "ms"
//
//   leaf(n, a)     sorts the slice of tree node n, returns a run handle
//   stem(l, r, a)  merges two adjacent runs, returns the merged run
//
// Node n at depth d = floor(log2 n) owns [i*N/2^d, (i+1)*N/2^d) with
// i = n - 2^d.

using SortArray = std::vector<std::int32_t>;

struct SortedRun {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Half-open slice of node `n` in an array of `size` elements.
SortedRun node_slice(std::int64_t n, std::size_t size);

void register_mergesort_kernel(kernel::KernelRegistry& registry);

// ---------------------------------------------------------------------------
// List traversal: service "lc"
//
//   walk(k, nth, list)   visits the list and processes element i when
//                        i mod nth == k; returns the number processed
//   claim(k, nth, list)  visits the list and processes every element it
//                        wins a compare-and-swap for
//
// Processing runs ackermann(m, x) and bumps the element's counter.

struct ChaseList {
  struct Node {
    std::int32_t index = 0;
    std::uint32_t next = 0;  // position of the next node; `npos` ends the list
  };
  static constexpr std::uint32_t npos = 0xFFFF'FFFFu;

  /// n nodes whose link order is a seeded random permutation of memory order.
  ChaseList(std::size_t n, std::uint64_t seed, int ack_m, int ack_x);

  void reset();

  std::vector<Node> nodes;
  std::uint32_t head = npos;
  int ack_m;
  int ack_x;
  std::vector<std::atomic<std::int32_t>> counters;
  std::vector<std::atomic<bool>> claimed;
  /// Indexed by element: walker k and tile that processed it, -1 if none.
  std::vector<std::atomic<std::int32_t>> owner;
  std::vector<std::atomic<std::int32_t>> tile;
  std::atomic<std::int64_t> work{0};
};

void register_listchase_kernel(kernel::KernelRegistry& registry);

/// Defaults plus ms and lc.
kernel::KernelRegistry bench_registry();

}  // namespace gprm::bench
