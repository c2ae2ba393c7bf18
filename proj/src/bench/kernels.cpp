#include "gprm/bench/kernels.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <random>

#include "gprm/error.hpp"

namespace gprm::bench {

std::int64_t ackermann(std::int64_t m, std::int64_t x) {
  if (m < 0 || x < 0) throw RuntimeError("ackermann: negative argument");
  std::vector<std::int64_t> stack{m};
  while (!stack.empty()) {
    const std::int64_t top = stack.back();
    stack.pop_back();
    if (top == 0) {
      ++x;
    } else if (x == 0) {
      x = 1;
      stack.push_back(top - 1);
    } else {
      stack.push_back(top - 1);
      stack.push_back(top);
      --x;
    }
  }
  return x;
}

SortedRun node_slice(std::int64_t n, std::size_t size) {
  if (n < 1) throw RuntimeError("ms: node index must be positive");
  const int depth = std::bit_width(static_cast<std::uint64_t>(n)) - 1;
  if (depth >= 63) throw RuntimeError("ms: node index too large");
  const auto i = static_cast<unsigned __int128>(n - (std::int64_t{1} << depth));
  const auto parts = static_cast<unsigned __int128>(1) << depth;
  return SortedRun{static_cast<std::size_t>(i * size / parts), static_cast<std::size_t>((i + 1) * size / parts)};
}

namespace {

class MergeSortKernel final : public kernel::Kernel {
 public:
  kernel::KernelResult invoke(std::uint16_t method, std::span<const Byteword> args, kernel::KernelContext& ctx) override {
    if (method == 0) {
      const auto a = ctx.heap().data<SortArray>(args[1]);
      const SortedRun run = node_slice(kernel::expect_int(args[0], "ms.leaf"), a->size());
      std::sort(a->begin() + static_cast<std::ptrdiff_t>(run.begin), a->begin() + static_cast<std::ptrdiff_t>(run.end));
      return ctx.heap().make_data(std::make_shared<SortedRun>(run));
    }
    const auto l = ctx.heap().data<SortedRun>(args[0]);
    const auto r = ctx.heap().data<SortedRun>(args[1]);
    const auto a = ctx.heap().data<SortArray>(args[2]);
    if (l->end != r->begin || r->end > a->size()) throw RuntimeError("ms.stem: runs are not adjacent");
    const auto first = a->begin() + static_cast<std::ptrdiff_t>(l->begin);
    const auto mid = a->begin() + static_cast<std::ptrdiff_t>(l->end);
    const auto last = a->begin() + static_cast<std::ptrdiff_t>(r->end);
    scratch_.resize(r->end - l->begin);
    std::merge(first, mid, mid, last, scratch_.begin());
    std::copy(scratch_.begin(), scratch_.end(), first);
    return ctx.heap().make_data(std::make_shared<SortedRun>(SortedRun{l->begin, r->end}));
  }

 private:
  std::vector<std::int32_t> scratch_;
};

class ListChaseKernel final : public kernel::Kernel {
 public:
  kernel::KernelResult invoke(std::uint16_t method, std::span<const Byteword> args, kernel::KernelContext& ctx) override {
    const std::int32_t k = kernel::expect_int(args[0], "lc");
    const std::int32_t nth = kernel::expect_int(args[1], "lc");
    if (nth < 1 || k < 0 || k >= nth) throw RuntimeError("lc: need 0 <= k < nth");
    ChaseList& list = *ctx.heap().data<ChaseList>(args[2]);
    std::int32_t processed = 0;
    std::int64_t work = 0;
    for (std::uint32_t pos = list.head; pos != ChaseList::npos; pos = list.nodes[pos].next) {
      const std::int32_t i = list.nodes[pos].index;
      if (method == 0) {
        if (i % nth != k) continue;
      } else {
        bool expected = false;
        if (!list.claimed[i].compare_exchange_strong(expected, true)) continue;
      }
      work += ackermann(list.ack_m, list.ack_x);
      list.counters[i].fetch_add(1, std::memory_order_relaxed);
      list.owner[i].store(k, std::memory_order_relaxed);
      list.tile[i].store(ctx.tile(), std::memory_order_relaxed);
      ++processed;
    }
    list.work.fetch_add(work, std::memory_order_relaxed);
    return Byteword::integer(processed);
  }
};

}  // namespace

ChaseList::ChaseList(std::size_t n, std::uint64_t seed, int m, int x)
    : ack_m(m), ack_x(x), counters(n), claimed(n), owner(n), tile(n) {
  if (n >= npos) throw RuntimeError("list too long");
  // Element i lives at position perm[i]; elements are linked in index order,
  // so the walk jumps around memory.
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[perm[i]].index = static_cast<std::int32_t>(i);
    nodes[perm[i]].next = i + 1 < n ? perm[i + 1] : npos;
  }
  head = n ? perm[0] : npos;
  reset();
}

void ChaseList::reset() {
  for (std::size_t i = 0; i < counters.size(); ++i) {
    counters[i] = 0;
    claimed[i] = false;
    owner[i] = -1;
    tile[i] = -1;
  }
  work = 0;
}

void register_mergesort_kernel(kernel::KernelRegistry& registry) {
  kernel::KernelService s;
  s.name = "ms";
  s.methods = {{"leaf", 2}, {"stem", 3}};
  s.factory = [] { return std::make_unique<MergeSortKernel>(); };
  registry.register_kernel(std::move(s));
}

void register_listchase_kernel(kernel::KernelRegistry& registry) {
  kernel::KernelService s;
  s.name = "lc";
  s.methods = {{"walk", 3}, {"claim", 3}};
  s.stateless = true;
  s.factory = [] { return std::make_unique<ListChaseKernel>(); };
  registry.register_kernel(std::move(s));
}

kernel::KernelRegistry bench_registry() {
  kernel::KernelRegistry r = kernel::KernelRegistry::with_defaults();
  register_mergesort_kernel(r);
  register_listchase_kernel(r);
  return r;
}

}  // namespace gprm::bench
