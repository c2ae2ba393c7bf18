#include "gprm/bench/bench.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <ostream>
#include <random>

#include "gprm/bench/kernels.hpp"
#include "gprm/bench/model.hpp"
#include "gprm/bytecode/image.hpp"
#include "gprm/vm/machine.hpp"

namespace gprm::bench {

const char* const kMergeSortGpir = R"((begin
  (beta (lambda 'f 'n 'nmax 'a '(beta f f n nmax a))
        (lambda 'f 'n 'nmax 'a
          '(if (>= n nmax)
               '(ctrl.run '(ms.leaf n a) n)
               '(ctrl.run '(ms.stem (beta f f (* '2 n) nmax a)
                                    (beta f f (+ (* '2 n) '1) nmax a)
                                    a)
                          n)))
        '1 (ctrl.arg '0) (ctrl.reg '0))
  (ctrl.reg '0)))";

std::string listchase_gpir(unsigned nth, const std::string& method) {
  std::string s = "(+";
  for (unsigned k = 0; k < nth; ++k) {
    const std::string ks = std::to_string(k);
    s += "\n  (ctrl.run '(lc." + method + " '" + ks + " '" + std::to_string(nth) + " (ctrl.reg '0)) '" + ks + ")";
  }
  return s + ")";
}

std::vector<std::int32_t> random_array(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int32_t> dist(INT32_MIN, INT32_MAX);
  std::vector<std::int32_t> a(n);
  for (auto& v : a) v = dist(rng);
  return a;
}

namespace {

using Clock = std::chrono::steady_clock;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
}

std::vector<unsigned> sorted_threads(const BenchConfig& cfg) {
  if (cfg.threads.empty()) throw RuntimeError("no thread counts given");
  if (cfg.reps < 3) throw RuntimeError("repetitions must be at least 3");
  std::vector<unsigned> t = cfg.threads;
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  if (t.front() == 0) throw RuntimeError("thread count must be at least 1");
  return t;
}

struct Checksum {
  std::uint64_t sum = 0;
  std::uint64_t squares = 0;

  explicit Checksum(const std::vector<std::int32_t>& a) {
    for (std::int32_t v : a) {
      const auto u = static_cast<std::uint64_t>(static_cast<std::int64_t>(v));
      sum += u;
      squares += u * u;
    }
  }
  bool operator==(const Checksum&) const = default;
};

void verify_sorted(const std::vector<std::int32_t>& out, const Checksum& expected) {
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] < out[i - 1]) throw VerificationError("merge sort output out of order at index " + std::to_string(i));
  }
  if (!(Checksum(out) == expected)) throw VerificationError("merge sort output is not a permutation of the input");
}

void finish_rows(std::vector<BenchRow>& rows) {
  for (BenchRow& r : rows) r.speedup = rows.front().seconds / r.seconds;
}

std::vector<std::int32_t> sort_on(vm::Machine& m, std::shared_ptr<SortArray> a, unsigned leaves, double* seconds) {
  const auto t0 = Clock::now();
  const Byteword w = m.run({Byteword::integer(static_cast<std::int32_t>(leaves))});
  const auto t1 = Clock::now();
  if (seconds) *seconds = std::chrono::duration<double>(t1 - t0).count();
  if (!w.is(BuiltinTag::Data) || m.heap().data<SortArray>(w) != a) {
    throw VerificationError("merge sort did not return the array handle, got " + describe(w));
  }
  return *a;
}

}  // namespace

std::vector<std::int32_t> gprm_sort(const std::vector<std::int32_t>& input, unsigned threads) {
  if (threads == 0 || input.size() < threads) throw RuntimeError("merge sort needs at least one element per leaf");
  const kernel::KernelRegistry reg = bench_registry();
  vm::MachineConfig c;
  c.threads = threads;
  vm::Machine m(bc::compile(kMergeSortGpir, static_cast<std::uint16_t>(threads), reg), reg, c);
  auto a = std::make_shared<SortArray>(input);
  m.register_data(a);
  std::vector<std::int32_t> out = sort_on(m, a, threads, nullptr);
  std::vector<std::int32_t> expected = input;
  std::sort(expected.begin(), expected.end());
  const auto diff = std::mismatch(out.begin(), out.end(), expected.begin());
  if (diff.first != out.end()) {
    throw VerificationError("merge sort output differs from std::sort at index " +
                            std::to_string(diff.first - out.begin()));
  }
  return out;
}

std::vector<BenchRow> run_mergesort(const BenchConfig& cfg) {
  const std::vector<unsigned> threads = sorted_threads(cfg);
  if (cfg.n < threads.back()) throw RuntimeError("merge sort needs n >= thread count");
  if (cfg.n > static_cast<std::size_t>(INT32_MAX)) throw RuntimeError("n too large");
  const kernel::KernelRegistry reg = bench_registry();
  const std::vector<std::int32_t> input = random_array(cfg.n, cfg.seed);
  const Checksum expected(input);

  std::vector<BenchRow> rows;
  for (unsigned p : threads) {
    vm::MachineConfig c;
    c.threads = p;
    vm::Machine m(bc::compile(kMergeSortGpir, static_cast<std::uint16_t>(p), reg), reg, c);
    auto a = std::make_shared<SortArray>();
    m.register_data(a);
    std::vector<double> times;
    for (unsigned rep = 0; rep < cfg.reps; ++rep) {
      *a = input;
      double t = 0;
      verify_sorted(sort_on(m, a, p, &t), expected);
      times.push_back(t);
    }
    rows.push_back(BenchRow{"mergesort", cfg.n, p, cfg.reps, median(times), 0, 0});
  }
  finish_rows(rows);
  const MergeSortModel model = MergeSortModel::fit(rows.front().seconds, cfg.n, rows.front().threads);
  for (BenchRow& r : rows) r.model_seconds = model.predict(cfg.n, r.threads);
  return rows;
}

std::vector<BenchRow> run_listchase(const BenchConfig& cfg) {
  const std::vector<unsigned> threads = sorted_threads(cfg);
  if (cfg.strategy != "stride" && cfg.strategy != "claim") throw RuntimeError("unknown strategy '" + cfg.strategy + "'");
  if (cfg.n > static_cast<std::size_t>(INT32_MAX)) throw RuntimeError("n too large");
  const kernel::KernelRegistry reg = bench_registry();
  auto list = std::make_shared<ChaseList>(cfg.n, cfg.seed, cfg.ack_m, cfg.ack_x);
  const std::string method = cfg.strategy == "stride" ? "walk" : "claim";

  std::vector<BenchRow> rows;
  for (unsigned p : threads) {
    vm::MachineConfig c;
    c.threads = p;
    vm::Machine m(bc::compile(listchase_gpir(p, method), static_cast<std::uint16_t>(p), reg), reg, c);
    m.register_data(list);
    std::vector<double> times;
    for (unsigned rep = 0; rep < cfg.reps; ++rep) {
      list->reset();
      const auto t0 = Clock::now();
      const Byteword w = m.run();
      times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      if (!w.is_int() || static_cast<std::size_t>(w.int_value()) != cfg.n) {
        throw VerificationError("list traversal processed " + describe(w) + " elements, expected " + std::to_string(cfg.n));
      }
      for (std::size_t i = 0; i < cfg.n; ++i) {
        const auto count = list->counters[i].load();
        if (count != 1) {
          throw VerificationError("element " + std::to_string(i) + " processed " + std::to_string(count) + " times");
        }
        if (method == "walk" && (list->owner[i].load() != static_cast<std::int32_t>(i % p) ||
                                 list->tile[i].load() != static_cast<std::int32_t>(i % p))) {
          throw VerificationError("element " + std::to_string(i) + " processed by walker " +
                                  std::to_string(list->owner[i].load()) + " on tile " +
                                  std::to_string(list->tile[i].load()) + ", expected " + std::to_string(i % p));
        }
      }
    }
    rows.push_back(BenchRow{"listchase", cfg.n, p, cfg.reps, median(times), 0, 0});
  }
  finish_rows(rows);
  // Ideal linear scaling from the smallest thread count.
  for (BenchRow& r : rows) r.model_seconds = rows.front().seconds * rows.front().threads / r.threads;
  return rows;
}

std::vector<BenchRow> run_benchmark(const BenchConfig& cfg) {
  if (cfg.benchmark == "mergesort") return run_mergesort(cfg);
  if (cfg.benchmark == "listchase") return run_listchase(cfg);
  throw RuntimeError("unknown benchmark '" + cfg.benchmark + "'");
}

void write_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "benchmark,n,threads,rep,seconds,speedup,model_seconds\n";
  for (const BenchRow& r : rows) {
    out << r.benchmark << ',' << r.n << ',' << r.threads << ',' << r.reps << ',' << r.seconds << ',' << r.speedup << ','
        << r.model_seconds << '\n';
  }
}

}  // namespace gprm::bench
