#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gprm/error.hpp"

namespace gprm::bench {

/// A benchmark produced a wrong answer.
class VerificationError : public Error {
 public:
  using Error::Error;
};

struct BenchConfig {
  std::string benchmark;  // "mergesort" or "listchase"
  std::size_t n = std::size_t{1} << 22;
  std::vector<unsigned> threads{1, 2, 4};
  unsigned reps = 3;
  std::uint64_t seed = 1;
  /// listchase: "stride" (thread k owns k, k+NTH, ...) or "claim".
  std::string strategy = "stride";
  int ack_m = 3;
  int ack_x = 3;
};

struct BenchRow {
  std::string benchmark;
  std::size_t n = 0;
  unsigned threads = 0;
  unsigned reps = 0;
  /// Median over reps of the wall time of Machine::run.
  double seconds = 0;
  /// Relative to the smallest thread count in the sweep.
  double speedup = 0;
  double model_seconds = 0;
};

/// Source of the merge-sort program; host argument 0 is the leaf count.
extern const char* const kMergeSortGpir;

/// List traversal over `nth` walkers, each placed with ctrl.run on tile k.
std::string listchase_gpir(unsigned nth, const std::string& method = "walk");

/// Throws VerificationError when an output is wrong, RuntimeError when the
/// configuration is invalid.
std::vector<BenchRow> run_mergesort(const BenchConfig& cfg);
std::vector<BenchRow> run_listchase(const BenchConfig& cfg);
std::vector<BenchRow> run_benchmark(const BenchConfig& cfg);

/// "benchmark,n,threads,rep,seconds,speedup,model_seconds" plus one line per row.
void write_csv(std::ostream& out, const std::vector<BenchRow>& rows);

/// Sorts `input` on a fresh machine and checks the result against std::sort.
/// Throws VerificationError with the first differing index.
std::vector<std::int32_t> gprm_sort(const std::vector<std::int32_t>& input, unsigned threads);

/// Uniform 32-bit integers from `seed`.
std::vector<std::int32_t> random_array(std::size_t n, std::uint64_t seed);

}  // namespace gprm::bench
