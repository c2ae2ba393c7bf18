// gprm: compile, run, benchmark and interpret GPIR programs.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "gprm/bench/bench.hpp"
#include "gprm/bench/kernels.hpp"
#include "gprm/bytecode/image.hpp"
#include "gprm/gpc/gpc.hpp"
#include "gprm/kernel/demo.hpp"
#include "gprm/oracle/oracle.hpp"
#include "gprm/vm/machine.hpp"

using namespace gprm;

namespace {

enum Exit { kOk = 0, kUsage = 1, kCompile = 2, kRuntime = 3, kVerify = 4 };

kernel::KernelRegistry cli_registry() {
  kernel::KernelRegistry r = kernel::demo_registry();
  bench::register_mergesort_kernel(r);
  bench::register_listchase_kernel(r);
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// GPIR text of a .gpir or .gpc file.
std::string gpir_source(const std::string& path, std::optional<int> num_threads) {
  const std::string text = slurp(path);
  if (!ends_with(path, ".gpc")) return text;
  gpc::Options o;
  o.num_threads = num_threads;
  return gpc::compile(text, o);
}

std::vector<Byteword> host_args(const std::vector<std::int32_t>& args) {
  std::vector<Byteword> out;
  for (std::int32_t a : args) out.push_back(Byteword::integer(a));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel reduction machine for GPIR programs"};
  app.require_subcommand(1);

  // compile
  auto* compile = app.add_subcommand("compile", "Compile .gpir or .gpc source to a .gprm image");
  std::string c_in, c_out;
  unsigned c_tiles = 1;
  std::optional<int> c_num_threads;
  bool c_print = false;
  compile->add_option("input", c_in, "Source file (.gpir or .gpc)")->required();
  compile->add_option("-o,--output", c_out, "Image file (default: input with .gprm)");
  compile->add_option("-t,--tiles", c_tiles, "Tile count")->check(CLI::Range(1, 65534));
  compile->add_option("--num-threads", c_num_threads, "Value of NUM_THREADS in .gpc sources");
  compile->add_flag("--print", c_print, "Print the GPIR and the flat program");

  // run
  auto* run = app.add_subcommand("run", "Run a .gprm image");
  std::string r_image, r_trace, r_overload = "grow", r_executor = "threads";
  unsigned r_threads = 1;
  std::vector<std::int32_t> r_args;
  std::size_t r_capacity = 1024, r_array = 0;
  std::optional<std::uint64_t> r_seed;
  run->add_option("image", r_image, "Image file")->required();
  run->add_option("--threads", r_threads, "Worker threads")->check(CLI::Range(1, 128));
  run->add_option("--trace", r_trace, "Write the packet trace to this file");
  run->add_option("--arg", r_args, "Host argument, read by (ctrl.arg 'i); repeatable");
  run->add_option("--capacity", r_capacity, "Initial subtask list size per tile")->check(CLI::PositiveNumber);
  run->add_option("--overload", r_overload, "Full subtask list: grow, block or fail")
      ->check(CLI::IsMember({"grow", "block", "fail"}));
  run->add_option("--executor", r_executor, "threads or stepped")->check(CLI::IsMember({"threads", "stepped"}));
  run->add_option("--seed", r_seed, "Schedule seed (jitter for threads, order for stepped)");
  run->add_option("--array", r_array, "Register a random array of this size as (ctrl.reg '0)");

  // bench
  auto* benchc = app.add_subcommand("bench", "Sweep thread counts and write CSV");
  bench::BenchConfig b;
  std::string b_csv;
  benchc->add_option("benchmark", b.benchmark, "mergesort or listchase")
      ->required()
      ->check(CLI::IsMember({"mergesort", "listchase"}));
  benchc->add_option("--size", b.n, "Problem size");
  benchc->add_option("--threads", b.threads, "Thread counts")->delimiter(',');
  benchc->add_option("--reps", b.reps, "Repetitions per thread count (>= 3)")->check(CLI::Range(3u, 1000000u));
  benchc->add_option("--csv", b_csv, "CSV output file (default: stdout)");
  benchc->add_option("--seed", b.seed, "Input seed");
  benchc->add_option("--strategy", b.strategy, "listchase: stride or claim")->check(CLI::IsMember({"stride", "claim"}));
  benchc->add_option("--ack-m", b.ack_m, "listchase: Ackermann m per element")->check(CLI::Range(0, 3));
  benchc->add_option("--ack-x", b.ack_x, "listchase: Ackermann x per element")->check(CLI::Range(0, 12));

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Evaluate with the sequential reference interpreter");
  std::string o_in;
  std::vector<std::int32_t> o_args;
  unsigned o_tiles = 1;
  std::size_t o_array = 0;
  std::optional<int> o_num_threads;
  oracle->add_option("input", o_in, "Source file (.gpir or .gpc)")->required();
  oracle->add_option("--arg", o_args, "Host argument; repeatable");
  oracle->add_option("-t,--tiles", o_tiles, "Tile count seen by kernels")->check(CLI::Range(1, 65534));
  oracle->add_option("--array", o_array, "Register a random array of this size as (ctrl.reg '0)");
  oracle->add_option("--num-threads", o_num_threads, "Value of NUM_THREADS in .gpc sources");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const kernel::KernelRegistry reg = cli_registry();

    if (*compile) {
      const std::string source = gpir_source(c_in, c_num_threads);
      const bc::BytecodeImage img = bc::compile(source, static_cast<std::uint16_t>(c_tiles), reg);
      if (c_out.empty()) {
        const auto dot = c_in.find_last_of('.');
        c_out = (dot == std::string::npos ? c_in : c_in.substr(0, dot)) + ".gprm";
      }
      bc::save_image(img, c_out);
      if (c_print) std::cout << source << (ends_with(source, "\n") ? "" : "\n") << bc::print_flat(bc::decode(img));
      std::cout << c_out << ": " << img.code.size() << " code entries, " << img.tile_count << " tile(s), root r"
                << img.root.ref().code_addr << "\n";
      return kOk;
    }

    if (*run) {
      vm::MachineConfig cfg;
      cfg.threads = r_threads;
      cfg.trace = !r_trace.empty();
      cfg.subtask_capacity = r_capacity;
      cfg.overload = r_overload == "grow"    ? vm::OverloadPolicy::Grow
                     : r_overload == "block" ? vm::OverloadPolicy::Block
                                             : vm::OverloadPolicy::Fail;
      cfg.executor = r_executor == "stepped" ? vm::Executor::Stepped : vm::Executor::Threads;
      vm::Machine m(bc::load_image(r_image), reg, cfg);
      if (r_array) m.register_data(std::make_shared<bench::SortArray>(bench::random_array(r_array, r_seed.value_or(1))));
      std::optional<Byteword> result;
      std::string failure;
      try {
        result = m.run(host_args(r_args), vm::RunOptions{r_seed});
      } catch (const RuntimeError& e) {
        failure = e.what();
      }
      if (cfg.trace) {
        std::ofstream out(r_trace);
        if (!out) throw RuntimeError("cannot write " + r_trace);
        m.write_trace(out);
      }
      if (!result) {
        std::cerr << "runtime error: " << failure << "\n";
        return kRuntime;
      }
      std::cout << m.read(*result).str() << "\n";
      return kOk;
    }

    if (*benchc) {
      const auto rows = bench::run_benchmark(b);
      if (b_csv.empty()) {
        bench::write_csv(std::cout, rows);
      } else {
        std::ofstream out(b_csv);
        if (!out) throw RuntimeError("cannot write " + b_csv);
        bench::write_csv(out, rows);
        bench::write_csv(std::cout, rows);
      }
      return kOk;
    }

    if (*oracle) {
      oracle::Interpreter in(reg, static_cast<std::uint16_t>(o_tiles));
      if (o_array) in.register_data(std::make_shared<bench::SortArray>(bench::random_array(o_array, 1)));
      const Byteword w = in.evaluate(gpir_source(o_in, o_num_threads), host_args(o_args));
      std::cout << in.read(w).str() << "\n";
      return kOk;
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kCompile;
  } catch (const CompileError& e) {
    std::cerr << "compile error: " << e.what() << "\n";
    return kCompile;
  } catch (const ImageError& e) {
    std::cerr << "image error: " << e.what() << "\n";
    return kCompile;
  } catch (const bench::VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return kVerify;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
