#pragma once

// Random well-typed GPIR programs over builtins, beta, if and lists.

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace gprm::testing {

class ProgramGenerator {
 public:
  enum class Type { Int, List };

  explicit ProgramGenerator(std::uint64_t seed, int max_depth = 6) : rng_(seed), max_depth_(max_depth) {}

  std::string program() {
    env_.clear();
    std::string p = pick(3) == 0 ? list(max_depth_) : integer(max_depth_);
    // A program root must be an S-expression.
    return p.front() == '(' ? p : "(+ " + p + ")";
  }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  std::string lit() { return "'" + std::to_string(std::uniform_int_distribution<int>(-9, 9)(rng_)); }

  // Innermost visible binding of each name with type `t`.
  std::vector<std::string> visible(Type t) const {
    std::vector<std::string> out;
    for (auto it = env_.rbegin(); it != env_.rend(); ++it) {
      bool shadowed = false;
      for (auto jt = env_.rbegin(); jt != it; ++jt) shadowed |= jt->first == it->first;
      if (!shadowed && it->second == t) out.push_back(it->first);
    }
    return out;
  }

  std::string leaf(Type t) {
    auto vars = visible(t);
    if (!vars.empty() && pick(2) == 0) return vars[pick(static_cast<int>(vars.size()))];
    if (t == Type::Int) return lit();
    return pick(2) == 0 ? "(emptylist)" : "(cons " + lit() + " (emptylist))";
  }

  std::string expr(Type t, int depth) { return t == Type::Int ? integer(depth) : list(depth); }

  std::string integer(int depth) {
    if (depth <= 0) return leaf(Type::Int);
    static const char* const ops[] = {"+", "-", "*", "<", "<=", ">", ">=", "==", "!="};
    switch (pick(8)) {
      case 0:
        return leaf(Type::Int);
      case 1:
      case 2:
        return "(" + std::string(ops[pick(9)]) + " " + integer(depth - 1) + " " + integer(depth - 1) + ")";
      case 3:
        return "(+ " + integer(depth - 1) + " " + integer(depth - 1) + " " + integer(depth - 1) + ")";
      case 4:
        return conditional(Type::Int, depth);
      case 5:
        return beta(Type::Int, depth);
      case 6:
        return "(head (cons " + integer(depth - 1) + " " + list(depth - 1) + "))";
      default:
        return "(null? " + list(depth - 1) + ")";
    }
  }

  std::string list(int depth) {
    if (depth <= 0) return leaf(Type::List);
    switch (pick(6)) {
      case 0:
        return leaf(Type::List);
      case 1:
      case 2:
        return "(cons " + integer(depth - 1) + " " + list(depth - 1) + ")";
      case 3:
        return "(tail (cons " + integer(depth - 1) + " " + list(depth - 1) + "))";
      case 4:
        return conditional(Type::List, depth);
      default:
        return beta(Type::List, depth);
    }
  }

  std::string conditional(Type t, int depth) {
    std::string c = integer(depth - 1);
    return "(if " + c + " '" + expr(t, depth - 1) + " '" + expr(t, depth - 1) + ")";
  }

  std::string beta(Type t, int depth) {
    static const char* const names[] = {"a", "b", "c", "d"};
    const int arity = 1 + pick(3);
    std::vector<std::pair<std::string, Type>> formals;
    std::string args;
    for (int i = 0; i < arity; ++i) {
      const Type ft = pick(4) == 0 ? Type::List : Type::Int;
      // Operands are evaluated outside the lambda's scope.
      args += " " + expr(ft, depth - 1);
      formals.emplace_back(names[pick(4)], ft);
    }
    // Repeated formals would be ambiguous; keep the names distinct.
    for (int i = 0; i < arity; ++i) {
      for (int j = 0; j < i; ++j) {
        if (formals[j].first == formals[i].first) formals[i].first += std::to_string(i);
      }
    }
    std::string head = "(beta (lambda";
    for (auto& f : formals) head += " '" + f.first;
    const std::size_t mark = env_.size();
    for (auto& f : formals) env_.push_back(f);
    std::string body = expr(t, depth - 1);
    env_.resize(mark);
    return head + " '" + body + ")" + args + ")";
  }

  std::mt19937_64 rng_;
  int max_depth_;
  std::vector<std::pair<std::string, Type>> env_;
};

}  // namespace gprm::testing
