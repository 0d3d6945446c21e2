// Shared basics: names, deterministic fresh-name generation, the common
// error type, and the RNG used by the generators.
#ifndef HYPERPILL_BASE_HPP
#define HYPERPILL_BASE_HPP

#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyperpill {

using Name = std::string;
using NameSet = std::set<Name>;

// Raised by the checker, the parser and the transformations. Carries a plain
// human-readable message; the CLI maps it to a nonzero exit code.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

// Fresh names are derived from a base subject plus a per-generator counter,
// using '#' which the surface syntax reserves (identifiers may contain it only
// when produced by the tool, so fresh names never collide with user input).
// Stripping an existing '#'-suffix first keeps chains of fresh names readable:
// fresh(fresh(x)) is x#2, not x#1#2.
class FreshNames {
 public:
  Name fresh(const Name& base) {
    Name stem = base.substr(0, base.find('#'));
    if (stem.empty()) stem = "v";
    return stem + "#" + std::to_string(++counter_);
  }

  // A fresh name guaranteed not to occur in `avoid` (the counter keeps
  // advancing, so the result is also fresh w.r.t. everything generated before).
  Name fresh(const Name& base, const NameSet& avoid) {
    Name n = fresh(base);
    while (avoid.count(n)) n = fresh(base);
    return n;
  }

  std::uint64_t counter() const { return counter_; }
  void reset(std::uint64_t value = 0) { counter_ = value; }

 private:
  std::uint64_t counter_ = 0;
};

// Deterministic RNG for fuzzing/generation. Seed comes from --seed or the
// HYPERPILL_SEED environment variable; both default to a fixed constant so
// runs are reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ull) : engine_(seed) {}

  // Uniform integer in [lo, hi] inclusive.
  int range(int lo, int hi) {
    std::uniform_int_distribution<int> d(lo, hi);
    return d(engine_);
  }

  bool coin(double p = 0.5) {
    std::bernoulli_distribution d(p);
    return d(engine_);
  }

  template <typename T>
  const T& pick(const std::vector<T>& xs) {
    return xs.at(static_cast<std::size_t>(range(0, static_cast<int>(xs.size()) - 1)));
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hyperpill

#endif  // HYPERPILL_BASE_HPP
