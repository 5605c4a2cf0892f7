#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>

namespace alref {

/// SplitMix64 finalizer; bijective mixing of a 64-bit word.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a path of
/// counters, e.g. derive_seed(master, {repeat, fold, cycle, kTagTrain}).
/// No global RNG state is involved anywhere in the library.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

/// Seeded generator with portable draw algorithms. The engine is
/// mt19937_64 (output fully specified by the standard); bounded integers use
/// rejection sampling and reals use the top 53 bits, so sequences are the same
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Uniform integer in the closed range [lo, hi].
  int uniform_int(int lo, int hi);

  /// Uniform in [0, 1).
  double uniform01();

  /// Standard normal via Box-Muller (spare value cached).
  double normal();

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace alref
