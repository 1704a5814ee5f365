#ifndef JOINTDST_RANDOM_H_
#define JOINTDST_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace jointdst {

// The standard distributions are implementation-defined, so the generator
// output is turned into numbers here. std::mt19937_64 itself is fully
// specified, which makes every seeded stream identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  bool Bernoulli(double p) { return Uniform() < p; }

  // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::size_t Below(std::size_t n);

  // Inclusive range.
  int Between(int lo, int hi) {
    return lo + static_cast<int>(Below(static_cast<std::size_t>(hi - lo + 1)));
  }

  // Standard normal via Box-Muller on our own uniforms.
  double Normal();

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = Below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// 64-bit FNV-1a followed by a splitmix64 finalizer.
std::uint64_t HashBytes(std::string_view bytes, std::uint64_t seed = 0);
std::uint64_t MixHash(std::uint64_t a, std::uint64_t b);

}  // namespace jointdst

#endif  // JOINTDST_RANDOM_H_
