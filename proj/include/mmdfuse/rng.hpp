#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace mmdfuse {

// All randomness in the library flows through this header so that results are
// reproducible bit-for-bit across platforms. The raw stream is std::mt19937_64
// (its output sequence is pinned by the C++ standard); the distribution code
// below is our own because the std:: distribution objects are not
// implementation-stable. Substreams are derived with the SplitMix64 finalizer,
// which lets every trial/repetition own an independent, addressable seed.

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kSeedGamma = 0x9e3779b97f4a7c15ULL;

// Child seed from a parent seed and one tag. Chain calls to address deeper
// substreams: derive_seed(derive_seed(master, size), repetition).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
  return splitmix64(parent + kSeedGamma * (tag + 1));
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a,
                                    std::uint64_t b) {
  return derive_seed(derive_seed(parent, a), b);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a,
                                    std::uint64_t b, std::uint64_t c) {
  return derive_seed(derive_seed(parent, a, b), c);
}

// Stream tags used when deriving substreams; distinct tags give unrelated
// streams even for the same parent seed.
enum StreamTag : std::uint64_t {
  kStreamGenX = 0x11,
  kStreamGenY = 0x12,
  kStreamSubsampleX = 0x21,
  kStreamSubsampleY = 0x22,
  kStreamMixture = 0x31,
  kStreamPermutation = 0x41,
  kStreamTrial = 0x51,
  kStreamSource = 0x61,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_positive() { return 1.0 - uniform(); }

  // Uniform integer on [0, n); unbiased via discarding the first 2^64 mod n
  // raw values.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t t = (0 - n) % n;
    std::uint64_t v = next_u64();
    while (v < t) v = next_u64();
    return v % n;
  }

  // Standard normal via Box-Muller (two uniforms per draw, no cached spare).
  double normal() {
    const double u1 = uniform_positive();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  // First n entries of a Fisher-Yates pass: a uniform sample of n distinct
  // indices from [0, total).
  std::vector<std::size_t> sample_without_replacement(std::size_t total,
                                                      std::size_t n) {
    std::vector<std::size_t> idx(total);
    for (std::size_t i = 0; i < total; ++i) idx[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform_below(total - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    return idx;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mmdfuse
