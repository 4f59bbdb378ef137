#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace mstat {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// seed for an independent sub-stream; two mixing rounds decorrelate nearby ids
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master ^ (stream + 0x9e3779b97f4a7c15ULL);
  splitmix64(s);
  return splitmix64(s);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::uint64_t stream = 0) {
  return Rng(derive_seed(master, stream));
}

// k distinct indices drawn uniformly from [0, n)
std::vector<int> sample_without_replacement(int n, int k, Rng& rng);

// Neumaier compensated accumulator
struct Accum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }

  double total() const { return sum + comp; }
};

}  // namespace mstat
