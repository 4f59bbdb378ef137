#include "mstat/rng.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mstat {

std::vector<int> sample_without_replacement(int n, int k, Rng& rng) {
  if (k < 0 || n < 0 || k > n)
    throw std::invalid_argument("sample_without_replacement: need 0 <= k <= n");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  if (k == 0) return out;
  if (k <= 16 && k * 8 <= n) {
    // rejection is cheap when the tuple is small relative to the pool
    std::uniform_int_distribution<int> pick(0, n - 1);
    while (static_cast<int>(out.size()) < k) {
      int c = pick(rng);
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
    return out;
  }
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
    out.push_back(idx[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace mstat
