#include "mstat/generators.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace mstat {

namespace {

RowVec standard_normal(Rng& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RowVec x(dim);
  for (int j = 0; j < dim; ++j) x[j] = normal(rng);
  return x;
}

}  // namespace

SampleGen gaussian_gen(int dim, double mean, double stdev) {
  if (dim < 1) throw std::invalid_argument("gaussian_gen: dimension must be positive");
  if (!(stdev > 0.0)) throw std::invalid_argument("gaussian_gen: stdev must be positive");
  return [dim, mean, stdev](Rng& rng, long) {
    RowVec x = standard_normal(rng, dim);
    return RowVec((x.array() * stdev + mean).matrix());
  };
}

SampleGen gaussian_gen(const Vector& mean, const Vector& stdev) {
  if (mean.size() != stdev.size() || mean.size() < 1) {
    throw std::invalid_argument("gaussian_gen: mean/stdev size mismatch");
  }
  if (!(stdev.minCoeff() > 0.0)) throw std::invalid_argument("gaussian_gen: stdev must be positive");
  const int dim = static_cast<int>(mean.size());
  return [dim, mean, stdev](Rng& rng, long) {
    RowVec x = standard_normal(rng, dim);
    return RowVec((x.array() * stdev.transpose().array() + mean.transpose().array()).matrix());
  };
}

SampleGen laplace_gen(int dim, double loc, double scale) {
  if (dim < 1) throw std::invalid_argument("laplace_gen: dimension must be positive");
  if (!(scale > 0.0)) throw std::invalid_argument("laplace_gen: scale must be positive");
  return [dim, loc, scale](Rng& rng, long) {
    std::exponential_distribution<double> expo(1.0);
    RowVec x(dim);
    for (int j = 0; j < dim; ++j) x[j] = loc + scale * (expo(rng) - expo(rng));
    return x;
  };
}

SampleGen exponential_gen(int dim, double mean) {
  if (dim < 1) throw std::invalid_argument("exponential_gen: dimension must be positive");
  if (!(mean > 0.0)) throw std::invalid_argument("exponential_gen: mean must be positive");
  return [dim, mean](Rng& rng, long) {
    std::exponential_distribution<double> expo(1.0 / mean);
    RowVec x(dim);
    for (int j = 0; j < dim; ++j) x[j] = expo(rng);
    return x;
  };
}

SampleGen mixture_gen(int dim, double weight_first, double stdev_first, double stdev_second) {
  if (dim < 1) throw std::invalid_argument("mixture_gen: dimension must be positive");
  if (!(weight_first >= 0.0 && weight_first <= 1.0)) {
    throw std::invalid_argument("mixture_gen: weight must lie in [0,1]");
  }
  if (!(stdev_first > 0.0 && stdev_second > 0.0)) {
    throw std::invalid_argument("mixture_gen: stdevs must be positive");
  }
  return [dim, weight_first, stdev_first, stdev_second](Rng& rng, long) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double s = unif(rng) < weight_first ? stdev_first : stdev_second;
    RowVec x = standard_normal(rng, dim);
    return RowVec((x.array() * s).matrix());
  };
}

SampleGen erdos_renyi_gen(int nodes, double edge_prob) {
  if (nodes < 2) throw std::invalid_argument("erdos_renyi_gen: need at least 2 nodes");
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) {
    throw std::invalid_argument("erdos_renyi_gen: edge probability must lie in [0,1]");
  }
  const int dim = nodes * (nodes - 1) / 2;
  return [dim, edge_prob](Rng& rng, long) {
    std::bernoulli_distribution edge(edge_prob);
    RowVec x(dim);
    for (int j = 0; j < dim; ++j) x[j] = edge(rng) ? 1.0 : 0.0;
    return x;
  };
}

SampleGen slope_gen(int dim, double rate, const std::vector<int>& support, double base_mean) {
  if (dim < 1) throw std::invalid_argument("slope_gen: dimension must be positive");
  if (support.empty()) throw std::invalid_argument("slope_gen: support must not be empty");
  for (int j : support) {
    if (j < 0 || j >= dim) throw std::invalid_argument("slope_gen: support index out of range");
  }
  return [dim, rate, support, base_mean](Rng& rng, long t) {
    RowVec x = standard_normal(rng, dim);
    x.array() += base_mean;
    for (int j : support) x[j] += rate * static_cast<double>(t);
    return x;
  };
}

SampleGen make_generator(const std::string& name, const std::vector<double>& params) {
  auto arg = [&params](std::size_t i, double fallback) {
    return i < params.size() ? params[i] : fallback;
  };
  auto iarg = [&arg](std::size_t i, double fallback) {
    return static_cast<int>(std::lround(arg(i, fallback)));
  };
  if (name == "gaussian") return gaussian_gen(iarg(0, 1), arg(1, 0.0), arg(2, 1.0));
  if (name == "laplace") return laplace_gen(iarg(0, 1), arg(1, 0.0), arg(2, M_SQRT1_2));
  if (name == "exponential") return exponential_gen(iarg(0, 1), arg(1, 1.0));
  if (name == "mixture") {
    return mixture_gen(iarg(0, 1), arg(1, 0.5), arg(2, 1.0), arg(3, 1.0));
  }
  if (name == "er") return erdos_renyi_gen(iarg(0, 2), arg(1, 0.5));
  if (name == "slope") {
    std::vector<int> support;
    for (std::size_t i = 3; i < params.size(); ++i) {
      support.push_back(static_cast<int>(std::lround(params[i])));
    }
    return slope_gen(iarg(0, 1), arg(1, 0.0), support, arg(2, 0.0));
  }
  throw std::invalid_argument("make_generator: unknown generator " + name);
}

Matrix draw_matrix(const SampleGen& gen, Rng& rng, long count, long t0) {
  if (count < 1) throw std::invalid_argument("draw_matrix: count must be positive");
  RowVec first = gen(rng, t0);
  Matrix out(count, first.size());
  out.row(0) = first;
  for (long i = 1; i < count; ++i) out.row(i) = gen(rng, t0 + i);
  return out;
}

}  // namespace mstat
