#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mstat/common.hpp"
#include "mstat/rng.hpp"

namespace mstat {

// one sample at (1-based) stream time t
using SampleGen = std::function<RowVec(Rng&, long)>;

SampleGen gaussian_gen(int dim, double mean = 0.0, double stdev = 1.0);
SampleGen gaussian_gen(const Vector& mean, const Vector& stdev);

// per-coordinate variance is 2*scale^2; the default keeps unit variance
SampleGen laplace_gen(int dim, double loc = 0.0, double scale = M_SQRT1_2);

SampleGen exponential_gen(int dim, double mean = 1.0);

// two-component scale mixture of centered gaussians
SampleGen mixture_gen(int dim, double weight_first, double stdev_first, double stdev_second);

// flattened upper triangle of an Erdos-Renyi adjacency matrix; dim = C(nodes,2)
SampleGen erdos_renyi_gen(int nodes, double edge_prob);

// gaussian whose mean drifts as rate * t on the chosen coordinates
SampleGen slope_gen(int dim, double rate, const std::vector<int>& support, double base_mean = 0.0);

// registry with positional parameters (trailing ones optional):
//   gaussian    {dim, mean, stdev}
//   laplace     {dim, loc, scale}
//   exponential {dim, mean}
//   mixture     {dim, weight_first, stdev_first, stdev_second}
//   er          {nodes, edge_prob}
//   slope       {dim, rate, base_mean, support indices...}
// throws on an unknown name
SampleGen make_generator(const std::string& name, const std::vector<double>& params);

Matrix draw_matrix(const SampleGen& gen, Rng& rng, long count, long t0 = 1);

}  // namespace mstat
