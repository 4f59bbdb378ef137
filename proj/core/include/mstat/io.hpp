#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mstat/common.hpp"
#include "mstat/moments.hpp"

namespace mstat {

// Comma-separated numeric matrix. A non-numeric first line is treated as a
// header and skipped; blank lines are ignored; ragged or non-numeric data
// lines raise with the offending line number.
Matrix load_csv(const std::string& path);

// 17 significant digits, so a load round-trips bit-exactly
void save_csv(const std::string& path, const Eigen::Ref<const Matrix>& data,
              const std::vector<std::string>& header = {});

std::string moments_to_json(const NullMoments& moments);
NullMoments moments_from_json(const std::string& text);

// cache key over the exact pool bytes and the estimation parameters
std::string pool_cache_key(const Eigen::Ref<const Matrix>& pool, double bandwidth,
                           std::uint64_t n_draws, std::uint64_t seed);

std::optional<NullMoments> cache_lookup(const std::string& cache_path, const std::string& key);

void cache_store(const std::string& cache_path, const std::string& key,
                 const NullMoments& moments);

}  // namespace mstat
