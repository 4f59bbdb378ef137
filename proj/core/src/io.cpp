#include "mstat/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mstat {

namespace {

using nlohmann::json;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& field, double& out) {
  const std::string t = trim(field);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

json h_to_json(const HMoments& h) {
  return json{{"e_h2", h.e_h2}, {"cov_hh", h.cov_hh}, {"t1", h.t1},    {"t2", h.t2},
              {"t3", h.t3},     {"t4", h.t4},         {"t5", h.t5},    {"t6", h.t6},
              {"n_draws", h.n_draws},                 {"seed", h.seed}};
}

HMoments h_from_json(const json& j) {
  HMoments h;
  h.e_h2 = j.at("e_h2").get<double>();
  h.cov_hh = j.at("cov_hh").get<double>();
  h.t1 = j.at("t1").get<double>();
  h.t2 = j.at("t2").get<double>();
  h.t3 = j.at("t3").get<double>();
  h.t4 = j.at("t4").get<double>();
  h.t5 = j.at("t5").get<double>();
  h.t6 = j.at("t6").get<double>();
  h.n_draws = j.at("n_draws").get<std::uint64_t>();
  h.seed = j.at("seed").get<std::uint64_t>();
  return h;
}

json moments_to_json_obj(const NullMoments& m) {
  json var = json::object();
  json skew = json::object();
  for (const auto& [b, v] : m.var_by_b) var[std::to_string(b)] = v;
  for (const auto& [b, v] : m.skew_by_b) skew[std::to_string(b)] = v;
  return json{{"h", h_to_json(m.h)},
              {"n_blocks", m.n_blocks},
              {"var_by_b", var},
              {"skew_by_b", skew}};
}

NullMoments moments_from_json_obj(const json& j) {
  NullMoments m;
  m.h = h_from_json(j.at("h"));
  m.n_blocks = j.at("n_blocks").get<int>();
  for (const auto& [k, v] : j.at("var_by_b").items()) m.var_by_b[std::stoi(k)] = v.get<double>();
  for (const auto& [k, v] : j.at("skew_by_b").items()) m.skew_by_b[std::stoi(k)] = v.get<double>();
  return m;
}

}  // namespace

Matrix load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  long cols = -1;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!parse_double(fields[c], row[c])) {
        numeric = false;
        bad_col = c;
        break;
      }
    }
    if (!numeric) {
      if (first_content_line) {  // header
        first_content_line = false;
        continue;
      }
      throw std::runtime_error("load_csv: " + path + " line " + std::to_string(line_no) +
                               ", column " + std::to_string(bad_col + 1) + ": not a number: '" +
                               trim(fields[bad_col]) + "'");
    }
    first_content_line = false;
    if (cols < 0) {
      cols = static_cast<long>(row.size());
    } else if (static_cast<long>(row.size()) != cols) {
      throw std::runtime_error("load_csv: " + path + " line " + std::to_string(line_no) +
                               ": expected " + std::to_string(cols) + " columns, found " +
                               std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("load_csv: " + path + " has no data rows");

  Matrix out(static_cast<long>(rows.size()), cols);
  for (long i = 0; i < out.rows(); ++i) {
    for (long j = 0; j < cols; ++j) out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return out;
}

void save_csv(const std::string& path, const Eigen::Ref<const Matrix>& data,
              const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path);
  if (!header.empty()) {
    if (static_cast<long>(header.size()) != data.cols()) {
      throw std::invalid_argument("save_csv: header width does not match the data");
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c > 0) out << ',';
      out << header[c];
    }
    out << '\n';
  }
  char buf[40];
  for (long i = 0; i < data.rows(); ++i) {
    for (long j = 0; j < data.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data(i, j));
      if (j > 0) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_csv: write failed for " + path);
}

std::string moments_to_json(const NullMoments& moments) {
  return moments_to_json_obj(moments).dump(2);
}

NullMoments moments_from_json(const std::string& text) {
  try {
    return moments_from_json_obj(json::parse(text));
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("moments_from_json: ") + e.what());
  }
}

std::string pool_cache_key(const Eigen::Ref<const Matrix>& pool, double bandwidth,
                           std::uint64_t n_draws, std::uint64_t seed) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&hash](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ULL;
    }
  };
  for (long i = 0; i < pool.rows(); ++i) {
    for (long j = 0; j < pool.cols(); ++j) {
      const double v = pool(i, j);
      mix_bytes(&v, sizeof(v));
    }
  }
  mix_bytes(&bandwidth, sizeof(bandwidth));
  mix_bytes(&n_draws, sizeof(n_draws));
  mix_bytes(&seed, sizeof(seed));
  const long r = pool.rows();
  const long c = pool.cols();
  mix_bytes(&r, sizeof(r));
  mix_bytes(&c, sizeof(c));

  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf);
}

std::optional<NullMoments> cache_lookup(const std::string& cache_path, const std::string& key) {
  std::ifstream in(cache_path);
  if (!in) return std::nullopt;
  json j;
  try {
    in >> j;
  } catch (const json::exception&) {
    return std::nullopt;  // unreadable cache behaves like a miss
  }
  auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  return moments_from_json_obj(*it);
}

void cache_store(const std::string& cache_path, const std::string& key,
                 const NullMoments& moments) {
  json j = json::object();
  {
    std::ifstream in(cache_path);
    if (in) {
      try {
        in >> j;
      } catch (const json::exception&) {
        j = json::object();
      }
    }
  }
  j[key] = moments_to_json_obj(moments);
  std::ofstream out(cache_path);
  if (!out) throw std::runtime_error("cache_store: cannot open " + cache_path);
  out << j.dump(2) << '\n';
}

}  // namespace mstat
