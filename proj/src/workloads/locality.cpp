#include "ember/workloads/locality.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_map>

namespace ember::workloads {

LocalityConfig LocalityConfig::preset(int level, std::uint64_t rows, std::uint64_t lookups) {
  LocalityConfig c;
  c.rows = rows;
  c.lookups = lookups;
  switch (level) {
    case 0: break;
    case 1: c.distribution = Zipf; c.s = 0.8; break;
    case 2: c.distribution = Zipf; c.s = 1.2; break;
    default: throw ConfigError("locality preset must be 0, 1 or 2");
  }
  return c;
}

std::optional<LocalityConfig> LocalityConfig::parse(const std::string& name, std::uint64_t rows,
                                                    std::uint64_t lookups) {
  if (name == "uniform") return preset(0, rows, lookups);
  if (name.size() == 2 && (name[0] == 'L' || name[0] == 'l') && name[1] >= '0' && name[1] <= '2')
    return preset(name[1] - '0', rows, lookups);
  if (name.rfind("zipf", 0) == 0) {
    LocalityConfig c = preset(0, rows, lookups);
    c.distribution = Zipf;
    try {
      std::size_t used = 0;
      c.s = std::stod(name.substr(4), &used);
      if (used != name.size() - 4) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
    return c;
  }
  return std::nullopt;
}

void LocalityConfig::check() const {
  if (rows == 0) throw ConfigError("locality: table needs at least one row");
  if (pooling == 0) throw ConfigError("locality: pooling must be at least 1");
  if (distribution == Zipf && !(s > 0)) throw ConfigError("locality: zipf exponent must be positive");
}

IndexTrace gen_indices(const LocalityConfig& cfg, std::uint64_t seed) {
  cfg.check();
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> perm(cfg.rows);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  IndexTrace out;
  out.ids.reserve(cfg.lookups);
  if (cfg.distribution == LocalityConfig::Uniform) {
    std::uniform_int_distribution<std::uint64_t> d(0, cfg.rows - 1);
    for (std::uint64_t i = 0; i < cfg.lookups; ++i) out.ids.push_back(d(rng));
  } else {
    std::vector<double> w(cfg.rows);
    for (std::uint64_t k = 0; k < cfg.rows; ++k) w[k] = 1.0 / std::pow(static_cast<double>(k + 1), cfg.s);
    std::discrete_distribution<std::uint64_t> d(w.begin(), w.end());
    for (std::uint64_t i = 0; i < cfg.lookups; ++i) out.ids.push_back(perm[d(rng)]);
  }

  CsrMatrix& m = out.csr;
  m.cols = cfg.rows;
  m.idxs = out.ids;
  m.ptrs.push_back(0);
  for (std::uint64_t at = 0; at < out.ids.size();) {
    at = std::min<std::uint64_t>(at + cfg.pooling, out.ids.size());
    m.ptrs.push_back(at);
  }
  m.rows = m.ptrs.size() - 1;
  return out;
}

namespace {

// Prefix sums over trace positions; a 1 marks the latest access of some id.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : t_(n + 1, 0) {}
  void add(std::size_t i, int v) {
    for (++i; i < t_.size(); i += i & -i) t_[i] += v;
  }
  std::int64_t prefix(std::size_t i) const {  // sum of [0, i)
    std::int64_t s = 0;
    for (; i > 0; i -= i & -i) s += t_[i];
    return s;
  }

 private:
  std::vector<std::int64_t> t_;
};

}  // namespace

CdfReport reuse_distance_cdf(const std::vector<std::uint64_t>& trace) {
  CdfReport r;
  r.accesses = trace.size();
  Fenwick live(trace.size());
  std::unordered_map<std::uint64_t, std::size_t> last;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    auto it = last.find(trace[t]);
    if (it == last.end()) {
      ++r.cold;
    } else {
      std::size_t p = it->second;
      r.distances.push_back(static_cast<std::uint64_t>(live.prefix(t) - live.prefix(p + 1)));
      live.add(p, -1);
    }
    live.add(t, 1);
    last[trace[t]] = t;
  }
  std::sort(r.distances.begin(), r.distances.end());
  const double n = static_cast<double>(r.distances.size());
  for (std::size_t i = 0; i < r.distances.size(); ++i)
    if (i + 1 == r.distances.size() || r.distances[i + 1] != r.distances[i])
      r.cdf.emplace_back(r.distances[i], static_cast<double>(i + 1) / n);
  return r;
}

double CdfReport::at(std::uint64_t x) const {
  if (distances.empty()) return 0.0;
  auto n = std::upper_bound(distances.begin(), distances.end(), x) - distances.begin();
  return static_cast<double>(n) / static_cast<double>(distances.size());
}

double CdfReport::at_below(std::uint64_t capacity) const { return capacity == 0 ? 0.0 : at(capacity - 1); }

double CdfReport::reaccess_fraction() const {
  return accesses ? static_cast<double>(distances.size()) / static_cast<double>(accesses) : 0.0;
}

double lru_hit_rate(const std::vector<std::uint64_t>& trace, std::uint64_t capacity) {
  if (capacity == 0) throw ConfigError("lru capacity must be at least 1");
  if (trace.empty()) return 0.0;
  CdfReport r = reuse_distance_cdf(trace);
  auto hits = std::lower_bound(r.distances.begin(), r.distances.end(), capacity) - r.distances.begin();
  return static_cast<double>(hits) / static_cast<double>(trace.size());
}

std::vector<std::uint64_t> read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace '" + path + "'");
  std::vector<std::uint64_t> out;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(line.substr(b), &used));
    } catch (const std::exception&) {
      throw ConfigError("trace '" + path + "' line " + std::to_string(n) + ": expected a vector id");
    }
  }
  return out;
}

}  // namespace ember::workloads
