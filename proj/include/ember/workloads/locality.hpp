// Synthetic lookup traces and reuse-distance analysis.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ember/workloads/inputs.hpp"

namespace ember::workloads {

struct LocalityConfig {
  enum Distribution { Uniform, Zipf } distribution = Uniform;
  double s = 1.0;  // zipf exponent
  std::uint64_t rows = 1024;
  std::uint64_t lookups = 10000;
  std::uint64_t pooling = 16;  // lookups per segment of the CSR wrapper

  /// Low, medium and high locality: uniform, zipf(0.8), zipf(1.2).
  static LocalityConfig preset(int level, std::uint64_t rows, std::uint64_t lookups);
  /// "uniform", "zipf<s>" (e.g. zipf1.2) or "L0".."L2".
  static std::optional<LocalityConfig> parse(const std::string& name, std::uint64_t rows, std::uint64_t lookups);
  void check() const;
};

struct IndexTrace {
  std::vector<std::uint64_t> ids;
  CsrMatrix csr;  // ids cut into segments of `pooling` lookups
};

/// Deterministic for a given seed. Zipf ranks map to rows through a seeded
/// permutation so hot rows are scattered over the table.
IndexTrace gen_indices(const LocalityConfig& cfg, std::uint64_t seed);

struct CdfReport {
  std::vector<std::uint64_t> distances;                // sorted, one per re-access
  std::vector<std::pair<std::uint64_t, double>> cdf;  // at each distinct distance
  std::uint64_t cold = 0;                              // first accesses
  std::uint64_t accesses = 0;

  /// Fraction of re-accesses with distance <= x (0 when there are none).
  double at(std::uint64_t x) const;
  double at_below(std::uint64_t capacity) const;  // distance < capacity
  double reaccess_fraction() const;
};

/// Reuse distance of each re-access: distinct other ids touched since the
/// previous access to the same id.
CdfReport reuse_distance_cdf(const std::vector<std::uint64_t>& trace);

/// LRU hit fraction for a cache holding `capacity` ids, via stack distances.
double lru_hit_rate(const std::vector<std::uint64_t>& trace, std::uint64_t capacity);

/// One id per line; blank lines and `#` comments are skipped.
std::vector<std::uint64_t> read_trace(const std::string& path);

}  // namespace ember::workloads
