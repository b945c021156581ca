// Two-level inclusive LRU cache model for access-side loads.
#pragma once

#include <cstdint>
#include <list>
#include <optional>
#include <unordered_map>
#include <vector>

#include "ember/slc/slc.hpp"

namespace ember::vm {

/// Fully associative LRU set of cache lines.
class LruCache {
 public:
  explicit LruCache(std::uint64_t capacity);

  bool contains(std::uint64_t line) const { return pos_.count(line) > 0; }
  /// Hit test that also moves a hit line to the most recent position.
  bool touch(std::uint64_t line);
  /// Inserts as most recent; returns the evicted line, if any.
  std::optional<std::uint64_t> insert(std::uint64_t line);
  void erase(std::uint64_t line);
  std::uint64_t capacity() const { return capacity_; }
  std::size_t size() const { return order_.size(); }
  /// Most recent first.
  std::vector<std::uint64_t> lines() const { return {order_.begin(), order_.end()}; }

 private:
  std::uint64_t capacity_;
  std::list<std::uint64_t> order_;
  std::unordered_map<std::uint64_t, std::list<std::uint64_t>::iterator> pos_;
};

struct CacheConfig {
  bool enabled = false;
  std::uint64_t l2_lines = 64;
  std::uint64_t llc_lines = 1024;
  std::uint64_t line_elems = 16;

  void check() const;
};

struct CacheStats {
  std::uint64_t l2_hits = 0, l2_misses = 0;
  std::uint64_t llc_hits = 0, llc_misses = 0;
  std::uint64_t elements = 0;  // live lanes loaded through the model

  /// Requests reaching the last level (L2 misses plus LLC-routed requests).
  std::uint64_t llc_accesses() const { return llc_hits + llc_misses; }
  /// Last-level accesses per 1000 loaded elements.
  double apke() const { return elements ? 1000.0 * static_cast<double>(llc_accesses()) / static_cast<double>(elements) : 0.0; }
  bool operator==(const CacheStats&) const = default;
};

/// Requests start at L2 unless hinted to the LLC (an L1 hint also starts at
/// L2, the first modeled level). Temporal requests allocate in every level
/// from the LLC up to where they started; non-temporal requests neither
/// allocate nor update recency. Evicting from the LLC evicts from L2 too.
class CacheModel {
 public:
  explicit CacheModel(const CacheConfig& cfg);

  /// One request for line `line`.
  void access(std::uint64_t line, const std::optional<slc::Hint>& hint);
  void count_elements(std::uint64_t n) { stats_.elements += n; }
  const CacheStats& stats() const { return stats_; }
  const LruCache& l2() const { return l2_; }
  const LruCache& llc() const { return llc_; }

 private:
  CacheConfig cfg_;
  LruCache l2_, llc_;
  CacheStats stats_;
};

}  // namespace ember::vm
