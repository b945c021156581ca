#include "ember/vm/cache.hpp"

namespace ember::vm {

LruCache::LruCache(std::uint64_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("cache capacity must be at least one line");
}

bool LruCache::touch(std::uint64_t line) {
  auto it = pos_.find(line);
  if (it == pos_.end()) return false;
  order_.splice(order_.begin(), order_, it->second);
  return true;
}

std::optional<std::uint64_t> LruCache::insert(std::uint64_t line) {
  if (touch(line)) return std::nullopt;
  std::optional<std::uint64_t> evicted;
  if (order_.size() == capacity_) {
    evicted = order_.back();
    pos_.erase(order_.back());
    order_.pop_back();
  }
  order_.push_front(line);
  pos_[line] = order_.begin();
  return evicted;
}

void LruCache::erase(std::uint64_t line) {
  auto it = pos_.find(line);
  if (it == pos_.end()) return;
  order_.erase(it->second);
  pos_.erase(it);
}

void CacheConfig::check() const {
  if (l2_lines == 0 || llc_lines == 0) throw ConfigError("cache levels need at least one line");
  if (line_elems == 0) throw ConfigError("cache lines hold at least one element");
  if (l2_lines > llc_lines) throw ConfigError("an inclusive LLC must be at least as large as L2");
}

CacheModel::CacheModel(const CacheConfig& cfg) : cfg_(cfg), l2_(cfg.l2_lines), llc_(cfg.llc_lines) { cfg.check(); }

void CacheModel::access(std::uint64_t line, const std::optional<slc::Hint>& hint) {
  bool from_l2 = !hint || hint->level != slc::CacheLevel::LLC;
  bool temporal = !hint || hint->temporal;
  if (from_l2) {
    bool hit = temporal ? l2_.touch(line) : l2_.contains(line);
    if (hit) {
      ++stats_.l2_hits;
      return;
    }
    ++stats_.l2_misses;
  }
  bool hit = temporal ? llc_.touch(line) : llc_.contains(line);
  ++(hit ? stats_.llc_hits : stats_.llc_misses);
  if (!temporal) return;
  if (!hit)
    if (auto victim = llc_.insert(line)) l2_.erase(*victim);
  if (from_l2) l2_.insert(line);
}

}  // namespace ember::vm
