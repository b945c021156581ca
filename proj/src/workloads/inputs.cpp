#include "ember/workloads/inputs.hpp"

#include <algorithm>

namespace ember::workloads {

void CsrMatrix::check() const {
  if (ptrs.size() != rows + 1 || ptrs.front() != 0) throw ConfigError("csr: expected rows + 1 offsets starting at 0");
  for (std::size_t r = 0; r < rows; ++r)
    if (ptrs[r] > ptrs[r + 1]) throw ConfigError("csr: offsets decrease at row " + std::to_string(r));
  if (ptrs.back() != idxs.size()) throw ConfigError("csr: last offset does not match the non-zero count");
  for (auto c : idxs)
    if (c >= cols) throw ConfigError("csr: column " + std::to_string(c) + " out of range");
  if (!vals.empty() && vals.size() != idxs.size()) throw ConfigError("csr: value count does not match");
}

CsrMatrix random_csr(std::uint64_t rows, std::uint64_t cols, std::uint64_t max_per_row, std::mt19937_64& rng,
                     bool with_vals) {
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.ptrs.push_back(0);
  std::uniform_int_distribution<std::uint64_t> len(0, max_per_row), col(0, cols ? cols - 1 : 0);
  std::uniform_real_distribution<float> val(-1.0f, 1.0f);
  for (std::uint64_t r = 0; r < rows; ++r) {
    std::uint64_t n = cols ? len(rng) : 0;
    for (std::uint64_t k = 0; k < n; ++k) {
      m.idxs.push_back(col(rng));
      if (with_vals) m.vals.push_back(val(rng));
    }
    m.ptrs.push_back(m.idxs.size());
  }
  return m;
}

void Dims::check() const {
  if (emb_len == 0) throw ConfigError("emb_len must be at least 1");
  if (table_rows == 0) throw ConfigError("table_rows must be at least 1");
  if (qblk == 0 || kblk == 0) throw ConfigError("block sizes must be at least 1");
}

namespace {

class Filler {
 public:
  Filler(std::uint64_t seed, bool integers) : rng(seed), integers_(integers) {}

  float value() {
    if (integers_) return static_cast<float>(std::uniform_int_distribution<int>(-4, 4)(rng));
    return std::uniform_real_distribution<float>(-1.0f, 1.0f)(rng);
  }

  Buffer table(std::vector<std::uint64_t> shape) {
    Buffer b = make_buffer(Elem::F32, std::move(shape));
    for (auto& x : b.data) x = from_f32(value());
    return b;
  }

  Buffer indices(const std::vector<std::uint64_t>& v) {
    Buffer b = make_buffer(Elem::Index, {v.size()});
    b.data.assign(v.begin(), v.end());
    return b;
  }

  Buffer floats(const std::vector<float>& v) {
    Buffer b = make_buffer(Elem::F32, {v.size()});
    for (std::size_t i = 0; i < v.size(); ++i) b.data[i] = from_f32(integers_ ? value() : v[i]);
    return b;
  }

  Buffer random_indices(std::uint64_t n, std::uint64_t bound) {
    std::vector<std::uint64_t> v(n);
    std::uniform_int_distribution<std::uint64_t> d(0, bound - 1);
    for (auto& x : v) x = d(rng);
    return indices(v);
  }

  std::mt19937_64 rng;

 private:
  bool integers_;
};

}  // namespace

std::vector<std::uint64_t> spattn_out_shape(const Dims& d, const std::vector<std::uint64_t>& bptrs) {
  std::uint64_t widest = 1;
  for (std::size_t i = 0; i + 1 < bptrs.size(); ++i) widest = std::max(widest, bptrs[i + 1] - bptrs[i]);
  return {d.segments * d.qblk, widest * d.kblk, d.emb_len};
}

Memory kernel_inputs(Kernel k, const Dims& d, std::uint64_t seed) {
  d.check();
  Filler f(seed, d.integer_values);
  Memory m;
  const std::uint64_t E = d.emb_len;
  m.scalars["emb_len"] = E;
  auto zeros = [](std::vector<std::uint64_t> shape) { return make_buffer(Elem::F32, std::move(shape)); };
  switch (k) {
    case Kernel::Sls:
    case Kernel::Spmm: {
      CsrMatrix a = random_csr(d.segments, d.table_rows, d.max_lookups, f.rng, k == Kernel::Spmm);
      m.buffers["ptrs"] = f.indices(a.ptrs);
      m.buffers["idxs"] = f.indices(a.idxs);
      if (k == Kernel::Spmm) m.buffers["avals"] = f.floats(a.vals);
      m.buffers["vals"] = f.table({d.table_rows, E});
      m.buffers["out"] = zeros({d.segments, E});
      m.scalars[k == Kernel::Sls ? "n_batches" : "n_rows"] = d.segments;
      break;
    }
    case Kernel::Mp: {
      // Neighbours are vertices of the same graph.
      CsrMatrix a = random_csr(d.segments, d.segments, d.max_lookups, f.rng, true);
      m.buffers["ptrs"] = f.indices(a.ptrs);
      m.buffers["idxs"] = f.indices(a.idxs);
      m.buffers["avals"] = f.floats(a.vals);
      m.buffers["feat"] = f.table({std::max<std::uint64_t>(d.segments, 1), E});
      m.buffers["tmp"] = zeros({E});
      m.buffers["out"] = zeros({d.segments, E});
      m.scalars["n_nodes"] = d.segments;
      break;
    }
    case Kernel::Kg: {
      std::uint64_t relations = std::max<std::uint64_t>(1, d.table_rows / 4);
      m.buffers["hidx"] = f.random_indices(d.segments, d.table_rows);
      m.buffers["ridx"] = f.random_indices(d.segments, relations);
      m.buffers["tidx"] = f.random_indices(d.segments, d.table_rows);
      m.buffers["ent"] = f.table({d.table_rows, E});
      m.buffers["rel"] = f.table({relations, E});
      m.buffers["score"] = zeros({d.segments});
      m.scalars["n_triples"] = d.segments;
      break;
    }
    case Kernel::SpAttn: {
      CsrMatrix a = random_csr(d.segments, d.table_rows, d.max_lookups, f.rng, false);
      m.buffers["bptrs"] = f.indices(a.ptrs);
      m.buffers["bcols"] = f.indices(a.idxs);
      m.buffers["keys"] = f.table({d.table_rows * d.kblk, E});
      m.buffers["out"] = zeros(spattn_out_shape(d, a.ptrs));
      m.scalars["n_qblocks"] = d.segments;
      m.scalars["qblk"] = d.qblk;
      m.scalars["kblk"] = d.kblk;
      break;
    }
  }
  return m;
}

}  // namespace ember::workloads
