// Random inputs for the reference kernels: CSR structures and embedding
// tables.
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ember/common/memory.hpp"
#include "ember/workloads/kernels.hpp"

namespace ember::workloads {

struct CsrMatrix {
  std::uint64_t rows = 0, cols = 0;
  std::vector<std::uint64_t> ptrs;  // rows + 1 offsets, ptrs[0] == 0
  std::vector<std::uint64_t> idxs;  // column of each non-zero
  std::vector<float> vals;          // empty when the pattern is unweighted

  std::uint64_t nnz() const { return idxs.size(); }
  /// Throws ConfigError when offsets are not monotone or a column is out of
  /// range.
  void check() const;
};

/// Each row gets a uniformly drawn number of non-zeros in [0, max_per_row]
/// with uniformly drawn columns (repeats allowed, as in embedding bags).
CsrMatrix random_csr(std::uint64_t rows, std::uint64_t cols, std::uint64_t max_per_row, std::mt19937_64& rng,
                     bool with_vals);

/// Sizes shared by all kernels. `segments` is the outer trip count (batches,
/// matrix rows, graph nodes, triples or query blocks).
struct Dims {
  std::uint64_t segments = 4;
  std::uint64_t table_rows = 16;  // key blocks for spattn
  std::uint64_t emb_len = 8;
  std::uint64_t max_lookups = 4;  // per segment
  std::uint64_t qblk = 2, kblk = 2;
  /// Small integers instead of arbitrary floats, so sums are exact in any
  /// order.
  bool integer_values = false;

  void check() const;
};

/// Memory image binding every parameter of `build_kernel(k)`, outputs
/// zeroed.
Memory kernel_inputs(Kernel k, const Dims& d, std::uint64_t seed);

/// Shape of the spattn output for the block pattern held in `m`.
std::vector<std::uint64_t> spattn_out_shape(const Dims& d, const std::vector<std::uint64_t>& bptrs);

}  // namespace ember::workloads
