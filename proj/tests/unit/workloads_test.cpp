#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <list>
#include <map>
#include <random>
#include <set>

#include "ember/scf/scf.hpp"
#include "ember/workloads/inputs.hpp"
#include "ember/workloads/locality.hpp"
#include "test_util.hpp"

namespace ember {
namespace {

using workloads::Kernel;

workloads::Dims int_dims(std::uint64_t seed) {
  workloads::Dims d;
  d.segments = 5;
  d.table_rows = 9;
  d.emb_len = 3 + seed % 4;
  d.max_lookups = 4;
  d.qblk = 2;
  d.kblk = 3;
  d.integer_values = true;
  return d;
}

float at(const Buffer& b, std::size_t i) { return to_f32(b.data.at(i)); }

TEST(Csr, RandomMatricesAreWellFormed) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = workloads::random_csr(1 + trial % 9, 1 + trial % 5, trial % 6, rng, trial % 2);
    EXPECT_NO_THROW(m.check());
  }
  workloads::CsrMatrix bad;
  bad.rows = 2;
  bad.cols = 3;
  bad.ptrs = {0, 2, 1};
  bad.idxs = {0};
  EXPECT_THROW(bad.check(), ConfigError);
}

TEST(KernelInputs, BindEverySignatureParameter) {
  for (Kernel k : workloads::kAllKernels)
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto in = workloads::kernel_inputs(k, int_dims(seed), seed);
      EXPECT_NO_THROW(check_memory(workloads::build_kernel(k).sig, in)) << workloads::kernel_name(k);
      EXPECT_EQ(in, workloads::kernel_inputs(k, int_dims(seed), seed));
    }
}

// Segment sums are a sparse-dense product with a 0/1 matrix, computed here
// densely over every column.
TEST(KernelOracle, SlsEqualsDenseProductWithIndicatorMatrix) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto d = int_dims(seed);
    auto in = workloads::kernel_inputs(Kernel::Sls, d, seed);
    const auto& ptrs = in.buffer("ptrs").data;
    const auto& idxs = in.buffer("idxs").data;
    std::vector<std::vector<float>> a(d.segments, std::vector<float>(d.table_rows, 0.0f));
    for (std::size_t b = 0; b < d.segments; ++b)
      for (auto p = ptrs[b]; p < ptrs[b + 1]; ++p) a[b][idxs[p]] += 1.0f;
    auto out = scf::interpret_scf(workloads::build_kernel(Kernel::Sls), in).buffer("out");
    for (std::size_t b = 0; b < d.segments; ++b)
      for (std::size_t e = 0; e < d.emb_len; ++e) {
        float want = 0;
        for (std::size_t r = 0; r < d.table_rows; ++r) want += a[b][r] * at(in.buffer("vals"), r * d.emb_len + e);
        EXPECT_EQ(at(out, b * d.emb_len + e), want);
      }
  }
}

TEST(KernelOracle, SpmmEqualsDenseProduct) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto d = int_dims(seed);
    auto in = workloads::kernel_inputs(Kernel::Spmm, d, seed);
    const auto& ptrs = in.buffer("ptrs").data;
    const auto& idxs = in.buffer("idxs").data;
    std::vector<std::vector<float>> a(d.segments, std::vector<float>(d.table_rows, 0.0f));
    for (std::size_t b = 0; b < d.segments; ++b)
      for (auto p = ptrs[b]; p < ptrs[b + 1]; ++p) a[b][idxs[p]] += at(in.buffer("avals"), p);
    auto out = scf::interpret_scf(workloads::build_kernel(Kernel::Spmm), in).buffer("out");
    for (std::size_t b = 0; b < d.segments; ++b)
      for (std::size_t e = 0; e < d.emb_len; ++e) {
        float want = 0;
        for (std::size_t r = 0; r < d.table_rows; ++r) want += a[b][r] * at(in.buffer("vals"), r * d.emb_len + e);
        EXPECT_EQ(at(out, b * d.emb_len + e), want);
      }
  }
}

// Sampled elementwise products on the edges, summed per vertex as a sparse
// product, then scaled by the vertex's own features.
TEST(KernelOracle, MpEqualsSampledProductThenAggregation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto d = int_dims(seed);
    auto in = workloads::kernel_inputs(Kernel::Mp, d, seed);
    const auto& ptrs = in.buffer("ptrs").data;
    const auto& idxs = in.buffer("idxs").data;
    const Buffer& x = in.buffer("feat");
    const std::size_t E = d.emb_len;
    std::vector<std::vector<float>> msg;  // per edge
    for (std::size_t p = 0; p < idxs.size(); ++p) {
      std::vector<float> m(E);
      std::size_t v = std::upper_bound(ptrs.begin(), ptrs.end(), p) - ptrs.begin() - 1;
      for (std::size_t e = 0; e < E; ++e) m[e] = at(in.buffer("avals"), p) * (at(x, v * E + e) * at(x, idxs[p] * E + e));
      msg.push_back(m);
    }
    auto out = scf::interpret_scf(workloads::build_kernel(Kernel::Mp), in);
    for (std::size_t v = 0; v < d.segments; ++v)
      for (std::size_t e = 0; e < E; ++e) {
        float agg = 0;
        for (auto p = ptrs[v]; p < ptrs[v + 1]; ++p) agg += msg[p][e];
        EXPECT_EQ(at(out.buffer("out"), v * E + e), agg * at(x, v * E + e));
      }
    for (auto t : out.buffer("tmp").data) EXPECT_EQ(to_f32(t), 0.0f);
  }
}

TEST(KernelOracle, SpattnReplicatesKeyBlocks) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto d = int_dims(seed);
    d.integer_values = false;
    auto in = workloads::kernel_inputs(Kernel::SpAttn, d, seed);
    const auto& bptrs = in.buffer("bptrs").data;
    const auto& bcols = in.buffer("bcols").data;
    auto out = scf::interpret_scf(workloads::build_kernel(Kernel::SpAttn), in).buffer("out");
    const auto& shape = out.shape;
    Buffer want = make_buffer(Elem::F32, shape);
    for (std::size_t qb = 0; qb < d.segments; ++qb)
      for (auto p = bptrs[qb]; p < bptrs[qb + 1]; ++p)
        for (std::size_t row = qb * d.qblk; row < (qb + 1) * d.qblk; ++row)
          for (std::size_t kt = 0; kt < d.kblk; ++kt) {
            std::size_t col = (p - bptrs[qb]) * d.kblk + kt;
            std::size_t key = bcols[p] * d.kblk + kt;
            std::copy_n(in.buffer("keys").data.begin() + key * d.emb_len, d.emb_len,
                        want.data.begin() + (row * shape[1] + col) * d.emb_len);
          }
    EXPECT_EQ(out.data, want.data);
  }
}

TEST(KernelOracle, KgScoresZeroWhenHeadEqualsTailAndRelationIsZero) {
  for (auto norm : {workloads::KgNorm::L1, workloads::KgNorm::L2Squared}) {
    auto d = int_dims(1);
    auto in = workloads::kernel_inputs(Kernel::Kg, d, 3);
    in.buffers["tidx"] = in.buffers["hidx"];
    for (auto& x : in.buffers["rel"].data) x = from_f32(0.0f);
    auto out = scf::interpret_scf(workloads::build_kernel(Kernel::Kg, norm), in);
    for (auto s : out.buffer("score").data) EXPECT_EQ(to_f32(s), 0.0f);
  }
}

TEST(KernelOracle, KgMatchesDirectNorm) {
  auto d = int_dims(2);
  auto in = workloads::kernel_inputs(Kernel::Kg, d, 11);
  auto out = scf::interpret_scf(workloads::build_kernel(Kernel::Kg), in);
  for (std::size_t s = 0; s < d.segments; ++s) {
    float want = 0;
    for (std::size_t e = 0; e < d.emb_len; ++e) {
      float h = at(in.buffer("ent"), in.buffer("hidx").data[s] * d.emb_len + e);
      float r = at(in.buffer("rel"), in.buffer("ridx").data[s] * d.emb_len + e);
      float t = at(in.buffer("ent"), in.buffer("tidx").data[s] * d.emb_len + e);
      want += std::fabs(h + r - t);
    }
    EXPECT_EQ(at(out.buffer("score"), s), want);
  }
}

// Distinct ids between consecutive accesses, by direct set construction.
std::vector<std::uint64_t> brute_distances(const std::vector<std::uint64_t>& trace, std::uint64_t* cold) {
  std::vector<std::uint64_t> out;
  *cold = 0;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    std::size_t p = t;
    while (p > 0 && trace[p - 1] != trace[t]) --p;
    if (p == 0) {
      ++*cold;
      continue;
    }
    std::set<std::uint64_t> seen(trace.begin() + p, trace.begin() + t);
    out.push_back(seen.size());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Explicit LRU list simulation.
double lru_simulate(const std::vector<std::uint64_t>& trace, std::size_t capacity) {
  std::list<std::uint64_t> lru;
  std::size_t hits = 0;
  for (auto id : trace) {
    auto it = std::find(lru.begin(), lru.end(), id);
    if (it != lru.end()) {
      ++hits;
      lru.erase(it);
    } else if (lru.size() == capacity) {
      lru.pop_back();
    }
    lru.push_front(id);
  }
  return trace.empty() ? 0.0 : static_cast<double>(hits) / trace.size();
}

std::vector<std::uint64_t> random_trace(std::mt19937_64& rng, std::size_t len, std::uint64_t ids) {
  std::uniform_int_distribution<std::uint64_t> d(0, ids - 1);
  std::vector<std::uint64_t> t(len);
  for (auto& x : t) x = d(rng);
  return t;
}

TEST(ReuseDistance, SmallExamples) {
  auto r = workloads::reuse_distance_cdf({0, 1, 0, 1});
  EXPECT_EQ(r.distances, (std::vector<std::uint64_t>{1, 1}));
  EXPECT_EQ(r.at(0), 0.0);
  EXPECT_EQ(r.at(1), 1.0);
  EXPECT_EQ(r.cold, 2u);

  r = workloads::reuse_distance_cdf({0, 0});
  EXPECT_EQ(r.at(0), 1.0);

  r = workloads::reuse_distance_cdf({0, 1, 2});
  EXPECT_TRUE(r.cdf.empty());
  EXPECT_EQ(r.cold, 3u);
}

TEST(ReuseDistance, MatchesBruteForceOnRandomTraces) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    auto trace = random_trace(rng, 1 + trial % 60, 1 + trial % 13);
    std::uint64_t cold = 0;
    auto want = brute_distances(trace, &cold);
    auto r = workloads::reuse_distance_cdf(trace);
    EXPECT_EQ(r.distances, want);
    EXPECT_EQ(r.cold, cold);
    double prev = 0;
    for (auto [x, c] : r.cdf) {
      EXPECT_GE(c, prev);
      EXPECT_LE(c, 1.0);
      prev = c;
    }
    if (!r.distances.empty()) {
      EXPECT_EQ(r.cdf.back().second, 1.0);
    }
  }
}

TEST(ReuseDistance, RenamingIdsLeavesCdfUnchanged) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto trace = random_trace(rng, 80, 10);
    std::vector<std::uint64_t> perm(10);
    std::iota(perm.begin(), perm.end(), 100);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto renamed = trace;
    for (auto& x : renamed) x = perm[x];
    EXPECT_EQ(workloads::reuse_distance_cdf(trace).cdf, workloads::reuse_distance_cdf(renamed).cdf);
  }
}

TEST(Lru, HandExamples) {
  EXPECT_EQ(workloads::lru_hit_rate({0, 0, 1, 0}, 1), 0.25);
  EXPECT_EQ(workloads::lru_hit_rate({0, 0, 1, 0}, 2), 0.5);
  auto trace = std::vector<std::uint64_t>{3, 1, 3, 2, 1, 3};
  auto r = workloads::reuse_distance_cdf(trace);
  EXPECT_EQ(workloads::lru_hit_rate(trace, 3), r.reaccess_fraction());
  EXPECT_THROW(workloads::lru_hit_rate(trace, 0), ConfigError);
}

TEST(Lru, MatchesSimulationAndCdfIdentity) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    auto trace = random_trace(rng, 1 + trial * 3, 2 + trial % 17);
    auto r = workloads::reuse_distance_cdf(trace);
    double prev = 0;
    for (std::uint64_t cap = 1; cap <= 20; ++cap) {
      double h = workloads::lru_hit_rate(trace, cap);
      EXPECT_EQ(h, lru_simulate(trace, cap));
      std::uint64_t hits = std::lower_bound(r.distances.begin(), r.distances.end(), cap) - r.distances.begin();
      EXPECT_EQ(static_cast<std::uint64_t>(std::llround(h * trace.size())), hits);
      EXPECT_NEAR(h, r.at_below(cap) * r.reaccess_fraction(), 1e-12);
      EXPECT_GE(h, prev);
      prev = h;
    }
  }
}

// A single row lands outside 3 sigma with probability 0.27%, so over 20
// seeds x 16 rows about one excursion is expected; more than 5 would mean the
// generator is not uniform.
TEST(GenIndices, UniformFrequenciesWithinThreeSigma) {
  auto cfg = workloads::LocalityConfig::preset(0, 16, 10000);
  double sigma = std::sqrt(10000 * (1.0 / 16) * (15.0 / 16));
  int outside = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto t = workloads::gen_indices(cfg, seed);
    std::map<std::uint64_t, int> freq;
    for (auto x : t.ids) ++freq[x];
    for (std::uint64_t r = 0; r < 16; ++r) {
      outside += std::fabs(freq[r] - 625.0) > 3 * sigma;
      EXPECT_LE(std::fabs(freq[r] - 625.0), 5 * sigma) << r;
    }
    EXPECT_NO_THROW(t.csr.check());
    EXPECT_EQ(t.csr.nnz(), 10000u);
  }
  EXPECT_LE(outside, 5);
}

TEST(GenIndices, ZipfHasAHotterTopRow) {
  auto top = [](const std::vector<std::uint64_t>& ids) {
    std::map<std::uint64_t, int> f;
    for (auto x : ids) ++f[x];
    int m = 0;
    for (auto [k, v] : f) m = std::max(m, v);
    return m;
  };
  auto u = workloads::gen_indices(workloads::LocalityConfig::preset(0, 256, 10000), 3);
  auto z = workloads::gen_indices(*workloads::LocalityConfig::parse("zipf1.1", 256, 10000), 3);
  EXPECT_GT(top(z.ids), top(u.ids));
}

TEST(GenIndices, DeterministicAndDegenerate) {
  auto cfg = workloads::LocalityConfig::preset(2, 100, 500);
  EXPECT_EQ(workloads::gen_indices(cfg, 4).ids, workloads::gen_indices(cfg, 4).ids);
  EXPECT_NE(workloads::gen_indices(cfg, 4).ids, workloads::gen_indices(cfg, 5).ids);
  for (int level = 0; level < 3; ++level) {
    auto one = workloads::gen_indices(workloads::LocalityConfig::preset(level, 1, 50), 2);
    EXPECT_TRUE(std::all_of(one.ids.begin(), one.ids.end(), [](auto x) { return x == 0; }));
  }
  EXPECT_FALSE(workloads::LocalityConfig::parse("zipf", 10, 10));
  EXPECT_FALSE(workloads::LocalityConfig::parse("gauss", 10, 10));
  auto zero = workloads::LocalityConfig::preset(1, 10, 10);
  zero.s = 0;
  EXPECT_THROW(zero.check(), ConfigError);
}

TEST(GenIndices, SkewOrdersReuseCdfs) {
  std::vector<workloads::CdfReport> r;
  for (int level = 0; level < 3; ++level)
    r.push_back(workloads::reuse_distance_cdf(
        workloads::gen_indices(workloads::LocalityConfig::preset(level, 4096, 100000), 17).ids));
  for (std::uint64_t k = 1; k <= 8192; k *= 2) {
    EXPECT_GE(r[1].at(k), r[0].at(k)) << k;
    EXPECT_GE(r[2].at(k), r[1].at(k)) << k;
  }
}

}  // namespace
}  // namespace ember
