// Acceptance checks: one pass/fail line per criterion. Exit status is the
// number of failing criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "ember/cli/cli.hpp"
#include "ember/decouple/decouple.hpp"
#include "ember/workloads/locality.hpp"

namespace {

using namespace ember;
using workloads::Kernel;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first failure and keeps going; the detail says what broke.
struct Check {
  Outcome out;
  void expect(bool ok, const std::string& what) {
    if (ok || !out.pass) {
      if (!ok) out.pass = false;
      return;
    }
    out.pass = false;
    out.detail = what;
  }
};

std::string num(double x) {
  std::ostringstream ss;
  ss << x;
  return ss.str();
}

dlc::Program compile(const scf::Function& fn, int opt, int vlen, bool stores = false,
                     std::map<std::string, slc::Hint> hints = {}) {
  cli::CompileOptions co;
  co.passes = passes::PassConfig::for_opt(opt, vlen);
  co.passes.store_streams = stores;
  co.passes.hints = std::move(hints);
  return cli::compile_text(scf::print_scf(fn), false, co).program;
}

std::uint64_t tokens(const vm::Counters& c) { return c.ctrl_pushes - 1; }  // callback tokens, done excluded

// SLS image with exactly `n` lookups in each of `b` segments.
Memory sls_inputs(std::uint64_t b, std::uint64_t n, std::uint64_t e, std::uint64_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> row(0, rows - 1);
  std::uniform_real_distribution<float> val(-1.0f, 1.0f);
  Memory m;
  Buffer ptrs = make_buffer(Elem::Index, {b + 1});
  for (std::uint64_t i = 0; i <= b; ++i) ptrs.data[i] = i * n;
  Buffer idxs = make_buffer(Elem::Index, {b * n});
  for (auto& x : idxs.data) x = row(rng);
  Buffer vals = make_buffer(Elem::F32, {rows, e});
  for (auto& x : vals.data) x = from_f32(val(rng));
  m.buffers["ptrs"] = std::move(ptrs);
  m.buffers["idxs"] = std::move(idxs);
  m.buffers["vals"] = std::move(vals);
  m.buffers["out"] = make_buffer(Elem::F32, {b, e});
  m.scalars["n_batches"] = b;
  m.scalars["emb_len"] = e;
  return m;
}

// 1. VM against the reference interpreter over the full matrix.
Outcome oracle_sweep() {
  Check c;
  int cells = 0;
  auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t emb[] = {1, 7, 33, 128, 64};
  const std::uint64_t rows[] = {64, 512, 4096, 1000, 4096};
  for (Kernel k : workloads::kAllKernels) {
    auto fn = workloads::build_kernel(k);
    for (int opt = 0; opt <= 3; ++opt)
      for (int vlen : {1, 2, 4, 8}) {
        auto p = compile(fn, opt, vlen);
        for (std::uint64_t s = 0; s < 5; ++s) {
          workloads::Dims d;
          d.segments = 3 + s;
          d.emb_len = emb[s];
          d.max_lookups = 2 + 2 * s;
          d.qblk = 1 + s % 3;
          d.kblk = 1 + (s + 1) % 3;
          d.table_rows = k == Kernel::SpAttn ? rows[s] / d.kblk : rows[s];
          auto in = workloads::kernel_inputs(k, d, 1000 + s);
          auto want = scf::interpret_scf(fn, in);
          auto got = vm::run_interleaved(p, in, {}, s);
          auto diff = cli::first_difference(want, got.memory);
          c.expect(diff.empty(), std::string(workloads::kernel_name(k)) + " opt" + std::to_string(opt) + " V" +
                                     std::to_string(vlen) + " seed " + std::to_string(s) + ": " + diff);
          ++cells;
        }
      }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 120.0, "sweep took " + num(secs) + " s");
  if (c.out.pass) c.out.detail = std::to_string(cells) + " cells bit-exact in " + num(std::round(secs * 10) / 10) + " s";
  return c.out;
}

// 2. SLS counter closed forms.
Outcome sls_counter_laws() {
  Check c;
  auto fn = workloads::build_kernel(Kernel::Sls);
  int configs = 0;
  for (std::uint64_t b : {2u, 5u})
    for (std::uint64_t n : {1u, 3u, 7u})
      for (std::uint64_t e : {8u, 13u, 16u})
        for (int v : {1, 2, 4, 8}) {
          auto in = sls_inputs(b, n, e, 50, b * 100 + n * 10 + e);
          std::uint64_t chunks = (e + v - 1) / v;
          vm::Counters k[4];
          for (int opt = 0; opt < 4; ++opt) k[opt] = vm::run(compile(fn, opt, v), in).counters;
          std::string at = " at B=" + std::to_string(b) + " n=" + std::to_string(n) + " E=" + std::to_string(e) +
                           " V=" + std::to_string(v);
          c.expect(tokens(k[0]) == b * n * e, "opt0 ctrl" + at);
          c.expect(tokens(k[1]) == b * n * chunks, "opt1 ctrl" + at);
          c.expect(tokens(k[2]) == b * n, "opt2 ctrl" + at);
          c.expect(tokens(k[3]) == b * n + b, "opt3 ctrl" + at);
          c.expect(k[0].data_elements == 3 * b * n * e, "opt0 data" + at);
          // Vector slots carry whole chunks, so the element law needs V | E.
          if (e % v == 0) c.expect(k[3].data_elements == b * n * e, "opt3 data" + at);
          ++configs;
        }
  // RM3-like: 16 segments of 256 lookups over a 16K x 128 table.
  auto in = sls_inputs(16, 256, 128, 16384, 7);
  auto k0 = vm::run(compile(fn, 0, 8), in).counters;
  auto k2 = vm::run(compile(fn, 2, 8), in).counters;
  c.expect(tokens(k0) == 16u * 256 * 128 && tokens(k2) == 16u * 256 && tokens(k0) == 128 * tokens(k2),
           "RM3 reduction " + std::to_string(tokens(k0)) + "/" + std::to_string(tokens(k2)));
  if (c.out.pass)
    c.out.detail = std::to_string(configs) + " configs exact; RM3 ctrl tokens " + std::to_string(tokens(k0)) + " -> " +
                   std::to_string(tokens(k2)) + " (128x)";
  return c.out;
}

// 3. Queue operations, opt0 vs opt1 at V=8 on the three DLRM shapes.
Outcome vectorization_reduction() {
  Check c;
  auto fn = workloads::build_kernel(Kernel::Sls);
  struct Rm {
    const char* name;
    std::uint64_t b, n, e;
  } rms[] = {{"RM1", 64, 64, 32}, {"RM2", 32, 128, 64}, {"RM3", 16, 256, 128}};
  auto p0 = compile(fn, 0, 8), p1 = compile(fn, 1, 8);
  std::string detail;
  for (const auto& rm : rms) {
    auto in = sls_inputs(rm.b, rm.n, rm.e, 16384, rm.e);
    auto k0 = vm::run(p0, in).counters, k1 = vm::run(p1, in).counters;
    std::uint64_t ops0 = k0.ctrl_pushes + k0.data_pushes, ops1 = k1.ctrl_pushes + k1.data_pushes;
    // One token and three slots per callback, plus the final done token.
    std::uint64_t lookups = rm.b * rm.n;
    std::uint64_t want0 = 4 * lookups * rm.e + 1, want1 = 4 * lookups * ((rm.e + 7) / 8) + 1;
    c.expect(ops0 == want0, std::string(rm.name) + " opt0 queue ops " + std::to_string(ops0) + " != " + std::to_string(want0));
    c.expect(ops1 == want1, std::string(rm.name) + " opt1 queue ops " + std::to_string(ops1) + " != " + std::to_string(want1));
    double ratio = static_cast<double>(ops0) / static_cast<double>(ops1);
    c.expect(ratio >= 4.0, std::string(rm.name) + " reduction " + num(ratio));
    detail += (detail.empty() ? "" : ", ") + std::string(rm.name) + " " + num(std::round(ratio * 100) / 100) + "x";
  }
  if (c.out.pass) c.out.detail = detail;
  return c.out;
}

// 4. SpAttn with store streams: nothing crosses the queues.
Outcome spattn_offload() {
  Check c;
  auto fn = workloads::build_kernel(Kernel::SpAttn);
  int runs = 0;
  for (std::uint64_t blk : {1u, 2u, 4u, 8u})
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      workloads::Dims d;
      d.qblk = blk;
      d.kblk = blk;
      d.emb_len = 16 + seed * 8;
      d.segments = 3 + seed;
      auto in = workloads::kernel_inputs(Kernel::SpAttn, d, seed);
      auto r = vm::run(compile(fn, 3, 4, true), in);
      std::string at = " at block " + std::to_string(blk) + " seed " + std::to_string(seed);
      c.expect(r.counters.callback_invocations == 0, "callbacks ran" + at);
      c.expect(r.counters.data_pushes == 0 && r.counters.data_elements == 0, "data queue used" + at);
      // Block replication: query row qb*q+qt, column (p-beg)*k+kt holds key row bcols[p]*k+kt.
      const auto& bptrs = in.buffer("bptrs").data;
      const auto& bcols = in.buffer("bcols").data;
      const Buffer& keys = in.buffer("keys");
      Buffer want = in.buffer("out");
      std::uint64_t e = d.emb_len, cols = want.shape[1];
      for (std::uint64_t qb = 0; qb + 1 < bptrs.size(); ++qb)
        for (std::uint64_t p = bptrs[qb]; p < bptrs[qb + 1]; ++p)
          for (std::uint64_t kt = 0; kt < blk; ++kt)
            for (std::uint64_t qt = 0; qt < blk; ++qt)
              for (std::uint64_t x = 0; x < e; ++x)
                want.data[((qb * blk + qt) * cols + (p - bptrs[qb]) * blk + kt) * e + x] =
                    keys.data[(bcols[p] * blk + kt) * e + x];
      c.expect(r.memory.buffer("out") == want, "output differs from block replication" + at);
      ++runs;
    }
  if (c.out.pass) c.out.detail = std::to_string(runs) + " runs, 0 callbacks, 0 data slots, output exact";
  return c.out;
}

// Brute-force stack distances: distinct other ids since the previous access,
// or none for a first access.
std::vector<std::optional<std::uint64_t>> stack_distances(const std::vector<std::uint64_t>& trace) {
  std::vector<std::optional<std::uint64_t>> out;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::set<std::uint64_t> seen;
    std::optional<std::uint64_t> d;
    for (std::size_t j = i; j-- > 0;) {
      if (trace[j] == trace[i]) {
        d = seen.size();
        break;
      }
      seen.insert(trace[j]);
    }
    out.push_back(d);
  }
  return out;
}

// 5. Cache hint direction and the LRU model.
Outcome cache_hints() {
  Check c;
  auto fn = workloads::build_kernel(Kernel::SpAttn);
  vm::VmConfig cfg;
  cfg.cache.enabled = true;
  std::string detail;
  for (std::uint64_t blk : {2u, 4u, 8u}) {
    workloads::Dims d;
    d.qblk = blk;
    d.kblk = blk;
    d.emb_len = 64;
    d.segments = 8;
    d.table_rows = 16;
    auto in = workloads::kernel_inputs(Kernel::SpAttn, d, blk);
    slc::Hint index{slc::CacheLevel::L2, false};
    auto llc_of = [&](slc::CacheLevel level) {
      auto p = compile(fn, 3, 8, true, {{"keys", {level, true}}, {"bptrs", index}, {"bcols", index}});
      return vm::run(p, in, cfg).counters.cache.llc_accesses();
    };
    auto l2 = llc_of(slc::CacheLevel::L2), llc = llc_of(slc::CacheLevel::LLC);
    c.expect(l2 < llc, "block " + std::to_string(blk) + ": L2-hinted " + std::to_string(l2) + " vs LLC " + std::to_string(llc));
    detail += (detail.empty() ? "" : ", ") + std::string("b") + std::to_string(blk) + " " + std::to_string(l2) + "<" +
              std::to_string(llc);
  }

  // Non-temporal requests never move L2 contents or order.
  std::mt19937_64 rng(11);
  vm::CacheConfig cc;
  cc.l2_lines = 16;
  cc.llc_lines = 64;
  vm::CacheModel model(cc);
  for (int i = 0; i < 10000; ++i) {
    bool nt = rng() % 3 == 0;
    std::uint64_t line = rng() % 128;
    auto before = model.l2().lines();
    model.access(line, slc::Hint{rng() % 2 ? slc::CacheLevel::L2 : slc::CacheLevel::LLC, !nt});
    if (nt) c.expect(model.l2().lines() == before, "non-temporal access changed L2");
  }

  // LRU hits equal the stack-distance prediction on 10^4-access traces.
  for (std::uint64_t ids : {50u, 400u, 3000u}) {
    std::uniform_int_distribution<std::uint64_t> id(0, ids - 1);
    std::vector<std::uint64_t> trace(10000);
    for (auto& x : trace) x = id(rng);
    auto dist = stack_distances(trace);
    for (std::uint64_t cap : {1u, 8u, 64u, 512u}) {
      vm::LruCache lru(cap);
      std::uint64_t hits = 0, want = 0;
      for (std::size_t i = 0; i < trace.size(); ++i) {
        bool hit = lru.touch(trace[i]);
        if (!hit) lru.insert(trace[i]);
        hits += hit;
        want += dist[i] && *dist[i] < cap;
      }
      c.expect(hits == want, "LRU " + std::to_string(hits) + " hits vs oracle " + std::to_string(want));
    }
  }
  if (c.out.pass) c.out.detail = "LLC accesses " + detail + "; LRU exact on 12 traces";
  return c.out;
}

// 6. Loop classification and the opt0 SLS program's shape.
Outcome classification() {
  Check c;
  auto sls = decouple::classify_loops(workloads::build_kernel(Kernel::Sls));
  c.expect(sls.loops.size() == 3, "SLS has " + std::to_string(sls.loops.size()) + " loops");
  for (const auto& l : sls.loops) c.expect(l.kind == decouple::LoopKind::Candidate, "SLS loop " + l.path + " not a candidate");
  auto mp = decouple::classify_loops(workloads::build_kernel(Kernel::Mp));
  const auto* trailing = mp.find("v/e");
  c.expect(trailing && trailing->kind == decouple::LoopKind::Workspace, "MP trailing loop not a workspace");
  c.expect(mp.candidates() == std::vector<std::string>{"v", "v/p", "v/p/e"}, "MP candidates");

  auto p = compile(workloads::build_kernel(Kernel::Sls), 0, 8);
  int pushes = 0, triggers = 0;
  for (const auto& m : p.access.marshals) {
    pushes += m.kind == dlc::Marshal::Push;
    triggers += m.kind == dlc::Marshal::Trigger;
  }
  c.expect(p.access.units.size() == 3, "units " + std::to_string(p.access.units.size()));
  // The reference listing declares seven streams: beg/end pointer loads, the
  // end position, the index load, and the row base, element address and
  // element load. The criterion's prose says six; the listing wins.
  c.expect(p.access.streams.size() == 7, "streams " + std::to_string(p.access.streams.size()));
  c.expect(pushes == 3 && triggers == 1, "pushes " + std::to_string(pushes) + ", triggers " + std::to_string(triggers));
  if (c.out.pass)
    c.out.detail = "SLS 3/3 candidates, MP v/e workspace; opt0 SLS: 3 units, 7 streams (listing count; criterion text says 6), "
                   "3 pushes + 1 callback";
  return c.out;
}

// 7. Random interleavings agree exactly.
Outcome determinism() {
  Check c;
  auto p = compile(workloads::build_kernel(Kernel::Sls), 2, 8);
  workloads::Dims d;
  d.segments = 6;
  d.emb_len = 20;
  auto in = workloads::kernel_inputs(Kernel::Sls, d, 4);
  vm::VmConfig cfg;
  cfg.data_capacity = 1;
  cfg.record_schedule = true;
  auto first = vm::run_interleaved(p, in, cfg, 0);
  std::set<std::string> schedules;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto r = vm::run_interleaved(p, in, cfg, seed);
    c.expect(r.memory == first.memory, "memory diverged at seed " + std::to_string(seed));
    c.expect(r.counters == first.counters, "counters diverged at seed " + std::to_string(seed));
    schedules.insert(r.schedule);
  }
  c.expect(schedules.size() > 1, "every seed produced the same schedule");
  if (c.out.pass) c.out.detail = "100 interleavings (" + std::to_string(schedules.size()) + " distinct schedules), 0 divergence";
  return c.out;
}

// Fraction of all accesses whose reuse distance is at most x (first
// accesses never count).
double hit_curve(const workloads::CdfReport& r, std::uint64_t x) {
  return r.at(x) * static_cast<double>(r.distances.size()) / static_cast<double>(r.accesses);
}

// 8. Reuse-distance toolkit.
Outcome characterization() {
  Check c;
  std::mt19937_64 rng(8);
  for (int t = 0; t < 1000; ++t) {
    std::uniform_int_distribution<std::uint64_t> id(0, 1 + t % 40);
    std::vector<std::uint64_t> trace(1 + t % 200);
    for (auto& x : trace) x = id(rng);
    auto r = workloads::reuse_distance_cdf(trace);
    std::vector<std::uint64_t> want;
    std::uint64_t cold = 0;
    for (const auto& d : stack_distances(trace)) {
      if (d) want.push_back(*d);
      else ++cold;
    }
    std::sort(want.begin(), want.end());
    c.expect(r.distances == want && r.cold == cold, "CDF differs from brute force on trace " + std::to_string(t));
    for (std::uint64_t cap = 1; cap <= 48; cap += 7) {
      auto hits = std::count_if(want.begin(), want.end(), [&](auto d) { return d < cap; });
      double predicted = static_cast<double>(hits) / static_cast<double>(trace.size());
      c.expect(workloads::lru_hit_rate(trace, cap) == predicted, "hit-rate identity on trace " + std::to_string(t));
    }
  }

  // One-sided two-sample Kolmogorov-Smirnov on the hit curves, alpha 0.01:
  // the more local preset must be significantly above the less local one,
  // and never significantly below it.
  const double alpha = 0.01;
  const std::uint64_t n = 100000, rows = 4096;
  std::vector<workloads::CdfReport> r;
  for (int level = 0; level < 3; ++level)
    r.push_back(workloads::reuse_distance_cdf(workloads::gen_indices(workloads::LocalityConfig::preset(level, rows, n), 21).ids));
  double crit = std::sqrt(-std::log(alpha) / 2 * (2.0 * n) / (static_cast<double>(n) * n));
  std::string detail;
  for (int lo = 0; lo < 2; ++lo) {
    double above = 0, below = 0;
    std::set<std::uint64_t> xs(r[lo].distances.begin(), r[lo].distances.end());
    xs.insert(r[lo + 1].distances.begin(), r[lo + 1].distances.end());
    for (auto x : xs) {
      double diff = hit_curve(r[lo + 1], x) - hit_curve(r[lo], x);
      above = std::max(above, diff);
      below = std::max(below, -diff);
    }
    std::string pair = "L" + std::to_string(lo + 1) + ">L" + std::to_string(lo);
    c.expect(above > crit, pair + " not significant (D=" + num(above) + ")");
    c.expect(below <= crit, pair + " violated (D=" + num(below) + ")");
    detail += (detail.empty() ? "" : ", ") + pair + " D+=" + num(std::round(above * 1000) / 1000) + " D-=" +
              num(std::round(below * 10000) / 10000);
  }
  if (c.out.pass) c.out.detail = "1000 traces exact; " + detail + " (critical " + num(std::round(crit * 10000) / 10000) + ")";
  return c.out;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  } all[] = {
      {"oracle equivalence sweep", oracle_sweep},
      {"SLS counter laws", sls_counter_laws},
      {"vectorization queue-operation reduction", vectorization_reduction},
      {"SpAttn full offload", spattn_offload},
      {"cache-hint direction and LRU model", cache_hints},
      {"decoupling classification and opt0 SLS shape", classification},
      {"determinism under interleaving", determinism},
      {"characterization toolkit", characterization},
  };
  int failed = 0, i = 0;
  for (const auto& cr : all) {
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %d: %s  %s (%s)\n", ++i, o.pass ? "PASS" : "FAIL", cr.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
