#include "ember/workloads/kernels.hpp"

#include <map>

#include "ember/decouple/decouple.hpp"

namespace ember::workloads {

const char* kernel_name(Kernel k) {
  switch (k) {
    case Kernel::Sls: return "sls";
    case Kernel::Spmm: return "spmm";
    case Kernel::Mp: return "mp";
    case Kernel::Kg: return "kg";
    case Kernel::SpAttn: return "spattn";
  }
  return "?";
}

std::optional<Kernel> parse_kernel(const std::string& name) {
  for (Kernel k : kAllKernels)
    if (name == kernel_name(k)) return k;
  return std::nullopt;
}

namespace {

// Sum of embedding rows per segment.
const char* kSls = R"(void sls(ptrs: mref<? x idx>, idxs: mref<? x idx>, vals: mref<? x emb_len x f32>,
         out: mref<n_batches x emb_len x f32>, n_batches: idx, emb_len: idx) {
  for(idx b = 0; b < n_batches; b++) {
    idx beg = ptrs[b];
    idx end = ptrs[b + 1];
    for(idx p = beg; p < end; p++) {
      idx i = idxs[p];
      for(idx e = 0; e < emb_len; e++) {
        f32 val = vals[i, e];
        f32 acc = out[b, e];
        out[b, e] = acc + val;
      }
    }
  }
}
)";

// CSR matrix times dense matrix: rows are scaled before accumulation.
const char* kSpmm = R"(void spmm(ptrs: mref<? x idx>, idxs: mref<? x idx>, avals: mref<? x f32>,
          vals: mref<? x emb_len x f32>, out: mref<n_rows x emb_len x f32>, n_rows: idx, emb_len: idx) {
  for(idx b = 0; b < n_rows; b++) {
    idx beg = ptrs[b];
    idx end = ptrs[b + 1];
    for(idx p = beg; p < end; p++) {
      idx i = idxs[p];
      f32 a = avals[p];
      for(idx e = 0; e < emb_len; e++) {
        f32 val = vals[i, e];
        f32 acc = out[b, e];
        out[b, e] = acc + a * val;
      }
    }
  }
}
)";

// Edge-weighted messages reduced into `tmp`, then folded into the vertex's
// output row scaled by its own features; `tmp` is reset for the next vertex.
const char* kMp = R"(void mp(ptrs: mref<? x idx>, idxs: mref<? x idx>, avals: mref<? x f32>,
        feat: mref<? x emb_len x f32>, tmp: mref<emb_len x f32>, out: mref<n_nodes x emb_len x f32>,
        n_nodes: idx, emb_len: idx) {
  for(idx v = 0; v < n_nodes; v++) {
    idx beg = ptrs[v];
    idx end = ptrs[v + 1];
    for(idx p = beg; p < end; p++) {
      idx u = idxs[p];
      f32 a = avals[p];
      for(idx e = 0; e < emb_len; e++) {
        f32 xv = feat[v, e];
        f32 xu = feat[u, e];
        f32 t = tmp[e];
        tmp[e] = t + a * (xv * xu);
      }
    }
    for(idx e = 0; e < emb_len; e++) {
      f32 t = tmp[e];
      f32 xv = feat[v, e];
      f32 o = out[v, e];
      out[v, e] = o + t * xv;
      tmp[e] = 0.0;
    }
  }
}
)";

// One (head, relation, tail) triple per sample; score is a norm of h + r - t.
const char* kKgL1 = R"(void kg(hidx: mref<? x idx>, ridx: mref<? x idx>, tidx: mref<? x idx>,
        ent: mref<? x emb_len x f32>, rel: mref<? x emb_len x f32>, score: mref<n_triples x f32>,
        n_triples: idx, emb_len: idx) {
  for(idx s = 0; s < n_triples; s++) {
    idx h = hidx[s];
    idx r = ridx[s];
    idx t = tidx[s];
    for(idx e = 0; e < emb_len; e++) {
      f32 hv = ent[h, e];
      f32 rv = rel[r, e];
      f32 tv = ent[t, e];
      f32 acc = score[s];
      score[s] = acc + abs(hv + rv - tv);
    }
  }
}
)";

const char* kKgL2 = R"(void kg(hidx: mref<? x idx>, ridx: mref<? x idx>, tidx: mref<? x idx>,
        ent: mref<? x emb_len x f32>, rel: mref<? x emb_len x f32>, score: mref<n_triples x f32>,
        n_triples: idx, emb_len: idx) {
  for(idx s = 0; s < n_triples; s++) {
    idx h = hidx[s];
    idx r = ridx[s];
    idx t = tidx[s];
    for(idx e = 0; e < emb_len; e++) {
      f32 hv = ent[h, e];
      f32 rv = rel[r, e];
      f32 tv = ent[t, e];
      f32 d = hv + rv - tv;
      f32 acc = score[s];
      score[s] = acc + d * d;
    }
  }
}
)";

// Block-sparse attention gather: for each query block, every listed key block
// is copied once per query row of the block.
const char* kSpAttn = R"(void spattn(bptrs: mref<? x idx>, bcols: mref<? x idx>, keys: mref<? x emb_len x f32>,
            out: mref<? x ? x emb_len x f32>, n_qblocks: idx, qblk: idx, kblk: idx, emb_len: idx) {
  for(idx qb = 0; qb < n_qblocks; qb++) {
    idx beg = bptrs[qb];
    idx end = bptrs[qb + 1];
    for(idx p = beg; p < end; p++) {
      idx kb = bcols[p];
      for(idx kt = 0; kt < kblk; kt++) {
        for(idx qt = 0; qt < qblk; qt++) {
          for(idx e = 0; e < emb_len; e++) {
            f32 v = keys[kb * kblk + kt, e];
            out[qb * qblk + qt, (p - beg) * kblk + kt, e] = v;
          }
        }
      }
    }
  }
}
)";

using Types = std::map<std::string, Elem>;

Elem elem_of(const ir::ExprP& e, const Signature& sig, const Types& vars) {
  switch (e->kind) {
    case ir::ExprKind::Lit: return e->elem;
    case ir::ExprKind::Var: {
      auto it = vars.find(e->name);
      if (it != vars.end()) return it->second;
      const Param* p = sig.find(e->name);
      return p ? p->elem : Elem::Index;
    }
    case ir::ExprKind::Load: return sig.find(e->name)->elem;
    default: return elem_of(e->args[0], sig, vars);
  }
}

int count_expr(const ir::ExprP& e, const Signature& sig, const Types& vars) {
  if (!e) return 0;
  int n = 0;
  if (e->kind == ir::ExprKind::Abs || (e->kind == ir::ExprKind::Bin && elem_of(e, sig, vars) == Elem::F32)) ++n;
  if (e->kind == ir::ExprKind::Load) return n;  // index arithmetic is not compute
  for (const auto& a : e->args) n += count_expr(a, sig, vars);
  return n;
}

int count_f32_ops(const ir::Block& b, const Signature& sig, Types vars) {
  int n = 0;
  for (const auto& s : b) {
    n += count_expr(s.value, sig, vars);
    if (s.kind == ir::StmtKind::Let) vars[s.name] = s.type.elem;
    if (s.kind == ir::StmtKind::For) {
      Types inner = vars;
      inner[s.name] = Elem::Index;
      n += count_f32_ops(s.body, sig, inner);
    }
  }
  return n;
}

}  // namespace

std::string kernel_source(Kernel k, KgNorm norm) {
  switch (k) {
    case Kernel::Sls: return kSls;
    case Kernel::Spmm: return kSpmm;
    case Kernel::Mp: return kMp;
    case Kernel::Kg: return norm == KgNorm::L1 ? kKgL1 : kKgL2;
    case Kernel::SpAttn: return kSpAttn;
  }
  return "";
}

scf::Function build_kernel(Kernel k, KgNorm norm) { return scf::parse_scf(kernel_source(k, norm)); }

std::pair<int, int> compute_per_lookup(const scf::Function& fn) {
  decouple::Classification cls;
  decouple::lower_scf_to_slc(fn, &cls);
  int loads = 0;
  for (const auto& l : cls.loads) {
    if (!l.offloadable) continue;
    std::string m = l.load.substr(0, l.load.find('['));
    const Param* p = fn.sig.find(m);
    if (p && p->elem == Elem::F32 && p->shape.size() == 2) ++loads;
  }
  int ops = count_f32_ops(fn.body, fn.sig, {});
  return {ops, loads};
}

}  // namespace ember::workloads
