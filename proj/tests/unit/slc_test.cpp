#include <gtest/gtest.h>

#include "ember/slc/slc.hpp"
#include "test_util.hpp"

namespace ember {
namespace {

using test::floats;

const char* kSlsSlc = R"(
void sls(ptrs: mref<? x idx>, idxs: mref<? x idx>, vals: mref<? x emb_len x f32>,
         out: mref<n_batches x emb_len x f32>, n_batches: idx, emb_len: idx) {
  slc.for(str s_b from 0 to n_batches step 1) {
    str s_beg = slc.mem_str(ptrs[s_b]);
    str s_b1 = slc.alu_str('+', s_b, 1);
    str s_end = slc.mem_str(ptrs[s_b1]);
    slc.for(str s_p from s_beg to s_end step 1) {
      str s_i = slc.mem_str(idxs[s_p]);
      slc.for(str s_e from 0 to emb_len step 1) {
        str s_val = slc.mem_str(vals[s_i, s_e]);
        slc.callback {
          idx b = slc.to_val(s_b);
          idx e = slc.to_val(s_e);
          f32 val = slc.to_val(s_val);
          f32 acc = out[b, e];
          out[b, e] = acc + val;
        }
      }
    }
  }
}
)";

// Vectorized and bufferized form with a carried segment counter.
const char* kSlsBuffered = R"(
void sls(ptrs: mref<? x idx>, idxs: mref<? x idx>, vals: mref<? x emb_len x f32>,
         out: mref<n_batches x emb_len x f32>, n_batches: idx, emb_len: idx) {
  slc.for(str s_b from 0 to n_batches step 1) (idx i_b = 0) {
    str s_beg = slc.mem_str(ptrs[s_b]);
    str s_b1 = slc.alu_str('+', s_b, 1);
    str s_end = slc.mem_str(ptrs[s_b1]);
    slc.for(str s_p from s_beg to s_end step 1) {
      str s_i = slc.mem_str(idxs[s_p]);
      str s_val_buf = slcv.buf_str<4 x f32>();
      slcv.for<4>((str s_e, str msk) from 0 to emb_len step 1) {
        str s_val = slcv.mem_str<4>(vals[s_i, s_e], msk) hint(L2, nontemporal);
        slc.push(s_val_buf, s_val);
      }
      slcv.callback {
        buf<4 x f32> val_buf = slc.to_val(s_val_buf);
        for<4>(idx e from 0 to emb_len) bind(val <- val_buf) {
          vec<4 x i1> m = vmask<4>(e, emb_len);
          vec<4 x f32> acc = vload<4>(out[i_b, e], m);
          vstore<4>(acc + val, out[i_b, e], m);
        }
      }
    }
    slc.callback {
      i_b = i_b + 1;
    }
  }
}
)";

int depth(const std::vector<slc::BodyItem>& items) {
  int d = 0;
  for (const auto& it : items)
    if (it.is_loop()) d = std::max(d, 1 + depth(it.loop->body));
  return d;
}

bool has(const Diagnostics& d, const std::string& text) {
  for (const auto& x : d)
    if (x.message.find(text) != std::string::npos) return true;
  return false;
}

std::string dump(const Diagnostics& d) { return format_diagnostics(d); }

TEST(SlcParse, SlsIsThreeLevelNest) {
  auto fn = slc::parse_slc(kSlsSlc);
  EXPECT_EQ(depth(fn.body), 3);
  EXPECT_TRUE(slc::verify_slc(fn).empty()) << dump(slc::verify_slc(fn));
}

TEST(SlcParse, RoundTripIsFixpoint) {
  for (const char* src : {kSlsSlc, kSlsBuffered}) {
    auto fn = slc::parse_slc(src);
    auto text = slc::print_slc(fn);
    auto again = slc::parse_slc(text);
    EXPECT_TRUE(slc::equal(fn, again)) << text;
    EXPECT_EQ(slc::print_slc(again), text);
  }
}

TEST(SlcParse, StrayPushOutsideLoopIsError) {
  EXPECT_THROW(slc::parse_slc("void f(o: mref<4 x f32>) { slc.push(a, b); }"), ParseError);
}

TEST(SlcVerify, TwoSiblingLoopsRejected) {
  auto fn = slc::parse_slc(R"(void f(o: mref<4 x f32>) {
  slc.for(str s_a from 0 to 4 step 1) {
    slc.for(str s_x from 0 to 2 step 1) { slc.callback { o[0] = 1.0; } }
    slc.for(str s_y from 0 to 2 step 1) { slc.callback { o[1] = 1.0; } }
  }
})");
  EXPECT_TRUE(has(slc::verify_slc(fn), "at most one nested loop"));
}

TEST(SlcVerify, StreamReadWithoutToValRejected) {
  auto fn = slc::parse_slc(kSlsSlc);
  auto& cb = fn.body[0].loop->body[0].loop->body[0].loop->body[0].callback;
  cb.conversions.erase(cb.conversions.begin());  // drop `b`
  ir::rename_var(cb.body, "b", "s_b");
  EXPECT_TRUE(has(slc::verify_slc(fn), "reads stream 's_b' without to_val")) << dump(slc::verify_slc(fn));
}

TEST(SlcVerify, ChildStreamNotVisibleToParentCallback) {
  auto fn = slc::parse_slc(kSlsBuffered);
  auto& seg = *fn.body[0].loop->body[0].loop;
  seg.body[1].callback.conversions.push_back({"x", ir::Type::vector(Elem::F32, 4), "s_val", -1, 0});
  EXPECT_TRUE(has(slc::verify_slc(fn), "not in scope of the callback"));
}

TEST(SlcVerify, VectorLoadNeedsMask) {
  auto fn = slc::parse_slc(kSlsBuffered);
  auto& inner = *fn.body[0].loop->body[0].loop->body[0].loop;
  inner.decls[0].mask.clear();
  EXPECT_TRUE(has(slc::verify_slc(fn), "without mask"));
}

TEST(SlcVerify, PushIntoNonBufferRejected) {
  auto fn = slc::parse_slc(kSlsBuffered);
  auto& inner = *fn.body[0].loop->body[0].loop->body[0].loop;
  inner.decls[1].name = "s_i";
  EXPECT_TRUE(has(slc::verify_slc(fn), "not a buffer stream"));
}

TEST(SlcVerify, VectorStrideMustBeOne) {
  auto fn = slc::parse_slc(kSlsBuffered);
  fn.body[0].loop->body[0].loop->body[0].loop->stride = 2;
  EXPECT_TRUE(has(slc::verify_slc(fn), "stride must be 1"));
}

TEST(SlcVerify, CarriedUpdateOutsideLoopRejected) {
  auto fn = slc::parse_slc(kSlsBuffered);
  auto& seg = *fn.body[0].loop->body[0].loop;
  seg.body[1].callback.body.push_back(ir::set("i_b", ir::lit_index(0)));
  EXPECT_TRUE(has(slc::verify_slc(fn), "updated outside its loop"));
}

TEST(SlcInterpret, TinySls) {
  auto run = slc::interpret_slc(slc::parse_slc(kSlsSlc), test::tiny_sls_inputs());
  EXPECT_EQ(floats(run.memory.buffer("out")), (std::vector<float>{4, 6, 5, 6}));
  EXPECT_EQ(run.total_callbacks, 6u);  // B * n * E = 2 * 1.5 * 2
  EXPECT_EQ(run.callback_invocations.at("s_b/s_p/s_e/ite"), 6u);
}

TEST(SlcInterpret, BufferedVectorFormMatches) {
  auto run = slc::interpret_slc(slc::parse_slc(kSlsBuffered), test::tiny_sls_inputs());
  EXPECT_EQ(floats(run.memory.buffer("out")), (std::vector<float>{4, 6, 5, 6}));
  // One drain per segment entry plus one counter update per batch.
  EXPECT_EQ(run.callback_invocations.at("s_b/s_p/end"), 3u);
  EXPECT_EQ(run.callback_invocations.at("s_b/end"), 2u);
}

TEST(SlcInterpret, VectorLengthBeyondRowLengthMasksLanes) {
  // vlen 4 on emb_len 2: masked lanes neither load nor store.
  auto in = test::tiny_sls_inputs();
  auto run = slc::interpret_slc(slc::parse_slc(kSlsBuffered), in);
  EXPECT_EQ(run.memory.buffer("vals"), in.buffer("vals"));
}

TEST(SlcInterpret, NoCallbacksLeavesMemoryUnchanged) {
  auto fn = slc::parse_slc(R"(void f(a: mref<4 x idx>, o: mref<4 x f32>) {
  slc.for(str s_i from 0 to 4 step 1) {
    str s_a = slc.mem_str(a[s_i]);
  }
})");
  Memory m;
  m.buffers["a"] = test::idx_buffer({3, 2, 1, 0});
  m.buffers["o"] = test::f32_buffer({4}, {1, 2, 3, 4});
  auto run = slc::interpret_slc(fn, m);
  EXPECT_EQ(run.memory, m);
  EXPECT_EQ(run.total_callbacks, 0u);
}

TEST(SlcInterpret, StoreStreamWritesMemory) {
  auto fn = slc::parse_slc(R"(void f(a: mref<4 x f32>, o: mref<4 x f32>) {
  slc.for(str s_i from 0 to 4 step 1) {
    str s_a = slc.mem_str(a[s_i]);
    slc.store_str(o[s_i], s_a);
  }
})");
  Memory m;
  m.buffers["a"] = test::f32_buffer({4}, {1, 2, 3, 4});
  m.buffers["o"] = test::f32_buffer({4}, {0, 0, 0, 0});
  auto run = slc::interpret_slc(fn, m);
  EXPECT_EQ(floats(run.memory.buffer("o")), (std::vector<float>{1, 2, 3, 4}));
  EXPECT_EQ(run.store_stream_writes, 4u);
}

TEST(SlcCallbacks, TriggersFollowPosition) {
  auto fn = slc::parse_slc(kSlsBuffered);
  auto sites = slc::callback_sites(fn);
  ASSERT_EQ(sites.size(), 2u);
  EXPECT_EQ(sites[0].trigger, slc::Trigger::End);
  EXPECT_EQ(sites[0].event_loop->induction, "s_e");
  EXPECT_EQ(sites[1].trigger, slc::Trigger::End);
  EXPECT_EQ(sites[1].event_loop->induction, "s_p");
}

}  // namespace
}  // namespace ember
