#include <gtest/gtest.h>

#include <random>

#include "ember/scf/scf.hpp"
#include "ember/ir/text.hpp"
#include "test_util.hpp"

namespace ember {
namespace {

using test::floats;

int count_kind(const ir::Block& b, ir::StmtKind k) {
  int n = 0;
  ir::walk(b, [&](const ir::Stmt& s) { n += s.kind == k; }, [](const ir::Expr&) {});
  return n;
}

int count_loads(const ir::Block& b) {
  int n = 0;
  ir::walk(b, [](const ir::Stmt&) {}, [&](const ir::Expr& e) { n += e.kind == ir::ExprKind::Load; });
  return n;
}

int nest_depth(const ir::Block& b) {
  int d = 0;
  for (const auto& s : b)
    if (s.kind == ir::StmtKind::For) d = std::max(d, 1 + nest_depth(s.body));
  return d;
}

TEST(ScfParse, SlsHasThreeLoopsFourLoadsOneStore) {
  auto fn = scf::parse_scf(test::kSlsSource);
  EXPECT_EQ(nest_depth(fn.body), 3);
  EXPECT_EQ(count_kind(fn.body, ir::StmtKind::For), 3);
  // ptrs[b], ptrs[b+1], idxs[p], vals[i,e] plus the accumulator read.
  EXPECT_EQ(count_loads(fn.body), 5);
  EXPECT_EQ(count_kind(fn.body, ir::StmtKind::Store), 1);
}

TEST(ScfParse, LookupLoadsMatchListing) {
  // The listing's accumulate form `out[b,e] += val` desugars to a load and a
  // store, leaving four table/pointer loads besides the accumulator.
  auto fn = scf::parse_scf(R"(
void sls(ptrs: mref<? x idx>, idxs: mref<? x idx>, vals: mref<? x e_len x f32>,
         out: mref<? x e_len x f32>, nb: idx, e_len: idx) {
  for(idx b = 0; b < nb; b++) {
    for(idx p = ptrs[b]; p < ptrs[b + 1]; p++) {
      idx i = idxs[p];
      for(idx e = 0; e < e_len; e++) {
        out[b, e] += vals[i, e];
      }
    }
  }
})");
  int table_loads = 0;
  ir::walk(fn.body, [](const ir::Stmt&) {}, [&](const ir::Expr& e) {
    table_loads += e.kind == ir::ExprKind::Load && e.name != "out";
  });
  EXPECT_EQ(table_loads, 4);
  EXPECT_EQ(count_kind(fn.body, ir::StmtKind::Store), 1);
}

TEST(ScfParse, IdentityProgramIsOneStore) {
  auto fn = scf::parse_scf("void f(o: mref<1 x f32>){ o[0]=o[0]; }");
  ASSERT_EQ(fn.body.size(), 1u);
  EXPECT_EQ(fn.body[0].kind, ir::StmtKind::Store);
}

TEST(ScfParse, NegativeStrideRejected) {
  try {
    scf::parse_scf("void f(o: mref<4 x f32>, n: idx){ for(b=0; b<n; b--) { o[b] = 1.0; } }");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("stride must be positive literal"), std::string::npos) << e.what();
    EXPECT_EQ(e.loc().line, 1);
  }
}

TEST(ScfParse, ZeroStrideRejected) {
  EXPECT_THROW(scf::parse_scf("void f(o: mref<4 x f32>){ for(idx b=0; b<4; b += 0) { o[b] = 1.0; } }"), ParseError);
}

TEST(ScfParse, UndeclaredIdentifier) {
  try {
    scf::parse_scf("void f(o: mref<4 x f32>){\n  for(idx b=0; b<n; b++) { o[b] = 1.0; } }");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("undeclared identifier 'n'"), std::string::npos) << e.what();
    EXPECT_EQ(e.loc().line, 2);
  }
}

TEST(ScfParse, TypeMismatch) {
  EXPECT_THROW(scf::parse_scf("void f(o: mref<4 x f32>, x: mref<4 x idx>){ o[0] = x[0]; }"), ParseError);
  EXPECT_THROW(scf::parse_scf("void f(o: mref<4 x f32>){ f32 a = o[0]; f32 b = a / a; o[0] = b; }"), ParseError);
}

TEST(ScfParse, SyntaxErrorHasLocation) {
  try {
    scf::parse_scf("void f(o: mref<4 x f32>) {\n  o[0] = ;\n}");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.loc().line, 2);
    EXPECT_EQ(e.loc().col, 10);
  }
}

TEST(ScfParse, InductionVariableIsImmutable) {
  EXPECT_THROW(scf::parse_scf("void f(o: mref<4 x f32>){ for(idx b=0; b<4; b++) { b = 1; } }"), ParseError);
}

TEST(ScfParse, VectorSyntaxIsNotInputLanguage) {
  EXPECT_THROW(scf::parse_scf("void f(o: mref<4 x f32>){ vec<4 x f32> v = vload<4>(o[0]); }"), ParseError);
}

TEST(ScfPrint, RoundTripIsStructurallyEqual) {
  auto fn = scf::parse_scf(test::kSlsSource);
  auto again = scf::parse_scf(scf::print_scf(fn));
  EXPECT_TRUE(scf::equal(fn, again));
  EXPECT_EQ(scf::print_scf(again), scf::print_scf(fn));
}

TEST(ScfPrint, RoundTripKeepsParenthesesAndLiterals) {
  const char* src = R"(void f(a: mref<8 x f32>, i: mref<8 x i32>, n: idx) {
  for(idx k = 0; k < n; k += 2) {
    f32 x = a[k] - (a[k + 1] - 0.1);
    i32 y = i[k] * (i[k] + -3) % 5;
    a[k] = abs(x * 2.5) / 3.0;
    i[k] = y - (y - 1);
  }
})";
  EXPECT_THROW(scf::parse_scf(src), ParseError);  // f32 division is rejected
  std::string ok = src;
  ok.replace(ok.find("/ 3.0"), 5, "* 3.0");
  auto fn = scf::parse_scf(ok);
  auto printed = scf::print_scf(fn);
  EXPECT_TRUE(scf::equal(fn, scf::parse_scf(printed))) << printed;
  EXPECT_NE(printed.find("a[k] - (a[k + 1] - 0.1)"), std::string::npos) << printed;
  EXPECT_NE(printed.find("k += 2"), std::string::npos);
}

TEST(ScfInterpret, TinySls) {
  auto fn = scf::parse_scf(test::kSlsSource);
  auto out = scf::interpret_scf(fn, test::tiny_sls_inputs());
  EXPECT_EQ(floats(out.buffer("out")), (std::vector<float>{4, 6, 5, 6}));
}

TEST(ScfInterpret, EmptySegmentsLeaveOutputZero) {
  auto fn = scf::parse_scf(test::kSlsSource);
  auto in = test::tiny_sls_inputs();
  in.buffers["ptrs"] = test::idx_buffer({0, 0, 0});
  auto out = scf::interpret_scf(fn, in);
  EXPECT_EQ(floats(out.buffer("out")), (std::vector<float>{0, 0, 0, 0}));
}

TEST(ScfInterpret, Deterministic) {
  auto fn = scf::parse_scf(test::kSlsSource);
  auto in = test::tiny_sls_inputs();
  EXPECT_EQ(scf::interpret_scf(fn, in), scf::interpret_scf(fn, in));
}

TEST(ScfInterpret, BoundsErrorNamesBufferAndLoopState) {
  auto fn = scf::parse_scf(test::kSlsSource);
  auto in = test::tiny_sls_inputs();
  in.buffers["idxs"] = test::idx_buffer({1, 7, 2});
  try {
    scf::interpret_scf(fn, in);
    FAIL();
  } catch (const BoundsError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("vals[7,0]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("b=0, p=1, e=0"), std::string::npos) << msg;
  }
}

TEST(ScfInterpret, FuzzedOutOfRangeIndicesAlwaysRaise) {
  auto fn = scf::parse_scf(test::kSlsSource);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto in = test::tiny_sls_inputs();
    auto& idxs = in.buffers["idxs"].data;
    std::size_t pos = rng() % idxs.size();
    idxs[pos] = 3 + rng() % 1000;  // table has 3 rows
    EXPECT_THROW(scf::interpret_scf(fn, in), BoundsError);
  }
  for (int trial = 0; trial < 50; ++trial) {
    auto in = test::tiny_sls_inputs();
    in.buffers["ptrs"].data[1 + rng() % 2] = 4 + rng() % 100;  // past idxs
    EXPECT_THROW(scf::interpret_scf(fn, in), BoundsError);
  }
}

TEST(ScfInterpret, MissingBindingIsConfigError) {
  auto fn = scf::parse_scf(test::kSlsSource);
  auto in = test::tiny_sls_inputs();
  in.buffers.erase("vals");
  EXPECT_THROW(scf::interpret_scf(fn, in), ConfigError);
}

TEST(ScfVerify, ClassifiesSlsMemrefs) {
  auto r = scf::verify_scf(scf::parse_scf(test::kSlsSource));
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.read_only, (std::set<std::string>{"ptrs", "idxs", "vals"}));
  EXPECT_EQ(r.written, (std::set<std::string>{"out"}));
}

TEST(ScfVerify, StoreIntoIndexArrayMakesItWritten) {
  auto fn = scf::parse_scf(R"(void f(idxs: mref<? x idx>, vals: mref<? x f32>, n: idx) {
  for(idx p = 0; p < n; p++) { idx i = idxs[p]; idxs[p] = i + 1; f32 v = vals[i]; }
})");
  auto r = scf::verify_scf(fn);
  EXPECT_TRUE(r.written.count("idxs"));
  EXPECT_FALSE(r.read_only.count("idxs"));
  EXPECT_TRUE(r.read_only.count("vals"));
}

TEST(ScfVerify, ReportsUndeclaredScalarInBuiltFunction) {
  scf::Function fn;
  fn.sig.name = "g";
  fn.sig.params.push_back({"o", true, Elem::F32, {Dim{Dim::Static, 4, ""}}});
  fn.body.push_back(ir::for_loop("b", ir::lit_index(0), ir::var("n"), 1,
                                 {ir::store("o", {ir::var("b")}, ir::lit_f32(1))}));
  auto r = scf::verify_scf(fn);
  ASSERT_EQ(r.diags.size(), 1u);
  EXPECT_NE(r.diags[0].message.find("undeclared identifier 'n'"), std::string::npos);
}

TEST(ScfVerify, ReportsAssignmentToInduction) {
  scf::Function fn;
  fn.sig.name = "g";
  fn.sig.params.push_back({"o", true, Elem::F32, {Dim{Dim::Static, 4, ""}}});
  fn.body.push_back(ir::for_loop("b", ir::lit_index(0), ir::lit_index(4), 1,
                                 {ir::set("b", ir::lit_index(2))}));
  auto r = scf::verify_scf(fn);
  ASSERT_EQ(r.diags.size(), 1u);
  EXPECT_EQ(r.diags[0].path, "for b/stmt 0");
}

}  // namespace
}  // namespace ember
