#include "ember/cli/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "ember/common/memory_json.hpp"
#include "ember/decouple/decouple.hpp"
#include "ember/workloads/locality.hpp"

namespace ember::cli {

using nlohmann::json;

const std::vector<std::string>& dump_stages() {
  static const std::vector<std::string> stages{"scf", "classify", "slc", "slcv", "dlc"};
  return stages;
}

namespace {

// Runs one pipeline stage, tagging parse errors with the stage name.
template <class F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw VerifyError(name, {{"", e.what()}});
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

bool ends_with(const std::string& s, const std::string& tail) {
  return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
}

}  // namespace

CompileOutput compile_text(std::string_view text, bool is_slc, const CompileOptions& opts,
                           const std::function<void(slc::Function&)>& mutate) {
  CompileOutput out;
  auto want = [&](const char* s) { return opts.dump_ir.count(s) > 0; };
  slc::Function fn;
  if (is_slc) {
    fn = stage("slc", [&] { return slc::parse_slc(text); });
    auto d = slc::verify_slc(fn);
    if (!d.empty()) throw VerifyError("slc", d);
  } else {
    auto src = stage("scf", [&] { return scf::parse_scf(text); });
    auto v = scf::verify_scf(src);
    if (!v.ok()) throw VerifyError("scf", v.diags);
    if (want("scf")) out.dumps.emplace_back("scf", scf::print_scf(src));
    decouple::Classification cls;
    fn = decouple::lower_scf_to_slc(src, &cls);
    if (want("classify")) out.dumps.emplace_back("classify.json", decouple::classification_json(cls));
    if (want("slc")) out.dumps.emplace_back("slc", slc::print_slc(fn));
  }
  for (const auto& [name, hint] : opts.passes.hints) {
    const Param* prm = fn.sig.find(name);
    if (!prm || !prm->is_memref) throw ConfigError("hint names '" + name + "', which is not a memref of '" + fn.sig.name + "'");
  }
  int step = 0;
  fn = passes::run_passes(std::move(fn), opts.passes, out.notes, [&](const std::string& pass, const slc::Function& f) {
    if (want("slcv")) out.dumps.emplace_back(std::to_string(++step) + "-" + pass + ".slcv", slc::print_slc(f));
  });
  if (mutate) mutate(fn);
  auto d = slc::verify_slc(fn);
  if (!d.empty()) throw VerifyError("passes", d);
  out.program = dlc::lower_slc_to_dlc(fn);
  if (want("dlc")) out.dumps.emplace_back("dlc", dlc::print_dlc(out.program));
  return out;
}

std::pair<std::string, slc::Hint> parse_hint(const std::string& text) {
  auto bad = [&] { return ConfigError("hint '" + text + "' is not memref=L1|L2|LLC,temporal|nontemporal"); };
  auto eq = text.find('='), comma = text.find(',');
  if (eq == std::string::npos || eq == 0 || comma == std::string::npos || comma < eq) throw bad();
  std::string level = text.substr(eq + 1, comma - eq - 1), kind = text.substr(comma + 1);
  slc::Hint h;
  if (level == "L1") h.level = slc::CacheLevel::L1;
  else if (level == "L2") h.level = slc::CacheLevel::L2;
  else if (level == "LLC") h.level = slc::CacheLevel::LLC;
  else throw bad();
  if (kind == "temporal") h.temporal = true;
  else if (kind == "nontemporal") h.temporal = false;
  else throw bad();
  return {text.substr(0, eq), h};
}

std::vector<std::string> written_memrefs(const dlc::Program& p) {
  std::set<std::string> names;
  for (const auto& m : p.access.marshals)
    if (m.kind == dlc::Marshal::Store) names.insert(m.memref);
  for (const auto& a : p.execute.arms)
    for (const auto& n : ir::stored_memrefs(a.body)) names.insert(n);
  return {names.begin(), names.end()};
}

json stats_json(const vm::VmResult& r) {
  const auto& c = r.counters;
  json j;
  j["schema"] = "ember.stats/1";
  j["counters"] = {{"ctrl_pushes", c.ctrl_pushes},
                   {"ctrl_pops", c.ctrl_pops},
                   {"data_pushes", c.data_pushes},
                   {"data_pops", c.data_pops},
                   {"data_elements", c.data_elements},
                   {"data_elements_popped", c.data_elements_popped},
                   {"mem_requests_access", c.mem_requests_access},
                   {"mem_requests_execute", c.mem_requests_execute},
                   {"callback_invocations", c.callback_invocations},
                   {"store_stream_writes", c.store_stream_writes}};
  j["cache"] = {{"l2_hits", c.cache.l2_hits},   {"l2_misses", c.cache.l2_misses},
                {"llc_hits", c.cache.llc_hits}, {"llc_misses", c.cache.llc_misses},
                {"elements", c.cache.elements}, {"llc_accesses", c.cache.llc_accesses()},
                {"apke", c.cache.apke()}};
  j["arm_invocations"] = r.arm_invocations;
  return j;
}

std::string first_difference(const Memory& want, const Memory& got) {
  for (const auto& [name, w] : want.buffers) {
    auto it = got.buffers.find(name);
    if (it == got.buffers.end()) return "buffer '" + name + "' is missing";
    const Buffer& g = it->second;
    if (g.shape != w.shape) return "buffer '" + name + "' changed shape";
    for (std::size_t i = 0; i < w.data.size(); ++i)
      if (w.data[i] != g.data[i])
        return name + "[" + std::to_string(i) + "] = " + format_value(g.elem, g.data[i]) + ", expected " +
               format_value(w.elem, w.data[i]);
  }
  if (want.scalars != got.scalars) return "scalars differ";
  return "";
}

std::vector<VerifyCell> verify_matrix(const scf::Function& fn, const std::function<Memory(std::uint64_t)>& inputs,
                                      const VerifyOptions& opts, const std::function<void(slc::Function&)>& mutate) {
  std::vector<VerifyCell> cells;
  auto text = scf::print_scf(fn);
  for (int opt : opts.opts)
    for (int vlen : opts.vlens) {
      CompileOptions co;
      co.passes = passes::PassConfig::for_opt(opt, vlen);
      co.passes.store_streams = opts.store_streams;
      auto prog = compile_text(text, false, co, mutate).program;
      for (std::uint64_t k = 0; k < opts.seeds; ++k) {
        VerifyCell c;
        c.opt = opt;
        c.vlen = vlen;
        c.seed = opts.base_seed + k;
        Memory in = inputs(c.seed);
        Memory want = scf::interpret_scf(fn, in);
        auto r = vm::run_interleaved(prog, in, opts.vm, c.seed);
        c.mismatch = first_difference(want, r.memory);
        c.pass = c.mismatch.empty();
        c.counters = r.counters;
        cells.push_back(c);
        if (!c.pass) return cells;
      }
    }
  return cells;
}

namespace {

struct Context {
  std::ostream& out;
  std::ostream& err;
  bool color = false;

  void error(const std::string& text) const {
    err << (color ? "\033[1;31merror:\033[0m " : "error: ") << text << "\n";
  }
  void note(const std::string& text) const { err << (color ? "\033[1;36mnote:\033[0m " : "note: ") << text << "\n"; }
};

void add_dims(CLI::App* app, workloads::Dims& d) {
  app->add_option("--segments", d.segments, "outer trip count")->capture_default_str();
  app->add_option("--table-rows", d.table_rows, "embedding table rows (key blocks for spattn)")->capture_default_str();
  app->add_option("--emb-len", d.emb_len, "embedding length")->capture_default_str();
  app->add_option("--max-lookups", d.max_lookups, "lookups per segment, at most")->capture_default_str();
  app->add_option("--qblk", d.qblk, "query block size")->capture_default_str();
  app->add_option("--kblk", d.kblk, "key block size")->capture_default_str();
}

void add_vm(CLI::App* app, vm::VmConfig& c) {
  app->add_option("--ctrl-capacity", c.ctrl_capacity, "control queue capacity in tokens")->capture_default_str();
  app->add_option("--data-capacity", c.data_capacity, "data queue capacity in slots")->capture_default_str();
  app->add_flag("--cache", c.cache.enabled, "model the L2/LLC hierarchy for access loads");
  app->add_option("--l2-lines", c.cache.l2_lines)->capture_default_str();
  app->add_option("--llc-lines", c.cache.llc_lines)->capture_default_str();
  app->add_option("--line-elems", c.cache.line_elems)->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const char* color_env = std::getenv("EMBER_COLOR");
  Context cx{out, err, color_env && *color_env && std::string(color_env) != "0"};

  CLI::App app{"ember: decoupled access/execute compiler and simulator", "ember"};
  app.require_subcommand(1);

  // compile
  std::string c_input, c_output, c_dump_dir = ".";
  int c_opt = 0, c_vlen = 8;
  bool c_store = false;
  std::vector<std::string> c_hints, c_dumps;
  auto* compile = app.add_subcommand("compile", "lower a .scf (or dumped .slc) file to DLC text");
  compile->add_option("input", c_input, "source file")->required();
  compile->add_option("-o,--output", c_output, "DLC output file (default: stdout)");
  compile->add_option("--opt", c_opt, "optimization level")->check(CLI::Range(0, 3))->capture_default_str();
  compile->add_option("--vlen", c_vlen, "vector length")->capture_default_str();
  compile->add_option("--hint", c_hints, "memref=L1|L2|LLC,temporal|nontemporal");
  compile->add_flag("--store-streams", c_store, "offload copy callbacks as store streams");
  compile->add_option("--dump-ir", c_dumps, "scf, classify, slc, slcv or dlc")->check(CLI::IsMember(dump_stages()));
  compile->add_option("--dump-dir", c_dump_dir, "directory for --dump-ir files")->capture_default_str();

  // run
  std::string r_prog, r_data, r_out, r_stats;
  std::optional<std::uint64_t> r_seed;
  bool r_trace = false;
  vm::VmConfig r_cfg;
  auto* runc = app.add_subcommand("run", "execute a DLC program on a memory image");
  runc->add_option("program", r_prog, "DLC file")->required();
  runc->add_option("data", r_data, "memory image JSON")->required();
  runc->add_option("-o,--output", r_out, "written memrefs as JSON (default: stdout)");
  runc->add_option("--stats", r_stats, "counter JSON file");
  runc->add_option("--seed", r_seed, "interleave the engines randomly from this seed (default: round-robin)");
  runc->add_flag("--schedule", r_trace, "print the engine schedule to stderr");
  add_vm(runc, r_cfg);

  // verify
  std::string v_input, v_data, v_report;
  VerifyOptions v_opts;
  auto* verify = app.add_subcommand("verify", "compare the VM with the reference interpreter over an opt/vlen matrix");
  verify->add_option("input", v_input, "kernel name or .scf file")->required();
  verify->add_option("--opt", v_opts.opts, "levels to check")->check(CLI::Range(0, 3));
  verify->add_option("--vlen", v_opts.vlens, "vector lengths to check");
  verify->add_option("--seeds", v_opts.seeds, "random inputs per cell")->capture_default_str();
  verify->add_option("--seed", v_opts.base_seed, "first seed")->capture_default_str();
  verify->add_flag("--store-streams", v_opts.store_streams);
  verify->add_option("--data", v_data, "fixed memory image instead of generated inputs");
  verify->add_option("--report", v_report, "write the cell table as JSON");
  add_dims(verify, v_opts.dims);
  add_vm(verify, v_opts.vm);

  // cdf
  std::string d_trace, d_gen, d_out;
  std::uint64_t d_rows = 1024, d_lookups = 10000, d_seed = 1;
  std::vector<std::uint64_t> d_caps;
  auto* cdf = app.add_subcommand("cdf", "reuse-distance CDF of a lookup trace");
  cdf->add_option("trace", d_trace, "trace file, one id per line");
  cdf->add_option("--gen", d_gen, "generate: uniform, zipf<s>, L0, L1 or L2");
  cdf->add_option("--rows", d_rows)->capture_default_str();
  cdf->add_option("--lookups", d_lookups)->capture_default_str();
  cdf->add_option("--seed", d_seed)->capture_default_str();
  cdf->add_option("--capacity", d_caps, "LRU capacities to report hit rates for");
  cdf->add_option("-o,--output", d_out, "JSON output (default: stdout)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kDiagnostics;
  }

  try {
    if (*compile) {
      CompileOptions co;
      co.passes = passes::PassConfig::for_opt(c_opt, c_vlen);
      co.passes.store_streams = c_store;
      for (const auto& h : c_hints) co.passes.hints.insert(parse_hint(h));
      co.passes.validate();
      co.dump_ir.insert(c_dumps.begin(), c_dumps.end());
      bool is_slc = ends_with(c_input, ".slc") || ends_with(c_input, ".slcv");
      auto res = compile_text(read_file(c_input), is_slc, co);
      for (const auto& n : res.notes) cx.note(n.path.empty() ? n.message : n.path + ": " + n.message);
      std::string stem = res.program.sig.name;
      for (const auto& [suffix, text] : res.dumps) write_file(c_dump_dir + "/" + stem + "." + suffix, text);
      auto text = dlc::print_dlc(res.program);
      if (c_output.empty()) out << text;
      else write_file(c_output, text);
      return kOk;
    }

    if (*runc) {
      auto prog = stage("dlc", [&] { return dlc::parse_dlc(read_file(r_prog)); });
      auto mem = memory_from_json(prog.sig, json::parse(read_file(r_data)));
      r_cfg.record_schedule = r_trace;
      auto res = r_seed ? vm::run_interleaved(prog, mem, r_cfg, *r_seed) : vm::run(prog, mem, r_cfg);
      auto written = memory_to_json(res.memory, written_memrefs(prog)).dump(2) + "\n";
      if (r_out.empty()) out << written;
      else write_file(r_out, written);
      if (!r_stats.empty()) write_file(r_stats, stats_json(res).dump(2) + "\n");
      if (r_trace) err << res.schedule << "\n";
      return kOk;
    }

    if (*verify) {
      std::optional<workloads::Kernel> kernel = workloads::parse_kernel(v_input);
      scf::Function fn;
      if (kernel) {
        fn = workloads::build_kernel(*kernel);
      } else {
        fn = stage("scf", [&] { return scf::parse_scf(read_file(v_input)); });
        kernel = workloads::parse_kernel(fn.sig.name);
      }
      v_opts.dims.integer_values = false;
      v_opts.dims.check();
      std::function<Memory(std::uint64_t)> inputs;
      if (!v_data.empty()) {
        Memory fixed = memory_from_json(fn.sig, json::parse(read_file(v_data)));
        inputs = [fixed](std::uint64_t) { return fixed; };
      } else if (kernel) {
        inputs = [&](std::uint64_t seed) { return workloads::kernel_inputs(*kernel, v_opts.dims, seed); };
      } else {
        throw ConfigError("'" + fn.sig.name + "' is not a known kernel; pass --data");
      }
      auto cells = verify_matrix(fn, inputs, v_opts);
      json report = json::array();
      out << "opt vlen seed  result  ctrl  data_elems  callbacks\n";
      for (const auto& c : cells) {
        out << "  " << c.opt << "  " << c.vlen << "    " << c.seed << "   " << (c.pass ? "pass" : "FAIL") << "   "
            << c.counters.ctrl_pushes << "  " << c.counters.data_elements << "  " << c.counters.callback_invocations
            << "\n";
        report.push_back({{"opt", c.opt},
                          {"vlen", c.vlen},
                          {"seed", c.seed},
                          {"pass", c.pass},
                          {"mismatch", c.mismatch},
                          {"ctrl_pushes", c.counters.ctrl_pushes},
                          {"data_elements", c.counters.data_elements},
                          {"callback_invocations", c.counters.callback_invocations}});
      }
      if (!v_report.empty()) write_file(v_report, report.dump(2) + "\n");
      if (!cells.empty() && !cells.back().pass) {
        const auto& c = cells.back();
        cx.error("mismatch at opt " + std::to_string(c.opt) + " vlen " + std::to_string(c.vlen) + " seed " +
                 std::to_string(c.seed) + ": " + c.mismatch);
        return kDiagnostics;
      }
      out << cells.size() << " cells pass\n";
      return kOk;
    }

    if (*cdf) {
      std::vector<std::uint64_t> trace;
      if (!d_gen.empty()) {
        auto cfg = workloads::LocalityConfig::parse(d_gen, d_rows, d_lookups);
        if (!cfg) throw ConfigError("unknown generator '" + d_gen + "'");
        trace = workloads::gen_indices(*cfg, d_seed).ids;
      } else if (!d_trace.empty()) {
        trace = workloads::read_trace(d_trace);
      } else {
        throw ConfigError("cdf needs a trace file or --gen");
      }
      if (trace.empty()) throw ConfigError("the trace is empty");
      auto rep = workloads::reuse_distance_cdf(trace);
      json j;
      j["schema"] = "ember.cdf/1";
      j["cdf"] = json::array();
      for (const auto& [d, f] : rep.cdf) j["cdf"].push_back({d, f});
      j["cold"] = rep.cold;
      j["accesses"] = rep.accesses;
      j["hit_rates"] = json::array();
      for (auto c : d_caps) j["hit_rates"].push_back({{"capacity", c}, {"rate", workloads::lru_hit_rate(trace, c)}});
      auto text = j.dump(2) + "\n";
      if (d_out.empty()) out << text;
      else write_file(d_out, text);
      return kOk;
    }
  } catch (const DeadlockError& e) {
    cx.error(e.what());
    return kDeadlock;
  } catch (const BoundsError& e) {
    cx.error(e.what());
    return kBounds;
  } catch (const VerifyError& e) {
    for (const auto& d : e.diagnostics())
      cx.error(e.stage() + ": " + (d.path.empty() ? d.message : d.path + ": " + d.message));
    return kDiagnostics;
  } catch (const json::exception& e) {
    cx.error(std::string("json: ") + e.what());
    return kDiagnostics;
  } catch (const Error& e) {
    cx.error(e.what());
    return kDiagnostics;
  }
  return kOk;
}

}  // namespace ember::cli
