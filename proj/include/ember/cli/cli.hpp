// The `ember` command line: compile, run, verify and cdf subcommands.
#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "ember/dlc/dlc.hpp"
#include "ember/passes/passes.hpp"
#include "ember/scf/scf.hpp"
#include "ember/vm/vm.hpp"
#include "ember/workloads/inputs.hpp"

namespace ember::cli {

enum ExitCode { kOk = 0, kDiagnostics = 1, kDeadlock = 2, kBounds = 3 };

/// Stages that `--dump-ir` accepts: scf, classify, slc, slcv (after each
/// pass), dlc.
const std::vector<std::string>& dump_stages();

struct CompileOptions {
  passes::PassConfig passes = passes::PassConfig::for_opt(0, 8);
  std::set<std::string> dump_ir;
};

struct CompileOutput {
  dlc::Program program;
  std::vector<std::pair<std::string, std::string>> dumps;  // (file suffix, text)
  Diagnostics notes;                                        // passes that declined to fire
};

/// Runs the pipeline on SCF text, or on SLC text when `is_slc` (a dumped
/// slc/slcv stage re-fed). `mutate`, if set, edits the SLC after the passes.
CompileOutput compile_text(std::string_view text, bool is_slc, const CompileOptions& opts,
                           const std::function<void(slc::Function&)>& mutate = {});

/// "memref=L2,temporal" or "memref=LLC,nontemporal".
std::pair<std::string, slc::Hint> parse_hint(const std::string& text);

/// Memrefs the program writes, through store streams or execute arms.
std::vector<std::string> written_memrefs(const dlc::Program& p);

/// Versioned counter document written by `ember run`.
nlohmann::json stats_json(const vm::VmResult& r);

struct VerifyCell {
  int opt = 0;
  int vlen = 1;
  std::uint64_t seed = 0;
  bool pass = false;
  std::string mismatch;  // first divergent element, when failing
  vm::Counters counters;
};

struct VerifyOptions {
  std::vector<int> opts{0, 1, 2, 3};
  std::vector<int> vlens{1, 2, 4, 8};
  std::uint64_t seeds = 5;
  std::uint64_t base_seed = 1;
  bool store_streams = false;
  workloads::Dims dims;
  vm::VmConfig vm;
};

/// Interprets `fn` and runs the compiled program on `inputs(seed)` for each
/// cell of the matrix; stops at the first mismatch.
std::vector<VerifyCell> verify_matrix(const scf::Function& fn, const std::function<Memory(std::uint64_t)>& inputs,
                                      const VerifyOptions& opts,
                                      const std::function<void(slc::Function&)>& mutate = {});

/// First differing element between two images, or "" when equal.
std::string first_difference(const Memory& want, const Memory& got);

/// Entry point; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ember::cli
