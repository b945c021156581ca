// Optimizations over the streaming loop IR. Each pass rewrites the function
// in place, returns whether it changed anything, and reports why it declined
// to transform (never producing wrong code).
#pragma once

#include <functional>
#include <map>
#include <string>

#include "ember/slc/slc.hpp"

namespace ember::passes {

struct PassConfig {
  int opt = 0;
  int vlen = 8;
  bool vectorize = false;
  bool bufferize = false;
  bool align = false;
  bool store_streams = false;
  std::map<std::string, slc::Hint> hints;  // by memref

  /// Cumulative pass sets: 1 adds vectorization, 2 bufferization, 3 queue
  /// alignment.
  static PassConfig for_opt(int opt, int vlen = 8);
  /// Throws ConfigError on a bad vector length or inconsistent flags.
  void validate() const;
};

/// Turns the innermost loop into a `vlen`-wide masked vector loop: streams
/// that depend on its induction are widened, callback accesses become
/// gathers/scatters and then contiguous vector loads/stores where the last
/// index is the induction variable.
bool vectorize(slc::Function& fn, int vlen, Diagnostics& diags);
/// Vectorization stopped before the gather/scatter simplification.
bool vectorize_gather_form(slc::Function& fn, int vlen, Diagnostics& diags);

/// Moves the vector loop's callback after the loop: value streams are pushed
/// into buffers and the callback drains them chunk by chunk, firing once per
/// parent iteration.
bool bufferize(slc::Function& fn, Diagnostics& diags);

/// Replaces reads of the outermost induction stream by a counter kept in the
/// callbacks and advanced after each iteration, then marks the remaining
/// scalar transfers into vector callbacks for padding to a full vector.
bool align_queues(slc::Function& fn, Diagnostics& diags);

/// Annotates load streams with cache-level/temporal hints.
bool apply_stream_hints(slc::Function& fn, const std::map<std::string, slc::Hint>& hints);

/// Replaces innermost callbacks that only copy a stream into memory by store
/// streams.
bool store_streams(slc::Function& fn, Diagnostics& diags);

/// Runs the configured passes in order: store streams, vectorize, bufferize,
/// align, hints. `after` (optional) observes the function after each pass
/// that ran.
slc::Function run_passes(slc::Function fn, const PassConfig& cfg, Diagnostics& diags,
                         const std::function<void(const std::string&, const slc::Function&)>& after = {});

}  // namespace ember::passes
