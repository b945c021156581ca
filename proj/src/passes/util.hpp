// Helpers shared by the passes.
#pragma once

#include <set>
#include <string>
#include <vector>

#include "ember/slc/slc.hpp"

namespace ember::passes {

/// Loops from the outermost to the innermost (each body has at most one).
std::vector<slc::Loop*> loop_chain(slc::Function& fn);

/// Index of the first callback item after (or before) the nested loop in
/// `items`, or -1.
int callback_after_loop(const std::vector<slc::BodyItem>& items);
int loop_index(const std::vector<slc::BodyItem>& items);

/// Every identifier in use: parameters, streams, carried and callback
/// variables.
class Names {
 public:
  explicit Names(slc::Function& fn);
  std::string fresh(const std::string& base);
  void add(const std::string& n) { used_.insert(n); }

 private:
  std::set<std::string> used_;
};

ir::ExprP operand_expr(const slc::Operand& o);

}  // namespace ember::passes
