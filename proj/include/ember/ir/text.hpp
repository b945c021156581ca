// Text form of statements and expressions.
#pragma once

#include <set>
#include <string>

#include "ember/common/lexer.hpp"
#include "ember/ir/ir.hpp"

namespace ember::ir {

std::string print_expr(const ExprP& e);
void print_block(const Block& b, int indent, std::string& out);
std::string print_block(const Block& b, int indent = 0);

/// Parser for statement lists. `memrefs` tells `M[i]` loads apart from
/// `v[0]` lane extracts.
class StmtParser {
 public:
  StmtParser(TokenStream& ts, std::set<std::string> memrefs) : ts_(ts), memrefs_(std::move(memrefs)) {}

  ExprP expr();
  Type type();
  bool at_type() const;
  Stmt stmt();
  /// Parses statements until the closing `}` (not consumed).
  Block block_items();
  /// Parses `{ stmt* }`.
  Block braced_block();

 private:
  ExprP binary(int min_prec);
  ExprP unary();
  ExprP postfix(ExprP e);
  std::vector<ExprP> index_list();
  Stmt for_stmt();
  int width_arg();

  TokenStream& ts_;
  std::set<std::string> memrefs_;
};

}  // namespace ember::ir
