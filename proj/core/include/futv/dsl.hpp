#ifndef FUTV_DSL_HPP
#define FUTV_DSL_HPP

#include <optional>
#include <string>
#include <vector>

#include "futv/algebra.hpp"

namespace futv {

struct SourcePos {
  int line = 1;
  int col = 1;
};

struct Diagnostic {
  SourcePos pos;
  std::string message;
  std::string str() const;
};

// Parsed .fut model. The header carries the rank range, the Int sum domain,
// message tags, optional user actions, and the optionally restricted set of
// communication pairs.
struct ModelFile {
  int ranks_lo = 1;
  int ranks_hi = 8;
  std::int64_t int_lo = 0;
  std::int64_t int_hi = 7;
  std::vector<TagDecl> tags;
  std::vector<ActionDecl> user_actions;
  std::optional<std::vector<std::pair<std::string, std::string>>> comm;  // name pairs

  std::vector<ProcessDef> defs;

  // Either one future for every rank (init_all) or explicit per-rank entries.
  TermPtr init_all;
  std::vector<std::pair<int, TermPtr>> init_ranks;

  bool equals(const ModelFile& o) const;
};

struct ParseResult {
  std::optional<ModelFile> model;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return model.has_value() && diagnostics.empty(); }
};

ParseResult parse_model(const std::string& text);

// Canonical formatting; parse(pretty(m)) is structurally equal to m.
std::string pretty(const ModelFile& m);

// Instantiates the model at a concrete size. `values` supplies the per-rank
// `value` placeholder (required if the init clause mentions it).
Environment elaborate(const ModelFile& m, int n);

// The init clause instantiated at each rank (rank -> its initial future).
std::vector<TermPtr> initial_futures(const ModelFile& m, const Environment& env,
                                     const std::vector<std::int64_t>* values);

}  // namespace futv

#endif
