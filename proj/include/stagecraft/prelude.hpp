// Builder library shipped as object-language source files.

#pragma once

#include <string>
#include <vector>

#include "stagecraft/syntax.hpp"

namespace stagecraft {

enum class PreludeVariant { None, Unstaged, Staged, Universal };

std::string to_string(PreludeVariant v);
/// Accepts none, unstaged, staged, universal.
PreludeVariant parse_prelude_variant(const std::string& name);

struct PreludeAsset {
  std::string name;  // file name, e.g. "stack.dcps"
  std::string source;
  std::vector<std::string> exports;
  std::vector<Definition> definitions;
};

class PreludeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Directory holding the prelude sources; STAGECRAFT_PRELUDE_DIR overrides
/// the location recorded at build time.
std::string prelude_dir();

/// Reads and parses one asset, checking it defines exactly `exports`.
PreludeAsset load_asset(const std::string& dir, const std::string& file, const std::vector<std::string>& exports);

/// Assets making up a variant, in definition order. Every variant includes
/// the stack operations and the `for` loop; None adds no builders.
std::vector<PreludeAsset> prelude_assets(PreludeVariant v);

/// All definitions of a variant, outermost first.
std::vector<Definition> load_prelude(PreludeVariant v);

/// Wraps a parsed program in the variant's definitions.
Term with_prelude(PreludeVariant v, const Term& program);

/// Reads a whole file; throws PreludeError naming the path on failure.
std::string read_file(const std::string& path);

}  // namespace stagecraft
