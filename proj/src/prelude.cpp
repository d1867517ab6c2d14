#include "stagecraft/prelude.hpp"

#include <cstdlib>
#include <fstream>
#include <mutex>
#include <map>
#include <sstream>

#ifndef STAGECRAFT_PRELUDE_DIR
#define STAGECRAFT_PRELUDE_DIR "prelude"
#endif

namespace stagecraft {

std::string to_string(PreludeVariant v) {
  switch (v) {
    case PreludeVariant::None: return "none";
    case PreludeVariant::Unstaged: return "unstaged";
    case PreludeVariant::Staged: return "staged";
    case PreludeVariant::Universal: return "universal";
  }
  return "?";
}

PreludeVariant parse_prelude_variant(const std::string& name) {
  for (auto v : {PreludeVariant::None, PreludeVariant::Unstaged, PreludeVariant::Staged, PreludeVariant::Universal})
    if (to_string(v) == name) return v;
  throw std::invalid_argument("unknown prelude variant '" + name + "'");
}

std::string prelude_dir() {
  if (const char* env = std::getenv("STAGECRAFT_PRELUDE_DIR"); env && *env) return env;
  return STAGECRAFT_PRELUDE_DIR;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreludeError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

PreludeAsset load_asset(const std::string& dir, const std::string& file, const std::vector<std::string>& exports) {
  std::string path = dir + "/" + file;
  PreludeAsset a{file, read_file(path), exports, {}};
  try {
    a.definitions = parse_definitions({a.source, path});
  } catch (const ParseError& e) {
    throw PreludeError(path + ":" + e.what());
  }
  std::vector<std::string> names;
  for (const auto& d : a.definitions) names.push_back(d.name.str());
  if (names != exports) {
    std::string got, want;
    for (const auto& n : names) got += " " + n;
    for (const auto& n : exports) want += " " + n;
    throw PreludeError(path + ": defines" + got + " but should define" + want);
  }
  return a;
}

namespace {

struct AssetSpec {
  const char* file;
  std::vector<std::string> exports;
};

std::vector<AssetSpec> specs_for(PreludeVariant v) {
  std::vector<AssetSpec> out;
  out.push_back({"stack.dcps", {"push", "pop"}});
  out.push_back({"for.dcps", {"for"}});
  switch (v) {
    case PreludeVariant::Unstaged: out.push_back({"build_unstaged.dcps", {"build", "merge"}}); break;
    case PreludeVariant::Staged: out.push_back({"build_staged.dcps", {"build", "merge"}}); break;
    case PreludeVariant::Universal: out.push_back({"build_universal.dcps", {"build", "merge"}}); break;
    default: break;
  }
  return out;
}

}  // namespace

std::vector<PreludeAsset> prelude_assets(PreludeVariant v) {
  // Parsed assets are immutable, so they are shared per directory.
  static std::mutex mu;
  static std::map<std::pair<std::string, PreludeVariant>, std::vector<PreludeAsset>> cache;
  std::string dir = prelude_dir();
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(dir, v);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  std::vector<PreludeAsset> out;
  for (const auto& s : specs_for(v)) out.push_back(load_asset(dir, s.file, s.exports));
  cache.emplace(key, out);
  return out;
}

std::vector<Definition> load_prelude(PreludeVariant v) {
  std::vector<Definition> defs;
  for (const auto& a : prelude_assets(v)) defs.insert(defs.end(), a.definitions.begin(), a.definitions.end());
  return defs;
}

Term with_prelude(PreludeVariant v, const Term& program) { return link_program(load_prelude(v), program); }

}  // namespace stagecraft
