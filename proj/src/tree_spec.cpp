#include "treegauss/tree_spec.hpp"

#include <string>

#include "treegauss/error.hpp"

namespace treegauss {

namespace {

std::uint64_t read_count(const nlohmann::json& spec, const char* key) {
  if (!spec.contains(key) || !spec[key].is_number_integer() || spec[key].get<std::int64_t>() < 0) {
    throw invalid_argument(std::string("tree spec needs a non-negative integer \"") +
                           key + "\"");
  }
  return spec[key].get<std::uint64_t>();
}

}  // namespace

std::optional<std::uint64_t> spec_depth(const nlohmann::json& spec) {
  const std::string kind = spec.value("kind", "explicit");
  if ((kind == "chain" || kind == "binary") && spec.contains("depth")) {
    return read_count(spec, "depth");
  }
  return std::nullopt;
}

Tree tree_from_spec(const nlohmann::json& spec,
                    std::optional<std::uint64_t> depth) {
  if (!spec.is_object()) throw invalid_argument("tree spec must be an object");
  const std::string kind = spec.value("kind", "explicit");
  if (kind == "chain") return Tree::chain(depth ? *depth : read_count(spec, "depth"));
  if (kind == "binary") {
    const std::uint64_t n = depth ? *depth : read_count(spec, "depth");
    if (n > Tree::kMaxImplicitBinaryDepth) {
      throw cap_exceeded("binary depth " + std::to_string(n) + " exceeds " +
                         std::to_string(Tree::kMaxImplicitBinaryDepth));
    }
    if (spec.value("materialize", false)) {
      return Tree::binary_explicit(static_cast<unsigned>(n));
    }
    return Tree::binary(static_cast<unsigned>(n));
  }
  if (kind == "star") return Tree::star(read_count(spec, "leaves"));
  if (kind == "explicit") return Tree::from_json(spec);
  throw invalid_argument("unknown tree kind \"" + kind + "\"");
}

}  // namespace treegauss
