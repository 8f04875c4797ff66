#pragma once

// Concept tree with version-labelled leaves, loaded from the RFO v1 text
// format:
//
//   # comment
//   concept <id> <parent-id|->
//   version <id> <parent-id> <label>
//   alias <node-id> <alias text...>
//
// Declarations may come in any order; the whole document is validated after
// parsing. Ids and aliases are normalized with text::normalize.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rendermatch/errors.hpp"
#include "rendermatch/text.hpp"

namespace rendermatch {

enum class NodeKind { kConcept, kVersion };

struct ConceptNode {
  std::string id;
  NodeKind kind = NodeKind::kConcept;
  std::optional<int> version_label;  // present iff kind == kVersion, >= 1
  std::string display_name;

  bool is_version() const noexcept { return kind == NodeKind::kVersion; }
  friend bool operator==(const ConceptNode&, const ConceptNode&) = default;
};

// Immutable once built by load_ontology; safe to share across threads.
class ConceptGraph {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  const std::vector<ConceptNode>& nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::string& root() const { return nodes_[root_].id; }
  const std::map<std::string, std::string>& aliases() const noexcept { return aliases_; }

  bool contains(std::string_view id) const { return index_.find(std::string(id)) != index_.end(); }

  std::size_t index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw NotFoundError(std::string(id));
    return it->second;
  }
  const ConceptNode& node(std::string_view id) const { return nodes_[index_of(id)]; }
  const ConceptNode& node_at(std::size_t i) const { return nodes_.at(i); }

  // npos for the root.
  std::size_t parent_index(std::size_t i) const { return parent_.at(i); }
  std::size_t depth_at(std::size_t i) const { return depth_.at(i); }
  std::size_t depth(std::string_view id) const { return depth_[index_of(id)]; }

  std::optional<std::string> parent(std::string_view id) const {
    const auto p = parent_[index_of(id)];
    if (p == npos) return std::nullopt;
    return nodes_[p].id;
  }

  // Children in id order.
  std::vector<std::string> children(std::string_view id) const {
    std::vector<std::string> out;
    for (auto c : children_[index_of(id)]) out.push_back(nodes_[c].id);
    return out;
  }

  friend bool operator==(const ConceptGraph& a, const ConceptGraph& b) {
    return a.nodes_ == b.nodes_ && a.parent_ == b.parent_ && a.aliases_ == b.aliases_;
  }

 private:
  friend ConceptGraph load_ontology(std::string_view);

  std::vector<ConceptNode> nodes_;  // sorted by id
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> depth_;
  std::vector<std::vector<std::size_t>> children_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, std::string> aliases_;
  std::size_t root_ = 0;
};

namespace detail {

struct NodeDecl {
  std::size_t line;
  ConceptNode node;
  std::string parent;  // empty for the root
};

struct AliasDecl {
  std::size_t line;
  std::string target;
  std::string alias;
};

inline std::string normalized_id(std::string_view raw, std::size_t line) {
  auto id = text::normalize(raw);
  if (id.empty()) throw ParseError(line, "identifier '" + std::string(raw) + "' is empty after normalization");
  return id;
}

inline std::string at_line(std::size_t line, const std::string& msg) {
  return "line " + std::to_string(line) + ": " + msg;
}

}  // namespace detail

inline ConceptGraph load_ontology(std::string_view document) {
  std::vector<detail::NodeDecl> decls;
  std::vector<detail::AliasDecl> alias_decls;

  const auto doc_lines = text::lines(document);
  for (std::size_t i = 0; i < doc_lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    const auto line = text::trim(doc_lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto tok = text::split_ws(line);

    if (tok[0] == "concept") {
      if (tok.size() != 3) throw ParseError(lineno, "expected 'concept <id> <parent-id|->'");
      detail::NodeDecl d{lineno, {}, {}};
      d.node.id = detail::normalized_id(tok[1], lineno);
      d.node.display_name = std::string(tok[1]);
      if (tok[2] != "-") d.parent = detail::normalized_id(tok[2], lineno);
      decls.push_back(std::move(d));
    } else if (tok[0] == "version") {
      if (tok.size() != 4) throw ParseError(lineno, "expected 'version <id> <parent-id> <label>'");
      if (tok[2] == "-") throw ParseError(lineno, "a version node cannot be the root");
      const auto label = text::parse_int(tok[3]);
      if (!label || *label < 1 || *label > std::numeric_limits<int>::max())
        throw ParseError(lineno, "version label must be a positive integer, got '" + std::string(tok[3]) + "'");
      detail::NodeDecl d{lineno, {}, detail::normalized_id(tok[2], lineno)};
      d.node.id = detail::normalized_id(tok[1], lineno);
      d.node.kind = NodeKind::kVersion;
      d.node.version_label = static_cast<int>(*label);
      d.node.display_name = std::string(tok[1]);
      decls.push_back(std::move(d));
    } else if (tok[0] == "alias") {
      if (tok.size() < 3) throw ParseError(lineno, "expected 'alias <node-id> <alias text>'");
      const auto alias = text::normalize(text::rest_after(line, 2));
      if (alias.empty()) throw ParseError(lineno, "alias is empty after normalization");
      alias_decls.push_back({lineno, detail::normalized_id(tok[1], lineno), alias});
    } else {
      throw ParseError(lineno, "unknown directive '" + std::string(tok[0]) + "'");
    }
  }

  // Validation over the whole document.
  std::map<std::string, std::size_t> by_id;  // id -> decl index
  std::optional<std::size_t> root_decl;
  for (std::size_t i = 0; i < decls.size(); ++i) {
    const auto& d = decls[i];
    if (auto [it, inserted] = by_id.emplace(d.node.id, i); !inserted)
      throw SemanticError(detail::at_line(d.line, "duplicate id '" + d.node.id + "' (first declared on line " +
                                                      std::to_string(decls[it->second].line) + ")"));
    if (d.parent.empty()) {
      if (root_decl)
        throw SemanticError(detail::at_line(d.line, "second root '" + d.node.id + "' (root '" +
                                                        decls[*root_decl].node.id + "' already declared)"));
      root_decl = i;
    }
  }
  if (!root_decl) throw SemanticError("no root declared");

  ConceptGraph g;
  g.nodes_.reserve(by_id.size());
  for (const auto& [id, di] : by_id) {
    g.index_.emplace(id, g.nodes_.size());
    g.nodes_.push_back(decls[di].node);
  }
  const std::size_t n = g.nodes_.size();
  g.parent_.assign(n, ConceptGraph::npos);
  g.children_.assign(n, {});
  g.root_ = g.index_.at(decls[*root_decl].node.id);

  for (const auto& [id, di] : by_id) {
    const auto& d = decls[di];
    if (d.parent.empty()) continue;
    auto pit = g.index_.find(d.parent);
    if (pit == g.index_.end())
      throw SemanticError(detail::at_line(d.line, "unknown parent '" + d.parent + "' for '" + id + "'"));
    if (g.nodes_[pit->second].is_version())
      throw SemanticError(detail::at_line(d.line, "parent '" + d.parent + "' of '" + id + "' is a version node"));
    const auto self = g.index_.at(id);
    g.parent_[self] = pit->second;
    g.children_[pit->second].push_back(self);
  }

  // Depths; a node that cannot reach the root within n steps sits on a cycle.
  constexpr auto unknown = ConceptGraph::npos;
  g.depth_.assign(n, unknown);
  g.depth_[g.root_] = 0;
  std::vector<std::size_t> path;
  for (std::size_t i = 0; i < n; ++i) {
    path.clear();
    std::size_t cur = i;
    while (g.depth_[cur] == unknown) {
      path.push_back(cur);
      cur = g.parent_[cur];
      if (cur == ConceptGraph::npos || path.size() > n) {
        const auto& d = decls[by_id.at(g.nodes_[i].id)];
        throw SemanticError(detail::at_line(d.line, "cycle through '" + g.nodes_[i].id + "'"));
      }
    }
    std::size_t depth = g.depth_[cur];
    for (auto it = path.rbegin(); it != path.rend(); ++it) g.depth_[*it] = ++depth;
  }

  for (std::size_t p = 0; p < n; ++p) {
    std::map<int, std::size_t> labels;
    for (auto c : g.children_[p]) {
      const auto& child = g.nodes_[c];
      if (!child.is_version()) continue;
      if (auto [it, inserted] = labels.emplace(*child.version_label, c); !inserted)
        throw SemanticError(detail::at_line(decls[by_id.at(child.id)].line,
                                            "duplicate version label " + std::to_string(*child.version_label) +
                                                " under '" + g.nodes_[p].id + "' ('" + g.nodes_[it->second].id +
                                                "' and '" + child.id + "')"));
    }
  }

  for (const auto& a : alias_decls) {
    if (!g.contains(a.target))
      throw SemanticError(detail::at_line(a.line, "alias '" + a.alias + "' targets unknown node '" + a.target + "'"));
    if (g.contains(a.alias) && a.alias != a.target)
      throw SemanticError(detail::at_line(a.line, "alias '" + a.alias + "' collides with node id '" + a.alias + "'"));
    if (auto [it, inserted] = g.aliases_.emplace(a.alias, a.target); !inserted && it->second != a.target)
      throw SemanticError(detail::at_line(a.line, "alias '" + a.alias + "' already maps to '" + it->second + "'"));
  }
  return g;
}

// Upward closure of `id`: the node itself followed by every ancestor up to
// the root (leaf-to-root order).
inline std::vector<std::string> ancestors(const ConceptGraph& graph, std::string_view id) {
  std::vector<std::string> out;
  for (auto i = graph.index_of(id); i != ConceptGraph::npos; i = graph.parent_index(i))
    out.push_back(graph.node_at(i).id);
  return out;
}

// Exact lookup of a normalized term against node ids, then aliases.
inline std::string resolve(const ConceptGraph& graph, std::string_view term) {
  auto key = text::normalize(term);
  if (graph.contains(key)) return key;
  if (auto it = graph.aliases().find(key); it != graph.aliases().end()) return it->second;
  throw NotFoundError(std::move(key));
}

inline int version_label(const ConceptGraph& graph, std::string_view id) {
  const auto& n = graph.node(id);
  if (!n.is_version()) throw SemanticError("'" + n.id + "' is a concept node, not a version");
  return *n.version_label;
}

// Labels of the version children of `id`, ascending.
inline std::vector<int> versions(const ConceptGraph& graph, std::string_view id) {
  std::vector<int> out;
  for (const auto& c : graph.children(id))
    if (const auto& n = graph.node(c); n.is_version()) out.push_back(*n.version_label);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::optional<std::string> version_child(const ConceptGraph& graph, std::string_view id, int label) {
  for (const auto& c : graph.children(id))
    if (const auto& n = graph.node(c); n.is_version() && n.version_label == label) return n.id;
  return std::nullopt;
}

}  // namespace rendermatch
