#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tap/errors.hpp"

namespace tap {

using NodeId = std::int32_t;

// A link (non-tree edge). Stored with u < v so equal links compare equal.
struct Link {
  NodeId u = 0;
  NodeId v = 0;

  constexpr Link() = default;
  constexpr Link(NodeId a, NodeId b) : u(a < b ? a : b), v(a < b ? b : a) {}

  constexpr bool has_end(NodeId w) const { return u == w || v == w; }
  constexpr NodeId other(NodeId w) const { return w == u ? v : u; }

  friend constexpr auto operator<=>(const Link&, const Link&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Link& l) {
  return os << l.u << '-' << l.v;
}

inline std::string to_string(const Link& l) {
  return std::to_string(l.u) + "-" + std::to_string(l.v);
}

// Tree edge as listed in the input (orientation preserved for round-trips).
using TreeEdge = std::pair<NodeId, NodeId>;

// Immutable rooted tree plus a deduplicated link set. Tree edges are
// addressed internally by their child endpoint.
class Instance {
 public:
  Instance(int node_count, NodeId root, std::vector<TreeEdge> tree_edges,
           std::vector<Link> links)
      : node_count_(node_count), root_(root), tree_edges_(std::move(tree_edges)),
        links_(std::move(links)) {
    if (node_count_ < 2) throw InstanceError("instance needs at least 2 nodes");
    if (root_ < 0 || root_ >= node_count_) throw InstanceError("root out of range");
    if (static_cast<int>(tree_edges_.size()) != node_count_ - 1) {
      throw InstanceError("expected " + std::to_string(node_count_ - 1) + " tree edges, got " +
                          std::to_string(tree_edges_.size()));
    }
    for (const auto& [a, b] : tree_edges_) {
      if (!valid(a) || !valid(b)) throw InstanceError("tree edge endpoint out of range");
      if (a == b) throw InstanceError("tree edge is a self-loop");
    }
    for (const Link& l : links_) {
      if (!valid(l.u) || !valid(l.v)) throw InstanceError("link endpoint out of range");
      if (l.u == l.v) throw InstanceError("link is a self-loop");
    }
    std::sort(links_.begin(), links_.end());
    links_.erase(std::unique(links_.begin(), links_.end()), links_.end());
    index_tree();
  }

  int node_count() const { return node_count_; }
  NodeId root() const { return root_; }
  std::span<const TreeEdge> tree_edges() const { return tree_edges_; }
  std::span<const Link> links() const { return links_; }
  std::size_t link_count() const { return links_.size(); }

  NodeId parent(NodeId v) const { return parent_[v]; }
  int depth(NodeId v) const { return depth_[v]; }
  int degree(NodeId v) const { return degree_[v]; }
  const std::vector<NodeId>& children(NodeId v) const { return children_[v]; }

  // The root is never a leaf, even with a single child.
  bool is_leaf(NodeId v) const { return v != root_ && children_[v].empty(); }
  const std::vector<NodeId>& leaves() const { return leaves_; }

  // True iff a is an ancestor of d (a node is its own ancestor).
  bool is_ancestor(NodeId a, NodeId d) const {
    return tin_[a] <= tin_[d] && tout_[d] <= tout_[a];
  }

  NodeId lca(NodeId a, NodeId b) const {
    while (depth_[a] > depth_[b]) a = parent_[a];
    while (depth_[b] > depth_[a]) b = parent_[b];
    while (a != b) {
      a = parent_[a];
      b = parent_[b];
    }
    return a;
  }

  int path_length(NodeId a, NodeId b) const {
    return depth_[a] + depth_[b] - 2 * depth_[lca(a, b)];
  }

  bool on_path(NodeId w, NodeId a, NodeId b) const {
    const NodeId top = lca(a, b);
    return is_ancestor(top, w) && (is_ancestor(w, a) || is_ancestor(w, b));
  }

  // Does the path of `l` use the tree edge between `child` and its parent?
  bool covers(const Link& l, NodeId child) const {
    return is_ancestor(child, l.u) != is_ancestor(child, l.v);
  }

  // Child endpoints of the tree edges on P(a, b).
  std::vector<NodeId> path_edges(NodeId a, NodeId b) const {
    std::vector<NodeId> out;
    const NodeId top = lca(a, b);
    for (NodeId w = a; w != top; w = parent_[w]) out.push_back(w);
    for (NodeId w = b; w != top; w = parent_[w]) out.push_back(w);
    return out;
  }

  bool has_link(const Link& l) const {
    return std::binary_search(links_.begin(), links_.end(), l);
  }

  std::optional<std::size_t> link_index(const Link& l) const {
    auto it = std::lower_bound(links_.begin(), links_.end(), l);
    if (it == links_.end() || *it != l) return std::nullopt;
    return static_cast<std::size_t>(it - links_.begin());
  }

  // Indices (into links()) of the links with an end at w.
  const std::vector<std::uint32_t>& incident_links(NodeId w) const { return incident_[w]; }

  // Same tree, different link set.
  Instance with_links(std::vector<Link> links) const {
    return Instance(node_count_, root_, tree_edges_, std::move(links));
  }

 private:
  bool valid(NodeId v) const { return v >= 0 && v < node_count_; }

  void index_tree() {
    const auto n = static_cast<std::size_t>(node_count_);
    std::vector<std::vector<NodeId>> adj(n);
    for (const auto& [a, b] : tree_edges_) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    degree_.assign(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
      degree_[v] = static_cast<int>(adj[v].size());
      std::sort(adj[v].begin(), adj[v].end());
    }
    parent_.assign(n, -1);
    depth_.assign(n, 0);
    children_.assign(n, {});
    tin_.assign(n, 0);
    tout_.assign(n, 0);
    std::vector<char> seen(n, 0);
    // Iterative DFS; children are visited in increasing id.
    std::vector<std::pair<NodeId, std::size_t>> stack;
    stack.emplace_back(root_, 0);
    seen[root_] = 1;
    parent_[root_] = root_;
    int clock = 0;
    tin_[root_] = clock++;
    std::size_t visited = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next < adj[v].size()) {
        const NodeId w = adj[v][next++];
        if (w == parent_[v] && v != root_) continue;
        if (seen[w]) throw InstanceError("tree edges do not form a tree: not a tree (cycle)");
        seen[w] = 1;
        ++visited;
        parent_[w] = v;
        depth_[w] = depth_[v] + 1;
        children_[v].push_back(w);
        tin_[w] = clock++;
        stack.emplace_back(w, 0);
      } else {
        tout_[v] = clock++;
        stack.pop_back();
      }
    }
    if (visited != n) throw InstanceError("tree edges do not form a tree: not a tree (disconnected)");
    leaves_.clear();
    for (NodeId v = 0; v < node_count_; ++v) {
      if (is_leaf(v)) leaves_.push_back(v);
    }
    incident_.assign(n, {});
    for (std::size_t i = 0; i < links_.size(); ++i) {
      incident_[links_[i].u].push_back(static_cast<std::uint32_t>(i));
      incident_[links_[i].v].push_back(static_cast<std::uint32_t>(i));
    }
  }

  int node_count_;
  NodeId root_;
  std::vector<TreeEdge> tree_edges_;
  std::vector<Link> links_;
  std::vector<NodeId> parent_;
  std::vector<int> depth_;
  std::vector<int> degree_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<NodeId> leaves_;
  std::vector<int> tin_;
  std::vector<int> tout_;
  std::vector<std::vector<std::uint32_t>> incident_;
};

struct Diagnostics {
  bool ok = true;
  // Tree edges no link covers, normalized (smaller id first), sorted.
  std::vector<TreeEdge> uncovered;
};

// Feasibility: every tree edge must lie on the path of some link.
inline Diagnostics validate(const Instance& inst) {
  Diagnostics d;
  const int n = inst.node_count();
  // Difference counting over the tree: a link adds +1 at both ends and -2 at
  // the lca; the subtree sum at a child is the number of links over its edge.
  std::vector<long long> count(static_cast<std::size_t>(n), 0);
  for (const Link& l : inst.links()) {
    count[l.u] += 1;
    count[l.v] += 1;
    count[inst.lca(l.u, l.v)] -= 2;
  }
  std::vector<NodeId> order;
  order.reserve(n);
  order.push_back(inst.root());
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (NodeId c : inst.children(order[i])) order.push_back(c);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    if (v == inst.root()) continue;
    if (count[v] == 0) {
      const NodeId p = inst.parent(v);
      d.uncovered.emplace_back(std::min(p, v), std::max(p, v));
    }
    count[inst.parent(v)] += count[v];
  }
  std::sort(d.uncovered.begin(), d.uncovered.end());
  d.ok = d.uncovered.empty();
  return d;
}

inline std::vector<NodeId> tree_path(const Instance& inst, NodeId a, NodeId b) {
  const NodeId top = inst.lca(a, b);
  std::vector<NodeId> up;
  for (NodeId w = a; w != top; w = inst.parent(w)) up.push_back(w);
  up.push_back(top);
  std::vector<NodeId> down;
  for (NodeId w = b; w != top; w = inst.parent(w)) down.push_back(w);
  up.insert(up.end(), down.rbegin(), down.rend());
  return up;
}

// Both paths share a tree edge, and an end of one lies on the other's path.
inline bool is_overlapping_pair(const Instance& inst, const Link& l1, const Link& l2) {
  const bool end_inside = inst.on_path(l1.u, l2.u, l2.v) || inst.on_path(l1.v, l2.u, l2.v) ||
                          inst.on_path(l2.u, l1.u, l1.v) || inst.on_path(l2.v, l1.u, l1.v);
  if (!end_inside) return false;
  for (NodeId child : inst.path_edges(l1.u, l1.v)) {
    if (inst.covers(l2, child)) return true;
  }
  return false;
}

inline bool is_cover(const Instance& inst, std::span<const Link> cover) {
  const Instance restricted = inst.with_links({cover.begin(), cover.end()});
  return validate(restricted).ok;
}

// The neighbour of a on the tree path towards b (a != b).
inline NodeId step_towards(const Instance& inst, NodeId a, NodeId b) {
  if (!inst.is_ancestor(a, b)) return inst.parent(a);
  NodeId w = b;
  while (inst.parent(w) != a) w = inst.parent(w);
  return w;
}

// Closed iff every link with a path of length >= 2 has both one-step
// shortenings; the full sublink set follows by induction.
inline bool is_shadow_closed(const Instance& inst) {
  for (const Link& l : inst.links()) {
    if (inst.path_length(l.u, l.v) < 2) continue;
    if (!inst.has_link(Link(step_towards(inst, l.u, l.v), l.v))) return false;
    if (!inst.has_link(Link(l.u, step_towards(inst, l.v, l.u)))) return false;
  }
  return true;
}

struct Stem {
  NodeId stem = 0;
  Link twin;
  friend bool operator==(const Stem&, const Stem&) = default;
};

struct StemReport {
  std::vector<Stem> stems;
  bool stemless() const { return stems.empty(); }
};

// Twin links: both ends of tree degree 1, exactly one internal node of degree
// 3 on the path, all other internal nodes of degree 2.
inline std::optional<NodeId> twin_stem(const Instance& inst, const Link& l) {
  if (inst.degree(l.u) != 1 || inst.degree(l.v) != 1) return std::nullopt;
  const auto path = tree_path(inst, l.u, l.v);
  std::optional<NodeId> stem;
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    const int deg = inst.degree(path[i]);
    if (deg == 3 && !stem) {
      stem = path[i];
    } else if (deg != 2) {
      return std::nullopt;
    }
  }
  return stem;
}

inline StemReport find_stems(const Instance& inst) {
  StemReport report;
  for (const Link& l : inst.links()) {
    if (auto s = twin_stem(inst, l)) report.stems.push_back({*s, l});
  }
  return report;
}

// Adds every sublink of every link. Never introduces a twin link: a twin
// link's ends have tree degree 1 and so cannot be interior to another path.
inline Instance shadow_close(const Instance& inst) {
  std::vector<Link> closed(inst.links().begin(), inst.links().end());
  for (const Link& l : inst.links()) {
    const auto path = tree_path(inst, l.u, l.v);
    for (std::size_t i = 0; i < path.size(); ++i) {
      for (std::size_t j = i + 1; j < path.size(); ++j) closed.emplace_back(path[i], path[j]);
    }
  }
  Instance out = inst.with_links(std::move(closed));
  if (find_stems(inst).stemless()) {
    check_invariant(find_stems(out).stemless(), "shadow closure introduced a stem");
  }
  return out;
}

namespace detail {

inline std::vector<std::string> tokenize(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<std::string> tokens;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

inline long long parse_int(const std::string& tok, int line) {
  std::size_t pos = 0;
  long long value = 0;
  try {
    value = std::stoll(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError(line, "expected integer, got '" + tok + "'");
  }
  if (pos != tok.size()) throw ParseError(line, "expected integer, got '" + tok + "'");
  return value;
}

}  // namespace detail

// Parses without the coverage check; structural errors still throw.
inline Instance parse_instance_structure(std::string_view text) {
  enum class Stage { kHeader, kNodes, kRoot, kTree, kLinks };
  Stage stage = Stage::kHeader;
  long long nodes = -1;
  long long root = -1;
  std::vector<TreeEdge> tree;
  std::vector<Link> links;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    const auto tok = detail::tokenize(line);
    if (tok.empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto expect_args = [&](std::size_t count) {
      if (tok.size() != count + 1) {
        throw ParseError(line_no, "'" + tok[0] + "' takes " + std::to_string(count) + " argument(s)");
      }
    };
    auto node_arg = [&](std::size_t i) -> NodeId {
      const long long v = detail::parse_int(tok[i], line_no);
      if (v < 0 || v >= nodes) throw ParseError(line_no, "node id " + tok[i] + " out of range");
      return static_cast<NodeId>(v);
    };
    const std::string& key = tok[0];
    if (stage == Stage::kHeader) {
      if (key != "tap" || tok.size() != 2 || tok[1] != "1") {
        throw ParseError(line_no, "expected header 'tap 1'");
      }
      stage = Stage::kNodes;
    } else if (key == "nodes") {
      if (stage != Stage::kNodes) throw ParseError(line_no, "'nodes' out of order");
      expect_args(1);
      nodes = detail::parse_int(tok[1], line_no);
      if (nodes < 2) throw ParseError(line_no, "need at least 2 nodes");
      stage = Stage::kRoot;
    } else if (key == "root") {
      if (stage != Stage::kRoot) throw ParseError(line_no, "'root' out of order");
      expect_args(1);
      root = node_arg(1);
      stage = Stage::kTree;
    } else if (key == "tree") {
      if (stage != Stage::kTree) throw ParseError(line_no, "'tree' out of order");
      expect_args(2);
      if (static_cast<long long>(tree.size()) == nodes - 1) {
        throw ParseError(line_no, "too many tree lines: not a tree");
      }
      tree.emplace_back(node_arg(1), node_arg(2));
      if (tree.back().first == tree.back().second) throw ParseError(line_no, "tree self-loop");
    } else if (key == "link") {
      if (stage != Stage::kTree && stage != Stage::kLinks) throw ParseError(line_no, "'link' out of order");
      if (static_cast<long long>(tree.size()) != nodes - 1) {
        throw ParseError(line_no, "expected " + std::to_string(nodes - 1) + " tree lines before links");
      }
      stage = Stage::kLinks;
      expect_args(2);
      const NodeId a = node_arg(1);
      const NodeId b = node_arg(2);
      if (a == b) throw ParseError(line_no, "link self-loop");
      links.emplace_back(a, b);
    } else {
      throw ParseError(line_no, "unknown keyword '" + key + "'");
    }
  }
  if (stage == Stage::kHeader) throw ParseError(line_no, "empty input");
  if (stage == Stage::kNodes || stage == Stage::kRoot) throw ParseError(line_no, "truncated header");
  if (static_cast<long long>(tree.size()) != nodes - 1) {
    throw ParseError(line_no, "expected " + std::to_string(nodes - 1) + " tree lines");
  }
  try {
    return Instance(static_cast<int>(nodes), static_cast<NodeId>(root), std::move(tree), std::move(links));
  } catch (const InstanceError& e) {
    throw ParseError(line_no, e.what());
  }
}

// Parses and validates; an infeasible instance is an InstanceError listing
// the uncovered tree edges.
inline Instance parse_instance(std::string_view text) {
  Instance inst = parse_instance_structure(text);
  const Diagnostics d = validate(inst);
  if (!d.ok) {
    std::string msg = "infeasible instance, uncovered tree edges:";
    for (const auto& [a, b] : d.uncovered) msg += " " + std::to_string(a) + "-" + std::to_string(b);
    throw InstanceError(msg);
  }
  return inst;
}

inline std::string serialize(const Instance& inst) {
  std::ostringstream out;
  out << "tap 1\n";
  out << "nodes " << inst.node_count() << "\n";
  out << "root " << inst.root() << "\n";
  for (const auto& [a, b] : inst.tree_edges()) out << "tree " << a << ' ' << b << "\n";
  for (const Link& l : inst.links()) out << "link " << l.u << ' ' << l.v << "\n";
  return out.str();
}

}  // namespace tap
