#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tap/errors.hpp"
#include "tap/instance.hpp"

namespace tap {

// Node of the current tree T/F. Ids 0..n-1 are the original nodes; every
// contraction allocates a fresh id n, n+1, ... for the new compound node.
using CNodeId = std::int32_t;

struct ImageLink {
  CNodeId a = 0;  // a < b
  CNodeId b = 0;
  Link realizer;  // lexicographically smallest original link with this image

  friend bool operator==(const ImageLink&, const ImageLink&) = default;
};

using ImagePair = std::pair<CNodeId, CNodeId>;

inline ImagePair make_pair_sorted(CNodeId a, CNodeId b) {
  return a < b ? ImagePair{a, b} : ImagePair{b, a};
}

// The current tree T' = T/F under repeated contraction of connected unions of
// link paths.
class ContractedTree {
 public:
  explicit ContractedTree(const Instance& inst) : inst_(&inst) {
    const int n = inst.node_count();
    member_of_.resize(static_cast<std::size_t>(n));
    std::iota(member_of_.begin(), member_of_.end(), 0);
    nodes_.resize(static_cast<std::size_t>(n));
    for (NodeId v = 0; v < n; ++v) {
      CNode& c = nodes_[v];
      c.alive = true;
      c.members = {v};
      c.parent = inst.parent(v);
      c.children = inst.children(v);
      std::sort(c.children.begin(), c.children.end());
    }
    root_ = inst.root();
    alive_count_ = n;
    live_links_.assign(inst.links().begin(), inst.links().end());
    reindex();
  }

  const Instance& origin() const { return *inst_; }

  CNodeId node_of(NodeId v) const { return member_of_[v]; }
  CNodeId root() const { return root_; }
  // Number of ids ever allocated (alive or not); sizes per-node arrays.
  std::size_t capacity() const { return nodes_.size(); }
  std::size_t size() const { return alive_count_; }

  bool alive(CNodeId c) const {
    return c >= 0 && static_cast<std::size_t>(c) < nodes_.size() && nodes_[c].alive;
  }
  bool is_compound(CNodeId c) const { return c >= inst_->node_count(); }
  const std::vector<NodeId>& members(CNodeId c) const { return nodes_[c].members; }
  CNodeId parent(CNodeId c) const { return nodes_[c].parent; }
  const std::vector<CNodeId>& children(CNodeId c) const { return nodes_[c].children; }
  int depth(CNodeId c) const { return nodes_[c].depth; }
  bool is_leaf(CNodeId c) const { return c != root_ && nodes_[c].children.empty(); }

  std::vector<CNodeId> alive_nodes() const {
    std::vector<CNodeId> out;
    out.reserve(alive_count_);
    for (std::size_t c = 0; c < nodes_.size(); ++c) {
      if (nodes_[c].alive) out.push_back(static_cast<CNodeId>(c));
    }
    return out;
  }

  std::vector<CNodeId> leaves() const {
    std::vector<CNodeId> out;
    for (CNodeId c : alive_nodes()) {
      if (is_leaf(c)) out.push_back(c);
    }
    return out;
  }

  bool is_ancestor(CNodeId a, CNodeId d) const {
    return nodes_[a].tin <= nodes_[d].tin && nodes_[d].tout <= nodes_[a].tout;
  }

  CNodeId lca(CNodeId a, CNodeId b) const {
    while (nodes_[a].depth > nodes_[b].depth) a = nodes_[a].parent;
    while (nodes_[b].depth > nodes_[a].depth) b = nodes_[b].parent;
    while (a != b) {
      a = nodes_[a].parent;
      b = nodes_[b].parent;
    }
    return a;
  }

  std::vector<CNodeId> path(CNodeId a, CNodeId b) const {
    const CNodeId top = lca(a, b);
    std::vector<CNodeId> up;
    for (CNodeId w = a; w != top; w = nodes_[w].parent) up.push_back(w);
    up.push_back(top);
    std::vector<CNodeId> down;
    for (CNodeId w = b; w != top; w = nodes_[w].parent) down.push_back(w);
    up.insert(up.end(), down.rbegin(), down.rend());
    return up;
  }

  // Does the T'-path between a and b use the edge from `child` to its parent?
  bool path_uses_edge(CNodeId a, CNodeId b, CNodeId child) const {
    return is_ancestor(child, a) != is_ancestor(child, b);
  }

  // Image of an original link, or nothing if both ends sit in one node.
  std::optional<ImagePair> image(const Link& l) const {
    const CNodeId a = member_of_[l.u];
    const CNodeId b = member_of_[l.v];
    if (a == b) return std::nullopt;
    return make_pair_sorted(a, b);
  }

  // Original links whose image is not a self-loop, in increasing order.
  std::span<const Link> live_links() const { return live_links_; }

  // Indices into live_links() of the links with an end in c, increasing.
  const std::vector<std::uint32_t>& incident(CNodeId c) const { return incident_[c]; }

  // Distinct images with their smallest realizer, sorted by (a, b).
  std::vector<ImageLink> images() const {
    std::vector<std::pair<ImagePair, std::uint32_t>> keyed;
    keyed.reserve(live_links_.size());
    for (std::uint32_t i = 0; i < live_links_.size(); ++i) {
      keyed.emplace_back(*image(live_links_[i]), i);
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<ImageLink> out;
    for (const auto& [key, idx] : keyed) {
      if (!out.empty() && out.back().a == key.first && out.back().b == key.second) continue;
      out.push_back({key.first, key.second, live_links_[idx]});
    }
    return out;
  }

  // Smallest original link whose image is {a, b}.
  std::optional<Link> realizer(CNodeId a, CNodeId b) const {
    if (a == b) return std::nullopt;
    const auto& small = incident_[a].size() <= incident_[b].size() ? incident_[a] : incident_[b];
    const CNodeId self = incident_[a].size() <= incident_[b].size() ? a : b;
    const CNodeId want = self == a ? b : a;
    for (std::uint32_t idx : small) {
      const Link& l = live_links_[idx];
      const CNodeId other = member_of_[l.u] == self ? member_of_[l.v] : member_of_[l.u];
      if (other == want) return l;
    }
    return std::nullopt;
  }

  bool has_image(CNodeId a, CNodeId b) const { return realizer(a, b).has_value(); }

  // Other endpoints (in T') of the images at c; may repeat.
  template <typename Fn>
  void for_each_neighbor(CNodeId c, Fn&& fn) const {
    for (std::uint32_t idx : incident_[c]) {
      const Link& l = live_links_[idx];
      const CNodeId other = member_of_[l.u] == c ? member_of_[l.v] : member_of_[l.u];
      fn(other, l);
    }
  }

  // Nodes of T'_v in preorder, and its leaves (the root of T' is never one).
  std::pair<std::vector<CNodeId>, std::vector<CNodeId>> subtree_and_leaves(CNodeId v) const {
    std::vector<CNodeId> nodes{v};
    std::vector<CNodeId> leaves;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const CNodeId c = nodes[i];
      if (is_leaf(c)) leaves.push_back(c);
      for (CNodeId ch : nodes_[c].children) nodes.push_back(ch);
    }
    std::sort(leaves.begin(), leaves.end());
    return {nodes, leaves};
  }

  // Children before parents; siblings by increasing id.
  std::vector<CNodeId> postorder() const {
    std::vector<CNodeId> out;
    out.reserve(alive_count_);
    std::vector<std::pair<CNodeId, std::size_t>> stack{{root_, 0}};
    while (!stack.empty()) {
      auto& [c, next] = stack.back();
      if (next < nodes_[c].children.size()) {
        const CNodeId ch = nodes_[c].children[next++];
        stack.emplace_back(ch, 0);
      } else {
        out.push_back(c);
        stack.pop_back();
      }
    }
    return out;
  }

  // up(w): among images at w accepted by `pred` whose other end is an
  // ancestor of w, the end of minimum depth.
  std::optional<CNodeId> up(CNodeId w, const std::function<bool(CNodeId, const Link&)>& pred = {}) const {
    std::optional<CNodeId> best;
    for_each_neighbor(w, [&](CNodeId other, const Link& l) {
      if (!is_ancestor(other, w)) return;
      if (pred && !pred(other, l)) return;
      if (!best || nodes_[other].depth < nodes_[*best].depth) best = other;
    });
    return best;
  }

  // Contracts the union of the T'-paths of the given image links into one
  // new compound node and returns its id.
  CNodeId contract(std::span<const ImagePair> image_links) {
    std::vector<char> in_set(nodes_.size(), 0);
    std::vector<CNodeId> merged;
    for (const auto& [a, b] : image_links) {
      if (!alive(a) || !alive(b)) throw InvariantViolation("contract: dead node in image link");
      if (a == b) continue;
      for (CNodeId c : path(a, b)) {
        if (!in_set[c]) {
          in_set[c] = 1;
          merged.push_back(c);
        }
      }
    }
    if (merged.empty()) throw InvariantViolation("contract: empty path union");
    std::size_t internal_edges = 0;
    CNodeId top = merged.front();
    for (CNodeId c : merged) {
      if (c != root_ && in_set[nodes_[c].parent]) ++internal_edges;
      if (nodes_[c].depth < nodes_[top].depth) top = c;
    }
    if (internal_edges + 1 != merged.size()) {
      throw InvariantViolation("contract: path union is disconnected");
    }
    const auto fresh = static_cast<CNodeId>(nodes_.size());
    CNode compound;
    compound.alive = true;
    compound.parent = top == root_ ? fresh : nodes_[top].parent;
    for (CNodeId c : merged) {
      for (NodeId m : nodes_[c].members) compound.members.push_back(m);
      for (CNodeId ch : nodes_[c].children) {
        if (!in_set[ch]) compound.children.push_back(ch);
      }
    }
    std::sort(compound.members.begin(), compound.members.end());
    std::sort(compound.children.begin(), compound.children.end());
    if (top != root_) {
      auto& siblings = nodes_[compound.parent].children;
      siblings.erase(std::remove(siblings.begin(), siblings.end(), top), siblings.end());
      siblings.push_back(fresh);
      std::sort(siblings.begin(), siblings.end());
    } else {
      root_ = fresh;
    }
    for (CNodeId ch : compound.children) nodes_[ch].parent = fresh;
    for (NodeId m : compound.members) member_of_[m] = fresh;
    for (CNodeId c : merged) {
      nodes_[c].alive = false;
      nodes_[c].children.clear();
    }
    nodes_.push_back(std::move(compound));
    alive_count_ = alive_count_ - merged.size() + 1;
    std::erase_if(live_links_, [&](const Link& l) { return member_of_[l.u] == member_of_[l.v]; });
    reindex();
    return fresh;
  }

  CNodeId contract(const ImagePair& link) { return contract(std::span<const ImagePair>(&link, 1)); }

 private:
  struct CNode {
    bool alive = false;
    std::vector<NodeId> members;
    CNodeId parent = -1;
    std::vector<CNodeId> children;
    int depth = 0;
    int tin = 0;
    int tout = 0;
  };

  // Full recomputation of depth and Euler intervals, plus link incidence.
  void reindex() {
    int clock = 0;
    nodes_[root_].depth = 0;
    nodes_[root_].parent = root_;
    std::vector<std::pair<CNodeId, std::size_t>> stack{{root_, 0}};
    nodes_[root_].tin = clock++;
    while (!stack.empty()) {
      auto& [c, next] = stack.back();
      if (next < nodes_[c].children.size()) {
        const CNodeId ch = nodes_[c].children[next++];
        nodes_[ch].depth = nodes_[c].depth + 1;
        nodes_[ch].tin = clock++;
        stack.emplace_back(ch, 0);
      } else {
        nodes_[c].tout = clock++;
        stack.pop_back();
      }
    }
    incident_.assign(nodes_.size(), {});
    for (std::uint32_t i = 0; i < live_links_.size(); ++i) {
      incident_[member_of_[live_links_[i].u]].push_back(i);
      incident_[member_of_[live_links_[i].v]].push_back(i);
    }
  }

  const Instance* inst_;
  std::vector<CNodeId> member_of_;
  std::vector<CNode> nodes_;
  CNodeId root_ = 0;
  std::size_t alive_count_ = 0;
  std::vector<Link> live_links_;
  std::vector<std::vector<std::uint32_t>> incident_;
};

// Rebuilds T/F from scratch (union of the tree paths of F, then quotient)
// and compares it with an incrementally maintained tree.
inline bool quotient_matches(const ContractedTree& ct, std::span<const Link> chosen) {
  const Instance& inst = ct.origin();
  const auto n = static_cast<std::size_t>(inst.node_count());
  std::vector<NodeId> uf(n);
  std::iota(uf.begin(), uf.end(), 0);
  std::function<NodeId(NodeId)> find = [&](NodeId x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  for (const Link& l : chosen) {
    for (NodeId child : inst.path_edges(l.u, l.v)) uf[find(child)] = find(inst.parent(child));
  }
  // Same partition of original nodes.
  for (NodeId a = 0; a < inst.node_count(); ++a) {
    const NodeId b = static_cast<NodeId>(inst.parent(a));
    const bool same_class = find(a) == find(b);
    const bool same_node = ct.node_of(a) == ct.node_of(b);
    if (same_class != same_node) return false;
  }
  // A class with one member must be an original node, others compounds.
  std::vector<int> class_size(n, 0);
  for (NodeId a = 0; a < inst.node_count(); ++a) ++class_size[find(a)];
  for (NodeId a = 0; a < inst.node_count(); ++a) {
    if ((class_size[find(a)] == 1) == ct.is_compound(ct.node_of(a))) return false;
  }
  // Tree edges between distinct classes are exactly the T' edges.
  std::size_t quotient_edges = 0;
  for (NodeId a = 0; a < inst.node_count(); ++a) {
    if (a == inst.root()) continue;
    const CNodeId ca = ct.node_of(a);
    const CNodeId cp = ct.node_of(inst.parent(a));
    if (ca == cp) continue;
    ++quotient_edges;
    if (ct.parent(ca) != cp) return false;
  }
  return quotient_edges + 1 == ct.size() && ct.node_of(inst.root()) == ct.root();
}

// Graphviz rendering: tree edges solid, link images dashed, compounds boxed.
inline std::string to_dot(const ContractedTree& ct, std::string_view name = "tprime") {
  std::ostringstream out;
  out << "graph " << name << " {\n";
  for (CNodeId c : ct.alive_nodes()) {
    out << "  n" << c;
    if (ct.is_compound(c)) {
      out << " [shape=box, label=\"";
      const auto& m = ct.members(c);
      for (std::size_t i = 0; i < m.size(); ++i) out << (i ? "," : "{") << m[i];
      out << "}\"]";
    } else {
      out << " [label=\"" << c << "\"]";
    }
    out << ";\n";
  }
  for (CNodeId c : ct.alive_nodes()) {
    if (c != ct.root()) out << "  n" << ct.parent(c) << " -- n" << c << ";\n";
  }
  for (const ImageLink& img : ct.images()) {
    out << "  n" << img.a << " -- n" << img.b << " [style=dashed, constraint=false];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace tap
