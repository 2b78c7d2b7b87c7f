#pragma once

#include <algorithm>
#include <deque>
#include <span>
#include <utility>
#include <vector>

#include "tap/errors.hpp"
#include "tap/instance.hpp"

namespace tap {

// Undirected simple graph on 0..vertex_count-1; edges normalized and sorted.
class SimpleGraph {
 public:
  using Edge = std::pair<int, int>;

  explicit SimpleGraph(int vertex_count, std::vector<Edge> edges = {})
      : vertex_count_(vertex_count), adj_(static_cast<std::size_t>(vertex_count)) {
    for (auto& [a, b] : edges) {
      if (a == b) throw InstanceError("simple graph: self-loop");
      if (a < 0 || b < 0 || a >= vertex_count || b >= vertex_count) {
        throw InstanceError("simple graph: vertex out of range");
      }
      if (a > b) std::swap(a, b);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);
    for (const auto& [a, b] : edges_) {
      adj_[a].push_back(b);
      adj_[b].push_back(a);
    }
    for (auto& row : adj_) std::sort(row.begin(), row.end());
  }

  int vertex_count() const { return vertex_count_; }
  std::span<const Edge> edges() const { return edges_; }
  const std::vector<int>& neighbors(int v) const { return adj_[v]; }
  bool has_edge(int a, int b) const {
    if (a > b) std::swap(a, b);
    return std::binary_search(edges_.begin(), edges_.end(), Edge{a, b});
  }

 private:
  int vertex_count_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
};

// A matching as a list of normalized edges (sorted).
using Matching = std::vector<SimpleGraph::Edge>;

inline bool is_matching(const SimpleGraph& g, const Matching& m) {
  std::vector<char> used(static_cast<std::size_t>(g.vertex_count()), 0);
  for (const auto& [a, b] : m) {
    if (!g.has_edge(a, b)) return false;
    if (used[a] || used[b]) return false;
    used[a] = used[b] = 1;
  }
  return true;
}

namespace detail {

// Edmonds' blossom search. Vertices and neighbours are scanned in increasing
// id, so results depend only on the graph.
class BlossomMatcher {
 public:
  explicit BlossomMatcher(const SimpleGraph& g)
      : g_(g), n_(static_cast<std::size_t>(g.vertex_count())), mate_(n_, -1), parent_(n_),
        base_(n_), used_(n_), blossom_(n_) {}

  void seed(const Matching& m) {
    for (const auto& [a, b] : m) {
      mate_[a] = b;
      mate_[b] = a;
    }
  }

  void greedy() {
    for (std::size_t v = 0; v < n_; ++v) {
      if (mate_[v] != -1) continue;
      for (int w : g_.neighbors(static_cast<int>(v))) {
        if (mate_[w] == -1) {
          mate_[v] = w;
          mate_[w] = static_cast<int>(v);
          break;
        }
      }
    }
  }

  // Returns true if an augmenting path from `root` was found (and applied).
  bool augment_from(int root) {
    int v = find_path(root);
    if (v == -1) return false;
    while (v != -1) {
      const int pv = parent_[v];
      const int ppv = mate_[pv];
      mate_[v] = pv;
      mate_[pv] = v;
      v = ppv;
    }
    return true;
  }

  bool has_augmenting_path() {
    for (std::size_t v = 0; v < n_; ++v) {
      if (mate_[v] == -1 && find_path(static_cast<int>(v)) != -1) return true;
    }
    return false;
  }

  void run() {
    for (std::size_t v = 0; v < n_; ++v) {
      if (mate_[v] == -1) augment_from(static_cast<int>(v));
    }
  }

  Matching result() const {
    Matching m;
    for (std::size_t v = 0; v < n_; ++v) {
      if (mate_[v] > static_cast<int>(v)) m.emplace_back(static_cast<int>(v), mate_[v]);
    }
    return m;
  }

 private:
  int lca(int a, int b) {
    std::vector<char> seen(n_, 0);
    for (;;) {
      a = base_[a];
      seen[a] = 1;
      if (mate_[a] == -1) break;
      a = parent_[mate_[a]];
    }
    for (;;) {
      b = base_[b];
      if (seen[b]) return b;
      b = parent_[mate_[b]];
    }
  }

  void mark_path(int v, int b, int child) {
    while (base_[v] != b) {
      blossom_[base_[v]] = blossom_[base_[mate_[v]]] = 1;
      parent_[v] = child;
      child = mate_[v];
      v = parent_[mate_[v]];
    }
  }

  int find_path(int root) {
    std::fill(used_.begin(), used_.end(), 0);
    std::fill(parent_.begin(), parent_.end(), -1);
    for (std::size_t i = 0; i < n_; ++i) base_[i] = static_cast<int>(i);
    used_[root] = 1;
    std::deque<int> queue{root};
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int to : g_.neighbors(v)) {
        if (base_[v] == base_[to] || mate_[v] == to) continue;
        if (to == root || (mate_[to] != -1 && parent_[mate_[to]] != -1)) {
          const int cur = lca(v, to);
          std::fill(blossom_.begin(), blossom_.end(), 0);
          mark_path(v, cur, to);
          mark_path(to, cur, v);
          for (std::size_t i = 0; i < n_; ++i) {
            if (blossom_[base_[i]]) {
              base_[i] = cur;
              if (!used_[i]) {
                used_[i] = 1;
                queue.push_back(static_cast<int>(i));
              }
            }
          }
        } else if (parent_[to] == -1) {
          parent_[to] = v;
          if (mate_[to] == -1) return to;
          used_[mate_[to]] = 1;
          queue.push_back(mate_[to]);
        }
      }
    }
    return -1;
  }

  const SimpleGraph& g_;
  std::size_t n_;
  std::vector<int> mate_;
  std::vector<int> parent_;
  std::vector<int> base_;
  std::vector<char> used_;
  std::vector<char> blossom_;
};

}  // namespace detail

inline Matching maximum_matching(const SimpleGraph& g) {
  detail::BlossomMatcher matcher(g);
  matcher.greedy();
  matcher.run();
  return matcher.result();
}

// One-shot check: a matching is maximum iff it admits no augmenting path.
inline bool is_maximum_matching(const SimpleGraph& g, const Matching& m) {
  if (!is_matching(g, m)) return false;
  detail::BlossomMatcher matcher(g);
  matcher.seed(m);
  return !matcher.has_augmenting_path();
}

// (L, E(L)): the leaves of T and the links joining two leaves.
struct LeafLinkGraph {
  SimpleGraph graph{0};
  std::vector<NodeId> leaf;       // vertex -> original node
  std::vector<int> vertex_of;     // original node -> vertex or -1

  std::vector<Link> to_links(const Matching& m) const {
    std::vector<Link> out;
    for (const auto& [a, b] : m) out.emplace_back(leaf[a], leaf[b]);
    std::sort(out.begin(), out.end());
    return out;
  }
};

inline LeafLinkGraph leaf_link_graph(const Instance& inst) {
  LeafLinkGraph out;
  out.vertex_of.assign(static_cast<std::size_t>(inst.node_count()), -1);
  for (NodeId v : inst.leaves()) {
    out.vertex_of[v] = static_cast<int>(out.leaf.size());
    out.leaf.push_back(v);
  }
  std::vector<SimpleGraph::Edge> edges;
  for (const Link& l : inst.links()) {
    const int a = out.vertex_of[l.u];
    const int b = out.vertex_of[l.v];
    if (a >= 0 && b >= 0) edges.emplace_back(a, b);
  }
  out.graph = SimpleGraph(static_cast<int>(out.leaf.size()), std::move(edges));
  return out;
}

}  // namespace tap
