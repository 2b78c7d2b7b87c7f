#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "tap/errors.hpp"
#include "tap/instance.hpp"

namespace tap {

struct OptResult {
  bool exact = false;        // false: node budget ran out, size unknown
  int opt_size = -1;
  std::vector<Link> cover;   // sorted; empty when not exact
  std::uint64_t nodes_explored = 0;
};

// Links whose tree path is not strictly contained in another link's path.
// Any cover lifts to such links without growing.
inline std::vector<Link> maximal_links(const Instance& inst) {
  const auto links = inst.links();
  std::vector<Link> out;
  for (const Link& l : links) {
    bool contained = false;
    for (const Link& other : links) {
      if (other == l) continue;
      if (inst.on_path(l.u, other.u, other.v) && inst.on_path(l.v, other.u, other.v)) {
        contained = true;
        break;
      }
    }
    if (!contained) out.push_back(l);
  }
  return out;
}

namespace detail {

class CoverSearch {
 public:
  CoverSearch(const Instance& inst, std::uint64_t limit) : inst_(inst), limit_(limit) {
    links_ = maximal_links(inst);
    const auto n = static_cast<std::size_t>(inst.node_count());
    covering_.assign(n, {});
    paths_.resize(links_.size());
    for (std::size_t i = 0; i < links_.size(); ++i) {
      paths_[i] = inst.path_edges(links_[i].u, links_[i].v);
      for (NodeId child : paths_[i]) covering_[child].push_back(static_cast<int>(i));
    }
    // Deepest edges first; the order drives both branching and the bound.
    for (NodeId v = 0; v < inst.node_count(); ++v) {
      if (v != inst.root()) edges_by_depth_.push_back(v);
    }
    std::sort(edges_by_depth_.begin(), edges_by_depth_.end(), [&](NodeId a, NodeId b) {
      return inst.depth(a) != inst.depth(b) ? inst.depth(a) > inst.depth(b) : a < b;
    });
    // Prefer long links when branching.
    for (auto& list : covering_) {
      std::stable_sort(list.begin(), list.end(), [&](int a, int b) { return paths_[a].size() > paths_[b].size(); });
    }
    count_.assign(n, 0);
  }

  OptResult run() {
    OptResult res;
    for (NodeId child : edges_by_depth_) {
      if (covering_[child].empty()) throw InstanceError("infeasible instance: tree edge without a link");
    }
    best_ = greedy();
    aborted_ = false;
    std::vector<int> chosen;
    search(chosen);
    res.nodes_explored = explored_;
    if (aborted_) return res;
    res.exact = true;
    for (int i : best_) res.cover.push_back(links_[i]);
    std::sort(res.cover.begin(), res.cover.end());
    res.opt_size = static_cast<int>(res.cover.size());
    return res;
  }

 private:
  void add(int i, int delta) {
    for (NodeId child : paths_[i]) count_[child] += delta;
  }

  std::vector<int> greedy() {
    std::vector<int> picked;
    for (NodeId child : edges_by_depth_) {
      if (count_[child] > 0) continue;
      int best = -1;
      int gain = -1;
      for (int i : covering_[child]) {
        int g = 0;
        for (NodeId c : paths_[i]) g += count_[c] == 0;
        if (g > gain) {
          gain = g;
          best = i;
        }
      }
      picked.push_back(best);
      add(best, 1);
    }
    for (int i : picked) add(i, -1);
    return picked;
  }

  // Uncovered edges pairwise unreachable by a single link each need their
  // own link.
  int lower_bound() {
    blocked_.assign(count_.size(), 0);
    int bound = 0;
    for (NodeId child : edges_by_depth_) {
      if (count_[child] > 0 || blocked_[child]) continue;
      ++bound;
      for (int i : covering_[child]) {
        for (NodeId c : paths_[i]) blocked_[c] = 1;
      }
    }
    return bound;
  }

  void search(std::vector<int>& chosen) {
    if (aborted_) return;
    if (++explored_ > limit_) {
      aborted_ = true;
      return;
    }
    NodeId target = -1;
    for (NodeId child : edges_by_depth_) {
      if (count_[child] == 0) {
        target = child;
        break;
      }
    }
    if (target == -1) {
      if (chosen.size() < best_.size()) best_ = chosen;
      return;
    }
    if (chosen.size() + static_cast<std::size_t>(lower_bound()) >= best_.size()) return;
    for (int i : covering_[target]) {
      chosen.push_back(i);
      add(i, 1);
      search(chosen);
      add(i, -1);
      chosen.pop_back();
      if (aborted_) return;
    }
  }

  const Instance& inst_;
  std::uint64_t limit_;
  std::vector<Link> links_;
  std::vector<std::vector<NodeId>> paths_;
  std::vector<std::vector<int>> covering_;
  std::vector<NodeId> edges_by_depth_;
  std::vector<int> count_;
  std::vector<char> blocked_;
  std::vector<int> best_;
  std::uint64_t explored_ = 0;
  bool aborted_ = false;
};

}  // namespace detail

inline constexpr std::uint64_t kDefaultOracleBudget = 5'000'000;

// Exact minimum cover by branch and bound on the deepest uncovered edge.
inline OptResult opt_cover(const Instance& inst, std::uint64_t limit = kDefaultOracleBudget) {
  return detail::CoverSearch(inst, limit).run();
}

}  // namespace tap
