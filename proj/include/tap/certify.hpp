#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tap/contraction.hpp"
#include "tap/errors.hpp"
#include "tap/instance.hpp"
#include "tap/matching.hpp"
#include "tap/rational.hpp"
#include "tap/solver.hpp"

namespace tap {

// x ∈ [0,1]^E with exact values; unlisted links are 0.
class FractionalAssignment {
 public:
  FractionalAssignment() = default;

  void set(const Link& l, const Rational& value) {
    if (value == Rational(0)) {
      values_.erase(l);
    } else {
      values_[l] = value;
    }
  }

  Rational operator()(const Link& l) const {
    auto it = values_.find(l);
    return it == values_.end() ? Rational(0) : it->second;
  }

  const std::map<Link, Rational>& support() const { return values_; }

  Rational total() const {
    Rational sum = 0;
    for (const auto& [l, val] : values_) sum += val;
    return sum;
  }

  bool is_integral() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](const auto& kv) { return kv.second.denominator() == 1; });
  }

  std::vector<Link> ones() const {
    std::vector<Link> out;
    for (const auto& [l, val] : values_) {
      if (val == Rational(1)) out.push_back(l);
    }
    return out;
  }

  static FractionalAssignment indicator(std::span<const Link> links) {
    FractionalAssignment x;
    for (const Link& l : links) x.set(l, 1);
    return x;
  }

 private:
  std::map<Link, Rational> values_;
};

// Lines `x u v p/q`; keys must be instance links and values within [0,1].
inline FractionalAssignment parse_assignment(std::string_view text, const Instance& inst) {
  FractionalAssignment x;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    const auto tok = detail::tokenize(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (tok.empty()) continue;
    if (tok.size() != 4 || tok[0] != "x") throw ParseError(line_no, "expected 'x <u> <v> <p>/<q>'");
    const auto a = detail::parse_int(tok[1], line_no);
    const auto b = detail::parse_int(tok[2], line_no);
    if (a < 0 || b < 0 || a >= inst.node_count() || b >= inst.node_count() || a == b) {
      throw ParseError(line_no, "bad link ends");
    }
    const Link l(static_cast<NodeId>(a), static_cast<NodeId>(b));
    if (!inst.has_link(l)) throw ParseError(line_no, to_string(l) + " is not a link of the instance");
    Rational value;
    try {
      value = parse_rational(tok[3]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, e.what());
    }
    if (value < 0 || value > 1) throw ParseError(line_no, "value outside [0,1]");
    x.set(l, value);
  }
  return x;
}

inline std::string serialize(const FractionalAssignment& x) {
  std::string out;
  for (const auto& [l, val] : x.support()) {
    out += "x " + std::to_string(l.u) + " " + std::to_string(l.v) + " " + to_string(val) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// LP₀

struct CoveringViolation {
  TreeEdge edge;  // (smaller id, larger id)
  Rational slack; // x(δ(e)) - 1 < 0
};

struct OverlapViolation {
  Link l1;
  Link l2;
  Rational excess;  // x(l1) + x(l2) - 1 > 0
};

struct BoundViolation {
  Link link;
  Rational value;
};

struct Lp0Report {
  std::vector<CoveringViolation> covering;
  std::vector<OverlapViolation> overlapping;
  std::vector<BoundViolation> bounds;
  bool ok() const { return covering.empty() && overlapping.empty() && bounds.empty(); }
};

// x(δ(e)) for every tree edge, indexed by child endpoint.
inline std::vector<Rational> edge_loads(const Instance& inst, const FractionalAssignment& x) {
  std::vector<Rational> load(static_cast<std::size_t>(inst.node_count()), Rational(0));
  for (const auto& [l, val] : x.support()) {
    load[l.u] += val;
    load[l.v] += val;
    load[inst.lca(l.u, l.v)] -= 2 * val;
  }
  std::vector<NodeId> order{inst.root()};
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (NodeId c : inst.children(order[i])) order.push_back(c);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (*it != inst.root()) load[inst.parent(*it)] += load[*it];
  }
  return load;
}

// Pairs with a zero entry can only exceed 1 through a value above 1, which is
// also a bound violation; those are still listed against every link.
inline Lp0Report check_lp0(const Instance& inst, const FractionalAssignment& x) {
  Lp0Report r;
  for (const auto& [l, val] : x.support()) {
    if (val < 0 || val > 1 || !inst.has_link(l)) r.bounds.push_back({l, val});
  }
  const auto load = edge_loads(inst, x);
  for (NodeId v = 0; v < inst.node_count(); ++v) {
    if (v == inst.root() || load[v] >= 1) continue;
    const NodeId p = inst.parent(v);
    r.covering.push_back({{std::min(p, v), std::max(p, v)}, load[v] - 1});
  }
  std::sort(r.covering.begin(), r.covering.end(),
            [](const auto& a, const auto& b) { return a.edge < b.edge; });
  std::vector<std::pair<Link, Rational>> sup(x.support().begin(), x.support().end());
  for (std::size_t i = 0; i < sup.size(); ++i) {
    for (std::size_t j = i + 1; j < sup.size(); ++j) {
      const Rational sum = sup[i].second + sup[j].second;
      if (sum > 1 && is_overlapping_pair(inst, sup[i].first, sup[j].first)) {
        r.overlapping.push_back({sup[i].first, sup[j].first, sum - 1});
      }
    }
    if (sup[i].second > 1) {
      for (const Link& other : inst.links()) {
        if (x(other) != Rational(0) || other == sup[i].first) continue;
        if (is_overlapping_pair(inst, sup[i].first, other)) {
          r.overlapping.push_back({std::min(sup[i].first, other), std::max(sup[i].first, other),
                                   sup[i].second - 1});
        }
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Shortening overlapping pairs of an integral cover

namespace detail {

// Overlap of l with P(other) starting at end u1 of l: returns the far end u*
// of the longest prefix of P(u1, v1) inside P(other), or nothing if u1 is
// not on P(other) or the prefix has no edge.
inline std::optional<NodeId> shared_prefix_end(const Instance& inst, NodeId u1, NodeId v1,
                                               const Link& other) {
  if (!inst.on_path(u1, other.u, other.v)) return std::nullopt;
  const auto path = tree_path(inst, u1, v1);
  std::size_t k = 0;
  while (k + 1 < path.size() && inst.on_path(path[k + 1], other.u, other.v)) ++k;
  if (k == 0) return std::nullopt;
  return path[k];
}

}  // namespace detail

// Repeatedly takes an overlapping pair (l1, l2) with an end u1 of l1 on
// P(l2), and replaces l1 = u1v1 by u*v1 where P(u1, u*) is the maximal prefix
// of P(l1) inside P(l2). Orientations are tried in a fixed order, preferring
// one that keeps the cover size; the total path length strictly decreases.
inline std::vector<Link> shadow_minimalize(const Instance& inst, std::vector<Link> cover) {
  std::sort(cover.begin(), cover.end());
  cover.erase(std::unique(cover.begin(), cover.end()), cover.end());
  for (;;) {
    bool changed = false;
    for (std::size_t i = 0; i < cover.size() && !changed; ++i) {
      for (std::size_t j = i + 1; j < cover.size() && !changed; ++j) {
        if (!is_overlapping_pair(inst, cover[i], cover[j])) continue;
        struct Candidate {
          std::size_t drop;
          std::optional<Link> replacement;
        };
        std::optional<Candidate> fallback;
        std::optional<Candidate> chosen;
        for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
          for (NodeId u1 : {cover[a].u, cover[a].v}) {
            const NodeId v1 = cover[a].other(u1);
            const auto ustar = detail::shared_prefix_end(inst, u1, v1, cover[b]);
            if (!ustar) continue;
            Candidate c{a, std::nullopt};
            if (*ustar != v1) c.replacement = Link(*ustar, v1);
            if (!fallback) fallback = c;
            const bool keeps_size =
                c.replacement && !std::binary_search(cover.begin(), cover.end(), *c.replacement);
            if (keeps_size && !chosen) chosen = c;
          }
        }
        const auto pick = chosen ? chosen : fallback;
        check_invariant(pick.has_value(), "overlapping pair without a shared prefix");
        const std::optional<Link> repl = pick->replacement;
        cover.erase(cover.begin() + static_cast<std::ptrdiff_t>(pick->drop));
        if (repl) {
          check_invariant(inst.has_link(*repl), "shortened link missing: instance not shadow-closed");
          cover.push_back(*repl);
        }
        std::sort(cover.begin(), cover.end());
        cover.erase(std::unique(cover.begin(), cover.end()), cover.end());
        changed = true;
      }
    }
    if (!changed) return cover;
  }
}

inline bool overlapping_clique(const Instance& inst, std::span<const Link> links) {
  for (std::size_t i = 0; i < links.size(); ++i) {
    for (std::size_t j = i + 1; j < links.size(); ++j) {
      if (!is_overlapping_pair(inst, links[i], links[j])) return false;
    }
  }
  return true;
}

// δ_E(w): links with an end at w.
inline std::vector<Link> delta(const Instance& inst, NodeId w) {
  std::vector<Link> out;
  for (std::uint32_t idx : inst.incident_links(w)) out.push_back(inst.links()[idx]);
  return out;
}

// δ_E(e) for the tree edge above `child`: links covering it.
inline std::vector<Link> delta_edge(const Instance& inst, NodeId child) {
  std::vector<Link> out;
  for (const Link& l : inst.links()) {
    if (inst.covers(l, child)) out.push_back(l);
  }
  return out;
}

inline Rational x_of(const FractionalAssignment& x, std::span<const Link> links) {
  Rational sum = 0;
  for (const Link& l : links) sum += x(l);
  return sum;
}

// ½ Σ over non-leaf original nodes w ∈ S of x(δ_E(w)).
inline Rational phi(const Instance& inst, const FractionalAssignment& x, std::span<const NodeId> nodes) {
  Rational sum = 0;
  for (NodeId w : nodes) {
    if (!inst.is_leaf(w)) sum += x_of(x, delta(inst, w));
  }
  return sum / 2;
}

inline Rational phi_all(const Instance& inst, const FractionalAssignment& x) {
  std::vector<NodeId> all(static_cast<std::size_t>(inst.node_count()));
  std::iota(all.begin(), all.end(), 0);
  return phi(inst, x, all);
}

// |U| + 3/2 |M| + Φ(x, T).
inline Rational potential(const Instance& inst, const FractionalAssignment& x, std::size_t matching_size,
                          std::size_t exposed_count) {
  return Rational(static_cast<std::int64_t>(exposed_count)) +
         Rational(3, 2) * static_cast<std::int64_t>(matching_size) + phi_all(inst, x);
}

inline Rational potential(const Instance& inst, const FractionalAssignment& x, const MatchingState& ms) {
  return potential(inst, x, ms.m_original.size(), ms.u_original.size());
}

struct PotentialComparison {
  Rational lhs;  // potential
  Rational rhs;  // (3/2 + ε) x(E)
  bool holds() const { return lhs <= rhs; }
};

// The potential against (3/2 + ε)·x(E).
inline PotentialComparison compare_potential(const Instance& inst, const FractionalAssignment& x,
                                           const MatchingState& ms, const Rational& epsilon) {
  return {potential(inst, x, ms), (Rational(3, 2) + epsilon) * x.total()};
}

// ---------------------------------------------------------------------------
// Credits of semiclosed trees

struct SubtreeCredit {
  Rational credit;
  std::size_t gamma_size = 0;
  std::size_t m_inside = 0;        // |M(T'_v)|
  std::size_t exposed_leaves = 0;  // |U(T'_v)|
  std::size_t compounds = 0;       // |C(T'_v)|
  Rational phi;
  bool root_bonus = false;
  bool good = false;
  bool sufficient = false;  // one of the direct sufficient conditions for goodness
};

inline SubtreeCredit subtree_credit(const ContractedTree& ct, const MatchingState& ms,
                                    const FractionalAssignment& x, CNodeId v) {
  const Instance& inst = ct.origin();
  const ImageMatching m = ms.images(ct);
  const auto [nodes, leaves] = ct.subtree_and_leaves(v);
  const auto mate = mates(ct, m);
  SubtreeCredit s;
  for (const auto& [a, b] : m) {
    if (ct.is_ancestor(v, a) && ct.is_ancestor(v, b)) ++s.m_inside;
  }
  for (CNodeId w : leaves) {
    if (mate[w] == -1) ++s.exposed_leaves;
  }
  std::vector<NodeId> originals;
  for (CNodeId c : nodes) {
    if (ct.is_compound(c)) {
      if (!ct.is_leaf(c)) ++s.compounds;
    } else {
      originals.push_back(c);
      if (c == inst.root()) s.root_bonus = true;
    }
  }
  s.phi = phi(inst, x, originals);
  s.credit = Rational(3, 2) * static_cast<std::int64_t>(s.m_inside) +
             static_cast<std::int64_t>(s.exposed_leaves + s.compounds) + s.phi + (s.root_bonus ? 1 : 0);
  s.gamma_size = gamma(ct, m, v).size();
  s.good = s.credit >= static_cast<std::int64_t>(s.gamma_size + 1);
  s.sufficient = s.compounds > 0 || s.m_inside >= 2 || s.phi >= 1 ||
                 (s.m_inside == 1 && s.phi >= Rational(1, 2)) || v == ct.root();
  return s;
}

// ---------------------------------------------------------------------------
// Credit ledger replay

struct CreditRow {
  std::string event;
  std::size_t cost = 0;  // links added + 1 for the new compound
  Rational released;
  bool ok = false;
};

struct CreditReport {
  Rational potential;
  std::vector<CreditRow> rows;
  std::size_t final_total_cost = 0;  // |F|
  std::vector<std::string> violations;  // structural checks (goodness vs. deficiency)
  bool final_ok = false;
};

// Replays solve and pays every contraction from the accounts it consumes:
// exposed original leaf 1, compound 1, original non-leaf w ½x(δ(w)), root
// +1, M-link 3/2 (released when both ends merge). At every main-loop round
// a semiclosed tree that is not good under x must be deficient.
inline CreditReport audit_solve(const Instance& inst, const FractionalAssignment& x,
                                std::optional<std::vector<Link>> forced_matching = std::nullopt) {
  CreditReport report;
  std::vector<Rational> account(static_cast<std::size_t>(inst.node_count()), Rational(0));
  SolveOptions opts;
  opts.forced_matching = std::move(forced_matching);
  std::vector<char> m_released;

  opts.on_contraction = [&](const ContractedTree& ct, const MatchingState& ms, const IterationEvent& ev,
                            std::span<const ImagePair> images) {
    if (m_released.empty()) m_released.assign(ms.m_original.size(), 0);
    std::vector<char> merged(ct.capacity(), 0);
    for (const auto& [a, b] : images) {
      for (CNodeId c : ct.path(a, b)) merged[c] = 1;
    }
    CreditRow row;
    row.event = format_event(ev);
    row.cost = ev.added.size() + 1;
    for (CNodeId c = 0; static_cast<std::size_t>(c) < ct.capacity(); ++c) {
      if (!merged[c]) continue;
      row.released += ct.is_compound(c) ? Rational(1) : account[c];
    }
    for (std::size_t i = 0; i < ms.m_original.size(); ++i) {
      const auto img = ct.image(ms.m_original[i]);
      if (!img || m_released[i]) continue;
      if (merged[img->first] && merged[img->second]) {
        m_released[i] = 1;
        row.released += Rational(3, 2);
      }
    }
    row.ok = row.released >= static_cast<std::int64_t>(row.cost);
    report.rows.push_back(std::move(row));
  };

  opts.on_exhausted = [&](const ContractedTree& ct, const MatchingState& ms) {
    const ImageMatching m = ms.images(ct);
    const auto flag = semiclosed_flags(ct, m);
    for (CNodeId v : ct.alive_nodes()) {
      if (!flag[v]) continue;
      const SubtreeCredit s = subtree_credit(ct, ms, x, v);
      if (s.sufficient && !s.good) {
        report.violations.push_back("subtree " + std::to_string(v) + " meets a sufficient condition but is not good");
      }
      if (!s.good && !detect_deficient_3leaf_at(ct, m, v)) {
        report.violations.push_back("subtree " + std::to_string(v) + " is not good (credit " +
                                    to_string(s.credit) + ", |Γ| " + std::to_string(s.gamma_size) +
                                    ") and not deficient");
      }
    }
  };

  // Accounts must be known before the first contraction, which needs M.
  const MatchingState ms = opts.forced_matching ? forced_matching_state(inst, *opts.forced_matching)
                                                : compute_matching_state(inst);
  for (NodeId w = 0; w < inst.node_count(); ++w) {
    if (inst.is_leaf(w)) {
      account[w] = ms.exposed_leaf[w] ? 1 : 0;
    } else {
      account[w] = x_of(x, delta(inst, w)) / 2;
    }
  }
  account[inst.root()] += 1;
  report.potential = potential(inst, x, ms);

  const SolveResult res = solve(inst, opts);
  check_invariant(res.matching.m_original == ms.m_original, "audit replay used a different matching");
  report.final_total_cost = res.F.size();
  const bool rows_ok = std::all_of(report.rows.begin(), report.rows.end(), [](const auto& r) { return r.ok; });
  report.final_ok = rows_ok && report.violations.empty() &&
                    Rational(static_cast<std::int64_t>(res.F.size())) <= report.potential;
  return report;
}

// ---------------------------------------------------------------------------
// Matching polytope of G(L)

// Degree and odd-set constraints for (x restricted to E(L)) / scale, by
// enumerating all odd leaf subsets.
inline bool matching_polytope_member(const Instance& inst, const FractionalAssignment& x,
                                     const Rational& scale) {
  const auto& leaves = inst.leaves();
  const std::size_t n = leaves.size();
  if (n > 20) throw std::length_error("matching polytope check limited to 20 leaves");
  if (scale <= 0) throw std::invalid_argument("scale must be positive");
  std::vector<int> index(static_cast<std::size_t>(inst.node_count()), -1);
  for (std::size_t i = 0; i < n; ++i) index[leaves[i]] = static_cast<int>(i);
  // Integer weights over a common denominator.
  std::int64_t denom = scale.numerator();
  std::vector<std::tuple<int, int, Rational>> edges;
  for (const auto& [l, val] : x.support()) {
    if (index[l.u] < 0 || index[l.v] < 0) continue;
    if (val < 0) return false;
    const Rational y = val / scale;
    edges.emplace_back(index[l.u], index[l.v], y);
    denom = std::lcm(denom, y.denominator());
  }
  std::vector<std::vector<std::int64_t>> w(n, std::vector<std::int64_t>(n, 0));
  for (const auto& [a, b, y] : edges) {
    const std::int64_t scaled = y.numerator() * (denom / y.denominator());
    w[a][b] += scaled;
    w[b][a] += scaled;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::int64_t deg = 0;
    for (std::size_t j = 0; j < n; ++j) deg += w[i][j];
    if (deg > denom) return false;
  }
  if (n == 0) return true;
  // inside[S] = weight of E(S); built from S minus its lowest element.
  const std::size_t full = std::size_t{1} << n;
  std::vector<std::int64_t> inside(full, 0);
  for (std::size_t s = 1; s < full; ++s) {
    const int low = std::countr_zero(s);
    const std::size_t rest = s & (s - 1);
    std::int64_t add = 0;
    for (std::size_t r = rest; r; r &= r - 1) add += w[low][static_cast<std::size_t>(std::countr_zero(r))];
    inside[s] = inside[rest] + add;
    const int size = std::popcount(s);
    if (size >= 3 && size % 2 == 1 && 2 * inside[s] > static_cast<std::int64_t>(size - 1) * denom) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Auxiliary graph AG(T'_v)

struct AuxEdge {
  CNodeId left = 0;   // M-covered leaf of T'_v
  int right = 0;      // index into AuxiliaryGraph::right
  Link link;          // realizing original link (smallest)
  ImagePair image;
};

struct AuxiliaryGraph {
  static constexpr CNodeId kOutside = -1;  // the node v̄
  std::vector<CNodeId> left;               // ML(T'_v), sorted
  std::vector<CNodeId> right;              // v̄ first, then U(T'_v) sorted
  std::vector<AuxEdge> edges;
};

inline AuxiliaryGraph build_aux_graph(const ContractedTree& ct, const MatchingState& ms, CNodeId v) {
  const ImageMatching m = ms.images(ct);
  const auto mate = mates(ct, m);
  const auto [nodes, leaves] = ct.subtree_and_leaves(v);
  AuxiliaryGraph g;
  g.right.push_back(AuxiliaryGraph::kOutside);
  for (CNodeId w : leaves) {
    (mate[w] == -1 ? g.right : g.left).push_back(w);
  }
  for (CNodeId p : g.left) {
    std::map<CNodeId, Link> partners;
    ct.for_each_neighbor(p, [&](CNodeId other, const Link& l) {
      auto [it, inserted] = partners.emplace(other, l);
      if (!inserted && l < it->second) it->second = l;
    });
    for (const auto& [q, l] : partners) {
      int right = -1;
      if (!ct.is_ancestor(v, q)) {
        right = 0;
      } else if (auto it = std::find(g.right.begin() + 1, g.right.end(), q); it != g.right.end()) {
        right = static_cast<int>(it - g.right.begin());
      }
      if (right >= 0) g.edges.push_back({p, right, l, make_pair_sorted(p, q)});
    }
  }
  return g;
}

// Is there a perfect matching of AG(T'_v) whose links cover T'_v? Returns
// one, by exhaustive search (the graph is tiny whenever this is asked).
inline std::optional<std::vector<AuxEdge>> aux_perfect_matching_cover(const ContractedTree& ct,
                                                                      const AuxiliaryGraph& g, CNodeId v) {
  if (g.left.size() != g.right.size()) return std::nullopt;
  std::vector<char> right_used(g.right.size(), 0);
  std::vector<AuxEdge> chosen;
  std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
    if (i == g.left.size()) {
      std::vector<ImagePair> images;
      for (const AuxEdge& e : chosen) images.push_back(e.image);
      return covers_subtree(ct, images, v);
    }
    for (const AuxEdge& e : g.edges) {
      if (e.left != g.left[i] || right_used[e.right]) continue;
      right_used[e.right] = 1;
      chosen.push_back(e);
      if (rec(i + 1)) return true;
      chosen.pop_back();
      right_used[e.right] = 0;
    }
    return false;
  };
  if (rec(0)) return chosen;
  return std::nullopt;
}

}  // namespace tap
