#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tap/contraction.hpp"
#include "tap/errors.hpp"
#include "tap/instance.hpp"
#include "tap/matching.hpp"

namespace tap {

// The fixed maximum matching M on leaf-to-leaf links of T and its exposed
// leaves U.
struct MatchingState {
  std::vector<Link> m_original;      // sorted
  std::vector<NodeId> u_original;    // sorted
  std::vector<char> exposed_leaf;    // per original node: leaf of T not covered by M

  // Images of the M-links whose ends are still distinct, sorted.
  std::vector<ImagePair> images(const ContractedTree& ct) const {
    std::vector<ImagePair> out;
    for (const Link& l : m_original) {
      if (auto img = ct.image(l)) out.push_back(*img);
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

inline MatchingState matching_state(const Instance& inst, std::vector<Link> m) {
  MatchingState ms;
  std::sort(m.begin(), m.end());
  ms.m_original = std::move(m);
  ms.exposed_leaf.assign(static_cast<std::size_t>(inst.node_count()), 0);
  for (NodeId w : inst.leaves()) ms.exposed_leaf[w] = 1;
  for (const Link& l : ms.m_original) ms.exposed_leaf[l.u] = ms.exposed_leaf[l.v] = 0;
  for (NodeId w : inst.leaves()) {
    if (ms.exposed_leaf[w]) ms.u_original.push_back(w);
  }
  return ms;
}

inline MatchingState compute_matching_state(const Instance& inst) {
  const LeafLinkGraph g = leaf_link_graph(inst);
  return matching_state(inst, g.to_links(maximum_matching(g.graph)));
}

// A caller-supplied M must consist of leaf-to-leaf instance links, be a
// matching, and be maximum.
inline MatchingState forced_matching_state(const Instance& inst, std::vector<Link> m) {
  const LeafLinkGraph g = leaf_link_graph(inst);
  Matching vm;
  for (const Link& l : m) {
    if (!inst.has_link(l)) throw InstanceError("forced matching: " + to_string(l) + " is not a link");
    const int a = g.vertex_of[l.u];
    const int b = g.vertex_of[l.v];
    if (a < 0 || b < 0) throw InstanceError("forced matching: " + to_string(l) + " is not leaf-to-leaf");
    vm.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(vm.begin(), vm.end());
  if (!is_matching(g.graph, vm)) throw InstanceError("forced matching: links share an end");
  if (!is_maximum_matching(g.graph, vm)) throw InstanceError("forced matching: not a maximum matching");
  return matching_state(inst, std::move(m));
}

// Parses lines `m u v` ('#' comments) into links.
inline std::vector<Link> parse_matching(std::string_view text) {
  std::vector<Link> out;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    const auto tok = detail::tokenize(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (tok.empty()) continue;
    if (tok.size() != 3 || tok[0] != "m") throw ParseError(line_no, "expected 'm <u> <v>'");
    const auto a = detail::parse_int(tok[1], line_no);
    const auto b = detail::parse_int(tok[2], line_no);
    if (a == b) throw ParseError(line_no, "matching link is a self-loop");
    out.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simple contractions

enum class SimpleKind { kA, kB };

struct SimpleContraction {
  SimpleKind kind = SimpleKind::kA;
  ImagePair image;
};

// A T'-leaf that owns one full credit: a compound leaf or an M-exposed
// original leaf.
inline bool owns_credit(const ContractedTree& ct, const MatchingState& ms, CNodeId c) {
  if (!ct.is_leaf(c)) return false;
  return ct.is_compound(c) || ms.exposed_leaf[c];
}

inline bool path_has_compound(const ContractedTree& ct, CNodeId a, CNodeId b) {
  for (CNodeId c : ct.path(a, b)) {
    if (ct.is_compound(c)) return true;
  }
  return false;
}

// Type A (leaf-to-leaf image, both ends credited) before type B (M-link image
// whose path, ends included, meets a compound node); smallest image first.
inline std::optional<SimpleContraction> find_simple_contraction(const ContractedTree& ct,
                                                                const MatchingState& ms) {
  std::optional<ImagePair> best;
  for (const Link& l : ct.live_links()) {
    const ImagePair img = *ct.image(l);
    if (best && img >= *best) continue;
    if (owns_credit(ct, ms, img.first) && owns_credit(ct, ms, img.second)) best = img;
  }
  if (best) return SimpleContraction{SimpleKind::kA, *best};
  for (const ImagePair& img : ms.images(ct)) {
    if (path_has_compound(ct, img.first, img.second)) return SimpleContraction{SimpleKind::kB, img};
  }
  return std::nullopt;
}

// After exhaustion: every M-link image is an all-original path between two
// original leaves, and no link joins two M-exposed leaves.
inline void check_exhausted(const ContractedTree& ct, const MatchingState& ms) {
  for (const ImagePair& img : ms.images(ct)) {
    check_invariant(!path_has_compound(ct, img.first, img.second),
                    "M-link image meets a compound node after exhaustion");
    check_invariant(ct.is_leaf(img.first) && ct.is_leaf(img.second),
                    "M-link image end is not a leaf after exhaustion");
  }
  for (const Link& l : ct.live_links()) {
    const ImagePair img = *ct.image(l);
    check_invariant(!(owns_credit(ct, ms, img.first) && owns_credit(ct, ms, img.second)),
                    "link between two M-exposed leaves after exhaustion");
  }
}

// ---------------------------------------------------------------------------
// Semiclosed trees and covers Γ

// A leaf-to-leaf matching on T' given by its image pairs.
using ImageMatching = std::vector<ImagePair>;

inline std::vector<CNodeId> mates(const ContractedTree& ct, const ImageMatching& m) {
  std::vector<CNodeId> mate(ct.capacity(), -1);
  for (const auto& [a, b] : m) {
    mate[a] = b;
    mate[b] = a;
  }
  return mate;
}

// Direct check of both conditions for one subtree.
inline bool is_semiclosed(const ContractedTree& ct, const ImageMatching& m, CNodeId v) {
  const auto [nodes, leaves] = ct.subtree_and_leaves(v);
  auto inside = [&](CNodeId c) { return ct.is_ancestor(v, c); };
  for (const auto& [a, b] : m) {
    if (inside(a) != inside(b)) return false;
  }
  const auto mate = mates(ct, m);
  for (CNodeId w : leaves) {
    if (mate[w] != -1) continue;
    bool escapes = false;
    ct.for_each_neighbor(w, [&](CNodeId other, const Link&) { escapes = escapes || !inside(other); });
    if (escapes) return false;
  }
  return true;
}

// Semiclosed flag for every alive node at once. Each M̄-link end and each
// M̄-exposed leaf c demands a node h(c) (the highest lca with a partner);
// T'_v is semiclosed iff no demand inside T'_v reaches above v.
inline std::vector<char> semiclosed_flags(const ContractedTree& ct, const ImageMatching& m) {
  constexpr int kNone = std::numeric_limits<int>::max();
  std::vector<int> demand(ct.capacity(), kNone);
  auto require = [&](CNodeId c, CNodeId h) { demand[c] = std::min(demand[c], ct.depth(h)); };
  const auto mate = mates(ct, m);
  for (const auto& [a, b] : m) {
    const CNodeId h = ct.lca(a, b);
    require(a, h);
    require(b, h);
  }
  for (CNodeId w : ct.leaves()) {
    if (mate[w] != -1) continue;
    ct.for_each_neighbor(w, [&](CNodeId other, const Link&) { require(w, ct.lca(w, other)); });
  }
  std::vector<char> flag(ct.capacity(), 0);
  for (CNodeId c : ct.postorder()) {
    for (CNodeId ch : ct.children(c)) demand[c] = std::min(demand[c], demand[ch]);
    flag[c] = demand[c] >= ct.depth(c);
  }
  return flag;
}

// First semiclosed node in postorder; its proper subtrees come earlier, so it
// is minimally semiclosed. The root always qualifies.
inline CNodeId find_min_semiclosed(const ContractedTree& ct, const ImageMatching& m) {
  const auto flag = semiclosed_flags(ct, m);
  for (CNodeId c : ct.postorder()) {
    if (flag[c]) return c;
  }
  throw InvariantViolation("root of T' is not semiclosed");
}

// Γ(M̄, T'_v): M̄-links inside T'_v plus up(w)w for each M̄-exposed leaf w.
inline std::vector<ImagePair> gamma(const ContractedTree& ct, const ImageMatching& m, CNodeId v) {
  const auto [nodes, leaves] = ct.subtree_and_leaves(v);
  std::vector<ImagePair> out;
  for (const auto& [a, b] : m) {
    if (ct.is_ancestor(v, a) && ct.is_ancestor(v, b)) out.emplace_back(a, b);
  }
  const auto mate = mates(ct, m);
  for (CNodeId w : leaves) {
    if (mate[w] != -1) continue;
    const auto up = ct.up(w);
    check_invariant(up.has_value(), "exposed leaf without an ancestor link");
    check_invariant(ct.is_ancestor(v, *up), "up-link of an exposed leaf leaves the subtree");
    out.push_back(make_pair_sorted(w, *up));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Does the union of the image paths cover every tree edge of T'_v?
inline bool covers_subtree(const ContractedTree& ct, std::span<const ImagePair> links, CNodeId v) {
  const auto [nodes, leaves] = ct.subtree_and_leaves(v);
  std::vector<char> covered(ct.capacity(), 0);
  for (const auto& [a, b] : links) {
    const CNodeId top = ct.lca(a, b);
    for (CNodeId w = a; w != top; w = ct.parent(w)) covered[w] = 1;
    for (CNodeId w = b; w != top; w = ct.parent(w)) covered[w] = 1;
  }
  for (CNodeId c : nodes) {
    if (c != v && !covered[c]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Deficient 3-leaf trees

enum class Branching { kOneDegreeFour, kTwoDegreeThree };

struct Deficient3Tree {
  CNodeId v = 0;
  CNodeId a = 0;   // M-exposed leaf
  CNodeId b1 = 0;
  CNodeId b2 = 0;  // ceiling leaf
  Branching branch = Branching::kOneDegreeFour;
  CNodeId u = 0;
  std::optional<CNodeId> q;
  ImagePair witness;  // (b2, w) with w outside T'_v

  friend bool operator==(const Deficient3Tree&, const Deficient3Tree&) = default;
};

namespace detail {

inline std::optional<CNodeId> outside_neighbor(const ContractedTree& ct, CNodeId w, CNodeId v) {
  std::optional<CNodeId> best;
  ct.for_each_neighbor(w, [&](CNodeId other, const Link&) {
    if (ct.is_ancestor(v, other)) return;
    if (!best || ct.depth(other) < ct.depth(*best) ||
        (ct.depth(other) == ct.depth(*best) && other < *best)) {
      best = other;
    }
  });
  return best;
}

}  // namespace detail

// Checks conditions (i)-(iii) at v given that T'_v is semiclosed w.r.t. M.
// Branch nodes are found by child counts, which equal T'-degree minus one for
// every node of T'_v except a T'-root v; a root is never deficient since no
// link can leave it.
inline std::optional<Deficient3Tree> detect_deficient_3leaf_at(const ContractedTree& ct,
                                                               const ImageMatching& m, CNodeId v) {
  if (v == ct.root()) return std::nullopt;
  const auto [nodes, leaves] = ct.subtree_and_leaves(v);
  if (leaves.size() != 3) return std::nullopt;
  std::vector<CNodeId> branch;
  for (CNodeId c : nodes) {
    if (ct.children(c).size() >= 2) branch.push_back(c);
  }
  const auto mate = mates(ct, m);
  std::optional<ImagePair> mlink;
  CNodeId a = -1;
  for (CNodeId w : leaves) {
    if (mate[w] == -1) {
      a = w;
    } else if (!mlink) {
      mlink = make_pair_sorted(w, mate[w]);
    }
  }
  if (!mlink || a == -1) return std::nullopt;
  if (!ct.is_ancestor(v, mlink->first) || !ct.is_ancestor(v, mlink->second)) return std::nullopt;

  auto try_labeling = [&](CNodeId b1, CNodeId b2) -> std::optional<Deficient3Tree> {
    if (!ct.has_image(a, b1)) return std::nullopt;
    const auto w = detail::outside_neighbor(ct, b2, v);
    if (!w) return std::nullopt;
    Deficient3Tree t;
    t.v = v;
    t.a = a;
    t.b1 = b1;
    t.b2 = b2;
    t.witness = {b2, *w};
    return t;
  };

  std::optional<Deficient3Tree> found;
  if (branch.size() == 2) {
    CNodeId u = branch[0];
    CNodeId q = branch[1];
    if (ct.is_ancestor(q, u)) std::swap(u, q);
    check_invariant(ct.is_ancestor(u, q), "3-leaf tree: branch nodes not nested");
    CNodeId b1 = -1;
    for (CNodeId w : leaves) {
      if (!ct.is_ancestor(q, w)) b1 = w;
    }
    if (b1 == a || (b1 != mlink->first && b1 != mlink->second)) return std::nullopt;
    const CNodeId b2 = mlink->first == b1 ? mlink->second : mlink->first;
    found = try_labeling(b1, b2);
    if (found) {
      found->branch = Branching::kTwoDegreeThree;
      found->u = u;
      found->q = q;
    }
  } else {
    check_invariant(branch.size() == 1 && ct.children(branch[0]).size() == 3,
                    "3-leaf tree without a degree-4 node");
    auto first = try_labeling(mlink->first, mlink->second);
    auto second = try_labeling(mlink->second, mlink->first);
    if (first && second) {
      // Ceiling leaf: its up() is the higher one; on a tie the smaller id.
      const CNodeId up_first = *ct.up(mlink->second);   // up(b2) for labeling `first`
      const CNodeId up_second = *ct.up(mlink->first);   // up(b2) for labeling `second`
      if (ct.depth(up_first) < ct.depth(up_second)) {
        found = first;
      } else if (ct.depth(up_second) < ct.depth(up_first)) {
        found = second;
      } else {
        found = mlink->first < mlink->second ? second : first;
      }
    } else {
      found = first ? first : second;
    }
    if (found) {
      found->branch = Branching::kOneDegreeFour;
      found->u = branch[0];
    }
  }
  if (found) {
    check_invariant(!ct.is_compound(found->b1) && !ct.is_compound(found->b2),
                    "deficient tree with a compound M-covered leaf");
  }
  return found;
}

inline std::optional<Deficient3Tree> detect_deficient_3leaf(const ContractedTree& ct,
                                                            const MatchingState& ms, CNodeId v) {
  const ImageMatching m = ms.images(ct);
  if (!is_semiclosed(ct, m, v)) return std::nullopt;
  return detect_deficient_3leaf_at(ct, m, v);
}

// Deficient trees not properly contained in another one; pairwise disjoint.
inline std::vector<Deficient3Tree> maximal_deficient_trees(const ContractedTree& ct,
                                                           const MatchingState& ms) {
  const ImageMatching m = ms.images(ct);
  const auto flag = semiclosed_flags(ct, m);
  std::vector<int> leaf_count(ct.capacity(), 0);
  std::vector<Deficient3Tree> all;
  std::vector<char> is_root(ct.capacity(), 0);
  for (CNodeId c : ct.postorder()) {
    if (ct.is_leaf(c)) leaf_count[c] = 1;
    for (CNodeId ch : ct.children(c)) leaf_count[c] += leaf_count[ch];
    if (flag[c] && leaf_count[c] == 3) {
      if (auto t = detect_deficient_3leaf_at(ct, m, c)) {
        all.push_back(*t);
        is_root[c] = 1;
      }
    }
  }
  std::vector<Deficient3Tree> out;
  for (const Deficient3Tree& t : all) {
    bool nested = false;
    for (CNodeId w = t.v; w != ct.root() && !nested;) {
      w = ct.parent(w);
      nested = is_root[w];
    }
    if (!nested) out.push_back(t);
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.v < y.v; });
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      check_invariant(!ct.is_ancestor(out[i].v, out[j].v) && !ct.is_ancestor(out[j].v, out[i].v),
                      "maximal deficient trees overlap");
    }
  }
  return out;
}

// M^new: in every maximal deficient tree swap the M-link b2b1 for ab1.
inline ImageMatching build_m_new(const ContractedTree& ct, const MatchingState& ms,
                                 std::span<const Deficient3Tree> deficient) {
  ImageMatching m = ms.images(ct);
  for (const Deficient3Tree& t : deficient) {
    const ImagePair old_link = make_pair_sorted(t.b1, t.b2);
    auto it = std::find(m.begin(), m.end(), old_link);
    check_invariant(it != m.end(), "deficient tree M-link missing");
    *it = make_pair_sorted(t.a, t.b1);
  }
  std::sort(m.begin(), m.end());
  std::vector<char> used(ct.capacity(), 0);
  for (const auto& [a, b] : m) {
    check_invariant(ct.is_leaf(a) && ct.is_leaf(b), "M^new link is not leaf-to-leaf");
    check_invariant(!used[a] && !used[b], "M^new is not a matching");
    check_invariant(ct.has_image(a, b), "M^new link has no realizer");
    used[a] = used[b] = 1;
  }
  return m;
}

inline ImageMatching build_m_new(const ContractedTree& ct, const MatchingState& ms) {
  const auto deficient = maximal_deficient_trees(ct, ms);
  return build_m_new(ct, ms, deficient);
}

struct GoodSemiclosed {
  CNodeId v = 0;
  std::vector<ImagePair> cover;  // Γ(M^new, T'_v)
  std::vector<Deficient3Tree> deficient;
  ImageMatching m_new;
};

inline GoodSemiclosed find_good_semiclosed(const ContractedTree& ct, const MatchingState& ms) {
  check_invariant(ct.size() >= 2, "find_good_semiclosed on a single node");
  GoodSemiclosed out;
  out.deficient = maximal_deficient_trees(ct, ms);
  out.m_new = build_m_new(ct, ms, out.deficient);
  out.v = find_min_semiclosed(ct, out.m_new);
  out.cover = gamma(ct, out.m_new, out.v);
  check_invariant(covers_subtree(ct, out.cover, out.v), "Γ does not cover its semiclosed tree");
  const ImageMatching m = ms.images(ct);
  check_invariant(is_semiclosed(ct, m, out.v), "chosen tree is not semiclosed w.r.t. M");
  check_invariant(gamma(ct, m, out.v).size() == out.cover.size(), "|Γ(M^new)| != |Γ(M)|");
  check_invariant(!detect_deficient_3leaf_at(ct, m, out.v), "chosen tree is deficient");
  return out;
}

// ---------------------------------------------------------------------------
// Main loop

struct IterationEvent {
  enum class Kind { kSimpleA, kSimpleB, kSemiclosed };
  Kind kind = Kind::kSimpleA;
  CNodeId v = 0;                        // semiclosed root (T' id)
  std::size_t gamma_size = 0;
  bool used_m_new = false;              // M^new differed from M
  std::vector<CNodeId> deficient_roots;
  std::vector<Link> added;              // committed original links
  CNodeId compound = 0;                 // id of the resulting compound node
};

inline std::string format_event(const IterationEvent& e) {
  std::string s;
  switch (e.kind) {
    case IterationEvent::Kind::kSimpleA:
    case IterationEvent::Kind::kSimpleB:
      s = e.kind == IterationEvent::Kind::kSimpleA ? "SIMPLE-A " : "SIMPLE-B ";
      s += std::to_string(e.added.front().u) + " " + std::to_string(e.added.front().v);
      break;
    case IterationEvent::Kind::kSemiclosed:
      s = "SEMICLOSED " + std::to_string(e.v) + " " + std::to_string(e.gamma_size);
      if (!e.deficient_roots.empty()) {
        s += " DEFICIENT-HANDLED";
        for (CNodeId r : e.deficient_roots) s += " " + std::to_string(r);
      }
      break;
  }
  return s;
}

struct SolveStats {
  std::size_t iterations = 0;  // main-loop rounds
  std::size_t simple_a = 0;
  std::size_t simple_b = 0;
  std::size_t semiclosed = 0;
  std::size_t deficient_handled = 0;
};

struct SolveResult {
  std::vector<Link> F;  // in commit order
  std::vector<IterationEvent> trace;
  SolveStats stats;
  MatchingState matching;

  std::vector<Link> sorted_cover() const {
    std::vector<Link> out = F;
    std::sort(out.begin(), out.end());
    return out;
  }
};

struct SolveOptions {
  std::optional<std::vector<Link>> forced_matching;
  bool trace = true;
  // Called just before each contraction with the tree it applies to.
  std::function<void(const ContractedTree&, const MatchingState&, const IterationEvent&,
                     std::span<const ImagePair>)>
      on_contraction;
  // Called after simple contractions are exhausted, before the semiclosed step.
  std::function<void(const ContractedTree&, const MatchingState&)> on_exhausted;
};

// Rejects inputs outside the algorithm's domain.
inline void check_solvable(const Instance& inst) {
  const Diagnostics d = validate(inst);
  if (!d.ok) {
    std::string msg = "infeasible instance, uncovered tree edges:";
    for (const auto& [a, b] : d.uncovered) msg += " " + std::to_string(a) + "-" + std::to_string(b);
    throw InstanceError(msg);
  }
  if (!is_shadow_closed(inst)) throw InstanceError("instance is not shadow-closed");
  const StemReport stems = find_stems(inst);
  if (!stems.stemless()) {
    std::string msg = "instance has stems:";
    for (const Stem& s : stems.stems) msg += " " + std::to_string(s.stem) + " (twin " + to_string(s.twin) + ")";
    throw InstanceError(msg);
  }
}

inline SolveResult solve(const Instance& inst, const SolveOptions& opts = {}) {
  check_solvable(inst);
  SolveResult res;
  res.matching = opts.forced_matching ? forced_matching_state(inst, *opts.forced_matching)
                                      : compute_matching_state(inst);
  const MatchingState& ms = res.matching;
  ContractedTree ct(inst);

  auto commit = [&](IterationEvent ev, std::span<const ImagePair> images) {
    for (const auto& [a, b] : images) ev.added.push_back(*ct.realizer(a, b));
    if (opts.on_contraction) opts.on_contraction(ct, ms, ev, images);
    const std::size_t before = ct.size();
    ev.compound = ct.contract(images);
    check_invariant(ct.size() < before, "contraction did not shrink T'");
    res.F.insert(res.F.end(), ev.added.begin(), ev.added.end());
    if (opts.trace) res.trace.push_back(std::move(ev));
  };

  while (ct.size() > 1) {
    ++res.stats.iterations;
    while (auto sc = find_simple_contraction(ct, ms)) {
      IterationEvent ev;
      ev.kind = sc->kind == SimpleKind::kA ? IterationEvent::Kind::kSimpleA : IterationEvent::Kind::kSimpleB;
      ++(sc->kind == SimpleKind::kA ? res.stats.simple_a : res.stats.simple_b);
      commit(std::move(ev), std::span<const ImagePair>(&sc->image, 1));
    }
    if (ct.size() == 1) break;
    check_exhausted(ct, ms);
    if (opts.on_exhausted) opts.on_exhausted(ct, ms);
    GoodSemiclosed good = find_good_semiclosed(ct, ms);
    IterationEvent ev;
    ev.kind = IterationEvent::Kind::kSemiclosed;
    ev.v = good.v;
    ev.gamma_size = good.cover.size();
    ev.used_m_new = !good.deficient.empty();
    for (const Deficient3Tree& t : good.deficient) ev.deficient_roots.push_back(t.v);
    ++res.stats.semiclosed;
    res.stats.deficient_handled += good.deficient.size();
    commit(std::move(ev), good.cover);
  }
  check_invariant(is_cover(inst, res.F), "solver output is not a cover");
  return res;
}

}  // namespace tap
