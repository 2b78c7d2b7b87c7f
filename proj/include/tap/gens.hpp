#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tap/certify.hpp"
#include "tap/errors.hpp"
#include "tap/instance.hpp"
#include "tap/oracle.hpp"
#include "tap/solver.hpp"

namespace tap {

// ---------------------------------------------------------------------------
// Fixtures

// PATH3: path 0-1-2 rooted at 0, link 0-2.
// STAR4: root 0 with leaves 1..4, links 1-2 and 3-4.
// DEF3: root 0 with child 3; 3 reaches leaf 4 through the path 3-1-2-4 and
//   has child 5; 5 has leaves 6 and 7; links 4-7, 4-6, 0-7. A deficient
//   3-leaf tree at 3 when M = {4-7}. Nodes 1 and 2 only pad the ids to a
//   dense range.
// DEF3x2: two DEF3 copies (ids 0..7 and 8..15) below a fresh root 16; the
//   outside links run to 16 instead of the copy roots.
// All fixtures are shadow-closed.
inline Instance gen_fixture(std::string_view name) {
  auto def3_edges = [](NodeId off) {
    return std::vector<TreeEdge>{{off + 0, off + 3}, {off + 3, off + 1}, {off + 1, off + 2},
                                 {off + 2, off + 4}, {off + 3, off + 5}, {off + 5, off + 6},
                                 {off + 5, off + 7}};
  };
  if (name == "PATH3") {
    return shadow_close(Instance(3, 0, {{0, 1}, {1, 2}}, {{0, 2}}));
  }
  if (name == "STAR4") {
    return shadow_close(Instance(5, 0, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}, {{1, 2}, {3, 4}}));
  }
  if (name == "DEF3") {
    return shadow_close(Instance(8, 0, def3_edges(0), {{4, 7}, {4, 6}, {0, 7}}));
  }
  if (name == "DEF3x2") {
    auto edges = def3_edges(0);
    const auto second = def3_edges(8);
    edges.insert(edges.end(), second.begin(), second.end());
    edges.emplace_back(16, 0);
    edges.emplace_back(16, 8);
    return shadow_close(Instance(17, 16, std::move(edges), {{4, 7}, {4, 6}, {16, 7}, {12, 15}, {12, 14}, {16, 15}}));
  }
  throw std::invalid_argument("unknown fixture '" + std::string(name) + "'");
}

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{"PATH3", "STAR4", "DEF3", "DEF3x2"};
  return names;
}

// ---------------------------------------------------------------------------
// Claw path

struct ClawPath {
  Instance instance;
  FractionalAssignment x;
};

// Spine 0..k-1 (root 0); claw center i has leaves k+3i, k+3i+1, k+3i+2.
// Links: the spine end-to-end link (absent for k = 1) and the three leaf
// pairs of every claw, shadow-closed. x is 1 on the spine link and 1/2 on
// every claw leaf pair. For k = 1 the single claw is a stem.
inline ClawPath gen_clawpath(int k) {
  if (k < 1) throw std::invalid_argument("clawpath needs k >= 1");
  const int n = 4 * k;
  std::vector<TreeEdge> edges;
  for (int i = 0; i + 1 < k; ++i) edges.emplace_back(i, i + 1);
  std::vector<Link> links;
  FractionalAssignment x;
  for (int i = 0; i < k; ++i) {
    const NodeId l0 = k + 3 * i;
    for (int j = 0; j < 3; ++j) edges.emplace_back(i, l0 + j);
    for (const Link& l : {Link(l0, l0 + 1), Link(l0, l0 + 2), Link(l0 + 1, l0 + 2)}) {
      links.push_back(l);
      x.set(l, Rational(1, 2));
    }
  }
  if (k >= 2) {
    links.emplace_back(0, k - 1);
    x.set(Link(0, k - 1), 1);
  }
  Instance inst = shadow_close(Instance(n, 0, std::move(edges), std::move(links)));
  check_invariant(x.total() == Rational(3 * k, 2) + (k >= 2 ? 1 : 0), "clawpath x(E) mismatch");
  check_invariant(k == 1 || find_stems(inst).stemless(), "clawpath has a stem");
  return {std::move(inst), std::move(x)};
}

// ---------------------------------------------------------------------------
// Tight family

namespace detail {

struct TightLayout {
  std::vector<TreeEdge> edges;
  std::vector<Link> links;
  int node_count = 0;
  NodeId root = 0;
};

// Ids: initial claw u1=0, u2=1, u3=2 around center c=3. Each of the first
// k-1 repeated blocks takes six fresh ids b1, b2, a2, x, w, v, with a1 the
// top of the block below:
//   v -> {w, b1}, w -> {x, b2}, x -> {a1, a2}; links a1a2, b1b2, a1b2, a2b1.
// The root block takes ids r, p, s, a2, b1, b2:
//   r -> {p, s, a2, b1}, p -> a1, s -> b2; links a1a2, a2b1, b1b2.
// A repeated block cannot sit at the root: its top would have degree 2 and
// make b1b2 a twin link.
inline TightLayout tight_layout(int k, bool biconnected) {
  TightLayout t;
  const NodeId u2 = 1;
  const NodeId c = 3;
  t.node_count = 4;
  t.edges = {{c, 0}, {c, 1}, {c, 2}};
  t.links = {{0, 1}, {1, 2}};
  NodeId top = c;
  NodeId prev_branch = -1;  // non-leaf child of the previous block's root
  auto chain = [&](NodeId branch) {
    t.links.emplace_back(prev_branch == -1 ? u2 : prev_branch, branch);
    prev_branch = branch;
  };
  for (int i = 0; i + 1 < k; ++i) {
    const NodeId b1 = t.node_count, b2 = b1 + 1, a2 = b1 + 2, x = b1 + 3, w = b1 + 4, v = b1 + 5;
    t.node_count += 6;
    t.edges.insert(t.edges.end(), {{x, top}, {x, a2}, {w, x}, {w, b2}, {v, w}, {v, b1}});
    t.links.insert(t.links.end(), {{top, a2}, {b1, b2}, {top, b2}, {a2, b1}});
    if (biconnected) chain(w);
    top = v;
  }
  const NodeId r = t.node_count, p = r + 1, s = r + 2, a2 = r + 3, b1 = r + 4, b2 = r + 5;
  t.node_count += 6;
  t.edges.insert(t.edges.end(), {{r, p}, {r, s}, {r, a2}, {r, b1}, {p, top}, {s, b2}});
  t.links.insert(t.links.end(), {{top, a2}, {a2, b1}, {b1, b2}});
  if (biconnected) chain(p);
  t.root = r;
  return t;
}

inline std::vector<std::string> event_lines(const std::vector<IterationEvent>& trace) {
  std::vector<std::string> out;
  for (const auto& e : trace) out.push_back(format_event(e));
  return out;
}

}  // namespace detail

// Exact-trace self-check of a tight instance. Returns the first failed
// constraint, or nothing.
inline std::optional<std::string> verify_tight(const Instance& inst, int k,
                                               std::uint64_t oracle_budget = kDefaultOracleBudget) {
  if (!validate(inst).ok) return "infeasible";
  if (!is_shadow_closed(inst)) return "not shadow-closed";
  if (!find_stems(inst).stemless()) return "has a stem";
  const SolveResult res = solve(inst);
  if (static_cast<int>(res.F.size()) != 3 * k + 2) {
    return "solver returned " + std::to_string(res.F.size()) + " links, expected " + std::to_string(3 * k + 2);
  }
  const auto& tr = res.trace;
  auto semiclosed = [](const IterationEvent& e, std::size_t size) {
    return e.kind == IterationEvent::Kind::kSemiclosed && e.gamma_size == size && e.deficient_roots.empty();
  };
  if (tr.size() != static_cast<std::size_t>(2 * k)) return "trace has " + std::to_string(tr.size()) + " events";
  if (!semiclosed(tr.front(), 2)) return "initial block is not one semiclosed contraction with 2 links";
  for (int i = 0; i + 1 < k; ++i) {
    if (tr[1 + 2 * i].kind != IterationEvent::Kind::kSimpleA) {
      return "repeated block " + std::to_string(i + 1) + " does not start with a type-A simple contraction";
    }
    if (!semiclosed(tr[2 + 2 * i], 2)) {
      return "repeated block " + std::to_string(i + 1) + " is not closed by a 2-link semiclosed contraction";
    }
  }
  if (!semiclosed(tr.back(), 3)) return "root block is not one semiclosed contraction with 3 links";
  const OptResult opt = opt_cover(inst, oracle_budget);
  if (!opt.exact) return "oracle budget exceeded";
  if (opt.opt_size != 2 * k + 2) {
    return "optimum is " + std::to_string(opt.opt_size) + ", expected " + std::to_string(2 * k + 2);
  }
  return std::nullopt;
}

// One initial claw block, k-1 repeated blocks and a root block. The solver
// pays 2 + 3k links against an optimum of 2k + 2. With `biconnected` the
// cross-block links from u2 and between consecutive blocks' branch nodes are
// added; the trace must stay the same. Throws if any check fails.
inline Instance gen_tight(int k, bool biconnected = false) {
  if (k < 1) throw std::invalid_argument("tight family needs k >= 1");
  auto t = detail::tight_layout(k, biconnected);
  Instance inst = shadow_close(Instance(t.node_count, t.root, std::move(t.edges), std::move(t.links)));
  if (auto failure = verify_tight(inst, k)) {
    throw InvariantViolation("tight instance k=" + std::to_string(k) + " failed self-check: " + *failure);
  }
  if (biconnected) {
    const auto plain = detail::tight_layout(k, false);
    const Instance base(plain.node_count, plain.root, plain.edges, plain.links);
    if (detail::event_lines(solve(shadow_close(base)).trace) != detail::event_lines(solve(inst).trace)) {
      throw InvariantViolation("tight instance k=" + std::to_string(k) + ": cross-block links changed the trace");
    }
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Random stemless instances

namespace detail {

// Proper ancestor of v reached by climbing one step and then continuing each further step with probability 1/2.
inline NodeId random_ancestor(const Instance& inst, NodeId v, std::mt19937_64& rng) {
  std::bernoulli_distribution climb(0.5);
  NodeId a = inst.parent(v);
  while (a != inst.root() && climb(rng)) a = inst.parent(a);
  return a;
}

// Deepest leaf of every subtree (smallest id on ties).
inline std::vector<NodeId> deepest_leaf(const Instance& inst) {
  std::vector<NodeId> order{inst.root()};
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (NodeId c : inst.children(order[i])) order.push_back(c);
  }
  std::vector<NodeId> best(order.size());
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    best[v] = v;
    for (NodeId c : inst.children(v)) {
      const NodeId cand = best[c];
      if (best[v] == v || inst.depth(cand) > inst.depth(best[v]) ||
          (inst.depth(cand) == inst.depth(best[v]) && cand < best[v])) {
        best[v] = cand;
      }
    }
  }
  return best;
}

// Adds, for every uncovered tree edge (deepest first), a link from the
// deepest leaf below it to a random proper ancestor, avoiding twin links.
inline Instance repair_coverage(const Instance& inst, std::mt19937_64& rng) {
  std::vector<Link> links(inst.links().begin(), inst.links().end());
  Instance current = inst;
  for (int round = 0; round <= inst.node_count(); ++round) {
    const Diagnostics d = validate(current);
    if (d.ok) return current;
    std::vector<char> uncovered(static_cast<std::size_t>(inst.node_count()), 0);
    for (const auto& [a, b] : d.uncovered) uncovered[current.parent(a) == b ? a : b] = 1;
    std::vector<NodeId> order;
    for (NodeId v = 0; v < inst.node_count(); ++v) {
      if (uncovered[v]) order.push_back(v);
    }
    std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
      return current.depth(a) != current.depth(b) ? current.depth(a) > current.depth(b) : a < b;
    });
    const auto deepest = deepest_leaf(current);
    for (NodeId child : order) {
      if (!uncovered[child]) continue;
      const NodeId leaf = deepest[child];
      std::optional<Link> pick;
      for (int tries = 0; tries < 16 && !pick; ++tries) {
        const NodeId a = random_ancestor(current, child, rng);
        for (NodeId low : {leaf, child}) {
          if (!twin_stem(current, Link(low, a))) {
            pick = Link(low, a);
            break;
          }
        }
      }
      if (!pick) pick = Link(child, current.parent(child));
      links.push_back(*pick);
      for (NodeId c : current.path_edges(pick->u, pick->v)) uncovered[c] = 0;
    }
    current = inst.with_links(links);
  }
  throw InvariantViolation("coverage repair did not converge");
}

}  // namespace detail

inline constexpr double kDefaultExtraLinkFactor = 1.0;

// Uniform-attachment tree rooted at 0, random leaf-to-leaf and
// node-to-ancestor links (mostly short), coverage repair, shadow closure,
// twin-link removal and a second repair. Deterministic per (n, seed, factor).
inline Instance gen_random_stemless(int n, std::uint64_t seed, double extra_link_factor = kDefaultExtraLinkFactor) {
  if (n < 2) throw std::invalid_argument("random instance needs n >= 2");
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<TreeEdge> edges;
    for (NodeId v = 1; v < n; ++v) {
      std::uniform_int_distribution<NodeId> pick(0, v - 1);
      edges.emplace_back(pick(rng), v);
    }
    const Instance bare(n, 0, edges, {});
    std::vector<Link> links;
    const auto& leaves = bare.leaves();
    const int count = std::max(1, static_cast<int>(extra_link_factor * n / 2));
    std::bernoulli_distribution leaf_pair(0.5);
    for (int i = 0; i < count; ++i) {
      if (leaves.size() >= 2 && leaf_pair(rng)) {
        std::uniform_int_distribution<std::size_t> pick(0, leaves.size() - 1);
        const NodeId a = leaves[pick(rng)];
        const NodeId top = detail::random_ancestor(bare, a, rng);
        std::vector<NodeId> below;
        for (NodeId w : leaves) {
          if (w != a && bare.is_ancestor(top, w)) below.push_back(w);
        }
        if (below.empty()) continue;
        std::uniform_int_distribution<std::size_t> pb(0, below.size() - 1);
        links.emplace_back(a, below[pb(rng)]);
      } else {
        std::uniform_int_distribution<NodeId> pick(1, n - 1);
        const NodeId v = pick(rng);
        links.emplace_back(v, detail::random_ancestor(bare, v, rng));
      }
    }
    Instance inst = detail::repair_coverage(bare.with_links(links), rng);
    for (int round = 0; round < 8; ++round) {
      inst = shadow_close(inst);
      if (find_stems(inst).stemless()) {
        check_invariant(validate(inst).ok && is_shadow_closed(inst), "random instance self-check failed");
        return inst;
      }
      std::vector<Link> kept;
      for (const Link& l : inst.links()) {
        if (!twin_stem(inst, l)) kept.push_back(l);
      }
      inst = detail::repair_coverage(inst.with_links(std::move(kept)), rng);
    }
  }
  throw InvariantViolation("random stemless generator gave up");
}

}  // namespace tap
