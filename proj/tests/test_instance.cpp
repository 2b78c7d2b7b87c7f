#include <gtest/gtest.h>

#include <random>
#include <set>

#include "reference.hpp"
#include "tap/tap.hpp"

using namespace tap;

namespace {

const char* kPath3 = "tap 1\nnodes 3\nroot 0\ntree 0 1\ntree 1 2\nlink 0 2\n";
const char* kStar4 =
    "tap 1\nnodes 5\nroot 0\ntree 0 1\ntree 0 2\ntree 0 3\ntree 0 4\nlink 1 2\nlink 3 4\n";

std::vector<Link> sorted_links(const Instance& inst) { return {inst.links().begin(), inst.links().end()}; }

}  // namespace

TEST(Parse, Path3Depth) {
  const Instance inst = parse_instance(kPath3);
  EXPECT_EQ(inst.node_count(), 3);
  EXPECT_EQ(inst.root(), 0);
  EXPECT_EQ(inst.depth(2), 2);
}

TEST(Parse, CycleIsNotATree) {
  // n-1 tree lines that close a cycle leave some node disconnected.
  const char* text = "tap 1\nnodes 4\nroot 0\ntree 0 1\ntree 1 2\ntree 2 0\nlink 0 3\n";
  try {
    parse_instance(text);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("not a tree"), std::string::npos) << e.what();
  }
}

TEST(Parse, Star4Leaves) {
  const Instance inst = parse_instance(kStar4);
  EXPECT_EQ(inst.leaves(), (std::vector<NodeId>{1, 2, 3, 4}));
}

TEST(Parse, RootIsNeverALeaf) {
  const Instance inst = parse_instance(kPath3);
  EXPECT_EQ(inst.degree(0), 1);
  EXPECT_FALSE(inst.is_leaf(0));
  EXPECT_EQ(inst.leaves(), std::vector<NodeId>{2});
}

TEST(Parse, ErrorsCarryLineNumbers) {
  try {
    parse_instance("tap 1\nnodes 3\nroot 0\ntree 0 1\ntree 1 x\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 5);
  }
  EXPECT_THROW(parse_instance("tap 2\n"), ParseError);
  EXPECT_THROW(parse_instance("tap 1\nnodes 3\nroot 5\n"), ParseError);
  EXPECT_THROW(parse_instance("tap 1\nnodes 3\nroot 0\ntree 0 1\nlink 0 1\n"), ParseError);
}

TEST(Parse, InfeasibleInputIsRejected) {
  EXPECT_THROW(parse_instance("tap 1\nnodes 3\nroot 0\ntree 0 1\ntree 1 2\nlink 0 1\n"), InstanceError);
}

TEST(Parse, SerializeRoundTrip) {
  for (const auto& name : fixture_names()) {
    const Instance inst = gen_fixture(name);
    const std::string text = serialize(inst);
    EXPECT_EQ(serialize(parse_instance(text)), text) << name;
  }
}

TEST(Parse, DuplicateLinksCollapse) {
  const Instance inst = parse_instance("tap 1\nnodes 3\nroot 0\ntree 0 1\ntree 1 2\nlink 0 2\nlink 2 0\n");
  EXPECT_EQ(inst.link_count(), 1u);
}

TEST(Validate, Examples) {
  const Instance path3 = parse_instance(kPath3);
  EXPECT_TRUE(validate(path3).ok);

  const Instance bare = path3.with_links({});
  const Diagnostics d = validate(bare);
  EXPECT_FALSE(d.ok);
  EXPECT_EQ(d.uncovered, (std::vector<TreeEdge>{{0, 1}, {1, 2}}));

  const Instance star = parse_instance(kStar4).with_links({{1, 2}});
  const Diagnostics ds = validate(star);
  EXPECT_EQ(ds.uncovered, (std::vector<TreeEdge>{{0, 3}, {0, 4}}));
}

TEST(ShadowClose, Examples) {
  const Instance path3 = shadow_close(parse_instance(kPath3));
  EXPECT_EQ(sorted_links(path3), (std::vector<Link>{{0, 1}, {0, 2}, {1, 2}}));

  const Instance star = shadow_close(parse_instance(kStar4));
  EXPECT_EQ(star.link_count(), 6u);
  for (NodeId l = 1; l <= 4; ++l) EXPECT_TRUE(star.has_link({0, l}));

  // Link 4-7 of DEF3 runs 4,2,1,3,5,7; its closure contains every pair on
  // that path.
  const Instance def3 = gen_fixture("DEF3");
  const std::vector<NodeId> p{4, 2, 1, 3, 5, 7};
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) EXPECT_TRUE(def3.has_link({p[i], p[j]}));
  }
  for (const Link& l : {Link(4, 3), Link(4, 5), Link(3, 5), Link(3, 7), Link(5, 7)}) {
    EXPECT_TRUE(def3.has_link(l)) << l;
  }
}

TEST(ShadowClose, IdempotentAndComplete) {
  for (const auto& c : ref::corpus(120)) {
    const Instance inst = gen_random_stemless(c.n, c.seed, c.factor);
    const std::set<Link> expected = ref::shadow_closure(inst);
    const std::set<Link> got(inst.links().begin(), inst.links().end());
    EXPECT_EQ(got, expected) << "seed " << c.seed;
    EXPECT_TRUE(is_shadow_closed(inst));
    EXPECT_EQ(serialize(shadow_close(inst)), serialize(inst));
  }
}

TEST(ShadowClose, PreservesStemlessness) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance inst = gen_random_stemless(10, 7000 + trial);
    // Drop a random half of the links, repair coverage by tree-parallel
    // links, and close again.
    std::vector<Link> kept;
    for (const Link& l : inst.links()) {
      if (rng() % 2 == 0) kept.push_back(l);
    }
    for (NodeId v = 0; v < inst.node_count(); ++v) {
      if (v != inst.root()) kept.emplace_back(v, inst.parent(v));
    }
    const Instance partial = inst.with_links(kept);
    if (!find_stems(partial).stemless()) continue;
    EXPECT_TRUE(find_stems(shadow_close(partial)).stemless());
  }
}

TEST(TreePath, Examples) {
  const Instance path3 = parse_instance(kPath3);
  EXPECT_EQ(tree_path(path3, 0, 2), (std::vector<NodeId>{0, 1, 2}));
  EXPECT_EQ(tree_path(path3, 1, 1), std::vector<NodeId>{1});
  const Instance star = parse_instance(kStar4);
  EXPECT_EQ(tree_path(star, 1, 3), (std::vector<NodeId>{1, 0, 3}));
}

TEST(TreePath, MatchesClimbingReferenceAndLength) {
  for (const auto& c : ref::corpus(60)) {
    const Instance inst = gen_random_stemless(c.n, c.seed, c.factor);
    for (NodeId a = 0; a < inst.node_count(); ++a) {
      for (NodeId b = 0; b < inst.node_count(); ++b) {
        const auto p = tree_path(inst, a, b);
        ASSERT_EQ(p, ref::path(inst, a, b));
        const int expected = inst.depth(a) + inst.depth(b) - 2 * inst.depth(inst.lca(a, b)) + 1;
        ASSERT_EQ(static_cast<int>(p.size()), expected);
      }
    }
  }
}

TEST(Overlap, ClawExamples) {
  const ClawPath cp = gen_clawpath(3);
  const Instance& inst = cp.instance;
  // Claw 0 has center 0 and leaves 3, 4, 5.
  EXPECT_TRUE(is_overlapping_pair(inst, {3, 4}, {3, 5}));
  EXPECT_FALSE(is_overlapping_pair(inst, {3, 4}, {0, 2}));
  EXPECT_TRUE(is_overlapping_pair(inst, {3, 4}, {3, 4}));
}

TEST(Overlap, SymmetricAndMatchesDefinition) {
  for (const auto& c : ref::corpus(40)) {
    const Instance inst = gen_random_stemless(c.n, c.seed, c.factor);
    const auto links = sorted_links(inst);
    for (const Link& a : links) {
      const auto pa = ref::path(inst, a.u, a.v);
      const auto ea = ref::path_edge_set(inst, a.u, a.v);
      for (const Link& b : links) {
        const bool got = is_overlapping_pair(inst, a, b);
        ASSERT_EQ(got, is_overlapping_pair(inst, b, a));
        const auto pb = ref::path(inst, b.u, b.v);
        const auto eb = ref::path_edge_set(inst, b.u, b.v);
        bool share = false;
        for (const auto& e : ea) share = share || eb.count(e);
        auto on = [](const std::vector<NodeId>& p, NodeId w) { return std::find(p.begin(), p.end(), w) != p.end(); };
        const bool end_on = on(pb, a.u) || on(pb, a.v) || on(pa, b.u) || on(pa, b.v);
        ASSERT_EQ(got, share && end_on) << a << " " << b;
      }
    }
  }
}

TEST(Stems, Examples) {
  EXPECT_TRUE(find_stems(gen_fixture("STAR4")).stemless());
  EXPECT_TRUE(find_stems(gen_fixture("DEF3")).stemless());

  // r - c, c - l1, c - l2 with link l1 l2: stem c. The root has degree 1,
  // so r-l1 and r-l2 are twin links of c as well.
  const Instance claw(4, 0, {{0, 1}, {1, 2}, {1, 3}}, {{2, 3}, {0, 2}, {0, 3}});
  const StemReport r = find_stems(claw);
  ASSERT_FALSE(r.stems.empty());
  bool twin23 = false;
  for (const Stem& s : r.stems) {
    EXPECT_EQ(s.stem, 1);
    twin23 = twin23 || s.twin == Link(2, 3);
  }
  EXPECT_TRUE(twin23);
}

TEST(Stems, ReportedStemsSatisfyPattern) {
  std::mt19937_64 rng(9);
  int seen = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 5 + static_cast<int>(rng() % 8);
    std::vector<TreeEdge> edges;
    for (NodeId v = 1; v < n; ++v) edges.emplace_back(static_cast<NodeId>(rng() % v), v);
    std::vector<Link> links;
    for (NodeId v = 1; v < n; ++v) links.emplace_back(v, 0);
    for (int i = 0; i < n; ++i) {
      const NodeId a = static_cast<NodeId>(rng() % n);
      const NodeId b = static_cast<NodeId>(rng() % n);
      if (a != b) links.emplace_back(a, b);
    }
    const Instance inst(n, 0, edges, links);
    for (const Stem& s : find_stems(inst).stems) {
      ++seen;
      const auto p = ref::path(inst, s.twin.u, s.twin.v);
      ASSERT_EQ(inst.degree(s.twin.u), 1);
      ASSERT_EQ(inst.degree(s.twin.v), 1);
      int deg3 = 0;
      for (std::size_t i = 1; i + 1 < p.size(); ++i) {
        if (p[i] == s.stem) {
          ASSERT_EQ(inst.degree(p[i]), 3);
          ++deg3;
        } else {
          ASSERT_EQ(inst.degree(p[i]), 2);
        }
      }
      ASSERT_EQ(deg3, 1);
    }
  }
  EXPECT_GT(seen, 0);
}

TEST(IsCover, Examples) {
  const Instance path3 = parse_instance(kPath3);
  const Instance star = parse_instance(kStar4);
  EXPECT_TRUE(is_cover(path3, std::vector<Link>{{0, 2}}));
  EXPECT_FALSE(is_cover(star, std::vector<Link>{{1, 2}}));
  EXPECT_TRUE(is_cover(star, std::vector<Link>{{1, 2}, {3, 4}}));
}
