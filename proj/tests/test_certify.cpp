#include <gtest/gtest.h>

#include "reference.hpp"
#include "tap/tap.hpp"

using namespace tap;

namespace {

std::vector<NodeId> all_nodes(const Instance& inst) {
  std::vector<NodeId> out(static_cast<std::size_t>(inst.node_count()));
  std::iota(out.begin(), out.end(), 0);
  return out;
}

}  // namespace

TEST(Assignment, ParseAndSerialize) {
  const Instance path3 = gen_fixture("PATH3");
  const FractionalAssignment x = parse_assignment("x 0 2 1\nx 1 2 1/2\n", path3);
  EXPECT_EQ(x(Link(0, 2)), Rational(1));
  EXPECT_EQ(x(Link(2, 1)), Rational(1, 2));
  EXPECT_EQ(x(Link(0, 1)), Rational(0));
  EXPECT_EQ(x.total(), Rational(3, 2));
  EXPECT_FALSE(x.is_integral());
  EXPECT_EQ(serialize(parse_assignment(serialize(x), path3)), serialize(x));
  EXPECT_THROW(parse_assignment("x 0 2 3/2\n", path3), ParseError);
  EXPECT_THROW(parse_assignment("x 0 5 1\n", path3), ParseError);
}

TEST(Lp0, ClawPathAssignmentIsFeasible) {
  for (int k = 1; k <= 8; ++k) {
    const ClawPath cp = gen_clawpath(k);
    EXPECT_TRUE(check_lp0(cp.instance, cp.x).ok()) << k;
  }
}

TEST(Lp0, RaisedClawLinkOverlaps) {
  ClawPath cp = gen_clawpath(3);
  cp.x.set(Link(3, 4), 1);
  const Lp0Report r = check_lp0(cp.instance, cp.x);
  EXPECT_FALSE(r.ok());
  ASSERT_FALSE(r.overlapping.empty());
  bool found = false;
  for (const auto& v : r.overlapping) {
    const bool touches = v.l1 == Link(3, 4) || v.l2 == Link(3, 4);
    if (touches) {
      found = true;
      EXPECT_EQ(v.excess, Rational(1, 2));
    }
  }
  EXPECT_TRUE(found);
  EXPECT_TRUE(r.covering.empty());
}

TEST(Lp0, NonCoverReportsEdge) {
  const Instance star = gen_fixture("STAR4");
  const std::vector<Link> partial{{1, 2}};
  const Lp0Report r = check_lp0(star, FractionalAssignment::indicator(partial));
  ASSERT_EQ(r.covering.size(), 2u);
  EXPECT_EQ(r.covering[0].edge, (TreeEdge{0, 3}));
  EXPECT_EQ(r.covering[0].slack, Rational(-1));
}

TEST(Lp0, OverlapPairsMatchPairwiseTest) {
  // Fractional ½ on every link: a pair violates exactly when it overlaps.
  for (const auto& c : ref::corpus(30)) {
    const Instance inst = gen_random_stemless(c.n, c.seed, c.factor);
    FractionalAssignment x;
    for (const Link& l : inst.links()) x.set(l, Rational(1, 2));
    const Lp0Report r = check_lp0(inst, x);
    EXPECT_TRUE(r.overlapping.empty()) << "seed " << c.seed;
    x.set(*inst.links().begin(), Rational(3, 4));
    std::size_t expected = 0;
    const Link first = *inst.links().begin();
    for (const Link& l : inst.links()) {
      if (!(l == first) && is_overlapping_pair(inst, first, l)) ++expected;
    }
    EXPECT_EQ(check_lp0(inst, x).overlapping.size(), expected) << "seed " << c.seed;
  }
}

TEST(ShadowMinimalize, Examples) {
  const Instance star = gen_fixture("STAR4");
  const std::vector<Link> sc{{1, 2}, {3, 4}};
  EXPECT_EQ(shadow_minimalize(star, sc), sc);

  const Instance path3 = gen_fixture("PATH3");
  EXPECT_TRUE(is_overlapping_pair(path3, {0, 2}, {1, 2}));
  const auto out = shadow_minimalize(path3, {{0, 2}, {1, 2}});
  EXPECT_EQ(out, (std::vector<Link>{{0, 1}, {1, 2}}));
  EXPECT_TRUE(is_cover(path3, out));
  EXPECT_TRUE(check_lp0(path3, FractionalAssignment::indicator(out)).ok());
  EXPECT_EQ(shadow_minimalize(path3, out), out);
}

TEST(ShadowMinimalize, OracleCoversStayFeasible) {
  for (const auto& c : ref::corpus(150)) {
    const Instance inst = gen_random_stemless(c.n, c.seed, c.factor);
    const OptResult opt = opt_cover(inst);
    ASSERT_TRUE(opt.exact);
    const auto m = shadow_minimalize(inst, opt.cover);
    ASSERT_EQ(m.size(), opt.cover.size());
    ASSERT_TRUE(ref::covers_all(inst, m));
    ASSERT_TRUE(check_lp0(inst, FractionalAssignment::indicator(m)).ok()) << "seed " << c.seed;
    ASSERT_EQ(shadow_minimalize(inst, m), m);
  }
}

TEST(OverlappingClique, LeafStarsAreCliques) {
  std::vector<Instance> insts;
  for (const auto& name : fixture_names()) insts.push_back(gen_fixture(name));
  for (const auto& c : ref::corpus(40)) insts.push_back(gen_random_stemless(c.n, c.seed, c.factor));
  for (const Instance& inst : insts) {
    for (NodeId w : inst.leaves()) {
      const auto d = delta(inst, w);
      EXPECT_TRUE(overlapping_clique(inst, d));
      // A pendant edge is covered exactly by the links at its leaf.
      auto de = delta_edge(inst, w);
      auto dw = d;
      std::sort(de.begin(), de.end());
      std::sort(dw.begin(), dw.end());
      EXPECT_EQ(de, dw);
      EXPECT_TRUE(overlapping_clique(inst, de));
    }
  }
  const Instance star = gen_fixture("STAR4");
  const std::vector<Link> disjoint{{1, 2}, {3, 4}};
  EXPECT_FALSE(overlapping_clique(star, disjoint));
}

TEST(OverlappingClique, LeafLoadIsOneForFeasibleIntegralCovers) {
  // x(δ(w)) = 1 at every leaf once the cover is shadow-minimal.
  for (const auto& c : ref::corpus(100)) {
    const Instance inst = gen_random_stemless(c.n, c.seed, c.factor);
    const auto cover = shadow_minimalize(inst, opt_cover(inst).cover);
    const auto x = FractionalAssignment::indicator(cover);
    for (NodeId w : inst.leaves()) ASSERT_EQ(x_of(x, delta(inst, w)), Rational(1)) << "seed " << c.seed;
  }
}

TEST(Potential, PhiExamples) {
  const Instance star = gen_fixture("STAR4");
  const std::vector<Link> sc{{1, 2}, {3, 4}};
  const auto x = FractionalAssignment::indicator(sc);
  const std::vector<NodeId> leaves{1, 2, 3, 4};
  EXPECT_EQ(phi(star, x, leaves), Rational(0));

  const Instance def3 = gen_fixture("DEF3");
  const std::vector<Link> opt{{0, 7}, {4, 6}};
  const auto xd = FractionalAssignment::indicator(opt);
  const std::vector<NodeId> s{3, 5};
  EXPECT_EQ(phi(def3, xd, s), Rational(0));
  EXPECT_EQ(phi_all(def3, xd), Rational(1, 2));

  const ClawPath cp = gen_clawpath(4);
  const std::vector<NodeId> spine{0, 1, 2, 3};
  EXPECT_EQ(phi(cp.instance, cp.x, spine), Rational(1));
}

TEST(Potential, Star4) {
  const Instance star = gen_fixture("STAR4");
  const std::vector<Link> sc{{1, 2}, {3, 4}};
  const auto x = FractionalAssignment::indicator(sc);
  const auto cmp = compare_potential(star, x, compute_matching_state(star), 0);
  EXPECT_EQ(cmp.lhs, Rational(3));
  EXPECT_EQ(cmp.rhs, Rational(3));
  EXPECT_TRUE(cmp.holds());
}

TEST(Potential, ClawPathSeparation) {
  const ClawPath cp = gen_clawpath(8);
  const MatchingState ms = compute_matching_state(cp.instance);
  EXPECT_EQ(ms.m_original.size(), 8u);
  EXPECT_EQ(ms.u_original.size(), 8u);
  EXPECT_EQ(potential(cp.instance, cp.x, 8, 8) - phi_all(cp.instance, cp.x), Rational(20));
  EXPECT_EQ(potential(cp.instance, cp.x, ms), Rational(21));
  EXPECT_EQ(cp.x.total(), Rational(13));
  const auto cmp = compare_potential(cp.instance, cp.x, ms, Rational(1, 100));
  EXPECT_EQ(cmp.rhs, Rational(1963, 100));
  EXPECT_FALSE(cmp.holds());
}

TEST(Potential, IntegralOptimaSatisfyInequality) {
  for (const auto& c : ref::corpus(150)) {
    const Instance inst = gen_random_stemless(c.n, c.seed, c.factor);
    const auto cover = shadow_minimalize(inst, opt_cover(inst).cover);
    const auto x = FractionalAssignment::indicator(cover);
    ASSERT_TRUE(compare_potential(inst, x, compute_matching_state(inst), 0).holds()) << "seed " << c.seed;
  }
}

TEST(Credit, Def3DeficientTreeIsNotGood) {
  const Instance def3 = gen_fixture("DEF3");
  const ContractedTree ct(def3);
  const MatchingState ms = forced_matching_state(def3, {{4, 7}});
  const std::vector<Link> opt{{0, 7}, {4, 6}};
  const SubtreeCredit s = subtree_credit(ct, ms, FractionalAssignment::indicator(opt), 3);
  EXPECT_EQ(s.m_inside, 1u);
  EXPECT_EQ(s.exposed_leaves, 1u);
  EXPECT_EQ(s.compounds, 0u);
  EXPECT_EQ(s.phi, Rational(0));
  EXPECT_EQ(s.credit, Rational(5, 2));
  EXPECT_EQ(s.gamma_size, 2u);
  EXPECT_FALSE(s.good);
}

TEST(Credit, Star4RootIsGood) {
  const Instance star = gen_fixture("STAR4");
  const std::vector<Link> sc{{1, 2}, {3, 4}};
  const SubtreeCredit s =
      subtree_credit(ContractedTree(star), compute_matching_state(star), FractionalAssignment::indicator(sc), 0);
  EXPECT_EQ(s.credit, Rational(4));
  EXPECT_TRUE(s.good);
}

TEST(Audit, Fixtures) {
  const Instance star = gen_fixture("STAR4");
  const std::vector<Link> sc{{1, 2}, {3, 4}};
  const CreditReport r = audit_solve(star, FractionalAssignment::indicator(sc));
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].released, Rational(4));
  EXPECT_EQ(r.rows[0].cost, 3u);
  EXPECT_TRUE(r.final_ok);

  const Instance def3 = gen_fixture("DEF3");
  const std::vector<Link> opt{{0, 7}, {4, 6}};
  const CreditReport rd = audit_solve(def3, FractionalAssignment::indicator(opt), std::vector<Link>{{4, 7}});
  EXPECT_EQ(rd.final_total_cost, 2u);
  EXPECT_EQ(rd.potential, Rational(3));
  EXPECT_TRUE(rd.final_ok);

  const ClawPath cp = gen_clawpath(3);
  const CreditReport rc = audit_solve(cp.instance, FractionalAssignment::indicator(opt_cover(cp.instance).cover));
  for (const auto& row : rc.rows) {
    if (row.event.rfind("SIMPLE-A", 0) == 0) {
      EXPECT_GE(row.released, Rational(2));
    }
  }
}

TEST(Audit, CorpusPasses) {
  for (const auto& c : ref::corpus(150)) {
    const Instance inst = gen_random_stemless(c.n, c.seed, c.factor);
    const auto cover = shadow_minimalize(inst, opt_cover(inst).cover);
    const CreditReport r = audit_solve(inst, FractionalAssignment::indicator(cover));
    ASSERT_TRUE(r.final_ok) << "seed " << c.seed;
  }
}

TEST(Polytope, ClawPath) {
  const ClawPath cp = gen_clawpath(2);
  EXPECT_FALSE(matching_polytope_member(cp.instance, cp.x, 1));
  EXPECT_TRUE(matching_polytope_member(cp.instance, cp.x, Rational(3, 2)));
  const MatchingState ms = compute_matching_state(cp.instance);
  EXPECT_TRUE(matching_polytope_member(cp.instance, FractionalAssignment::indicator(ms.m_original), 1));
}

TEST(AuxGraph, Def3) {
  const Instance def3 = gen_fixture("DEF3");
  const ContractedTree ct(def3);
  const MatchingState ms = forced_matching_state(def3, {{4, 7}});
  const AuxiliaryGraph g = build_aux_graph(ct, ms, 3);
  EXPECT_EQ(g.left, (std::vector<CNodeId>{4, 7}));
  EXPECT_EQ(g.right, (std::vector<CNodeId>{AuxiliaryGraph::kOutside, 6}));
  bool has_46 = false;
  bool has_7out = false;
  for (const AuxEdge& e : g.edges) {
    has_46 = has_46 || (e.left == 4 && e.right == 1 && e.link == Link(4, 6));
    has_7out = has_7out || (e.left == 7 && e.right == 0 && e.link == Link(0, 7));
  }
  EXPECT_TRUE(has_46);
  EXPECT_TRUE(has_7out);
  EXPECT_TRUE(aux_perfect_matching_cover(ct, g, 3).has_value());

  const Instance star = gen_fixture("STAR4");
  const ContractedTree cs(star);
  const AuxiliaryGraph gs = build_aux_graph(cs, compute_matching_state(star), 0);
  EXPECT_EQ(gs.left.size(), 4u);
  EXPECT_EQ(gs.right.size(), 1u);
  EXPECT_FALSE(aux_perfect_matching_cover(cs, gs, 0));

  const AuxiliaryGraph gl = build_aux_graph(ct, ms, 6);
  EXPECT_TRUE(gl.left.empty());
}

TEST(Potential, AllNodesPhiEqualsPhiAll) {
  const ClawPath cp = gen_clawpath(5);
  EXPECT_EQ(phi(cp.instance, cp.x, all_nodes(cp.instance)), phi_all(cp.instance, cp.x));
}
