#include "mmt/flow.hpp"
#include "support/random_flow.hpp"
#include "support/worked_examples.hpp"

#include <gtest/gtest.h>

namespace mmt {
namespace {

using testing::kS3;
using testing::v2;

GeometricGraph complete_graph(const std::vector<Vec>& pts) {
  GeometricGraph g(static_cast<int>(pts.front().size()));
  for (const auto& p : pts) g.add_node(p);
  for (int a = 0; a < g.num_nodes(); ++a)
    for (int b = a + 1; b < g.num_nodes(); ++b) g.add_edge(a, b);
  return g;
}

bool has_cycle(const GeometricGraph& g, const std::vector<int>& edges) {
  std::vector<int> parent(static_cast<std::size_t>(g.num_nodes()));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    return parent[static_cast<std::size_t>(x)] == x ? x : parent[static_cast<std::size_t>(x)] = find(parent[static_cast<std::size_t>(x)]);
  };
  for (int e : edges) {
    const auto [u, v] = g.edge(e);
    const int a = find(u), b = find(v);
    if (a == b) return true;
    parent[static_cast<std::size_t>(a)] = b;
  }
  return false;
}

void expect_certificate(const FlowProblem& p, const FlowSolution& s, double tol = 1e-7) {
  ASSERT_TRUE(s.optimal()) << s.message;
  EXPECT_LE(s.primal_residual, 1e-8);
  EXPECT_NEAR(s.cost, s.lp_objective, 1e-9 * (1 + s.cost));
  EXPECT_LE(s.duality_gap(), tol * (1 + s.cost));
  for (int e = 0; e < p.graph.num_edges(); ++e) {
    const auto [u, v] = p.graph.edge(e);
    const Vec dphi = s.potentials[static_cast<std::size_t>(v)] - s.potentials[static_cast<std::size_t>(u)];
    EXPECT_LE(p.h.dual(dphi), p.graph.length(e) + tol) << "edge " << e;
    const Vec& t = s.theta[static_cast<std::size_t>(e)];
    if (t.cwiseAbs().maxCoeff() > 0.0) {
      EXPECT_NEAR(t.dot(dphi), p.h(t) * p.graph.length(e), tol) << "edge " << e;
    }
  }
}

TEST(GeometricGraph, RejectsDegenerateEdges) {
  GeometricGraph g(2);
  const int a = g.add_node(v2(0, 0));
  const int b = g.add_node(v2(1, 0));
  EXPECT_EQ(g.add_node(v2(1, 1e-12)), b);
  EXPECT_THROW(g.add_edge(a, a), InputError);
  EXPECT_THROW(g.add_edge(a, 7), InputError);
  EXPECT_EQ(g.add_edge(a, b), g.add_edge(b, a));
  EXPECT_DOUBLE_EQ(g.length(0), 1.0);
}

TEST(SolveFlow, SingleEdgeShortestPath) {
  GeometricGraph g(2);
  g.add_edge(g.add_node(v2(0, 0)), g.add_node(v2(3, 4)));
  PointChain0 f(2, 1);
  f.add(v2(3, 4), make_vec({2}));
  f.add(v2(0, 0), make_vec({-2}));
  const FlowProblem p{g, f, PolyhedralNorm::linf(1)};
  const auto lp_problem = assemble_flow_lp(p);
  EXPECT_EQ(lp_problem.G.rows(), 2);
  const auto s = solve_flow(p);
  EXPECT_NEAR(s.cost, 10.0, 1e-12);
  expect_certificate(p, s);
  const auto e = solve_flow(p, {FlowFormulation::epigraph});
  EXPECT_NEAR(e.cost, 10.0, 1e-12);
}

TEST(SolveFlow, HexEpigraphHasSixRowsPerEdge) {
  const testing::TwoSources ts;
  const auto g = complete_graph({ts.pm1, ts.pm2, ts.pm3, ts.pp1, ts.pp2, ts.pp3});
  const FlowProblem p{g, ts.boundary_first(), PolyhedralNorm::hex()};
  EXPECT_EQ(assemble_flow_lp(p).G.rows(), 6 * g.num_edges());
  EXPECT_EQ(assemble_flow_lp(p).A.rows(), 2 * g.num_nodes());
}

TEST(SolveFlow, EqualityDualsAreThePotentials) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = testing::random_flow_problem(rng, 12);
    const auto lp_problem = assemble_flow_lp(p);
    const auto primal = lp::solve_lp(lp_problem);
    const auto dual = lp::solve_lp(lp::dual_program(lp_problem));
    ASSERT_TRUE(primal.optimal() && dual.optimal());
    EXPECT_NEAR(primal.objective, -dual.objective, 1e-7 * (1 + primal.objective));
    // the dual program's y block, read as node potentials, is feasible and attains the cost
    FlowSolution s;
    const int m = 2;
    for (int v = 0; v < p.graph.num_nodes(); ++v) s.potentials.push_back(dual.x.segment(v * m, m));
    double value = 0.0;
    for (const auto& a : p.boundary.atoms()) value += s.potentials[static_cast<std::size_t>(*p.graph.find_node(a.x))].dot(a.theta);
    EXPECT_NEAR(value, primal.objective, 1e-7 * (1 + primal.objective));
    for (int e = 0; e < p.graph.num_edges(); ++e) {
      const auto [u, v] = p.graph.edge(e);
      EXPECT_LE(p.h.dual(s.potentials[static_cast<std::size_t>(v)] - s.potentials[static_cast<std::size_t>(u)]),
                p.graph.length(e) + 1e-7);
    }
  }
}

TEST(SolveFlow, TwoSourcesBothConfigurations) {
  const testing::TwoSources ts;
  const auto g = complete_graph({ts.pm1, ts.pm2, ts.pm3, ts.pp1, ts.pp2, ts.pp3});
  for (const auto& f : {ts.boundary_first(), ts.boundary_crossed()}) {
    const FlowProblem p{g, f, PolyhedralNorm::hex()};
    const auto s = solve_flow(p);
    EXPECT_NEAR(s.cost, 6.0, 1e-9);
    expect_certificate(p, s);
    const auto e = solve_flow(p, {FlowFormulation::epigraph});
    EXPECT_NEAR(e.cost, 6.0, 1e-9);
    expect_certificate(p, e);
  }
}

TEST(SolveFlow, CycleExampleKeepsItsCycle) {
  const testing::CycleExample cy;
  const auto g = complete_graph({cy.pp1, cy.pm1, cy.pp2, cy.pm2, cy.q3, cy.q4});
  const FlowProblem p{g, cy.boundary(), PolyhedralNorm::hex()};
  const auto s = solve_flow(p);
  EXPECT_NEAR(s.cost, 2.0 + 2.0 * kS3, 1e-9);
  expect_certificate(p, s);
  EXPECT_EQ(s.support.size(), 6u);
  EXPECT_TRUE(has_cycle(g, s.support));
  const auto chain = flow_to_polychain(g, s);
  EXPECT_EQ(chain.size(), 6u);
  EXPECT_NEAR(mass_Mh(p.h, chain), s.cost, 1e-9);
}

TEST(SolveFlow, DivergenceMatchesBoundary) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = testing::random_flow_problem(rng, 20);
    const auto s = solve_flow(p);
    const auto d = divergence(p.graph, s.theta);
    const auto diff = d - p.boundary;
    for (const auto& a : diff.atoms()) EXPECT_LE(a.theta.cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE(boundary(flow_to_polychain(p.graph, s)).total_weight().cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(FlowToPolychain, ZeroFlowAndPruning) {
  const testing::CycleExample cy;
  const auto g = complete_graph({cy.pp1, cy.pm1, cy.pp2, cy.pm2, cy.q3, cy.q4});
  FlowSolution zero;
  zero.theta.assign(static_cast<std::size_t>(g.num_edges()), Vec::Zero(2));
  EXPECT_TRUE(flow_to_polychain(g, zero).empty());
  const auto s = solve_flow({g, cy.boundary(), PolyhedralNorm::hex()});
  auto noisy = s;
  for (auto& t : noisy.theta)
    if (t.cwiseAbs().maxCoeff() == 0.0) t = v2(1e-12, -1e-12);
  const auto a = flow_to_polychain(g, s);
  const auto b = flow_to_polychain(g, noisy);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a.segments()[k].theta, b.segments()[k].theta);
}

TEST(SolveFlow, UnreachableAtomIsReported) {
  GeometricGraph g(2);
  const int a = g.add_node(v2(0, 0)), b = g.add_node(v2(1, 0));
  const int c = g.add_node(v2(5, 5)), d = g.add_node(v2(6, 5));
  g.add_edge(a, b);
  g.add_edge(c, d);
  PointChain0 f(2, 2);
  f.add(v2(0, 0), v2(1, 0));
  f.add(v2(6, 5), v2(-1, 0));
  try {
    solve_flow({g, f, PolyhedralNorm::hex()});
    FAIL() << "expected an infeasibility report";
  } catch (const InfeasibleFlowError& err) {
    EXPECT_EQ(err.atom(), 0);
    EXPECT_NE(std::string(err.what()).find("atom #0"), std::string::npos);
  }
  PointChain0 off(2, 2);
  off.add(v2(0.5, 0), v2(1, 0));
  off.add(v2(0, 0), v2(-1, 0));
  EXPECT_THROW(solve_flow({g, off, PolyhedralNorm::hex()}), InputError);
  PointChain0 unbalanced(2, 2);
  unbalanced.add(v2(0, 0), v2(1, 0));
  EXPECT_THROW(solve_flow({g, unbalanced, PolyhedralNorm::hex()}), InputError);
}

TEST(Subadditivity, MergingDiscountAndAdditivity) {
  GeometricGraph g(2);
  g.add_edge(g.add_node(v2(0, 0)), g.add_node(v2(2, 0)));
  const auto h = PolyhedralNorm::hex();
  PointChain0 a(2, 2), b(2, 2);
  a.add(v2(2, 0), v2(1, 0));
  a.add(v2(0, 0), v2(-1, 0));
  b.add(v2(2, 0), v2(0, 1));
  b.add(v2(0, 0), v2(0, -1));
  const auto merged = subadditivity_probe(g, h, a, b);
  EXPECT_TRUE(merged.holds);
  EXPECT_NEAR(merged.cost_sum, 2.0, 1e-12);
  EXPECT_NEAR(merged.cost_a, 2.0, 1e-12);
  EXPECT_NEAR(merged.cost_b, 2.0, 1e-12);
  EXPECT_NEAR(merged.discount(), 2.0, 1e-12);

  const auto same = subadditivity_probe(g, h, a, a);
  EXPECT_NEAR(same.cost_sum, same.cost_a + same.cost_b, 1e-9);

  GeometricGraph far(2);
  far.add_edge(far.add_node(v2(0, 0)), far.add_node(v2(1, 0)));
  far.add_edge(far.add_node(v2(100, 0)), far.add_node(v2(101, 0)));
  PointChain0 c(2, 2), d(2, 2);
  c.add(v2(1, 0), v2(1, 1));
  c.add(v2(0, 0), v2(-1, -1));
  d.add(v2(101, 0), v2(0, 1));
  d.add(v2(100, 0), v2(0, -1));
  const auto apart = subadditivity_probe(far, h, c, d);
  EXPECT_NEAR(apart.cost_sum, apart.cost_a + apart.cost_b, 1e-9);
}

TEST(SolveFlow, RandomProblemsSatisfyDualityAndHomogeneity) {
  std::mt19937_64 rng(20250101);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = testing::random_flow_problem(rng, 30, trial % 2 == 0);
    const auto s = solve_flow(p);
    expect_certificate(p, s);
    if (p.graph.num_edges() <= 60) {  // the epigraph LP has a much larger basis
      const auto e = solve_flow(p, {FlowFormulation::epigraph});
      EXPECT_NEAR(e.cost, s.cost, 1e-8 * (1 + s.cost));
    }
    for (double lambda : {-2.0, 0.5, 3.0}) {
      const auto q = solve_flow({p.graph, p.boundary.scaled(lambda), p.h});
      EXPECT_NEAR(q.cost, std::abs(lambda) * s.cost, 1e-9 * std::abs(lambda) * s.cost);
    }
    // weak duality for random feasible potentials
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<Vec> phi;
    for (int v = 0; v < p.graph.num_nodes(); ++v) phi.push_back(v2(z(rng), z(rng)));
    double worst = 0.0;
    for (int k = 0; k < p.graph.num_edges(); ++k) {
      const auto [u, v] = p.graph.edge(k);
      worst = std::max(worst, p.h.dual(phi[static_cast<std::size_t>(v)] - phi[static_cast<std::size_t>(u)]) / p.graph.length(k));
    }
    double value = 0.0;
    for (const auto& a : p.boundary.atoms()) value += phi[static_cast<std::size_t>(*p.graph.find_node(a.x))].dot(a.theta) / worst;
    EXPECT_LE(value, s.cost + 1e-7);
  }
}

TEST(SolveFlow, AddingEdgesNeverIncreasesCost) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = testing::random_flow_problem(rng, 20);
    const double before = solve_flow(p).cost;
    std::uniform_int_distribution<int> node(0, p.graph.num_nodes() - 1);
    for (int k = 0; k < 5; ++k) {
      const int a = node(rng), b = node(rng);
      if (a != b) p.graph.add_edge(a, b);
    }
    EXPECT_LE(solve_flow(p).cost, before + 1e-9);
  }
}

TEST(CandidateGraph, LatticeTerminalsAndChords) {
  const std::vector<Vec> terms = {v2(0, 0), v2(1, 0), v2(0.5, 1)};
  const auto g = candidate_graph(terms, 4, true);
  EXPECT_EQ(g.num_nodes(), 3 + 25);
  const auto comp = g.components();
  EXPECT_EQ(*std::max_element(comp.begin(), comp.end()), 0);
  const auto bare = candidate_graph(terms, 0, true);
  EXPECT_EQ(bare.num_nodes(), 3);
  EXPECT_EQ(bare.num_edges(), 3);
  PointChain0 f(2, 2);
  f.add(v2(0, 0), v2(-1, 0));
  f.add(v2(1, 0), v2(1, 0));
  const double lattice = solve_flow({g, f, PolyhedralNorm::hex()}).cost;
  EXPECT_NEAR(lattice, 1.0, 1e-9);  // the chord is available
}

}  // namespace
}  // namespace mmt
