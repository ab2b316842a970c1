#include "mmt/flatnorm.hpp"
#include "support/worked_examples.hpp"

#include <gtest/gtest.h>

#include <random>

namespace mmt {
namespace {

using testing::kS3;
using testing::v2;

PolyhedralNorm abs_norm() { return PolyhedralNorm(1, {make_vec({1}), make_vec({-1})}, "abs"); }

GridChain random_chain(std::mt19937_64& rng, const Grid& g, int k, int max_faces = 6) {
  std::uniform_int_distribution<int> count(1, max_faces);
  std::uniform_int_distribution<int> face(0, g.face_count(k) - 1);
  std::uniform_real_distribution<double> w(-1.0, 1.0);
  GridChain c(g, k, 2);
  const int n = count(rng);
  for (int i = 0; i < n; ++i) c.add(face(rng), v2(w(rng), w(rng)));
  return c;
}

// Scalar flat norm of one material component.
double component_flat(const GridChain& P, int a) {
  GridChain c(P.grid(), P.k(), 1);
  for (const auto& [f, t] : P.coefficients()) c.add(f, make_vec({t[a]}));
  return grid_flat_norm(c, abs_norm()).value;
}

void expect_decomposition(const GridChain& P, const FlatNormResult& r) {
  const GridChain back = r.remainder + boundary(r.filling) - P;
  for (const auto& [f, t] : back.coefficients()) EXPECT_LE(t.cwiseAbs().maxCoeff(), 1e-12) << "face " << f;
  EXPECT_NEAR(r.value, r.remainder_mass + r.filling_mass, 1e-12);
  EXPECT_NEAR(r.value, r.lp_value, 1e-9 * (1 + r.value));
}

TEST(FlatNorm, EmptyChainIsZero) {
  const Grid g(0, 0, 1, 1, 0.125);
  const auto r = grid_flat_norm(GridChain(g, 1, 2), PolyhedralNorm::hex());
  EXPECT_EQ(r.value, 0.0);
  EXPECT_TRUE(r.remainder.empty());
  EXPECT_TRUE(r.filling.empty());
}

TEST(FlatNorm, SingleCellBoundaryAgainstTwoCandidates) {
  const auto h = PolyhedralNorm::hex();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec theta = v2(w(rng), w(rng));
    for (const Grid& g : {Grid(0, 0, 1, 1, 1.0), Grid(-1, -1, 2, 2, 1.0)}) {
      const int cell = g.cell(g.nx() / 2, g.ny() / 2);
      GridChain Q(g, 2, 2);
      Q.add(cell, theta);
      const GridChain P = boundary(Q);
      const double keep = mass_Mh(h, P);   // F₁ = P, no filling
      const double fill = mass_Mh(h, Q);   // F₁ = 0, filling Q
      const auto r = grid_flat_norm(P, h);
      EXPECT_NEAR(keep, 4 * h(theta), 1e-12);
      EXPECT_LE(r.value, std::min(keep, fill) + 1e-12);
      EXPECT_NEAR(r.value, std::min(keep, fill), 1e-9);
      EXPECT_NEAR(r.value, h(theta), 1e-9);
      expect_decomposition(P, r);
    }
  }
}

TEST(FlatNorm, TwoPointZeroChainAgainstCandidates) {
  const auto h = abs_norm();
  const Grid g(0, 0, 4, 4, 0.5);
  const Vec x = v2(0.5, 0.5);
  for (const Vec& y : {v2(1.0, 0.5), v2(1.5, 1.0), v2(2.0, 1.0), v2(3.5, 2.5), v2(4.0, 4.0)}) {
    GridChain P(g, 0, 1);
    const auto [yi, yj] = g.snap(y);
    const auto [xi, xj] = g.snap(x);
    P.add(g.vertex(yi, yj), make_vec({1}));
    P.add(g.vertex(xi, xj), make_vec({-1}));
    const double l1 = (y - x).cwiseAbs().sum();
    const auto r = grid_flat_norm(P, h);
    EXPECT_NEAR(r.value, std::min(l1, 2.0), 1e-9) << y.transpose();
    expect_decomposition(P, r);
  }
}

TEST(FlatNorm, RandomPropertySuite) {
  const auto h = PolyhedralNorm::hex();
  const Grid g(0, 0, 1, 1, 0.125);
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 12; ++trial) {
    const auto P = random_chain(rng, g, 1);
    const auto P2 = random_chain(rng, g, 1);
    const auto Q = random_chain(rng, g, 2, 4);
    const auto fP = grid_flat_norm(P, h);
    expect_decomposition(P, fP);
    EXPECT_LE(fP.value, mass_Mh(h, P) + 1e-8);
    EXPECT_GT(fP.value, 1e-9);
    EXPECT_LE(grid_flat_norm(boundary(Q), h).value, mass_Mh(h, Q) + 1e-8);
    const double f2 = grid_flat_norm(P2, h).value;
    EXPECT_LE(grid_flat_norm(P + P2, h).value, fP.value + f2 + 1e-8);
    EXPECT_LE(grid_flat_norm(boundary(P), h).value, fP.value + 1e-8);
    EXPECT_NEAR(flat_distance(P, P, h), 0.0, 1e-12);
  }
}

TEST(FlatNorm, ZeroChainTriangleAndScaling) {
  const auto h = PolyhedralNorm::hex();
  const Grid g(0, 0, 1, 1, 0.125);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 6; ++trial) {
    const auto A = random_chain(rng, g, 0, 4);
    const auto B = random_chain(rng, g, 0, 4);
    const double fa = grid_flat_norm(A, h).value, fb = grid_flat_norm(B, h).value;
    EXPECT_LE(grid_flat_norm(A + B, h).value, fa + fb + 1e-8);
    EXPECT_NEAR(grid_flat_norm(A.scaled(-2.5), h).value, 2.5 * fa, 1e-8 * (1 + fa));
  }
}

TEST(FlatNorm, EquivalentToComponentwiseScalarNorms) {
  const auto h = PolyhedralNorm::hex();
  // c₁|θ|₁ <= h(θ) <= c₂|θ|₁
  double c1 = kInf, c2 = 0.0;
  for (const auto& v : h.primal_vertices()) c1 = std::min(c1, 1.0 / v.cwiseAbs().sum());
  for (int a = 0; a < 2; ++a) c2 = std::max(c2, h(Vec::Unit(2, a)));
  const Grid g(0, 0, 1, 1, 0.125);
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 6; ++trial) {
    const auto P = random_chain(rng, g, 1);
    const double f = grid_flat_norm(P, h).value;
    const double sum = component_flat(P, 0) + component_flat(P, 1);
    EXPECT_LE(c1 * sum, f + 1e-8);
    EXPECT_LE(f, c2 * sum + 1e-8);
  }
}

TEST(FlatNorm, RejectsUnsupportedDegree) {
  const Grid g(0, 0, 1, 1, 0.5);
  EXPECT_THROW(grid_flat_norm(GridChain(g, 2, 2), PolyhedralNorm::hex()), InputError);
  EXPECT_THROW(grid_flat_norm(GridChain(g, 1, 3), PolyhedralNorm::hex()), InputError);
}

// ---------------------------------------------------------------------------

std::vector<RankOneTerm> identity_decomposition() {
  const double c = 1.0 / (2 * std::sqrt(2.0));
  return {
      {std::sqrt(2.0 / 3.0) * v2(1, 0), c * v2(1 + kS3, 1 - kS3)},
      {std::sqrt(2.0 / 3.0) * v2(0, 1), c * v2(1 - kS3, 1 + kS3)},
      {(kS3 - 1) / std::sqrt(6.0) * v2(1, 1), v2(1, 1) / std::sqrt(2.0)},
  };
}

TEST(Microstructure, AxisAlignedFamily) {
  const auto h = PolyhedralNorm::hex();
  const Vec theta = v2(1, 0.5);
  const auto P = microstructure_chain({{theta, v2(1, 0)}}, 4, v2(0, 0), v2(1, 1));
  ASSERT_EQ(P.size(), 4u);
  for (const auto& s : P.segments()) {
    EXPECT_TRUE(s.theta.isApprox(theta / 4));
    EXPECT_NEAR(s.length(), 1.0, 1e-12);
    EXPECT_NEAR(s.direction()[0], 1.0, 1e-12);
  }
  EXPECT_NEAR(mass_Mh(h, P), h(theta), 1e-12);
}

TEST(Microstructure, DiagonalChordsMerge) {
  const auto P = microstructure_chain({{v2(1, 0), v2(1, 1) / std::sqrt(2.0)}}, 4, v2(0, 0), v2(1, 1));
  EXPECT_EQ(P.size(), 7u);  // one line per diagonal of the 4×4 cell lattice
}

TEST(Microstructure, IdentityDecompositionMass) {
  const auto h = PolyhedralNorm::hex();
  const auto terms = identity_decomposition();
  Mat sum = Mat::Zero(2, 2);
  for (const auto& t : terms) sum += outer(t.theta, t.direction);
  EXPECT_LE((sum - Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
  for (int k = 1; k <= 6; ++k) {
    const auto P = microstructure_chain(terms, k, v2(0, 0), v2(1, 1));
    EXPECT_NEAR(mass_Mh(h, P), (1 + kS3) / std::sqrt(2.0), 1e-12) << k;
  }
  // twice the area, twice the mass
  EXPECT_NEAR(mass_Mh(h, microstructure_chain(terms, 3, v2(0, 0), v2(2, 1))), 2 * (1 + kS3) / std::sqrt(2.0), 1e-12);
}

TEST(Microstructure, ConstantFormPairsLikeDiffuseFlux) {
  const auto terms = identity_decomposition();
  const Mat W = make_mat({{0.3, -1.2}, {0.8, 2.0}});
  for (int k : {2, 5, 9}) {
    const auto P = microstructure_chain(terms, k, v2(0, 0), v2(1, 1));
    const double exact = (Mat::Identity(2, 2).array() * W.array()).sum();
    EXPECT_NEAR(pair(P, TestForm1::constant(W)), exact, 2.0 / k * std::abs(exact));
    EXPECT_NEAR(pair(P, TestForm1::constant(W)), exact, 1e-12);
  }
}

TEST(Microstructure, BadInput) {
  EXPECT_THROW(microstructure_chain({{v2(1, 0), v2(0, 0)}}, 4, v2(0, 0), v2(1, 1)), InputError);
  EXPECT_THROW(microstructure_chain({{v2(1, 0), v2(1, 0)}}, 0, v2(0, 0), v2(1, 1)), InputError);
}

TEST(Relaxation, IdentityStudy) {
  const auto h = PolyhedralNorm::hex();
  const auto forms = default_form_battery(2);
  const auto st = relaxation_study(h, Mat::Identity(2, 2), identity_decomposition(), {4, 8, 16}, forms);
  ASSERT_EQ(st.rows.size(), 3u);
  EXPECT_TRUE(st.masses_constant);
  EXPECT_TRUE(st.errors_decreasing);
  for (const auto& r : st.rows) EXPECT_NEAR(r.mass, (1 + kS3) / std::sqrt(2.0), 1e-9);
  EXPECT_GT(st.rows.front().max_pairing_error, 0.0);
  EXPECT_LE(st.rows.back().max_pairing_error, 0.1 * st.rows.front().max_pairing_error);
}

TEST(Relaxation, DiffusePairingOracle) {
  // ∫_[0,1]² sin(2π x₁) dx = 0 and ∫ (1 + x₁) dx = 3/2
  const Mat M = make_mat({{1, 0}, {0, 0}});
  const auto trig = TestForm1::trig(Mat::Ones(2, 2), v2(1, 0), 1.0, Mat::Zero(2, 2));
  EXPECT_NEAR(pair_diffuse(M, trig, v2(0, 0), v2(1, 1)), 0.0, 1e-14);
  const auto aff = TestForm1::affine(Mat::Ones(2, 2), {Mat::Ones(2, 2), Mat::Zero(2, 2)});
  EXPECT_NEAR(pair_diffuse(M, aff, v2(0, 0), v2(1, 1)), 1.5, 1e-14);
}

TEST(Relaxation, RankOneMatchesGeneratedNorm) {
  const auto h = PolyhedralNorm::hex();
  const Vec theta = v2(0.7, -0.4), e = testing::dir2();
  const auto st = relaxation_study(h, outer(theta, e), {{theta, e}}, {3, 6}, default_form_battery(2));
  const auto I = eval_H(GeneratedNorm(h, 2), outer(theta, e));
  for (const auto& r : st.rows) {
    EXPECT_NEAR(r.mass, h(theta), 1e-12);
    EXPECT_GE(r.mass, I.lower - 1e-9);
    EXPECT_LE(r.mass, I.upper + 1e-9);
  }
}

TEST(Relaxation, EmptyDecompositionGivesZeroRows) {
  const auto st = relaxation_study(PolyhedralNorm::hex(), Mat::Zero(2, 2), {}, {2, 4}, default_form_battery(2));
  for (const auto& r : st.rows) {
    EXPECT_EQ(r.mass, 0.0);
    EXPECT_EQ(r.max_pairing_error, 0.0);
    EXPECT_EQ(r.segments, 0);
  }
  EXPECT_THROW(relaxation_study(PolyhedralNorm::hex(), Mat::Identity(2, 2), {}, {2}, default_form_battery(2)),
               InputError);
}

}  // namespace
}  // namespace mmt
