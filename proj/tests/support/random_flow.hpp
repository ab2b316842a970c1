#pragma once

// Seeded random flow problems in the plane: up to `max_nodes` points in the
// unit square, each joined to its nearest neighbours plus an x-sorted path
// (so the graph is connected), and a balanced boundary on a few nodes.

#include "mmt/flow.hpp"

#include <algorithm>
#include <random>

namespace mmt::testing {

inline PolyhedralNorm random_planar_norm(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> rad(0.6, 1.6);
  std::uniform_int_distribution<int> count(2, 5);
  std::vector<Vec> dual;
  const int k = count(rng);
  std::vector<double> angles;
  for (int i = 0; i < k; ++i) angles.push_back(ang(rng));
  std::sort(angles.begin(), angles.end());
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (i > 0 && angles[i] - angles[i - 1] < 0.05) continue;
    const double r = rad(rng);
    const Vec g = make_vec({r * std::cos(angles[i]), r * std::sin(angles[i])});
    dual.push_back(g);
    dual.push_back(-g);
  }
  if (dual.size() < 4) return PolyhedralNorm::hex();
  return PolyhedralNorm(2, dual, "random");
}

inline FlowProblem random_flow_problem(std::mt19937_64& rng, int max_nodes = 40, bool hex = true) {
  std::uniform_int_distribution<int> nn(6, max_nodes);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> w(-1.0, 1.0);
  const int N = nn(rng);
  GeometricGraph g(2);
  std::vector<Vec> pts;
  while (static_cast<int>(pts.size()) < N) {
    const Vec p = make_vec({u(rng), u(rng)});
    bool close = false;
    for (const auto& q : pts) close = close || (p - q).norm() < 1e-3;
    if (!close) {
      pts.push_back(p);
      g.add_node(p);
    }
  }
  for (int i = 0; i < N; ++i) {
    std::vector<std::pair<double, int>> d;
    for (int j = 0; j < N; ++j)
      if (j != i) d.emplace_back((pts[static_cast<std::size_t>(i)] - pts[static_cast<std::size_t>(j)]).norm(), j);
    std::sort(d.begin(), d.end());
    for (int k = 0; k < std::min(4, N - 1); ++k) g.add_edge(i, d[static_cast<std::size_t>(k)].second);
  }
  std::vector<int> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return pts[static_cast<std::size_t>(a)][0] < pts[static_cast<std::size_t>(b)][0]; });
  for (int k = 0; k + 1 < N; ++k) g.add_edge(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k + 1)]);

  std::shuffle(order.begin(), order.end(), rng);
  const int atoms = 2 + static_cast<int>(rng() % 3);
  PointChain0 f(2, 2);
  Vec sum = Vec::Zero(2);
  for (int k = 0; k < atoms - 1; ++k) {
    const Vec t = make_vec({w(rng), w(rng)});
    f.add(pts[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])], t);
    sum += t;
  }
  f.add(pts[static_cast<std::size_t>(order[static_cast<std::size_t>(atoms - 1)])], -sum);
  return FlowProblem{std::move(g), std::move(f), hex ? PolyhedralNorm::hex() : random_planar_norm(rng)};
}

}  // namespace mmt::testing
