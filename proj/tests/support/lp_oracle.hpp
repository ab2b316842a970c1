#pragma once

// Brute-force LP oracle: enumerates every basic solution of a small program
// with free variables. Independent of the simplex path it checks.

#include "mmt/lp.hpp"

#include <optional>
#include <random>
#include <vector>

namespace mmt::testing {

struct DenseLp {
  Mat A;
  Vec b;
  Mat G;
  Vec d;
  Vec c;

  lp::LinearProgram to_lp() const {
    lp::LinearProgram out;
    out.c = c;
    out.A = A.sparseView();
    out.b = b;
    out.G = G.sparseView();
    out.d = d;
    return out;
  }
};

/// Minimum of cᵀx over the vertices of {Ax = b, Gx <= d}, or nullopt if no vertex exists.
inline std::optional<double> brute_force_min(const DenseLp& p, double tol = 1e-9) {
  const auto n = p.c.size();
  const auto neq = p.A.rows();
  const auto k = p.G.rows();
  const auto pick = n - neq;
  if (pick < 0 || pick > k) return std::nullopt;
  std::vector<int> idx(static_cast<std::size_t>(pick));
  for (Eigen::Index i = 0; i < pick; ++i) idx[static_cast<std::size_t>(i)] = static_cast<int>(i);
  std::optional<double> best;
  while (true) {
    Mat S(n, n);
    Vec r(n);
    S.topRows(neq) = p.A;
    r.head(neq) = p.b;
    for (Eigen::Index i = 0; i < pick; ++i) {
      S.row(neq + i) = p.G.row(idx[static_cast<std::size_t>(i)]);
      r[neq + i] = p.d[idx[static_cast<std::size_t>(i)]];
    }
    Eigen::FullPivLU<Mat> lu(S);
    if (lu.rank() == n) {
      const Vec x = lu.solve(r);
      const bool feasible = (k == 0 || (p.G * x - p.d).maxCoeff() <= tol * (1 + p.d.cwiseAbs().maxCoeff())) &&
                            (neq == 0 || (p.A * x - p.b).cwiseAbs().maxCoeff() <= 1e-8);
      if (feasible) {
        const double v = p.c.dot(x);
        if (!best || v < *best) best = v;
      }
    }
    // next combination
    Eigen::Index i = pick - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == k - pick + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < pick; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

/// Random feasible, bounded, pointed LP with at most `max_vars` free variables.
inline DenseLp random_lp(std::mt19937_64& rng, int max_vars = 20) {
  std::uniform_int_distribution<int> nd(2, max_vars);
  const int n = nd(rng);
  const int neq = std::uniform_int_distribution<int>(0, std::min(2, n - 1))(rng);
  const int extra = std::uniform_int_distribution<int>(1, 4)(rng);
  const int k = n - neq + extra;
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  auto gauss = [&](Eigen::Index r, Eigen::Index c) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
  };
  DenseLp p;
  Vec x0 = gauss(n, 1);
  p.A = gauss(neq, n);
  p.b = p.A * x0;
  p.G = gauss(k, n);
  p.d = p.G * x0;
  for (Eigen::Index i = 0; i < k; ++i) p.d[i] += u(rng);
  Vec w(k);
  for (Eigen::Index i = 0; i < k; ++i) w[i] = u(rng);
  Vec mu = gauss(neq, 1);
  p.c = -p.G.transpose() * w + p.A.transpose() * mu;
  return p;
}

}  // namespace mmt::testing
