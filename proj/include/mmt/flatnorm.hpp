#pragma once

// Flat h-norm of grid chains, 𝔽_h(P) = min 𝕄_h(P − ∂Q) + 𝕄_h(Q) over
// (k+1)-chains Q on the same grid, solved as one LP. Also microstructure
// chains whose weak limit is a diffuse matrix flux, and the study comparing
// them with the diffuse flux under a battery of test forms.

#include "mmt/chains.hpp"
#include "mmt/core.hpp"
#include "mmt/lp.hpp"
#include "mmt/norm.hpp"

#include <map>
#include <tuple>
#include <vector>

namespace mmt {

struct FlatNormResult {
  double value = 0.0;      // mass(remainder) + mass(filling), recomputed from the chains
  double lp_value = 0.0;
  GridChain remainder;     // F₁ = P − ∂F₂
  GridChain filling;       // F₂
  double remainder_mass = 0.0;
  double filling_mass = 0.0;
  int iterations = 0;
};

namespace detail {

inline void prune(GridChain& c, double tol) {
  GridChain out(c.grid(), c.k(), c.materials());
  for (const auto& [f, t] : c.coefficients()) {
    Vec v = t;
    for (Eigen::Index a = 0; a < v.size(); ++a)
      if (std::abs(v[a]) <= tol) v[a] = 0.0;
    out.add(f, v);
  }
  c = std::move(out);
}

}  // namespace detail

/// Exact grid flat norm for k ∈ {0, 1} in the plane. Each coefficient is
/// written as a nonnegative combination of primal vertices of h, so a face
/// costs δ^k per unit of gauge.
inline FlatNormResult grid_flat_norm(const GridChain& P, const PolyhedralNorm& h, const lp::Options& opt = {}) {
  require(P.k() == 0 || P.k() == 1, "grid_flat_norm: only 0- and 1-chains are supported");
  require_dim(P.materials(), h.dim(), "grid_flat_norm materials");
  const Grid& grid = P.grid();
  const int k = P.k();
  const int m = h.dim();
  FlatNormResult out{0.0, 0.0, GridChain(grid, k, m), GridChain(grid, k + 1, m), 0.0, 0.0, 0};
  if (P.empty()) return out;

  const auto& V = h.primal_vertices();
  const int nv = static_cast<int>(V.size());
  const int nk = grid.face_count(k);
  const int nk1 = grid.face_count(k + 1);
  const double wk = std::pow(grid.delta(), k);
  const double wk1 = wk * grid.delta();
  const SpMat B = grid.boundary_matrix(k + 1);  // nk × nk1

  lp::LpBuilder b;
  std::vector<lp::LpBuilder::Terms> rows(static_cast<std::size_t>(nk * m));
  for (int e = 0; e < nk; ++e) {
    for (int j = 0; j < nv; ++j) {
      const int var = b.add_variable(wk, 0.0);
      for (int a = 0; a < m; ++a)
        if (V[static_cast<std::size_t>(j)][a] != 0.0)
          rows[static_cast<std::size_t>(e * m + a)].emplace_back(var, V[static_cast<std::size_t>(j)][a]);
    }
  }
  const int first_fill = nk * nv;
  for (int f = 0; f < nk1; ++f) {
    for (int j = 0; j < nv; ++j) {
      const int var = b.add_variable(wk1, 0.0);
      for (SpMat::InnerIterator it(B, f); it; ++it)
        for (int a = 0; a < m; ++a)
          if (V[static_cast<std::size_t>(j)][a] != 0.0)
            rows[static_cast<std::size_t>(it.row() * m + a)].emplace_back(var, it.value() * V[static_cast<std::size_t>(j)][a]);
    }
  }
  const Mat D = P.dense();
  for (int e = 0; e < nk; ++e)
    for (int a = 0; a < m; ++a) b.add_equality(rows[static_cast<std::size_t>(e * m + a)], D(e, a));

  const auto sol = lp::solve_lp(b.build(), opt);
  if (!sol.optimal()) throw NumericalError("grid_flat_norm: LP ended with status " + lp::to_string(sol.status));
  out.lp_value = sol.objective;
  out.iterations = sol.iterations;

  const double scale = std::max(1.0, D.cwiseAbs().maxCoeff());
  for (int f = 0; f < nk1; ++f) {
    Vec q = Vec::Zero(m);
    for (int j = 0; j < nv; ++j) q += sol.x[first_fill + f * nv + j] * V[static_cast<std::size_t>(j)];
    out.filling.add(f, q);
  }
  detail::prune(out.filling, 1e-12 * scale);
  out.remainder = P - boundary(out.filling);
  out.remainder_mass = mass_Mh(h, out.remainder);
  out.filling_mass = mass_Mh(h, out.filling);
  out.value = out.remainder_mass + out.filling_mass;
  log(LogLevel::debug, "grid_flat_norm: value " + std::to_string(out.value) + " after " +
                           std::to_string(sol.iterations) + " pivots");
  return out;
}

inline double flat_distance(const GridChain& P, const GridChain& Q, const PolyhedralNorm& h) {
  return grid_flat_norm(P - Q, h).value;
}

// ---------------------------------------------------------------------------
// Microstructure

/// For every term (θ, e) and every cell of side 1/k, one chord through the
/// cell centre in direction e, clipped to the cell and weighted so that it
/// carries θ⊗e times the cell area. Collinear chords of one term that meet
/// end to end are merged.
inline PolyChain1 microstructure_chain(const std::vector<RankOneTerm>& terms, int k, const Vec& box_lo,
                                       const Vec& box_hi) {
  require(k >= 1, "microstructure_chain: refinement must be at least 1");
  require_dim(box_lo.size(), 2, "microstructure_chain box");
  require_dim(box_hi.size(), 2, "microstructure_chain box");
  const Grid grid(box_lo[0], box_lo[1], box_hi[0], box_hi[1], 1.0 / k);
  const double s = grid.delta();
  const int m = terms.empty() ? 1 : static_cast<int>(terms.front().theta.size());
  PolyChain1 out(2, m);

  for (std::size_t t = 0; t < terms.size(); ++t) {
    const auto& term = terms[t];
    require_dim(term.theta.size(), m, "microstructure_chain term");
    require_dim(term.direction.size(), 2, "microstructure_chain direction");
    const double len = term.direction.norm();
    if (!(len > 1e-14)) throw InputError("microstructure_chain: term #" + std::to_string(t) + " has a zero direction");
    if (term.theta.cwiseAbs().maxCoeff() == 0.0) continue;
    const Vec e = term.direction / len;
    const double chord = s / e.cwiseAbs().maxCoeff();
    const Vec weight = term.theta * (len * s * s / chord);

    // chords keyed by their offset from the origin across e, merged along e
    const Vec normal = make_vec({-e[1], e[0]});
    std::map<long long, std::pair<double, std::vector<std::pair<double, double>>>> lines;
    for (int c = 0; c < grid.face_count(2); ++c) {
      const Vec mid = grid.cell_center(c);
      const double off = normal.dot(mid);
      const double along = e.dot(mid);
      auto& line = lines[std::llround(off * 1e9)];
      line.first = off;
      line.second.emplace_back(along - chord / 2, along + chord / 2);
    }
    for (auto& [id, line] : lines) {
      auto& [off, spans] = line;
      std::sort(spans.begin(), spans.end());
      auto emit = [&](double a, double b) { out.add(off * normal + a * e, off * normal + b * e, weight); };
      double lo = spans.front().first, hi = spans.front().second;
      for (std::size_t i = 1; i < spans.size(); ++i) {
        if (std::abs(spans[i].first - hi) <= 1e-12 * (1.0 + std::abs(hi))) {
          hi = spans[i].second;
        } else {
          emit(lo, hi);
          std::tie(lo, hi) = spans[i];
        }
      }
      emit(lo, hi);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Relaxation study

/// ∫_box ω(x):M dx by composite tensor Gauss–Legendre (4×4 panels, 16 nodes each).
inline double pair_diffuse(const Mat& M, const TestForm1& w, const Vec& box_lo, const Vec& box_hi) {
  require_dim(box_lo.size(), 2, "pair_diffuse box");
  const auto& [t, wt] = detail::gauss_legendre(16);
  const int panels = 4;
  const double hx = (box_hi[0] - box_lo[0]) / panels, hy = (box_hi[1] - box_lo[1]) / panels;
  double s = 0.0;
  for (int pj = 0; pj < panels; ++pj)
    for (int pi = 0; pi < panels; ++pi)
      for (Eigen::Index a = 0; a < t.size(); ++a)
        for (Eigen::Index c = 0; c < t.size(); ++c) {
          const Vec x = make_vec({box_lo[0] + (pi + t[a]) * hx, box_lo[1] + (pj + t[c]) * hy});
          const Mat W = w(x);
          require(W.rows() == M.rows() && W.cols() == M.cols(), "pair_diffuse: test form shape does not match flux");
          s += wt[a] * wt[c] * (M.array() * W.array()).sum();
        }
  return s * hx * hy;
}

struct RelaxationRow {
  int k = 0;
  double mass = 0.0;
  double max_pairing_error = 0.0;
  int segments = 0;
};

struct RelaxationStudy {
  std::vector<RelaxationRow> rows;
  double expected_mass = 0.0;  // Σ h(θ_i)|e_i| · area
  bool masses_constant = true;
  bool errors_decreasing = true;
};

/// Standard battery: one constant, one affine and one oscillating form.
inline std::vector<TestForm1> default_form_battery(int m) {
  const Mat C = Mat::Ones(m, 2);
  Mat C2 = Mat::Zero(m, 2);
  for (int a = 0; a < m; ++a) C2.row(a) = make_vec({1.0 + a, -0.5 * a}).transpose();
  std::vector<Mat> slopes{Mat::Constant(m, 2, 0.7), Mat::Constant(m, 2, -0.3)};
  Mat phase = Mat::Zero(m, 2);
  for (int a = 0; a < m; ++a) phase.row(a) = make_vec({0.3 * a, 0.9 + 0.2 * a}).transpose();
  return {TestForm1::constant(C), TestForm1::affine(C2, slopes),
          TestForm1::trig(Mat::Ones(m, 2), make_vec({1.0, 0.6}), 1.3, phase, 12)};
}

inline RelaxationStudy relaxation_study(const PolyhedralNorm& h, const Mat& M, const std::vector<RankOneTerm>& terms,
                                        const std::vector<int>& ks, const std::vector<TestForm1>& forms,
                                        const Vec& box_lo = make_vec({0, 0}), const Vec& box_hi = make_vec({1, 1})) {
  require(M.rows() == h.dim() && M.cols() == 2, "relaxation_study: flux must be m × 2");
  require(!ks.empty(), "relaxation_study: no refinements given");
  Mat sum = Mat::Zero(M.rows(), M.cols());
  RelaxationStudy out;
  const double area = (box_hi - box_lo).prod();
  for (const auto& t : terms) {
    require_dim(t.theta.size(), h.dim(), "relaxation_study term");
    sum += outer(t.theta, t.direction);
    out.expected_mass += h(t.theta) * t.direction.norm() * area;
  }
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((sum - M).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InputError("relaxation_study: decomposition does not sum to the flux matrix");

  std::vector<double> diffuse;
  for (const auto& w : forms) diffuse.push_back(pair_diffuse(M, w, box_lo, box_hi));
  for (int k : ks) {
    RelaxationRow row;
    row.k = k;
    const auto P = terms.empty() ? PolyChain1(2, h.dim()) : microstructure_chain(terms, k, box_lo, box_hi);
    row.mass = mass_Mh(h, P);
    row.segments = static_cast<int>(P.size());
    for (std::size_t i = 0; i < forms.size(); ++i)
      row.max_pairing_error = std::max(row.max_pairing_error, std::abs(pair(P, forms[i]) - diffuse[i]));
    if (std::abs(row.mass - out.expected_mass) > 1e-9 * (1.0 + out.expected_mass)) out.masses_constant = false;
    if (!out.rows.empty() && row.max_pairing_error >= out.rows.back().max_pairing_error &&
        out.rows.back().max_pairing_error > 1e-14)
      out.errors_decreasing = false;
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace mmt
