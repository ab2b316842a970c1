#pragma once

// Material cost norm h on ℝᵐ (polyhedral, given by the vertices of its dual
// unit ball ∂h(0)), its dual h_*, and the generated matrix norm H on ℝ^{m×n}.
//
//   h(θ)    = max_k g_k·θ                 g_k: vertices of ∂h(0)
//   h_*(y)  = max_j v_j·y                 v_j: vertices of {h <= 1}
//   H_*(M)  = max_j |Mᵀv_j|₂              operator norm (ℝⁿ,|·|) -> (ℝᵐ,h_*)
//   H(M)    = inf { Σ h(θ_i) : M = Σ θ_i ⊗ e_i, |e_i| = 1 }
//
// H is only bracketed: an LP over a finite direction set gives an upper
// bound, any N with H_*(N) <= 1 gives the lower bound M:N.

#include "mmt/core.hpp"
#include "mmt/lp.hpp"

#include <algorithm>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace mmt {

namespace detail {

/// Calls f(indices) for every k-subset of {0,…,n-1} in lexicographic order.
template <typename F>
void for_each_combination(int n, int k, F&& f) {
  if (k > n || k <= 0) return;
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    f(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

/// Vertices of the polytope {x : rows(k)·x <= 1 for all k}. Brute-force
/// enumeration over m-subsets of the facets; fine for m <= 4.
inline std::vector<Vec> polar_vertices(const Mat& rows, double tol = 1e-9) {
  const auto m = static_cast<int>(rows.cols());
  const auto k = static_cast<int>(rows.rows());
  Eigen::FullPivLU<Mat> rank_check(rows);
  rank_check.setThreshold(1e-10);
  if (rank_check.rank() < m) {
    throw InvariantError("polyhedral norm: vertices do not span ℝ^" + std::to_string(m) +
                         " (polar ball is unbounded)");
  }
  std::vector<Vec> out;
  for_each_combination(k, m, [&](const std::vector<int>& idx) {
    Mat S(m, m);
    for (int i = 0; i < m; ++i) S.row(i) = rows.row(idx[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Mat> lu(S);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) return;
    const Vec x = lu.solve(Vec::Ones(m));
    if ((rows * x).maxCoeff() > 1.0 + tol) return;
    for (const auto& v : out) {
      if ((v - x).cwiseAbs().maxCoeff() <= tol * (1.0 + x.cwiseAbs().maxCoeff())) return;
    }
    out.push_back(x);
  });
  std::sort(out.begin(), out.end(), [](const Vec& a, const Vec& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  });
  return out;
}

inline Mat stack_rows(const std::vector<Vec>& vs, Eigen::Index dim) {
  Mat out(static_cast<Eigen::Index>(vs.size()), dim);
  for (std::size_t i = 0; i < vs.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = vs[i].transpose();
  return out;
}

inline bool contains_close(const std::vector<Vec>& vs, const Vec& x, double tol) {
  return std::any_of(vs.begin(), vs.end(), [&](const Vec& v) { return (v - x).cwiseAbs().maxCoeff() <= tol; });
}

}  // namespace detail

/// Polyhedral norm h(θ) = max_k g_k·θ given by the vertices g_k of ∂h(0).
/// Primal unit-ball vertices are enumerated once at construction.
class PolyhedralNorm {
 public:
  PolyhedralNorm(int m, std::vector<Vec> dual_vertices, std::string name = "custom")
      : m_(m), name_(std::move(name)), dual_(std::move(dual_vertices)) {
    require(m_ >= 1, "polyhedral norm: material dimension must be positive");
    require(!dual_.empty(), "polyhedral norm: no dual vertices");
    for (std::size_t i = 0; i < dual_.size(); ++i) {
      require_dim(dual_[i].size(), m_, "polyhedral norm dual vertex");
      if (!dual_[i].allFinite()) throw InputError("polyhedral norm: non-finite dual vertex");
      for (std::size_t j = 0; j < i; ++j) {
        if ((dual_[i] - dual_[j]).cwiseAbs().maxCoeff() <= 1e-12) {
          throw InvariantError("polyhedral norm: duplicate dual vertex #" + std::to_string(i));
        }
      }
    }
    for (std::size_t i = 0; i < dual_.size(); ++i) {
      if (!detail::contains_close(dual_, -dual_[i], 1e-9)) {
        throw InvariantError("polyhedral norm: dual vertex #" + std::to_string(i) + " has no antipode");
      }
    }
    primal_ = detail::polar_vertices(detail::stack_rows(dual_, m_));
    primal_mat_ = detail::stack_rows(primal_, m_);
    // Points strictly inside ∂h(0) are not vertices and never attain h.
    std::erase_if(dual_, [&](const Vec& g) { return (primal_mat_ * g).maxCoeff() < 1.0 - 1e-9; });
    dual_mat_ = detail::stack_rows(dual_, m_);
  }

  /// Norm whose primal unit ball is conv{±v_j}; ∂h(0) is enumerated as its polar.
  static PolyhedralNorm from_primal_vertices(int m, std::vector<Vec> primal, std::string name = "custom") {
    require(!primal.empty(), "polyhedral norm: no primal vertices");
    std::vector<Vec> sym;
    for (const auto& v : primal) {
      require_dim(v.size(), m, "polyhedral norm primal vertex");
      for (const Vec& w : {Vec(v), Vec(-v)}) {
        if (!detail::contains_close(sym, w, 1e-12)) sym.push_back(w);
      }
    }
    auto dual = detail::polar_vertices(detail::stack_rows(sym, m));
    return PolyhedralNorm(m, std::move(dual), std::move(name));
  }

  /// h(θ) = max{|θ₁|, |θ₂|, |θ₁ − θ₂|}.
  static PolyhedralNorm hex() {
    return PolyhedralNorm(2,
                          {make_vec({1, 0}), make_vec({-1, 0}), make_vec({0, 1}), make_vec({0, -1}),
                           make_vec({1, -1}), make_vec({-1, 1})},
                          "linf-hex");
  }

  static PolyhedralNorm l1(int m) {
    require(m >= 1 && m <= 10, "l1 norm: unsupported dimension");
    std::vector<Vec> dual;
    for (int mask = 0; mask < (1 << m); ++mask) {
      Vec g(m);
      for (int a = 0; a < m; ++a) g[a] = (mask >> a) & 1 ? -1.0 : 1.0;
      dual.push_back(g);
    }
    return PolyhedralNorm(m, std::move(dual), "l1");
  }

  static PolyhedralNorm linf(int m) {
    std::vector<Vec> dual;
    for (int a = 0; a < m; ++a) {
      dual.push_back(Vec::Unit(m, a));
      dual.push_back(-Vec::Unit(m, a));
    }
    return PolyhedralNorm(m, std::move(dual), "linf");
  }

  /// Inscribed sample of the Euclidean norm: h(θ) <= |θ| <= h(θ)/cos(π/samples)
  /// for m = 2. Default sample sizes: 2 (m=1), 64 (m=2), 62 (m=3).
  static PolyhedralNorm euclidean(int m, int samples = 0) {
    std::vector<Vec> dual;
    if (m == 1) {
      dual = {make_vec({1}), make_vec({-1})};
    } else if (m == 2) {
      const int s = samples > 0 ? samples : 64;
      require(s >= 4 && s % 2 == 0, "euclidean norm: sample count must be even and >= 4");
      for (int k = 0; k < s; ++k) {
        const double a = 2.0 * std::numbers::pi * k / s;
        dual.push_back(make_vec({std::cos(a), std::sin(a)}));
      }
    } else if (m == 3) {
      const int s = samples > 0 ? samples : 62;
      require(s >= 8 && s % 2 == 0, "euclidean norm: sample count must be even and >= 8");
      const int half = s / 2;
      const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
      for (int i = 0; i < half; ++i) {
        const double z = (i + 0.5) / half;
        const double r = std::sqrt(1.0 - z * z);
        const Vec p = make_vec({r * std::cos(golden * i), r * std::sin(golden * i), z});
        dual.push_back(p);
        dual.push_back(-p);
      }
    } else {
      throw InputError("euclidean norm: sampled only for m <= 3");
    }
    return PolyhedralNorm(m, std::move(dual), "euclidean");
  }

  /// Built-in names: "linf-hex", "l1", "linf", "euclidean".
  static PolyhedralNorm named(const std::string& name, int m = 2) {
    if (name == "linf-hex" || name == "hex") {
      require(m == 2, "linf-hex norm is defined for m = 2 only");
      return hex();
    }
    if (name == "l1") return l1(m);
    if (name == "linf") return linf(m);
    if (name == "euclidean") return euclidean(m);
    throw InputError("unknown norm name '" + name + "'");
  }

  int dim() const { return m_; }
  const std::string& name() const { return name_; }
  const std::vector<Vec>& dual_vertices() const { return dual_; }
  const std::vector<Vec>& primal_vertices() const { return primal_; }
  const Mat& dual_matrix() const { return dual_mat_; }
  const Mat& primal_matrix() const { return primal_mat_; }

  double operator()(const Vec& theta) const {
    require_dim(theta.size(), m_, "eval_h");
    return std::max(0.0, (dual_mat_ * theta).maxCoeff());
  }

  double dual(const Vec& y) const {
    require_dim(y.size(), m_, "eval_h_dual");
    return std::max(0.0, (primal_mat_ * y).maxCoeff());
  }

  /// Index of a dual vertex attaining h(θ) (lowest index among ties).
  int maximizing_dual_vertex(const Vec& theta) const {
    require_dim(theta.size(), m_, "maximizing_dual_vertex");
    Eigen::Index k = 0;
    (dual_mat_ * theta).maxCoeff(&k);
    return static_cast<int>(k);
  }

 private:
  int m_;
  std::string name_;
  std::vector<Vec> dual_;
  std::vector<Vec> primal_;
  Mat dual_mat_;
  Mat primal_mat_;
};

inline double eval_h(const PolyhedralNorm& h, const Vec& theta) { return h(theta); }
inline double eval_h_dual(const PolyhedralNorm& h, const Vec& y) { return h.dual(y); }

/// g ∈ ∂h(0)  ⟺  h_*(g) <= 1.
inline bool in_dual_ball(const PolyhedralNorm& h, const Vec& g, double tol = 1e-9) {
  return h.dual(g) <= 1.0 + tol;
}

/// h together with the spatial dimension n and a symmetric set of unit
/// directions used by the LP upper bound on H.
class GeneratedNorm {
 public:
  GeneratedNorm(PolyhedralNorm h, int n, std::vector<Vec> directions = {}) : h_(std::move(h)), n_(n) {
    require(n_ >= 1, "generated norm: spatial dimension must be positive");
    if (directions.empty()) directions = default_directions(n_);
    for (const auto& e : directions) {
      require_dim(e.size(), n_, "generated norm direction");
      if (std::abs(e.norm() - 1.0) > 1e-12) throw InvariantError("generated norm: direction is not a unit vector");
      if (!detail::contains_close(dirs_, e, 1e-12)) dirs_.push_back(e);
    }
    for (const auto& e : dirs_) {
      if (!detail::contains_close(dirs_, -e, 1e-12)) {
        throw InvariantError("generated norm: direction set is not symmetric under negation");
      }
    }
  }

  /// 32 uniform angles (n=2); 62-point antipodal sphere cover (n=3); ±1 (n=1).
  static std::vector<Vec> default_directions(int n) {
    std::vector<Vec> out;
    if (n == 1) {
      out = {make_vec({1}), make_vec({-1})};
    } else if (n == 2) {
      for (int k = 0; k < 32; ++k) {
        const double a = 2.0 * std::numbers::pi * k / 32;
        out.push_back(make_vec({std::cos(a), std::sin(a)}));
      }
    } else if (n == 3) {
      const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
      for (int i = 0; i < 31; ++i) {
        const double z = (i + 0.5) / 31;
        const double r = std::sqrt(1.0 - z * z);
        const Vec p = make_vec({r * std::cos(golden * i), r * std::sin(golden * i), z});
        out.push_back(p);
        out.push_back(-p);
      }
    } else {
      for (int i = 0; i < n; ++i) {
        out.push_back(Vec::Unit(n, i));
        out.push_back(-Vec::Unit(n, i));
      }
    }
    return out;
  }

  /// Copy with the given directions (normalized, and their negations) added.
  GeneratedNorm with_directions(const std::vector<Vec>& extra) const {
    std::vector<Vec> all = dirs_;
    for (const auto& e : extra) {
      require_dim(e.size(), n_, "generated norm direction");
      require(e.norm() > 1e-14, "generated norm: zero direction");
      const Vec u = e.normalized();
      for (const Vec& w : {Vec(u), Vec(-u)}) {
        if (!detail::contains_close(all, w, 1e-12)) all.push_back(w);
      }
    }
    return GeneratedNorm(h_, n_, std::move(all));
  }

  const PolyhedralNorm& h() const { return h_; }
  int m() const { return h_.dim(); }
  int n() const { return n_; }
  const std::vector<Vec>& directions() const { return dirs_; }

  void check_shape(const Mat& M, std::string_view what) const {
    if (M.rows() != m() || M.cols() != n_) {
      throw InputError(std::string(what) + ": expected " + std::to_string(m()) + "x" + std::to_string(n_) +
                       " matrix, got " + std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
    }
  }

 private:
  PolyhedralNorm h_;
  int n_;
  std::vector<Vec> dirs_;
};

/// H_*(M) = max_j |Mᵀv_j|₂, exact for polyhedral h.
inline double eval_H_dual(const GeneratedNorm& G, const Mat& M) {
  G.check_shape(M, "eval_H_dual");
  return (G.h().primal_matrix() * M).rowwise().norm().maxCoeff();
}

/// M ∈ ∂H(0)  ⟺  H_*(M) <= 1.
inline bool in_dH0(const GeneratedNorm& G, const Mat& M, double tol = 1e-9) {
  return eval_H_dual(G, M) <= 1.0 + tol;
}

struct RankOneTerm {
  Vec theta;
  Vec direction;
};

struct HUpperBound {
  double value = 0.0;
  std::vector<RankOneTerm> decomposition;
  Mat dual;  // LP multipliers of M = Σ θ_i ⊗ e_i; feasible only on the sampled directions
};

/// min Σ h(θ_i) over M = Σ θ_i ⊗ e_i with e_i from `directions`.
/// h(θ) is written as the gauge min{Σ μ_j : θ = Σ μ_j v_j, μ >= 0} of the
/// primal unit ball, so the only rows are the m·n entries of M.
inline HUpperBound eval_H_upper(const GeneratedNorm& G, const Mat& M, const std::vector<Vec>& directions) {
  G.check_shape(M, "eval_H_upper");
  const int m = G.m();
  const int n = G.n();
  require(!directions.empty(), "eval_H_upper: empty direction set");
  {
    const Mat D = detail::stack_rows(directions, n);
    Eigen::FullPivLU<Mat> lu(D);
    lu.setThreshold(1e-12);
    if (lu.rank() < n) throw InputError("eval_H_upper: direction set does not span ℝ^" + std::to_string(n));
  }
  HUpperBound out;
  out.dual = Mat::Zero(m, n);
  if (M.cwiseAbs().maxCoeff() == 0.0) return out;

  const auto& V = G.h().primal_vertices();
  lp::LpBuilder b;
  std::vector<lp::LpBuilder::Terms> rows(static_cast<std::size_t>(m * n));
  for (std::size_t i = 0; i < directions.size(); ++i) {
    for (std::size_t j = 0; j < V.size(); ++j) {
      const int var = b.add_variable(1.0, 0.0);
      for (int a = 0; a < m; ++a) {
        for (int c = 0; c < n; ++c) {
          const double coef = V[j][a] * directions[i][c];
          if (coef != 0.0) rows[static_cast<std::size_t>(a * n + c)].emplace_back(var, coef);
        }
      }
    }
  }
  for (int a = 0; a < m; ++a) {
    for (int c = 0; c < n; ++c) b.add_equality(rows[static_cast<std::size_t>(a * n + c)], M(a, c));
  }
  const auto sol = lp::solve_lp(b.build());
  if (sol.status == lp::Status::infeasible) throw InputError("eval_H_upper: decomposition LP infeasible");
  if (!sol.optimal()) throw NumericalError("eval_H_upper: LP failed: " + sol.message);

  out.value = sol.objective;
  for (int a = 0; a < m; ++a)
    for (int c = 0; c < n; ++c) out.dual(a, c) = sol.y[a * n + c];
  for (std::size_t i = 0; i < directions.size(); ++i) {
    Vec theta = Vec::Zero(m);
    for (std::size_t j = 0; j < V.size(); ++j) theta += sol.x[static_cast<Eigen::Index>(i * V.size() + j)] * V[j];
    if (theta.cwiseAbs().maxCoeff() > 1e-12) out.decomposition.push_back({theta, directions[i]});
  }
  return out;
}

inline HUpperBound eval_H_upper(const GeneratedNorm& G, const Mat& M) {
  return eval_H_upper(G, M, G.directions());
}

struct HLowerBound {
  double value = 0.0;
  Mat certificate;  // N with H_*(N) <= 1 and M:N = value
  bool converged = false;
  long iterations = 0;
};

struct AscentOptions {
  long max_iterations = 10000;
  int projection_sweeps = 100;
  int stall_window = 50;
};

namespace detail {

/// Dykstra projection onto ∩_j {N : |Nᵀv_j|₂ <= 1} (Frobenius metric).
inline Mat project_dual_ball(const Mat& N0, const Mat& V, int sweeps) {
  const auto J = V.rows();
  std::vector<Mat> incr(static_cast<std::size_t>(J), Mat::Zero(N0.rows(), N0.cols()));
  Mat x = N0;
  for (int s = 0; s < sweeps; ++s) {
    double moved = 0.0;
    for (Eigen::Index j = 0; j < J; ++j) {
      const Vec v = V.row(j).transpose();
      const Mat z = x + incr[static_cast<std::size_t>(j)];
      const Vec w = z.transpose() * v;
      const double len = w.norm();
      Mat y = z;
      if (len > 1.0) y -= v * (w * (1.0 - 1.0 / len)).transpose() / v.squaredNorm();
      incr[static_cast<std::size_t>(j)] = z - y;
      moved = std::max(moved, (y - x).cwiseAbs().maxCoeff());
      x = y;
    }
    if (moved < 1e-15) break;
  }
  return x;
}

/// One antipodal representative per primal vertex pair.
inline Mat half_primal(const PolyhedralNorm& h) {
  std::vector<Vec> half;
  for (const auto& v : h.primal_vertices()) {
    if (!contains_close(half, -v, 1e-9)) half.push_back(v);
  }
  return stack_rows(half, h.dim());
}

}  // namespace detail

/// Largest M:N found by projected ascent over {H_*(N) <= 1}. Every reported
/// certificate is rescaled to be exactly feasible, so value <= H(M).
inline HLowerBound eval_H_lower(const GeneratedNorm& G, const Mat& M, const std::optional<Mat>& warm_start = std::nullopt,
                                const AscentOptions& opt = {}) {
  G.check_shape(M, "eval_H_lower");
  HLowerBound out;
  out.certificate = Mat::Zero(M.rows(), M.cols());
  const double mnorm = M.norm();
  if (mnorm == 0.0) {
    out.converged = true;
    return out;
  }
  auto feasible = [&](const Mat& N) {
    const double s = eval_H_dual(G, N);
    return s > 1.0 ? Mat(N / s) : N;
  };
  Mat N = Mat::Zero(M.rows(), M.cols());
  if (warm_start) {
    G.check_shape(*warm_start, "eval_H_lower warm start");
    N = feasible(*warm_start);
  }
  out.certificate = N;
  out.value = (M.array() * N.array()).sum();

  const Mat V = detail::half_primal(G.h());
  const double step = 0.5 / mnorm;
  double window_start = out.value;
  for (long it = 1; it <= opt.max_iterations; ++it) {
    N = detail::project_dual_ball(N + step * M, V, opt.projection_sweeps);
    const Mat cand = feasible(N);
    const double val = (M.array() * cand.array()).sum();
    if (val > out.value) {
      out.value = val;
      out.certificate = cand;
    }
    out.iterations = it;
    if (it % opt.stall_window == 0) {
      if (out.value - window_start <= 1e-14 * (1.0 + std::abs(out.value))) {
        out.converged = true;
        break;
      }
      window_start = out.value;
    }
  }
  return out;
}

struct HInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool converged = false;  // false: cap reached, interval still valid but wider than requested
  int rounds = 0;
  std::size_t directions_used = 0;
  std::vector<RankOneTerm> decomposition;  // attains `upper`
  Mat certificate;                         // attains `lower`
  double gap() const { return upper - lower; }
};

/// Certified bracket lower <= H(M) <= upper. The direction set is refined by
/// cutting planes: each round adds the unit vectors e maximizing h_*(N e) for
/// the current LP multiplier N, which are exactly the directions whose
/// constraints N violates.
inline HInterval eval_H(const GeneratedNorm& G, const Mat& M, double gap_tol = 1e-6, int max_rounds = 60) {
  G.check_shape(M, "eval_H");
  require(gap_tol > 0.0, "eval_H: gap_tol must be positive");
  HInterval out;
  out.certificate = Mat::Zero(M.rows(), M.cols());
  if (M.cwiseAbs().maxCoeff() == 0.0) {
    out.converged = true;
    return out;
  }
  std::vector<Vec> dirs = G.directions();
  out.upper = kInf;
  const Mat& P = G.h().primal_matrix();
  for (int round = 0; round < max_rounds; ++round) {
    out.rounds = round + 1;
    const auto up = eval_H_upper(G, M, dirs);
    if (up.value < out.upper) {
      out.upper = up.value;
      out.decomposition = up.decomposition;
    }
    const double s = eval_H_dual(G, up.dual);
    const Mat N = s > 1.0 ? Mat(up.dual / s) : up.dual;
    const double val = (M.array() * N.array()).sum();
    if (val > out.lower) {
      out.lower = val;
      out.certificate = N;
    }
    out.directions_used = dirs.size();
    if (out.upper - out.lower <= gap_tol) {
      out.converged = true;
      break;
    }
    bool added = false;
    const Mat W = P * up.dual;  // rows: (Nᵀ v_j)ᵀ
    for (Eigen::Index j = 0; j < W.rows(); ++j) {
      const double len = W.row(j).norm();
      if (len <= 1.0 + 1e-12) continue;
      const Vec e = W.row(j).transpose() / len;
      for (const Vec& w : {Vec(e), Vec(-e)}) {
        if (!detail::contains_close(dirs, w, 1e-12)) {
          dirs.push_back(w);
          added = true;
        }
      }
    }
    if (!added) break;
  }
  if (!out.converged) {
    const auto polished = eval_H_lower(G, M, out.certificate);
    if (polished.value > out.lower) {
      out.lower = polished.value;
      out.certificate = polished.certificate;
    }
    out.converged = out.upper - out.lower <= gap_tol;
    if (!out.converged) {
      log(LogLevel::info, "eval_H: gap " + std::to_string(out.gap()) + " above tolerance after cap");
    }
  }
  return out;
}

}  // namespace mmt
