#pragma once

// Finite chains with ℝᵐ coefficients: weighted point sets (0-chains),
// free segment lists (1-chains), coefficients on a planar cubical grid, and
// mixed rectifiable + cellwise-diffuse fluxes. Masses, boundaries, pairings
// against matrix-valued test forms.

#include "mmt/core.hpp"
#include "mmt/norm.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

namespace mmt {

inline constexpr double kMergeTol = 1e-12;

struct Atom {
  Vec x;
  Vec theta;
};

/// F₀ = Σ θ_j δ_{x_j}. Atoms closer than 1e-12 (max-norm) are merged and
/// vanishing weights dropped; first-occurrence order is kept.
class PointChain0 {
 public:
  PointChain0(int n, int m) : n_(n), m_(m) { require(n >= 1 && m >= 1, "point chain: dimensions must be positive"); }
  PointChain0(int n, int m, const std::vector<Atom>& atoms) : PointChain0(n, m) {
    for (const auto& a : atoms) add(a.x, a.theta);
  }

  void add(const Vec& x, const Vec& theta) {
    require_dim(x.size(), n_, "point chain atom position");
    require_dim(theta.size(), m_, "point chain atom weight");
    require(x.allFinite() && theta.allFinite(), "point chain: non-finite atom");
    for (auto it = atoms_.begin(); it != atoms_.end(); ++it) {
      if ((it->x - x).cwiseAbs().maxCoeff() <= kMergeTol) {
        it->theta += theta;
        if (it->theta.cwiseAbs().maxCoeff() <= kMergeTol) atoms_.erase(it);
        return;
      }
    }
    if (theta.cwiseAbs().maxCoeff() > kMergeTol) atoms_.push_back({x, theta});
  }

  int dim() const { return n_; }
  int materials() const { return m_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  bool empty() const { return atoms_.empty(); }
  std::size_t size() const { return atoms_.size(); }

  Vec total_weight() const {
    Vec s = Vec::Zero(m_);
    for (const auto& a : atoms_) s += a.theta;
    return s;
  }
  bool is_admissible(double tol = 1e-10) const { return total_weight().cwiseAbs().maxCoeff() <= tol; }

  /// Weight at x (zero if no atom there).
  Vec weight_at(const Vec& x, double tol = kMergeTol) const {
    for (const auto& a : atoms_)
      if ((a.x - x).cwiseAbs().maxCoeff() <= tol) return a.theta;
    return Vec::Zero(m_);
  }

  PointChain0 scaled(double s) const {
    PointChain0 out(n_, m_);
    for (const auto& a : atoms_) out.add(a.x, s * a.theta);
    return out;
  }
  PointChain0& operator+=(const PointChain0& o) {
    require(o.n_ == n_ && o.m_ == m_, "point chain: dimension mismatch in sum");
    for (const auto& a : o.atoms_) add(a.x, a.theta);
    return *this;
  }
  friend PointChain0 operator+(PointChain0 a, const PointChain0& b) { return a += b; }
  friend PointChain0 operator-(PointChain0 a, const PointChain0& b) { return a += b.scaled(-1.0); }

 private:
  int n_;
  int m_;
  std::vector<Atom> atoms_;
};

struct Segment {
  Vec a;
  Vec b;
  Vec theta;
  double length() const { return (b - a).norm(); }
  Vec direction() const { return (b - a) / length(); }
};

/// Σ θ_s ⊗ [a_s, b_s]. Degenerate segments (length or weight <= 1e-12) are
/// never stored.
class PolyChain1 {
 public:
  PolyChain1(int n, int m) : n_(n), m_(m) { require(n >= 1 && m >= 1, "polychain: dimensions must be positive"); }

  void add(const Vec& a, const Vec& b, const Vec& theta) {
    require_dim(a.size(), n_, "polychain segment start");
    require_dim(b.size(), n_, "polychain segment end");
    require_dim(theta.size(), m_, "polychain segment weight");
    require(a.allFinite() && b.allFinite() && theta.allFinite(), "polychain: non-finite segment");
    if ((b - a).norm() <= kMergeTol || theta.cwiseAbs().maxCoeff() <= kMergeTol) return;
    segs_.push_back({a, b, theta});
  }
  void add(const Segment& s) { add(s.a, s.b, s.theta); }

  int dim() const { return n_; }
  int materials() const { return m_; }
  const std::vector<Segment>& segments() const { return segs_; }
  bool empty() const { return segs_.empty(); }
  std::size_t size() const { return segs_.size(); }

  PolyChain1& operator+=(const PolyChain1& o) {
    require(o.n_ == n_ && o.m_ == m_, "polychain: dimension mismatch in sum");
    for (const auto& s : o.segs_) segs_.push_back(s);
    return *this;
  }
  friend PolyChain1 operator+(PolyChain1 a, const PolyChain1& b) { return a += b; }

 private:
  int n_;
  int m_;
  std::vector<Segment> segs_;
};

// ---------------------------------------------------------------------------
// Planar cubical grid. Faces are numbered per dimension:
//   vertex (i,j)          -> j·(nx+1) + i
//   horizontal edge (i,j) -> j·nx + i               from (i,j) to (i+1,j)
//   vertical edge (i,j)   -> nx·(ny+1) + j·(nx+1) + i  from (i,j) to (i,j+1)
//   cell (i,j)            -> j·nx + i               [i,i+1)×[j,j+1)
// Orientation is the positive axis direction; cells are counter-clockwise.

class Grid {
 public:
  Grid(double x0, double y0, double x1, double y1, double delta) : x0_(x0), y0_(y0), delta_(delta) {
    require(std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) && std::isfinite(y1) && std::isfinite(delta),
            "grid: non-finite box");
    require(delta > 0.0, "grid: spacing must be positive");
    require(x1 > x0 && y1 > y0, "grid: empty box");
    const double fx = (x1 - x0) / delta;
    const double fy = (y1 - y0) / delta;
    nx_ = static_cast<int>(std::lround(fx));
    ny_ = static_cast<int>(std::lround(fy));
    require(std::abs(fx - nx_) <= 1e-9 * std::max(1.0, fx) && std::abs(fy - ny_) <= 1e-9 * std::max(1.0, fy),
            "grid: box sides are not multiples of the spacing");
    require(static_cast<long>(nx_) * ny_ <= 4'000'000, "grid: too many cells");
  }

  static Grid unit(int cells_per_side) { return Grid(0.0, 0.0, 1.0, 1.0, 1.0 / cells_per_side); }

  double delta() const { return delta_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double x0() const { return x0_; }
  double y0() const { return y0_; }
  double x1() const { return x0_ + nx_ * delta_; }
  double y1() const { return y0_ + ny_ * delta_; }

  int face_count(int k) const {
    switch (k) {
      case 0: return (nx_ + 1) * (ny_ + 1);
      case 1: return nx_ * (ny_ + 1) + (nx_ + 1) * ny_;
      case 2: return nx_ * ny_;
      default: throw InputError("grid: face dimension must be 0, 1 or 2");
    }
  }

  int vertex(int i, int j) const { return j * (nx_ + 1) + i; }
  int hedge(int i, int j) const { return j * nx_ + i; }
  int vedge(int i, int j) const { return nx_ * (ny_ + 1) + j * (nx_ + 1) + i; }
  int cell(int i, int j) const { return j * nx_ + i; }

  Vec point(int i, int j) const { return make_vec({x0_ + i * delta_, y0_ + j * delta_}); }

  /// Lattice coordinates (i,j) of face `id` of dimension k; for edges also
  /// whether it is vertical.
  std::array<int, 3> coords(int k, int id) const {
    check_face(k, id);
    if (k == 0) return {id % (nx_ + 1), id / (nx_ + 1), 0};
    if (k == 2) return {id % nx_, id / nx_, 0};
    const int nh = nx_ * (ny_ + 1);
    if (id < nh) return {id % nx_, id / nx_, 0};
    return {(id - nh) % (nx_ + 1), (id - nh) / (nx_ + 1), 1};
  }

  /// Start and end point of edge `id`.
  std::pair<Vec, Vec> edge_points(int id) const {
    const auto [i, j, vert] = coords(1, id);
    return {point(i, j), vert ? point(i, j + 1) : point(i + 1, j)};
  }

  Vec cell_center(int id) const {
    const auto [i, j, unused] = coords(2, id);
    (void)unused;
    return make_vec({x0_ + (i + 0.5) * delta_, y0_ + (j + 0.5) * delta_});
  }

  /// Signed (k−1)-faces of the boundary of face `id`.
  std::vector<std::pair<int, double>> boundary_of(int k, int id) const {
    const auto [i, j, vert] = coords(k, id);
    if (k == 0) return {};
    if (k == 1) {
      return vert ? std::vector<std::pair<int, double>>{{vertex(i, j + 1), 1.0}, {vertex(i, j), -1.0}}
                  : std::vector<std::pair<int, double>>{{vertex(i + 1, j), 1.0}, {vertex(i, j), -1.0}};
    }
    return {{hedge(i, j), 1.0}, {vedge(i + 1, j), 1.0}, {hedge(i, j + 1), -1.0}, {vedge(i, j), -1.0}};
  }

  /// Signed incidence matrix (#(k−1)-faces × #k-faces).
  SpMat boundary_matrix(int k) const {
    require(k == 1 || k == 2, "grid: boundary matrix needs k = 1 or 2");
    std::vector<Triplet> t;
    for (int f = 0; f < face_count(k); ++f)
      for (auto [g, s] : boundary_of(k, f)) t.emplace_back(g, f, s);
    SpMat B(face_count(k - 1), face_count(k));
    B.setFromTriplets(t.begin(), t.end());
    return B;
  }

  bool contains(const Vec& x, double tol = 1e-9) const {
    return x.size() == 2 && x[0] >= x0_ - tol && x[0] <= x1() + tol && x[1] >= y0_ - tol && x[1] <= y1() + tol;
  }

  /// Nearest lattice node; throws if x is outside the box.
  std::array<int, 2> snap(const Vec& x) const {
    require_dim(x.size(), 2, "grid point");
    require(contains(x), "grid: point (" + std::to_string(x[0]) + ", " + std::to_string(x[1]) + ") outside the box");
    const int i = static_cast<int>(std::lround((x[0] - x0_) / delta_));
    const int j = static_cast<int>(std::lround((x[1] - y0_) / delta_));
    return {std::clamp(i, 0, nx_), std::clamp(j, 0, ny_)};
  }

  bool operator==(const Grid& o) const {
    return x0_ == o.x0_ && y0_ == o.y0_ && delta_ == o.delta_ && nx_ == o.nx_ && ny_ == o.ny_;
  }

 private:
  void check_face(int k, int id) const {
    require(id >= 0 && id < face_count(k), "grid: face index out of range");
  }

  double x0_, y0_, delta_;
  int nx_ = 0, ny_ = 0;
};

/// Coefficients θ ∈ ℝᵐ on the k-faces of a grid. Exact zeros are pruned.
class GridChain {
 public:
  GridChain(Grid grid, int k, int m) : grid_(std::move(grid)), k_(k), m_(m) {
    require(k >= 0 && k <= 2, "grid chain: k must be 0, 1 or 2");
    require(m >= 1, "grid chain: material dimension must be positive");
  }

  void add(int face, const Vec& theta) {
    require(face >= 0 && face < grid_.face_count(k_), "grid chain: face outside the grid");
    require_dim(theta.size(), m_, "grid chain coefficient");
    require(theta.allFinite(), "grid chain: non-finite coefficient");
    auto [it, inserted] = coef_.try_emplace(face, theta);
    if (!inserted) it->second += theta;
    if (it->second.cwiseAbs().maxCoeff() == 0.0) coef_.erase(it);
  }

  const Grid& grid() const { return grid_; }
  int k() const { return k_; }
  int materials() const { return m_; }
  const std::map<int, Vec>& coefficients() const { return coef_; }
  bool empty() const { return coef_.empty(); }

  Vec at(int face) const {
    const auto it = coef_.find(face);
    return it == coef_.end() ? Vec::Zero(m_) : it->second;
  }

  GridChain scaled(double s) const {
    GridChain out(grid_, k_, m_);
    for (const auto& [f, t] : coef_) out.add(f, s * t);
    return out;
  }
  GridChain& operator+=(const GridChain& o) {
    require(o.grid_ == grid_ && o.k_ == k_ && o.m_ == m_, "grid chain: incompatible operands");
    for (const auto& [f, t] : o.coef_) add(f, t);
    return *this;
  }
  friend GridChain operator+(GridChain a, const GridChain& b) { return a += b; }
  friend GridChain operator-(GridChain a, const GridChain& b) { return a += b.scaled(-1.0); }

  /// Dense (faces × m) coefficient table.
  Mat dense() const {
    Mat D = Mat::Zero(grid_.face_count(k_), m_);
    for (const auto& [f, t] : coef_) D.row(f) = t.transpose();
    return D;
  }

 private:
  Grid grid_;
  int k_;
  int m_;
  std::map<int, Vec> coef_;
};

/// Rectifiable part plus a cellwise constant flux density on a grid.
struct MixedFlux {
  PolyChain1 rect;
  std::optional<Grid> grid;
  std::map<int, Mat> diffuse;  // cell id -> density M_c ∈ ℝ^{m×n}
};

/// Matrix-valued test form ω : ℝⁿ → ℝ^{m×n}.
///   constant: ω = C
///   affine:   ω(x) = C + Σ_d x_d·slopes[d]
///   trig:     ω_ac(x) = C_ac·sin(2π·frequency·(wave·x) + phase_ac)
struct TestForm1 {
  enum class Kind { constant, affine, trig };
  Kind kind = Kind::constant;
  Mat C;
  std::vector<Mat> slopes;
  Vec wave;
  double frequency = 1.0;
  Mat phase;
  int order = 8;

  static TestForm1 constant(Mat C, int order = 8) {
    TestForm1 w;
    w.C = std::move(C);
    w.order = order;
    return w;
  }
  static TestForm1 affine(Mat C, std::vector<Mat> slopes, int order = 8) {
    TestForm1 w = constant(std::move(C), order);
    w.kind = Kind::affine;
    w.slopes = std::move(slopes);
    require(w.slopes.size() == static_cast<std::size_t>(w.C.cols()), "test form: need one slope per coordinate");
    for (const auto& S : w.slopes) require(S.rows() == w.C.rows() && S.cols() == w.C.cols(), "test form: slope shape");
    return w;
  }
  static TestForm1 trig(Mat amplitude, Vec wave, double frequency, Mat phase, int order = 8) {
    TestForm1 w = constant(std::move(amplitude), order);
    w.kind = Kind::trig;
    w.wave = std::move(wave);
    w.frequency = frequency;
    w.phase = std::move(phase);
    require(w.wave.size() == w.C.cols(), "test form: wave vector length");
    require(w.phase.rows() == w.C.rows() && w.phase.cols() == w.C.cols(), "test form: phase shape");
    return w;
  }

  Mat operator()(const Vec& x) const {
    require_dim(x.size(), C.cols(), "test form point");
    switch (kind) {
      case Kind::constant: return C;
      case Kind::affine: {
        Mat out = C;
        for (Eigen::Index d = 0; d < x.size(); ++d) out += x[d] * slopes[static_cast<std::size_t>(d)];
        return out;
      }
      case Kind::trig: {
        const double arg = 2.0 * std::numbers::pi * frequency * wave.dot(x);
        return (C.array() * (phase.array() + arg).sin()).matrix();
      }
    }
    return C;
  }
};

namespace detail {

/// Gauss–Legendre nodes and weights on [0,1] (Golub–Welsch).
inline const std::pair<Vec, Vec>& gauss_legendre(int order) {
  require(order >= 1, "quadrature order must be at least 1");
  require(order <= 64, "quadrature order above 64 is not supported");
  static thread_local std::map<int, std::pair<Vec, Vec>> cache;
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;
  Mat J = Mat::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  Vec nodes = (es.eigenvalues().array() + 1.0) / 2.0;
  Vec weights = es.eigenvectors().row(0).transpose().array().square();  // sums to 1 on [0,1]
  return cache.emplace(order, std::make_pair(std::move(nodes), std::move(weights))).first->second;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Masses

inline double mass_Mh(const PolyhedralNorm& h, const PolyChain1& P) {
  require_dim(P.materials(), h.dim(), "mass_Mh");
  double s = 0.0;
  for (const auto& seg : P.segments()) s += h(seg.theta) * seg.length();
  return s;
}

inline double mass_Mh(const PolyhedralNorm& h, const PointChain0& P) {
  require_dim(P.materials(), h.dim(), "mass_Mh");
  double s = 0.0;
  for (const auto& a : P.atoms()) s += h(a.theta);
  return s;
}

inline double mass_Mh(const PolyhedralNorm& h, const GridChain& P) {
  require_dim(P.materials(), h.dim(), "mass_Mh");
  const double w = std::pow(P.grid().delta(), P.k());
  double s = 0.0;
  for (const auto& [f, t] : P.coefficients()) s += h(t) * w;
  return s;
}

struct MassInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool converged = true;
};

/// Mass of a mixed flux: exact on the rectifiable part, bracketed on the
/// diffuse part through eval_H.
inline MassInterval mass_H(const GeneratedNorm& G, const MixedFlux& F, double gap_tol = 1e-6) {
  require_dim(F.rect.materials(), G.m(), "mass_H rectifiable part");
  require_dim(F.rect.dim(), G.n(), "mass_H rectifiable part");
  MassInterval out;
  out.lower = out.upper = mass_Mh(G.h(), F.rect);
  if (F.diffuse.empty()) return out;
  require(F.grid.has_value(), "mass_H: diffuse part without a grid");
  const double area = F.grid->delta() * F.grid->delta();
  const double cell_tol = gap_tol / (area * static_cast<double>(F.diffuse.size()));
  std::vector<std::pair<Mat, HInterval>> seen;  // identical densities are evaluated once
  for (const auto& [c, M] : F.diffuse) {
    require(c >= 0 && c < F.grid->face_count(2), "mass_H: diffuse cell outside the grid");
    const HInterval* hit = nullptr;
    for (const auto& [K, I] : seen)
      if (K == M) hit = &I;
    if (hit == nullptr) {
      seen.emplace_back(M, eval_H(G, M, cell_tol));
      hit = &seen.back().second;
    }
    out.lower += hit->lower * area;
    out.upper += hit->upper * area;
    out.converged = out.converged && hit->converged;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Boundaries

/// ∂(θ⊗[a,b]) = θδ_b − θδ_a, merged.
inline PointChain0 boundary(const PolyChain1& P) {
  PointChain0 out(P.dim(), P.materials());
  for (const auto& s : P.segments()) {
    out.add(s.b, s.theta);
    out.add(s.a, -s.theta);
  }
  return out;
}

inline GridChain boundary(const GridChain& P) {
  require(P.k() >= 1, "boundary: a 0-chain has no boundary");
  GridChain out(P.grid(), P.k() - 1, P.materials());
  for (const auto& [f, t] : P.coefficients())
    for (auto [g, s] : P.grid().boundary_of(P.k(), f)) out.add(g, s * t);
  return out;
}

/// Lattice 0-chain as points.
inline PointChain0 to_points(const GridChain& P) {
  require(P.k() == 0, "to_points: expects a 0-chain");
  PointChain0 out(2, P.materials());
  for (const auto& [f, t] : P.coefficients()) {
    const auto c = P.grid().coords(0, f);
    out.add(P.grid().point(c[0], c[1]), t);
  }
  return out;
}

/// Grid 1-chain as segments.
inline PolyChain1 to_polychain(const GridChain& P) {
  require(P.k() == 1, "to_polychain: expects a 1-chain");
  PolyChain1 out(2, P.materials());
  for (const auto& [f, t] : P.coefficients()) {
    auto [a, b] = P.grid().edge_points(f);
    out.add(a, b, t);
  }
  return out;
}

/// Atoms moved to their nearest lattice nodes.
inline GridChain snap_to_grid(const PointChain0& P, const Grid& grid) {
  require_dim(P.dim(), 2, "snap_to_grid");
  GridChain out(grid, 0, P.materials());
  for (const auto& a : P.atoms()) {
    const auto ij = grid.snap(a.x);
    out.add(grid.vertex(ij[0], ij[1]), a.theta);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pairing with test forms

/// F(ω) = Σ_s ∫_s θ_s · ω(x) e⃗_s dℋ¹, Gauss–Legendre of order ω.order per segment.
inline double pair(const PolyChain1& P, const TestForm1& w) {
  require(w.order >= 1, "pair: quadrature order must be at least 1");
  require(w.C.rows() == P.materials() && w.C.cols() == P.dim(), "pair: test form shape does not match chain");
  const auto& [t, wt] = detail::gauss_legendre(w.order);
  double s = 0.0;
  for (const auto& seg : P.segments()) {
    const Vec d = seg.b - seg.a;  // = L·e⃗
    if (w.kind == TestForm1::Kind::constant) {
      s += seg.theta.dot(w.C * d);
      continue;
    }
    double acc = 0.0;
    for (Eigen::Index q = 0; q < t.size(); ++q) acc += wt[q] * seg.theta.dot(w(seg.a + t[q] * d) * d);
    s += acc;
  }
  return s;
}

inline double pair(const GridChain& P, const TestForm1& w) {
  require(P.k() == 1, "pair: test forms of degree one pair with 1-chains");
  return pair(to_polychain(P), w);
}

/// Rectifiable part by quadrature; diffuse part Σ_c M_c : ω(center)·area.
inline double pair(const MixedFlux& F, const TestForm1& w) {
  double s = pair(F.rect, w);
  if (F.diffuse.empty()) return s;
  require(F.grid.has_value(), "pair: diffuse part without a grid");
  const double area = F.grid->delta() * F.grid->delta();
  for (const auto& [c, M] : F.diffuse) {
    const Mat W = w(F.grid->cell_center(c));
    require(W.rows() == M.rows() && W.cols() == M.cols(), "pair: density shape does not match test form");
    s += (M.array() * W.array()).sum() * area;
  }
  return s;
}

// ---------------------------------------------------------------------------

/// Staircase approximation: each segment becomes the monotone lattice path
/// between the nodes nearest to its endpoints that stays closest to the
/// straight line (x-steps first on ties).
inline GridChain rasterize(const PolyChain1& P, const Grid& grid) {
  require_dim(P.dim(), 2, "rasterize");
  GridChain out(grid, 1, P.materials());
  for (std::size_t s = 0; s < P.segments().size(); ++s) {
    const auto& seg = P.segments()[s];
    if (!grid.contains(seg.a) || !grid.contains(seg.b)) {
      throw InputError("rasterize: segment #" + std::to_string(s) + " leaves the grid box");
    }
    const auto [i0, j0] = grid.snap(seg.a);
    const auto [i1, j1] = grid.snap(seg.b);
    const int dx = std::abs(i1 - i0), dy = std::abs(j1 - j0);
    const int sx = i1 >= i0 ? 1 : -1, sy = j1 >= j0 ? 1 : -1;
    int i = i0, j = j0, kx = 0, ky = 0;
    while (kx < dx || ky < dy) {
      // step along x while its next midpoint parameter is not behind y's
      const bool step_x = ky == dy || (kx < dx && static_cast<long>(2 * kx + 1) * dy <= static_cast<long>(2 * ky + 1) * dx);
      if (step_x) {
        const int ie = sx > 0 ? i : i - 1;
        out.add(grid.hedge(ie, j), sx * seg.theta);
        i += sx;
        ++kx;
      } else {
        const int je = sy > 0 ? j : j - 1;
        out.add(grid.vedge(i, je), sy * seg.theta);
        j += sy;
        ++ky;
      }
    }
  }
  return out;
}

}  // namespace mmt
