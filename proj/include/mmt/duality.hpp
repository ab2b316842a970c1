#pragma once

// Calibrations: potentials φ with h_*(φ(b) − φ(a)) <= |b − a| whose dual
// value Σ φ(x)·θ over F₀ equals the mass of a flow F with ∂F = F₀. Two
// flavours are verified: node potentials on a graph, and piecewise-constant
// Jacobian fields Φ on convex polytopal regions (possibly discontinuous
// across region facets only in the normal direction).

#include "mmt/chains.hpp"
#include "mmt/core.hpp"
#include "mmt/flow.hpp"
#include "mmt/lp.hpp"
#include "mmt/norm.hpp"

#include <deque>
#include <functional>
#include <random>
#include <sstream>
#include <vector>

namespace mmt {

using Potential = std::vector<Vec>;

enum class Verdict { certified_optimal, infeasible, gap_positive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::certified_optimal: return "certified-optimal";
    case Verdict::infeasible: return "infeasible";
    case Verdict::gap_positive: return "gap-positive";
  }
  return "unknown";
}

struct CalibrationReport {
  bool feasible = false;
  bool boundary_ok = false;
  double continuity_residual = 0.0;  // field variant: max tangential jump, graph variant: 0
  double cycle_residual = 0.0;       // field variant: max facet mismatch after reconstruction
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  std::vector<double> slack;      // per edge / segment: L − h_*(Δφ)
  std::vector<double> tightness;  // per edge / segment: h(θ)L − θ·Δφ (>= 0 when feasible)
  std::vector<int> infeasible_regions;
  std::vector<int> violating_cycle;  // region ids, first == last
  Verdict verdict = Verdict::infeasible;
  std::string message;

  bool certified() const { return verdict == Verdict::certified_optimal; }
};

struct PotentialCheck {
  std::vector<double> slack;
  double min_slack = kInf;
  bool feasible = true;
};

/// slack_e = L_e − h_*(φ_v − φ_u) for every edge u → v.
inline PotentialCheck check_potential(const GeometricGraph& g, const Potential& phi, const PolyhedralNorm& h,
                                      double tol = 1e-7) {
  require(phi.size() == static_cast<std::size_t>(g.num_nodes()), "check_potential: one potential per node expected");
  PotentialCheck out;
  for (const auto& p : phi) {
    require_dim(p.size(), h.dim(), "check_potential potential");
    require(p.allFinite(), "check_potential: non-finite potential");
  }
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edge(e);
    const double s = g.length(e) - h.dual(phi[static_cast<std::size_t>(v)] - phi[static_cast<std::size_t>(u)]);
    out.slack.push_back(s);
    out.min_slack = std::min(out.min_slack, s);
  }
  out.feasible = out.min_slack >= -tol;
  return out;
}

namespace detail {

inline void finish_report(CalibrationReport& r, double tol) {
  r.gap = std::abs(r.primal_value - r.dual_value);
  if (!r.feasible || !r.boundary_ok) {
    r.verdict = Verdict::infeasible;
  } else if (r.gap <= tol * (1.0 + r.primal_value)) {
    r.verdict = Verdict::certified_optimal;
  } else {
    r.verdict = Verdict::gap_positive;
  }
}

}  // namespace detail

/// Flow θ (per edge of g) and node potentials φ against F₀: certified iff
/// ∂F = F₀, every edge is dual feasible, and the two values agree.
inline CalibrationReport verify_calibration_graph(const GeometricGraph& g, const std::vector<Vec>& theta,
                                                  const Potential& phi, const PointChain0& F0,
                                                  const PolyhedralNorm& h, double tol = 1e-7) {
  require(theta.size() == static_cast<std::size_t>(g.num_edges()), "verify_calibration_graph: one bundle per edge");
  CalibrationReport r;
  const auto pc = check_potential(g, phi, h, tol);
  r.slack = pc.slack;
  r.feasible = pc.feasible;

  const auto mismatch = divergence(g, theta) - F0;
  double worst = 0.0;
  for (const auto& a : mismatch.atoms()) worst = std::max(worst, a.theta.cwiseAbs().maxCoeff());
  r.boundary_ok = worst <= 1e-8;
  if (!r.boundary_ok) r.message = "boundary mismatch: ∂F differs from F₀ by " + std::to_string(worst);

  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edge(e);
    const Vec& t = theta[static_cast<std::size_t>(e)];
    const double cost = h(t) * g.length(e);
    r.primal_value += cost;
    r.tightness.push_back(cost - t.dot(phi[static_cast<std::size_t>(v)] - phi[static_cast<std::size_t>(u)]));
  }
  for (std::size_t j = 0; j < F0.atoms().size(); ++j) {
    const auto& a = F0.atoms()[j];
    const auto k = g.find_node(a.x);
    if (!k) throw InputError("verify_calibration_graph: boundary atom #" + std::to_string(j) + " is not a graph node");
    r.dual_value += phi[static_cast<std::size_t>(*k)].dot(a.theta);
  }
  detail::finish_report(r, tol);
  if (r.message.empty() && !r.feasible) r.message = "potential violates an edge constraint (min slack " + std::to_string(pc.min_slack) + ")";
  return r;
}

inline CalibrationReport verify_calibration_graph(const FlowProblem& p, const FlowSolution& s, double tol = 1e-7) {
  return verify_calibration_graph(p.graph, s.theta, s.potentials, p.boundary, p.h, tol);
}

struct ChainGraph {
  GeometricGraph graph;
  std::vector<Vec> theta;
};

/// Segment endpoints become nodes (merged within 1e-9); segments become edges.
/// Parallel segments between the same nodes are summed.
inline ChainGraph chain_to_graph(const PolyChain1& F) {
  ChainGraph out{GeometricGraph(F.dim()), {}};
  for (const auto& s : F.segments()) {
    const int u = out.graph.add_node(s.a);
    const int v = out.graph.add_node(s.b);
    if (u == v) continue;
    const int e = out.graph.add_edge(u, v);
    const Vec t = out.graph.edge(e).first == u ? s.theta : Vec(-s.theta);
    if (static_cast<std::size_t>(e) == out.theta.size()) {
      out.theta.push_back(t);
    } else {
      out.theta[static_cast<std::size_t>(e)] += t;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Piecewise-constant calibration fields

struct Halfspace {
  Vec a;  // a·x <= b
  double b = 0.0;
};

struct Region {
  std::string name;
  std::vector<Halfspace> halfspaces;
  Mat Phi;
};

struct Facet {
  int first = -1;
  int second = -1;
  Vec point;    // relative-interior point (Chebyshev centre within the hyperplane)
  Mat tangent;  // n × (n−1) orthonormal basis of the facet hyperplane
  double inradius = 0.0;
};

/// Regions of a piecewise-constant field Φ, clipped to an axis-aligned
/// working box. Facets are found where two regions carry opposite
/// halfspaces whose common hyperplane piece has positive measure.
class PiecewiseCalibration {
 public:
  PiecewiseCalibration(Vec box_lo, Vec box_hi, std::vector<Region> regions)
      : lo_(std::move(box_lo)), hi_(std::move(box_hi)), regions_(std::move(regions)) {
    n_ = static_cast<int>(lo_.size());
    require(n_ >= 1, "calibration field: empty box");
    require_dim(hi_.size(), n_, "calibration field box");
    require((hi_ - lo_).minCoeff() > 0.0, "calibration field: degenerate box");
    require(!regions_.empty(), "calibration field: no regions");
    for (std::size_t r = 0; r < regions_.size(); ++r) {
      auto& reg = regions_[r];
      if (reg.name.empty()) reg.name = "region " + std::to_string(r);
      require(reg.Phi.cols() == n_ && reg.Phi.rows() >= 1, "calibration field: " + reg.name + " has a matrix of wrong shape");
      require(reg.Phi.allFinite(), "calibration field: " + reg.name + " has non-finite entries");
      for (auto& hs : reg.halfspaces) {
        require_dim(hs.a.size(), n_, "calibration field halfspace");
        const double len = hs.a.norm();
        require(len > 1e-12 && std::isfinite(hs.b), "calibration field: degenerate halfspace in " + reg.name);
        hs.a /= len;
        hs.b /= len;
      }
      require(reg.Phi.rows() == regions_.front().Phi.rows(), "calibration field: matrices differ in row count");
    }
    find_facets();
  }

  int dim() const { return n_; }
  int materials() const { return static_cast<int>(regions_.front().Phi.rows()); }
  const Vec& box_lo() const { return lo_; }
  const Vec& box_hi() const { return hi_; }
  const std::vector<Region>& regions() const { return regions_; }
  const std::vector<Facet>& facets() const { return facets_; }

  bool in_box(const Vec& x, double tol = 1e-9) const {
    return x.size() == n_ && (x - lo_).minCoeff() >= -tol && (hi_ - x).minCoeff() >= -tol;
  }

  bool contains(int r, const Vec& x, double tol = 1e-9) const {
    for (const auto& hs : regions_[static_cast<std::size_t>(r)].halfspaces)
      if (hs.a.dot(x) > hs.b + tol * (1.0 + std::abs(hs.b))) return false;
    return in_box(x, tol);
  }

  /// First region containing x (closed, with tolerance), or −1.
  int locate(const Vec& x, double tol = 1e-9) const {
    for (std::size_t r = 0; r < regions_.size(); ++r)
      if (contains(static_cast<int>(r), x, tol)) return static_cast<int>(r);
    return -1;
  }

  /// Interior test with a margin, used for overlap detection.
  bool strictly_inside(int r, const Vec& x, double margin) const {
    for (const auto& hs : regions_[static_cast<std::size_t>(r)].halfspaces)
      if (hs.a.dot(x) >= hs.b - margin) return false;
    return true;
  }

 private:
  std::vector<Halfspace> box_halfspaces() const {
    std::vector<Halfspace> out;
    for (int d = 0; d < n_; ++d) {
      out.push_back({Vec::Unit(n_, d), hi_[d]});
      out.push_back({-Vec::Unit(n_, d), -lo_[d]});
    }
    return out;
  }

  /// Largest ball (within the hyperplane a·x = b) inside all `others`.
  std::optional<std::pair<Vec, double>> facet_center(const Halfspace& plane, const std::vector<Halfspace>& others) const {
    lp::LpBuilder b;
    for (int d = 0; d < n_; ++d) b.add_variable(0.0);
    const int t = b.add_variable(-1.0, 0.0, 1.0);
    lp::LpBuilder::Terms eq;
    for (int d = 0; d < n_; ++d) eq.emplace_back(d, plane.a[d]);
    b.add_equality(eq, plane.b);
    for (const auto& hs : others) {
      const Vec proj = hs.a - hs.a.dot(plane.a) * plane.a;
      lp::LpBuilder::Terms row;
      for (int d = 0; d < n_; ++d) row.emplace_back(d, hs.a[d]);
      row.emplace_back(t, proj.norm());
      b.add_inequality(row, hs.b);
    }
    const auto sol = lp::solve_lp(b.build());
    if (!sol.optimal()) return std::nullopt;
    return std::make_pair(Vec(sol.x.head(n_)), sol.x[t]);
  }

  void find_facets() {
    const auto box = box_halfspaces();
    for (std::size_t r = 0; r < regions_.size(); ++r) {
      for (std::size_t s = r + 1; s < regions_.size(); ++s) {
        const auto& R = regions_[r].halfspaces;
        const auto& S = regions_[s].halfspaces;
        for (std::size_t i = 0; i < R.size(); ++i) {
          for (std::size_t j = 0; j < S.size(); ++j) {
            if ((R[i].a + S[j].a).cwiseAbs().maxCoeff() > 1e-9 || std::abs(R[i].b + S[j].b) > 1e-9) continue;
            std::vector<Halfspace> others = box;
            for (std::size_t k = 0; k < R.size(); ++k)
              if (k != i) others.push_back(R[k]);
            for (std::size_t k = 0; k < S.size(); ++k)
              if (k != j) others.push_back(S[k]);
            const auto c = facet_center(R[i], others);
            if (!c || c->second <= 1e-9) continue;
            Facet f;
            f.first = static_cast<int>(r);
            f.second = static_cast<int>(s);
            f.point = c->first;
            f.inradius = c->second;
            Eigen::FullPivLU<Mat> lu(R[i].a.transpose());
            const Mat K = lu.kernel();
            f.tangent = K.cols() == 0 ? Mat(n_, 0) : Mat(Eigen::HouseholderQR<Mat>(K).householderQ() * Mat::Identity(n_, K.cols()));
            facets_.push_back(std::move(f));
          }
        }
      }
    }
  }

  int n_ = 0;
  Vec lo_, hi_;
  std::vector<Region> regions_;
  std::vector<Facet> facets_;
};

/// φ(x) = Φ_r x + c_r rebuilt from a piecewise field by breadth-first search
/// over region facets, matching values at facet points.
struct ReconstructedPotential {
  const PiecewiseCalibration* field = nullptr;
  std::vector<Vec> offsets;
  std::vector<int> parent;  // BFS tree over regions (−1 at roots)
  int root = 0;
  double cycle_residual = 0.0;
  int worst_facet = -1;

  Vec operator()(const Vec& x) const {
    const int r = field->locate(x);
    if (r < 0) throw InputError("potential: point outside every region of the calibration field");
    return field->regions()[static_cast<std::size_t>(r)].Phi * x + offsets[static_cast<std::size_t>(r)];
  }

  /// Region cycle closed by facet f through the BFS tree, first == last.
  std::vector<int> cycle_through(int f) const {
    const auto& fc = field->facets()[static_cast<std::size_t>(f)];
    auto path = [&](int r) {
      std::vector<int> p;
      for (; r >= 0; r = parent[static_cast<std::size_t>(r)]) p.push_back(r);
      return p;
    };
    auto a = path(fc.first), b = path(fc.second);
    while (a.size() > 1 && b.size() > 1 && a[a.size() - 2] == b[b.size() - 2]) {
      a.pop_back();
      b.pop_back();
    }
    std::vector<int> cyc(a.begin(), a.end());          // first … lca
    cyc.insert(cyc.end(), b.rbegin() + 1, b.rend());   // … second
    cyc.push_back(fc.first);
    return cyc;
  }
};

inline ReconstructedPotential reconstruct_potential(const PiecewiseCalibration& field) {
  ReconstructedPotential out;
  out.field = &field;
  const auto R = field.regions().size();
  const int m = field.materials();
  out.offsets.assign(R, Vec::Zero(m));
  out.parent.assign(R, -1);
  const Vec origin = Vec::Zero(field.dim());
  out.root = field.in_box(origin) ? std::max(field.locate(origin), 0) : 0;

  std::vector<std::vector<std::pair<int, int>>> adj(R);  // (neighbour, facet)
  for (std::size_t f = 0; f < field.facets().size(); ++f) {
    const auto& fc = field.facets()[f];
    adj[static_cast<std::size_t>(fc.first)].emplace_back(fc.second, static_cast<int>(f));
    adj[static_cast<std::size_t>(fc.second)].emplace_back(fc.first, static_cast<int>(f));
  }
  std::vector<bool> seen(R, false);
  auto bfs = [&](int start) {
    std::deque<int> q{start};
    seen[static_cast<std::size_t>(start)] = true;
    while (!q.empty()) {
      const int r = q.front();
      q.pop_front();
      for (auto [s, f] : adj[static_cast<std::size_t>(r)]) {
        if (seen[static_cast<std::size_t>(s)]) continue;
        const Vec& p = field.facets()[static_cast<std::size_t>(f)].point;
        out.offsets[static_cast<std::size_t>(s)] = field.regions()[static_cast<std::size_t>(r)].Phi * p +
                                                   out.offsets[static_cast<std::size_t>(r)] -
                                                   field.regions()[static_cast<std::size_t>(s)].Phi * p;
        out.parent[static_cast<std::size_t>(s)] = r;
        seen[static_cast<std::size_t>(s)] = true;
        q.push_back(s);
      }
    }
  };
  bfs(out.root);
  for (std::size_t r = 0; r < R; ++r)
    if (!seen[r]) bfs(static_cast<int>(r));

  for (std::size_t f = 0; f < field.facets().size(); ++f) {
    const auto& fc = field.facets()[f];
    const auto& A = field.regions()[static_cast<std::size_t>(fc.first)];
    const auto& B = field.regions()[static_cast<std::size_t>(fc.second)];
    const double res = (A.Phi * fc.point + out.offsets[static_cast<std::size_t>(fc.first)] - B.Phi * fc.point -
                        out.offsets[static_cast<std::size_t>(fc.second)])
                           .cwiseAbs()
                           .maxCoeff();
    if (res > out.cycle_residual) {
      out.cycle_residual = res;
      out.worst_facet = static_cast<int>(f);
    }
  }
  return out;
}

struct CoverageCheck {
  long samples = 0;
  long uncovered = 0;
  long overlapping = 0;
  Vec first_uncovered;
  bool ok() const { return uncovered == 0 && overlapping == 0; }
};

/// Samples the box: a 101-point lattice per axis in the plane, 4096 seeded
/// uniform points otherwise.
inline CoverageCheck check_coverage(const PiecewiseCalibration& field, std::uint64_t seed = 1) {
  CoverageCheck out;
  const int n = field.dim();
  auto probe = [&](const Vec& x) {
    ++out.samples;
    if (field.locate(x) < 0) {
      if (out.uncovered++ == 0) out.first_uncovered = x;
      return;
    }
    int inside = 0;
    for (std::size_t r = 0; r < field.regions().size(); ++r) inside += field.strictly_inside(static_cast<int>(r), x, 1e-9);
    if (inside > 1) ++out.overlapping;
  };
  const Vec& lo = field.box_lo();
  const Vec& hi = field.box_hi();
  if (n == 2) {
    const int k = 101;
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < k; ++i)
        probe(make_vec({lo[0] + (hi[0] - lo[0]) * i / (k - 1), lo[1] + (hi[1] - lo[1]) * j / (k - 1)}));
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int s = 0; s < 4096; ++s) {
      Vec x(n);
      for (int d = 0; d < n; ++d) x[d] = lo[d] + (hi[d] - lo[d]) * u(rng);
      probe(x);
    }
  }
  return out;
}

/// Checks (a) Φ_r ∈ ∂H(0) for every region, (b) tangential continuity across
/// facets, (c) consistent reconstruction of φ, (d) coverage of the box, and
/// finally compares 𝕄_h(F) with Σ φ(x)·θ over F₀.
inline CalibrationReport verify_calibration_field(const PiecewiseCalibration& field, const PolyChain1& F,
                                                  const PointChain0& F0, const PolyhedralNorm& h, double tol = 1e-7) {
  require_dim(field.dim(), F.dim(), "verify_calibration_field chain");
  require_dim(field.materials(), h.dim(), "verify_calibration_field materials");
  require_dim(F.materials(), h.dim(), "verify_calibration_field chain materials");
  require_dim(F0.dim(), F.dim(), "verify_calibration_field boundary");
  for (const auto& s : F.segments())
    require(field.in_box(s.a) && field.in_box(s.b), "verify_calibration_field: a segment leaves the working box");
  for (const auto& a : F0.atoms()) require(field.in_box(a.x), "verify_calibration_field: an atom lies outside the working box");

  CalibrationReport r;
  std::ostringstream msg;
  const GeneratedNorm G(h, field.dim());
  for (std::size_t k = 0; k < field.regions().size(); ++k) {
    if (!in_dH0(G, field.regions()[k].Phi)) {
      r.infeasible_regions.push_back(static_cast<int>(k));
      msg << field.regions()[k].name << " violates H_*(Φ) <= 1 (H_* = " << eval_H_dual(G, field.regions()[k].Phi)
          << "); ";
    }
  }
  for (const auto& f : field.facets()) {
    const Mat jump = (field.regions()[static_cast<std::size_t>(f.first)].Phi -
                      field.regions()[static_cast<std::size_t>(f.second)].Phi) *
                     f.tangent;
    r.continuity_residual = std::max(r.continuity_residual, jump.size() ? jump.cwiseAbs().maxCoeff() : 0.0);
  }
  const bool continuous = r.continuity_residual <= 1e-9;
  if (!continuous) msg << "tangential jump " << r.continuity_residual << " across a facet; ";

  const auto phi = reconstruct_potential(field);
  r.cycle_residual = phi.cycle_residual;
  const bool gradient = continuous && phi.cycle_residual <= 1e-9;
  if (phi.cycle_residual > 1e-9) {
    r.violating_cycle = phi.cycle_through(phi.worst_facet);
    msg << "not a gradient field: offsets disagree by " << phi.cycle_residual << " around";
    for (int k : r.violating_cycle) msg << ' ' << field.regions()[static_cast<std::size_t>(k)].name;
    msg << "; ";
  }
  const auto cov = check_coverage(field);
  if (!cov.ok()) {
    msg << "regions do not tile the box (" << cov.uncovered << " uncovered, " << cov.overlapping
        << " overlapping samples); ";
  }
  r.feasible = r.infeasible_regions.empty() && gradient && cov.ok();

  const auto mismatch = boundary(F) - F0;
  double worst = 0.0;
  for (const auto& a : mismatch.atoms()) worst = std::max(worst, a.theta.cwiseAbs().maxCoeff());
  r.boundary_ok = worst <= 1e-8;
  if (!r.boundary_ok) msg << "boundary mismatch: ∂F differs from F₀ by " << worst << "; ";

  r.primal_value = mass_Mh(h, F);
  if (cov.uncovered == 0) {
    for (const auto& a : F0.atoms()) r.dual_value += phi(a.x).dot(a.theta);
    for (const auto& s : F.segments()) {
      const Vec dphi = phi(s.b) - phi(s.a);
      r.slack.push_back(s.length() - h.dual(dphi));
      r.tightness.push_back(h(s.theta) * s.length() - s.theta.dot(dphi));
    }
  }
  detail::finish_report(r, tol);
  r.message = msg.str();
  return r;
}

// ---------------------------------------------------------------------------
// Analytics on polyhedral chains

/// Σ_out h(θ)e⃗ − Σ_in h(θ)e⃗ over segments with an endpoint at x.
inline Vec momentum_residual(const PolyChain1& F, const PolyhedralNorm& h, const Vec& x, double tol = 1e-9) {
  require_dim(x.size(), F.dim(), "momentum_residual point");
  Vec r = Vec::Zero(F.dim());
  bool found = false;
  for (const auto& s : F.segments()) {
    const Vec e = s.direction();
    if ((s.a - x).cwiseAbs().maxCoeff() <= tol) {
      r += h(s.theta) * e;
      found = true;
    } else if ((s.b - x).cwiseAbs().maxCoeff() <= tol) {
      r -= h(s.theta) * e;
      found = true;
    }
  }
  if (!found) throw InputError("momentum_residual: point is not a vertex of the chain");
  return r;
}

struct Landscape {
  std::vector<Vec> vertices;
  std::vector<double> Z;          // per vertex, Z(root) = 0
  std::vector<double> increment;  // per segment: Z(b) − Z(a)
  std::vector<double> expected;   // per segment: h(θ)L/‖θ‖₁ (the calibrated slope times length)
  int root = 0;
};

/// Z along the unique tree paths from `root`, stepping by θ·(φ(v_i) − φ(v_{i−1}))/‖θ‖₁.
/// Requires an acyclic connected support; a cycle or a second component is
/// reported by vertex positions.
inline Landscape landscape(const PolyChain1& F, const PolyhedralNorm& h, const Vec& root,
                           const std::function<Vec(const Vec&)>& phi) {
  require(!F.empty(), "landscape: empty chain");
  GeometricGraph g(F.dim());
  std::vector<std::pair<int, int>> seg_nodes;
  for (const auto& s : F.segments()) seg_nodes.emplace_back(g.add_node(s.a), g.add_node(s.b));
  const int N = g.num_nodes();
  auto where = [&](int v) {
    std::ostringstream os;
    os.precision(6);
    os << '(';
    for (Eigen::Index d = 0; d < g.node(v).size(); ++d) os << (d ? ", " : "") << g.node(v)[d];
    os << ')';
    return os.str();
  };

  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(N));
  for (std::size_t k = 0; k < seg_nodes.size(); ++k) {
    const auto [u, v] = seg_nodes[k];
    if (u == v) continue;
    adj[static_cast<std::size_t>(u)].emplace_back(v, static_cast<int>(k));
    adj[static_cast<std::size_t>(v)].emplace_back(u, static_cast<int>(k));
  }
  const auto r0 = g.find_node(root);
  if (!r0) throw InputError("landscape: root is not a vertex of the chain");

  Landscape out;
  out.root = *r0;
  out.vertices = g.nodes();
  out.Z.assign(static_cast<std::size_t>(N), 0.0);
  std::vector<int> parent(static_cast<std::size_t>(N), -2), via(static_cast<std::size_t>(N), -1);
  parent[static_cast<std::size_t>(*r0)] = -1;
  std::vector<int> stack{*r0};
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (auto [v, k] : adj[static_cast<std::size_t>(u)]) {
      if (k == via[static_cast<std::size_t>(u)]) continue;
      if (parent[static_cast<std::size_t>(v)] != -2) {
        // v already reached: u–v closes a cycle through their common ancestor
        std::vector<int> pu, pv;
        for (int x = u; x >= 0; x = parent[static_cast<std::size_t>(x)]) pu.push_back(x);
        for (int x = v; x >= 0; x = parent[static_cast<std::size_t>(x)]) pv.push_back(x);
        while (pu.size() > 1 && pv.size() > 1 && pu[pu.size() - 2] == pv[pv.size() - 2]) {
          pu.pop_back();
          pv.pop_back();
        }
        std::string cyc;
        for (int x : pu) cyc += where(x) + " -> ";
        for (auto it = pv.rbegin() + 1; it != pv.rend(); ++it) cyc += where(*it) + " -> ";
        cyc += where(u);
        throw InputError("landscape: support contains a cycle " + cyc);
      }
      parent[static_cast<std::size_t>(v)] = u;
      via[static_cast<std::size_t>(v)] = k;
      const auto& s = F.segments()[static_cast<std::size_t>(k)];
      const double l1 = s.theta.cwiseAbs().sum();
      out.Z[static_cast<std::size_t>(v)] = out.Z[static_cast<std::size_t>(u)] + s.theta.dot(phi(g.node(v)) - phi(g.node(u))) / l1;
      stack.push_back(v);
    }
  }
  for (int v = 0; v < N; ++v) {
    if (parent[static_cast<std::size_t>(v)] == -2) {
      throw InputError("landscape: support is disconnected; vertex " + where(v) + " is not reachable from the root");
    }
  }
  for (std::size_t k = 0; k < seg_nodes.size(); ++k) {
    const auto& s = F.segments()[k];
    out.increment.push_back(out.Z[static_cast<std::size_t>(seg_nodes[k].second)] - out.Z[static_cast<std::size_t>(seg_nodes[k].first)]);
    out.expected.push_back(h(s.theta) * s.length() / s.theta.cwiseAbs().sum());
  }
  return out;
}

/// Node sequence (first == last) of some cycle among `edges`, or empty.
inline std::vector<int> support_cycle(const GeometricGraph& g, const std::vector<int>& edges) {
  const auto N = static_cast<std::size_t>(g.num_nodes());
  std::vector<std::vector<std::pair<int, int>>> adj(N);
  for (int e : edges) {
    const auto [u, v] = g.edge(e);
    adj[static_cast<std::size_t>(u)].emplace_back(v, e);
    adj[static_cast<std::size_t>(v)].emplace_back(u, e);
  }
  std::vector<int> parent(N, -2), via(N, -1), depth(N, 0);
  for (std::size_t s = 0; s < N; ++s) {
    if (parent[s] != -2 || adj[s].empty()) continue;
    parent[s] = -1;
    std::vector<int> stack{static_cast<int>(s)};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (auto [v, e] : adj[static_cast<std::size_t>(u)]) {
        if (e == via[static_cast<std::size_t>(u)]) continue;
        if (parent[static_cast<std::size_t>(v)] == -2) {
          parent[static_cast<std::size_t>(v)] = u;
          via[static_cast<std::size_t>(v)] = e;
          depth[static_cast<std::size_t>(v)] = depth[static_cast<std::size_t>(u)] + 1;
          stack.push_back(v);
          continue;
        }
        // u–v closes a cycle: walk both up to the common ancestor
        std::vector<int> a{u}, b{v};
        while (a.back() != b.back()) {
          if (depth[static_cast<std::size_t>(a.back())] >= depth[static_cast<std::size_t>(b.back())])
            a.push_back(parent[static_cast<std::size_t>(a.back())]);
          else
            b.push_back(parent[static_cast<std::size_t>(b.back())]);
        }
        b.pop_back();
        a.insert(a.end(), b.rbegin(), b.rend());
        a.push_back(u);
        return a;
      }
    }
  }
  return {};
}

/// ⌊m(m+1)/(2m−2)⌋: expected degree of a generic interior junction.
inline int generic_junction_degree(int m) {
  require(m >= 2, "generic_junction_degree: needs at least two materials");
  return (m * (m + 1)) / (2 * m - 2);
}

}  // namespace mmt
