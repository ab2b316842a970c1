#pragma once

// Discrete multi-material transport: min Σ_e h(θ_e)·L_e over edge bundles θ_e
// on a candidate graph subject to ∂F = F₀, together with the node potentials
// φ (equality duals) that certify optimality.
//
// Orientation: an edge (u → v) carrying θ contributes θδ_v − θδ_u to ∂F.
// Dual feasibility per edge is h_*(φ_v − φ_u) <= L_e and strong duality reads
// Σ_v φ_v·F₀(v) = cost.

#include "mmt/chains.hpp"
#include "mmt/core.hpp"
#include "mmt/lp.hpp"
#include "mmt/norm.hpp"

#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

namespace mmt {

/// Nodes in ℝⁿ and straight edges between them. Edge lengths are derived
/// from positions.
class GeometricGraph {
 public:
  explicit GeometricGraph(int n) : n_(n) { require(n >= 1, "graph: dimension must be positive"); }

  /// Index of an existing node within `tol`, else a new node.
  int add_node(const Vec& x, double tol = 1e-9) {
    require_dim(x.size(), n_, "graph node");
    require(x.allFinite(), "graph: non-finite node position");
    if (auto k = find_node(x, tol)) return *k;
    nodes_.push_back(x);
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::optional<int> find_node(const Vec& x, double tol = 1e-9) const {
    if (x.size() != n_) return std::nullopt;
    for (std::size_t k = 0; k < nodes_.size(); ++k)
      if ((nodes_[k] - x).cwiseAbs().maxCoeff() <= tol) return static_cast<int>(k);
    return std::nullopt;
  }

  /// Adds u → v unless the unordered pair is already present (returns that edge).
  int add_edge(int u, int v) {
    require(u >= 0 && v >= 0 && u < num_nodes() && v < num_nodes(), "graph: edge endpoint out of range");
    require(u != v, "graph: self-loop at node " + std::to_string(u));
    const double L = (nodes_[static_cast<std::size_t>(v)] - nodes_[static_cast<std::size_t>(u)]).norm();
    require(L > 1e-12, "graph: zero-length edge between nodes " + std::to_string(u) + " and " + std::to_string(v));
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto [a, b] = edges_[e];
      if ((a == u && b == v) || (a == v && b == u)) return static_cast<int>(e);
    }
    edges_.emplace_back(u, v);
    lengths_.push_back(L);
    return static_cast<int>(edges_.size()) - 1;
  }

  int dim() const { return n_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const Vec& node(int k) const { return nodes_[static_cast<std::size_t>(k)]; }
  const std::vector<Vec>& nodes() const { return nodes_; }
  const std::pair<int, int>& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  double length(int e) const { return lengths_[static_cast<std::size_t>(e)]; }

  /// Connected component label per node (labels ordered by lowest member).
  std::vector<int> components() const {
    std::vector<int> parent(nodes_.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[static_cast<std::size_t>(x)] != x) {
        parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        x = parent[static_cast<std::size_t>(x)];
      }
      return x;
    };
    for (auto [u, v] : edges_) {
      const int a = find(u), b = find(v);
      if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
    std::vector<int> label(nodes_.size(), -1);
    int next = 0;
    std::vector<int> root_label(nodes_.size(), -1);
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      const int r = find(static_cast<int>(k));
      if (root_label[static_cast<std::size_t>(r)] < 0) root_label[static_cast<std::size_t>(r)] = next++;
      label[k] = root_label[static_cast<std::size_t>(r)];
    }
    return label;
  }

 private:
  int n_;
  std::vector<Vec> nodes_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<double> lengths_;
};

struct FlowProblem {
  GeometricGraph graph;
  PointChain0 boundary;
  PolyhedralNorm h;
};

/// Boundary data that cannot be routed: some atom's component carries a
/// non-zero net weight.
class InfeasibleFlowError : public InputError {
 public:
  InfeasibleFlowError(const std::string& what, int atom) : InputError(what), atom_(atom) {}
  int atom() const { return atom_; }

 private:
  int atom_;
};

struct FlowSolution {
  lp::Status status = lp::Status::numerical_failure;
  std::vector<Vec> theta;       // per edge, reference orientation
  std::vector<Vec> potentials;  // per node; lowest node of each component anchored at 0
  std::vector<int> support;     // edges with max|θ_e| >= prune threshold
  double cost = 0.0;            // Σ h(θ_e) L_e
  double lp_objective = 0.0;
  double dual_value = 0.0;      // Σ φ_v · F₀(v)
  double primal_residual = 0.0;
  std::string message;

  bool optimal() const { return status == lp::Status::optimal; }
  double duality_gap() const { return std::abs(cost - dual_value); }
};

enum class FlowFormulation {
  gauge,     // θ_e = Σ_j μ_ej v_j, μ >= 0, cost Σ L_e μ_ej: rows = nodes·m
  epigraph,  // θ_e free, t_e >= g_k·θ_e, cost Σ L_e t_e: adds |∂h(0)| rows per edge
};

struct FlowOptions {
  FlowFormulation formulation = FlowFormulation::gauge;
  double prune = 1e-10;
  lp::Options lp;
};

namespace detail {

/// Node index of every boundary atom; throws if one is not a graph node.
inline std::vector<int> atom_nodes(const FlowProblem& p) {
  require_dim(p.boundary.dim(), p.graph.dim(), "flow problem boundary");
  require_dim(p.boundary.materials(), p.h.dim(), "flow problem boundary weights");
  std::vector<int> out;
  for (std::size_t j = 0; j < p.boundary.atoms().size(); ++j) {
    const auto k = p.graph.find_node(p.boundary.atoms()[j].x);
    if (!k) throw InputError("flow problem: boundary atom #" + std::to_string(j) + " is not on a graph node");
    out.push_back(*k);
  }
  return out;
}

/// F₀ as a nodes × m table.
inline Mat node_boundary(const FlowProblem& p, const std::vector<int>& nodes_of_atoms) {
  Mat B = Mat::Zero(p.graph.num_nodes(), p.h.dim());
  for (std::size_t j = 0; j < nodes_of_atoms.size(); ++j)
    B.row(nodes_of_atoms[j]) += p.boundary.atoms()[j].theta.transpose();
  return B;
}

inline void check_routable(const FlowProblem& p, const std::vector<int>& nodes_of_atoms, const Mat& B) {
  require(p.boundary.is_admissible(1e-9), "flow problem: boundary weights do not sum to zero");
  const auto comp = p.graph.components();
  const int nc = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
  Mat net = Mat::Zero(nc, p.h.dim());
  for (int v = 0; v < p.graph.num_nodes(); ++v) net.row(comp[static_cast<std::size_t>(v)]) += B.row(v);
  for (std::size_t j = 0; j < nodes_of_atoms.size(); ++j) {
    const int c = comp[static_cast<std::size_t>(nodes_of_atoms[j])];
    if (net.row(c).cwiseAbs().maxCoeff() > 1e-9) {
      std::ostringstream os;
      os << "flow problem infeasible: boundary atom #" << j << " at (" << p.boundary.atoms()[j].x.transpose()
         << ") cannot be balanced within its connected component";
      throw InfeasibleFlowError(os.str(), static_cast<int>(j));
    }
  }
}

}  // namespace detail

/// The LP in epigraph form: variables (θ_e ∈ ℝᵐ, t_e) per edge, objective
/// Σ L_e t_e, rows g_k·θ_e − t_e <= 0 and incidence·θ = F₀ per node and
/// material. Equality row of (node v, material a) is v·m + a.
inline lp::LinearProgram assemble_flow_lp(const FlowProblem& p) {
  const auto nodes_of_atoms = detail::atom_nodes(p);
  const Mat B = detail::node_boundary(p, nodes_of_atoms);
  const int m = p.h.dim();
  const int E = p.graph.num_edges();
  lp::LpBuilder b;
  for (int e = 0; e < E; ++e) {
    for (int a = 0; a < m; ++a) b.add_variable(0.0);
    b.add_variable(p.graph.length(e));
  }
  auto theta_var = [m](int e, int a) { return e * (m + 1) + a; };
  for (int e = 0; e < E; ++e) {
    for (const auto& g : p.h.dual_vertices()) {
      lp::LpBuilder::Terms row;
      for (int a = 0; a < m; ++a)
        if (g[a] != 0.0) row.emplace_back(theta_var(e, a), g[a]);
      row.emplace_back(e * (m + 1) + m, -1.0);
      b.add_inequality(row, 0.0);
    }
  }
  std::vector<lp::LpBuilder::Terms> rows(static_cast<std::size_t>(p.graph.num_nodes() * m));
  for (int e = 0; e < E; ++e) {
    const auto [u, v] = p.graph.edge(e);
    for (int a = 0; a < m; ++a) {
      rows[static_cast<std::size_t>(v * m + a)].emplace_back(theta_var(e, a), 1.0);
      rows[static_cast<std::size_t>(u * m + a)].emplace_back(theta_var(e, a), -1.0);
    }
  }
  for (int v = 0; v < p.graph.num_nodes(); ++v)
    for (int a = 0; a < m; ++a) b.add_equality(rows[static_cast<std::size_t>(v * m + a)], B(v, a));
  return b.build();
}

/// Same problem in gauge form: h(θ) = min{Σ μ_j : θ = Σ μ_j v_j, μ >= 0} over
/// primal unit-ball vertices v_j. Variable (e, j) is e·|V| + j.
inline lp::LinearProgram assemble_flow_lp_gauge(const FlowProblem& p) {
  const auto nodes_of_atoms = detail::atom_nodes(p);
  const Mat B = detail::node_boundary(p, nodes_of_atoms);
  const int m = p.h.dim();
  const auto& V = p.h.primal_vertices();
  lp::LpBuilder b;
  std::vector<lp::LpBuilder::Terms> rows(static_cast<std::size_t>(p.graph.num_nodes() * m));
  for (int e = 0; e < p.graph.num_edges(); ++e) {
    const auto [u, v] = p.graph.edge(e);
    for (const auto& vj : V) {
      const int var = b.add_variable(p.graph.length(e), 0.0);
      for (int a = 0; a < m; ++a) {
        if (vj[a] == 0.0) continue;
        rows[static_cast<std::size_t>(v * m + a)].emplace_back(var, vj[a]);
        rows[static_cast<std::size_t>(u * m + a)].emplace_back(var, -vj[a]);
      }
    }
  }
  for (int v = 0; v < p.graph.num_nodes(); ++v)
    for (int a = 0; a < m; ++a) b.add_equality(rows[static_cast<std::size_t>(v * m + a)], B(v, a));
  return b.build();
}

/// Node-wise signed sums Σ θ_e(δ_v − δ_u) under reference orientations.
inline PointChain0 divergence(const GeometricGraph& g, const std::vector<Vec>& theta) {
  require(theta.size() == static_cast<std::size_t>(g.num_edges()), "divergence: one bundle per edge expected");
  const int m = theta.empty() ? 1 : static_cast<int>(theta.front().size());
  PointChain0 out(g.dim(), m);
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edge(e);
    out.add(g.node(v), theta[static_cast<std::size_t>(e)]);
    out.add(g.node(u), -theta[static_cast<std::size_t>(e)]);
  }
  return out;
}

inline FlowSolution solve_flow(const FlowProblem& p, const FlowOptions& opt = {}) {
  const auto nodes_of_atoms = detail::atom_nodes(p);
  const Mat B = detail::node_boundary(p, nodes_of_atoms);
  detail::check_routable(p, nodes_of_atoms, B);
  const int m = p.h.dim();
  const int N = p.graph.num_nodes();
  const int E = p.graph.num_edges();

  const bool gauge = opt.formulation == FlowFormulation::gauge;
  const auto lp_problem = gauge ? assemble_flow_lp_gauge(p) : assemble_flow_lp(p);
  const auto sol = lp::solve_lp(lp_problem, opt.lp);

  FlowSolution out;
  out.status = sol.status;
  out.message = sol.message;
  if (!sol.optimal()) {
    if (sol.status == lp::Status::numerical_failure) throw NumericalError("solve_flow: " + sol.message);
    return out;  // unreachable after check_routable for sane input, kept for completeness
  }
  out.lp_objective = sol.objective;
  out.theta.assign(static_cast<std::size_t>(E), Vec::Zero(m));
  const auto& V = p.h.primal_vertices();
  for (int e = 0; e < E; ++e) {
    Vec& t = out.theta[static_cast<std::size_t>(e)];
    if (gauge) {
      for (std::size_t j = 0; j < V.size(); ++j) t += sol.x[static_cast<Eigen::Index>(e * static_cast<int>(V.size()) + static_cast<int>(j))] * V[j];
    } else {
      t = sol.x.segment(e * (m + 1), m);
    }
    if (t.cwiseAbs().maxCoeff() < opt.prune) {
      t.setZero();
    } else {
      out.support.push_back(e);
    }
    out.cost += p.h(t) * p.graph.length(e);
  }

  // potentials: equality duals, shifted so each component's lowest node is 0
  out.potentials.assign(static_cast<std::size_t>(N), Vec::Zero(m));
  for (int v = 0; v < N; ++v) out.potentials[static_cast<std::size_t>(v)] = sol.y.segment(v * m, m);
  const auto comp = p.graph.components();
  std::vector<int> anchor;
  for (int v = 0; v < N; ++v) {
    const auto c = static_cast<std::size_t>(comp[static_cast<std::size_t>(v)]);
    if (anchor.size() <= c) anchor.resize(c + 1, -1);
    if (anchor[c] < 0) anchor[c] = v;
  }
  std::vector<Vec> shift(anchor.size());
  for (std::size_t c = 0; c < anchor.size(); ++c) shift[c] = out.potentials[static_cast<std::size_t>(anchor[c])];
  for (int v = 0; v < N; ++v) out.potentials[static_cast<std::size_t>(v)] -= shift[static_cast<std::size_t>(comp[static_cast<std::size_t>(v)])];

  for (int v = 0; v < N; ++v) out.dual_value += out.potentials[static_cast<std::size_t>(v)].dot(B.row(v).transpose());
  const auto div = divergence(p.graph, out.theta);
  Mat D = Mat::Zero(N, m);
  for (const auto& a : div.atoms()) D.row(*p.graph.find_node(a.x, 1e-12)) += a.theta.transpose();
  out.primal_residual = (D - B).cwiseAbs().maxCoeff();
  log(LogLevel::info, "solve_flow: " + std::to_string(E) + " edges, cost " + std::to_string(out.cost) + ", " +
                          std::to_string(sol.iterations) + " simplex iterations");
  return out;
}

/// Non-zero edges as segments in reference orientation.
inline PolyChain1 flow_to_polychain(const GeometricGraph& g, const FlowSolution& sol, double prune = 1e-10) {
  const int m = sol.theta.empty() ? 1 : static_cast<int>(sol.theta.front().size());
  PolyChain1 out(g.dim(), m);
  for (int e = 0; e < g.num_edges(); ++e) {
    const Vec& t = sol.theta[static_cast<std::size_t>(e)];
    if (t.cwiseAbs().maxCoeff() < prune) continue;
    const auto [u, v] = g.edge(e);
    out.add(g.node(u), g.node(v), t);
  }
  return out;
}

struct SubadditivityReport {
  double cost_a = 0.0;
  double cost_b = 0.0;
  double cost_sum = 0.0;  // cost of F₀ᵃ + F₀ᵇ
  bool holds = false;     // cost_sum <= cost_a + cost_b + 1e-7
  double discount() const { return cost_a + cost_b - cost_sum; }
};

/// Merging discount: solves F₀ᵃ, F₀ᵇ and their sum on the same graph.
inline SubadditivityReport subadditivity_probe(const GeometricGraph& g, const PolyhedralNorm& h, const PointChain0& a,
                                               const PointChain0& b) {
  SubadditivityReport r;
  r.cost_a = solve_flow({g, a, h}).cost;
  r.cost_b = solve_flow({g, b, h}).cost;
  r.cost_sum = solve_flow({g, a + b, h}).cost;
  r.holds = r.cost_sum <= r.cost_a + r.cost_b + 1e-7;
  return r;
}

/// Candidate graph: terminals, a square lattice of `resolution` cells per
/// side over the terminals' bounding box (enlarged by `margin`) with
/// 8-neighbour edges, each terminal joined to lattice nodes within 1.5
/// spacings, and optionally all terminal–terminal chords.
inline GeometricGraph candidate_graph(const std::vector<Vec>& terminals, int resolution, bool chords,
                                      double margin = 0.1) {
  require(!terminals.empty(), "candidate graph: no terminals");
  require(resolution >= 0, "candidate graph: negative lattice resolution");
  const auto n = static_cast<int>(terminals.front().size());
  GeometricGraph g(n);
  std::vector<int> term;
  for (const auto& t : terminals) term.push_back(g.add_node(t));
  if (resolution > 0) {
    require(n == 2, "candidate graph: lattice generator is planar");
    Vec lo = terminals.front(), hi = terminals.front();
    for (const auto& t : terminals) {
      lo = lo.cwiseMin(t);
      hi = hi.cwiseMax(t);
    }
    const double side = std::max((hi - lo).maxCoeff(), 1e-6) * (1.0 + 2.0 * margin);
    const Vec center = 0.5 * (lo + hi);
    const double s = side / resolution;
    const Vec origin = center - Vec::Constant(2, side / 2);
    std::vector<int> id(static_cast<std::size_t>((resolution + 1) * (resolution + 1)));
    for (int j = 0; j <= resolution; ++j)
      for (int i = 0; i <= resolution; ++i)
        id[static_cast<std::size_t>(j * (resolution + 1) + i)] = g.add_node(origin + make_vec({i * s, j * s}));
    auto at = [&](int i, int j) { return id[static_cast<std::size_t>(j * (resolution + 1) + i)]; };
    for (int j = 0; j <= resolution; ++j) {
      for (int i = 0; i <= resolution; ++i) {
        if (i < resolution) g.add_edge(at(i, j), at(i + 1, j));
        if (j < resolution) g.add_edge(at(i, j), at(i, j + 1));
        if (i < resolution && j < resolution) {
          g.add_edge(at(i, j), at(i + 1, j + 1));
          g.add_edge(at(i + 1, j), at(i, j + 1));
        }
      }
    }
    for (int t : term) {
      for (int j = 0; j <= resolution; ++j) {
        for (int i = 0; i <= resolution; ++i) {
          const int k = at(i, j);
          if (k != t && (g.node(k) - g.node(t)).norm() <= 1.5 * s) g.add_edge(t, k);
        }
      }
    }
  }
  if (chords) {
    for (std::size_t a = 0; a < term.size(); ++a)
      for (std::size_t b = a + 1; b < term.size(); ++b)
        if (term[a] != term[b]) g.add_edge(term[a], term[b]);
  }
  return g;
}

}  // namespace mmt
