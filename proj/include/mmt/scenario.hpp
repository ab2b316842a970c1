#pragma once

// Scenarios: a JSON description of one task (solve, dual, calibrate,
// flatnorm, microstructure, h-eval), the built-in worked examples, and the
// runner that writes result.json, run.json and CSV tables.

#include "mmt/chains.hpp"
#include "mmt/duality.hpp"
#include "mmt/flatnorm.hpp"
#include "mmt/flow.hpp"
#include "mmt/io.hpp"
#include "mmt/norm.hpp"

#include <chrono>
#include <filesystem>
#include <random>
#include <variant>

namespace mmt {

inline constexpr const char* kArtifactVersion = "1.0.0";

struct NormSpec {
  std::string name;       // named norm when `dual` is empty
  std::vector<Vec> dual;  // explicit dual vertices
  int m = 2;
};

struct GraphSpec {
  enum class Kind { explicit_edges, complete, generator };
  Kind kind = Kind::complete;
  std::vector<Vec> nodes;                 // explicit: node positions
  std::vector<std::array<int, 2>> edges;  // explicit: node index pairs
  std::vector<Vec> points;                // complete: extra points joined with the boundary atoms
  int resolution = 8;                     // generator: lattice cells per side
  bool chords = true;
  double margin = 0.1;
};

struct CalibrationSpec {
  Vec lo, hi;
  std::vector<Region> regions;
};

struct GridSpec {
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1, delta = 0.125;
  Grid grid() const { return Grid(x0, y0, x1, y1, delta); }
};

struct MicroSpec {
  Mat matrix;
  std::vector<RankOneTerm> terms;
  std::vector<int> ks{4, 8, 16};
  Vec lo = make_vec({0, 0}), hi = make_vec({1, 1});
};

struct HEvalSpec {
  Mat matrix;
  double gap_tol = 1e-6;
  std::vector<Vec> directions;
};

using AnyChain = std::variant<PointChain0, PolyChain1, GridChain>;

struct Scenario {
  std::string name = "scenario";
  std::string description;
  std::string task = "solve";
  int n = 2;
  NormSpec norm{"linf-hex", {}, 2};
  std::optional<PointChain0> boundary;
  std::optional<GraphSpec> graph;
  std::string formulation = "gauge";
  std::optional<CalibrationSpec> calibration;
  std::optional<PolyChain1> network;
  std::vector<Vec> momentum_at;
  std::optional<Vec> landscape_root;
  std::optional<GridSpec> grid;
  std::optional<AnyChain> chain;
  std::optional<MicroSpec> microstructure;
  std::optional<HEvalSpec> h_eval;
  std::optional<std::uint64_t> seed;

  PolyhedralNorm make_norm() const {
    return norm.dual.empty() ? PolyhedralNorm::named(norm.name, norm.m)
                             : PolyhedralNorm(norm.m, norm.dual, norm.name.empty() ? "custom" : norm.name);
  }
};

inline const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names{"solve", "dual", "calibrate", "flatnorm", "microstructure", "h-eval"};
  return names;
}

// ---------------------------------------------------------------------------
// JSON form

namespace detail {

inline io::json halfspaces_to_json(const std::vector<Halfspace>& hs) {
  io::json a = io::json::array();
  for (const auto& h : hs) a.push_back({{"a", io::to_json(h.a)}, {"b", h.b}});
  return a;
}

inline io::json any_chain_to_json(const AnyChain& c) {
  return std::visit(
      [](const auto& chain) {
        io::json j = io::chain_to_json(chain);
        using T = std::decay_t<decltype(chain)>;
        j["kind"] = std::is_same_v<T, PointChain0> ? "points" : std::is_same_v<T, PolyChain1> ? "segments" : "grid";
        return j;
      },
      c);
}

}  // namespace detail

inline io::json to_json(const Scenario& s) {
  using io::json;
  json j;
  j["name"] = s.name;
  if (!s.description.empty()) j["description"] = s.description;
  j["task"] = s.task;
  j["n"] = s.n;
  if (s.norm.dual.empty()) {
    j["norm"] = s.norm.name;
    j["m"] = s.norm.m;
  } else {
    j["norm"] = json{{"m", s.norm.m}, {"dual_vertices", io::to_json(s.norm.dual)}};
    if (!s.norm.name.empty()) j["norm"]["name"] = s.norm.name;
  }
  if (s.seed) j["seed"] = *s.seed;
  if (s.boundary) j["boundary"] = io::chain_to_json(*s.boundary);
  if (s.graph) {
    const auto& g = *s.graph;
    json jg;
    switch (g.kind) {
      case GraphSpec::Kind::explicit_edges: {
        jg["nodes"] = io::to_json(g.nodes);
        json e = json::array();
        for (const auto& [u, v] : g.edges) e.push_back({u, v});
        jg["edges"] = e;
        break;
      }
      case GraphSpec::Kind::complete:
        jg["complete"] = true;
        jg["points"] = io::to_json(g.points);
        break;
      case GraphSpec::Kind::generator:
        jg["generator"] = json{{"resolution", g.resolution}, {"chords", g.chords}, {"margin", g.margin}};
        break;
    }
    j["graph"] = jg;
  }
  if (s.formulation != "gauge") j["formulation"] = s.formulation;
  if (s.calibration) {
    json regions = json::array();
    for (const auto& r : s.calibration->regions)
      regions.push_back({{"name", r.name}, {"halfspaces", detail::halfspaces_to_json(r.halfspaces)}, {"phi", io::to_json(r.Phi)}});
    j["calibration"] = json{{"box", {{"lo", io::to_json(s.calibration->lo)}, {"hi", io::to_json(s.calibration->hi)}}},
                            {"regions", regions}};
  }
  if (s.network) j["network"] = io::chain_to_json(*s.network);
  if (!s.momentum_at.empty()) j["momentum_at"] = io::to_json(s.momentum_at);
  if (s.landscape_root) j["landscape_root"] = io::to_json(*s.landscape_root);
  if (s.grid) j["grid"] = json{{"box", {s.grid->x0, s.grid->y0, s.grid->x1, s.grid->y1}}, {"delta", s.grid->delta}};
  if (s.chain) j["chain"] = detail::any_chain_to_json(*s.chain);
  if (s.microstructure) {
    const auto& ms = *s.microstructure;
    json terms = json::array();
    for (const auto& t : ms.terms) terms.push_back({{"theta", io::to_json(t.theta)}, {"direction", io::to_json(t.direction)}});
    j["microstructure"] = json{{"matrix", io::to_json(ms.matrix)},
                               {"terms", terms},
                               {"ks", ms.ks},
                               {"box", {{"lo", io::to_json(ms.lo)}, {"hi", io::to_json(ms.hi)}}}};
  }
  if (s.h_eval) {
    j["h_eval"] = json{{"matrix", io::to_json(s.h_eval->matrix)}, {"gap_tol", s.h_eval->gap_tol}};
    if (!s.h_eval->directions.empty()) j["h_eval"]["directions"] = io::to_json(s.h_eval->directions);
  }
  return j;
}

namespace detail {

inline std::pair<Vec, Vec> read_box(const io::json& j, io::Reader& rd, const std::string& path, int n) {
  const io::json* lo = rd.field(j, path, "lo");
  const io::json* hi = rd.field(j, path, "hi");
  Vec a = lo ? rd.vec(*lo, path + "/lo", n) : Vec::Zero(n);
  Vec b = hi ? rd.vec(*hi, path + "/hi", n) : Vec::Ones(n);
  return {a, b};
}

}  // namespace detail

/// Parses and validates a scenario; all schema problems are reported together.
inline Scenario scenario_from_json(const io::json& j) {
  using io::json;
  io::Reader rd;
  Scenario s;
  if (!j.is_object()) {
    rd.fail("", "scenario must be a JSON object");
    rd.check("scenario");
  }
  if (const json* x = rd.field(j, "", "name", false)) s.name = rd.string(*x, "/name");
  if (const json* x = rd.field(j, "", "description", false)) s.description = rd.string(*x, "/description");
  if (const json* x = rd.field(j, "", "task")) {
    s.task = rd.string(*x, "/task");
    if (rd.ok() && std::find(task_names().begin(), task_names().end(), s.task) == task_names().end())
      rd.fail("/task", "unknown task '" + s.task + "'");
  }
  if (const json* x = rd.field(j, "", "n", false)) s.n = static_cast<int>(rd.integer(*x, "/n"));
  if (s.n < 1) rd.fail("/n", "must be at least 1");
  if (const json* x = rd.field(j, "", "seed", false)) {
    if (x->is_number_unsigned() || (x->is_number_integer() && x->get<long long>() >= 0))
      s.seed = x->get<std::uint64_t>();
    else
      rd.fail("/seed", "expected a non-negative integer");
  }
  rd.check("scenario");
  const int n = s.n;

  int m = 2;
  if (const json* x = rd.field(j, "", "m", false)) m = static_cast<int>(rd.integer(*x, "/m"));
  if (const json* x = rd.field(j, "", "norm")) {
    if (x->is_string()) {
      s.norm = NormSpec{x->get<std::string>(), {}, m};
    } else {
      const auto h = io::norm_from_json(*x, rd, "/norm", m);
      if (rd.ok()) {
        s.norm = NormSpec{x->contains("name") ? h.name() : std::string(), {}, h.dim()};
        s.norm.dual = rd.vecs((*x)["dual_vertices"], "/norm/dual_vertices", h.dim());
      }
    }
  }
  rd.check("scenario");
  try {
    m = s.make_norm().dim();
  } catch (const InputError& e) {
    rd.fail("/norm", e.what());
    rd.check("scenario");
  }

  auto check_dims = [&](int cn, int cm, const std::string& path) {
    if (cn != n) rd.fail(path, "point dimension " + std::to_string(cn) + " differs from n = " + std::to_string(n));
    if (cm != m) rd.fail(path, "material dimension " + std::to_string(cm) + " differs from the norm's " + std::to_string(m));
  };

  if (const json* x = rd.field(j, "", "boundary", false)) {
    s.boundary = io::point_chain_from_json(*x, rd, "/boundary");
    if (rd.ok()) check_dims(s.boundary->dim(), s.boundary->materials(), "/boundary");
  }
  if (const json* x = rd.field(j, "", "graph", false)) {
    GraphSpec g;
    if (!x->is_object()) {
      rd.fail("/graph", "expected an object");
    } else if (x->contains("edges")) {
      g.kind = GraphSpec::Kind::explicit_edges;
      if (const json* jn = rd.field(*x, "/graph", "nodes")) g.nodes = rd.vecs(*jn, "/graph/nodes", n);
      const json& je = (*x)["edges"];
      if (!je.is_array()) rd.fail("/graph/edges", "expected an array of [u, v] pairs");
      for (std::size_t i = 0; je.is_array() && i < je.size(); ++i) {
        const std::string p = "/graph/edges/" + std::to_string(i);
        if (!je[i].is_array() || je[i].size() != 2) {
          rd.fail(p, "expected [u, v]");
          continue;
        }
        const auto u = rd.integer(je[i][0], p + "/0"), v = rd.integer(je[i][1], p + "/1");
        const auto N = static_cast<long long>(g.nodes.size());
        if (u < 0 || v < 0 || u >= N || v >= N) rd.fail(p, "node index out of range");
        g.edges.push_back({static_cast<int>(u), static_cast<int>(v)});
      }
    } else if (x->contains("generator")) {
      g.kind = GraphSpec::Kind::generator;
      const json& jg = (*x)["generator"];
      if (const json* y = rd.field(jg, "/graph/generator", "resolution", false))
        g.resolution = static_cast<int>(rd.integer(*y, "/graph/generator/resolution"));
      if (const json* y = rd.field(jg, "/graph/generator", "chords", false)) g.chords = rd.boolean(*y, "/graph/generator/chords");
      if (const json* y = rd.field(jg, "/graph/generator", "margin", false)) g.margin = rd.number(*y, "/graph/generator/margin");
      if (g.resolution < 0) rd.fail("/graph/generator/resolution", "must be non-negative");
    } else if (x->contains("complete")) {
      g.kind = GraphSpec::Kind::complete;
      if (!rd.boolean((*x)["complete"], "/graph/complete")) rd.fail("/graph/complete", "only 'true' is meaningful");
      if (const json* y = rd.field(*x, "/graph", "points", false)) g.points = rd.vecs(*y, "/graph/points", n, true);
    } else {
      rd.fail("/graph", "expected one of 'edges', 'generator' or 'complete'");
    }
    s.graph = g;
  }
  if (const json* x = rd.field(j, "", "formulation", false)) {
    s.formulation = rd.string(*x, "/formulation");
    if (s.formulation != "gauge" && s.formulation != "epigraph") rd.fail("/formulation", "expected 'gauge' or 'epigraph'");
  }
  if (const json* x = rd.field(j, "", "calibration", false)) {
    CalibrationSpec c;
    if (const json* jb = rd.field(*x, "/calibration", "box")) std::tie(c.lo, c.hi) = detail::read_box(*jb, rd, "/calibration/box", n);
    if (const json* jr = rd.field(*x, "/calibration", "regions")) {
      if (!jr->is_array() || jr->empty()) rd.fail("/calibration/regions", "expected a non-empty array");
      for (std::size_t i = 0; jr->is_array() && i < jr->size(); ++i) {
        const std::string p = "/calibration/regions/" + std::to_string(i);
        const json& r = (*jr)[i];
        Region reg;
        if (const json* y = rd.field(r, p, "name", false)) reg.name = rd.string(*y, p + "/name");
        if (const json* y = rd.field(r, p, "phi")) reg.Phi = rd.mat(*y, p + "/phi", m, n);
        if (const json* y = rd.field(r, p, "halfspaces", false)) {
          if (!y->is_array()) rd.fail(p + "/halfspaces", "expected an array");
          for (std::size_t k = 0; y->is_array() && k < y->size(); ++k) {
            const std::string q = p + "/halfspaces/" + std::to_string(k);
            const json* ja = rd.field((*y)[k], q, "a");
            const json* jb = rd.field((*y)[k], q, "b");
            if (ja && jb) reg.halfspaces.push_back({rd.vec(*ja, q + "/a", n), rd.number(*jb, q + "/b")});
          }
        }
        c.regions.push_back(std::move(reg));
      }
    }
    s.calibration = c;
  }
  if (const json* x = rd.field(j, "", "network", false)) {
    s.network = io::poly_chain_from_json(*x, rd, "/network");
    if (rd.ok()) check_dims(s.network->dim(), s.network->materials(), "/network");
  }
  if (const json* x = rd.field(j, "", "momentum_at", false)) s.momentum_at = rd.vecs(*x, "/momentum_at", n, true);
  if (const json* x = rd.field(j, "", "landscape_root", false)) s.landscape_root = rd.vec(*x, "/landscape_root", n);
  if (const json* x = rd.field(j, "", "grid", false)) {
    if (const auto g = io::grid_from_json(*x, rd, "/grid"))
      s.grid = GridSpec{g->x0(), g->y0(), g->x1(), g->y1(), g->delta()};
  }
  if (const json* x = rd.field(j, "", "chain", false)) {
    std::string kind;
    if (const json* y = rd.field(*x, "/chain", "kind")) kind = rd.string(*y, "/chain/kind");
    if (kind == "points") {
      auto c = io::point_chain_from_json(*x, rd, "/chain");
      if (rd.ok()) check_dims(c.dim(), c.materials(), "/chain");
      s.chain = std::move(c);
    } else if (kind == "segments") {
      auto c = io::poly_chain_from_json(*x, rd, "/chain");
      if (rd.ok()) check_dims(c.dim(), c.materials(), "/chain");
      s.chain = std::move(c);
    } else if (kind == "grid") {
      if (auto c = io::grid_chain_from_json(*x, rd, "/chain")) {
        check_dims(2, c->materials(), "/chain");
        s.chain = std::move(*c);
      }
    } else if (!kind.empty()) {
      rd.fail("/chain/kind", "expected 'points', 'segments' or 'grid'");
    }
  }
  if (const json* x = rd.field(j, "", "microstructure", false)) {
    MicroSpec ms;
    if (n != 2) rd.fail("/microstructure", "microstructures are planar (n = 2)");
    if (const json* y = rd.field(*x, "/microstructure", "matrix")) ms.matrix = rd.mat(*y, "/microstructure/matrix", m, 2);
    if (const json* y = rd.field(*x, "/microstructure", "terms")) {
      if (!y->is_array()) rd.fail("/microstructure/terms", "expected an array");
      for (std::size_t i = 0; y->is_array() && i < y->size(); ++i) {
        const std::string p = "/microstructure/terms/" + std::to_string(i);
        const json* jt = rd.field((*y)[i], p, "theta");
        const json* jd = rd.field((*y)[i], p, "direction");
        if (jt && jd) ms.terms.push_back({rd.vec(*jt, p + "/theta", m), rd.vec(*jd, p + "/direction", 2)});
      }
    }
    if (const json* y = rd.field(*x, "/microstructure", "ks", false)) {
      ms.ks.clear();
      if (!y->is_array() || y->empty()) rd.fail("/microstructure/ks", "expected a non-empty array of refinements");
      for (std::size_t i = 0; y->is_array() && i < y->size(); ++i) {
        const auto k = rd.integer((*y)[i], "/microstructure/ks/" + std::to_string(i));
        if (k < 1) rd.fail("/microstructure/ks/" + std::to_string(i), "must be at least 1");
        ms.ks.push_back(static_cast<int>(k));
      }
    }
    if (const json* y = rd.field(*x, "/microstructure", "box", false)) std::tie(ms.lo, ms.hi) = detail::read_box(*y, rd, "/microstructure/box", 2);
    s.microstructure = ms;
  }
  if (const json* x = rd.field(j, "", "h_eval", false)) {
    HEvalSpec he;
    if (const json* y = rd.field(*x, "/h_eval", "matrix")) he.matrix = rd.mat(*y, "/h_eval/matrix", m, n);
    if (const json* y = rd.field(*x, "/h_eval", "gap_tol", false)) he.gap_tol = rd.number(*y, "/h_eval/gap_tol");
    if (!(he.gap_tol > 0)) rd.fail("/h_eval/gap_tol", "must be positive");
    if (const json* y = rd.field(*x, "/h_eval", "directions", false)) he.directions = rd.vecs(*y, "/h_eval/directions", n, true);
    s.h_eval = he;
  }

  // what each task needs
  if (rd.ok()) {
    if (s.task == "solve" || s.task == "dual") {
      if (!s.boundary) rd.fail("/boundary", "required by task " + s.task);
      if (!s.graph) rd.fail("/graph", "required by task " + s.task);
    } else if (s.task == "calibrate") {
      if (!s.calibration) rd.fail("/calibration", "required by task calibrate");
      if (!s.network) rd.fail("/network", "required by task calibrate");
    } else if (s.task == "flatnorm") {
      if (!s.chain) rd.fail("/chain", "required by task flatnorm");
      if (s.chain && !std::holds_alternative<GridChain>(*s.chain) && !s.grid) rd.fail("/grid", "required to rasterize a free chain");
      if (n != 2) rd.fail("/n", "flat norms are computed on planar grids (n = 2)");
    } else if (s.task == "microstructure") {
      if (!s.microstructure) rd.fail("/microstructure", "required by task microstructure");
    } else if (s.task == "h-eval") {
      if (!s.h_eval) rd.fail("/h_eval", "required by task h-eval");
    }
  }
  rd.check("scenario");
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& file) {
  try {
    return scenario_from_json(io::read_json_file(file));
  } catch (const InputError& e) {
    throw InputError(file.string() + ": " + e.what());
  }
}

/// FNV-1a (64 bit) of the canonical JSON text.
inline std::uint64_t scenario_hash(const Scenario& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_json(s).dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Built-in examples

namespace builtin {

inline Vec v2(double a, double b) { return make_vec({a, b}); }

inline std::vector<Vec> hex_bundles() { return {v2(1, 1), v2(1, 0), v2(0, 1), v2(-1, 1)}; }

/// Two sources and two sinks of different materials; `crossed` swaps the sinks.
inline Scenario two_sources(bool crossed) {
  const double s3 = std::sqrt(3.0);
  const Vec e1 = v2(1, 0), e2 = v2(0.5, s3 / 2), e3 = v2(0.5, -s3 / 2);
  const Vec pm2 = e1 + e2, pm3 = e1 + e3;
  const auto th = hex_bundles();
  Scenario s;
  s.name = crossed ? "two-sources-crossed" : "two-sources";
  s.description = crossed ? "two materials, sinks swapped; optimal network and discontinuous four-region calibration"
                          : "two materials from two sources to two sinks; constant calibration";
  s.task = "solve";
  s.norm = NormSpec{"linf-hex", {}, 2};
  PointChain0 f(2, 2);
  f.add(pm2, th[1]);
  f.add(pm3, th[2]);
  f.add(crossed ? Vec(-pm3) : Vec(-pm2), -th[1]);
  f.add(crossed ? Vec(-pm2) : Vec(-pm3), -th[2]);
  s.boundary = f;
  GraphSpec g;
  g.kind = GraphSpec::Kind::complete;
  g.points = {e1, Vec(-e1)};
  s.graph = g;
  CalibrationSpec c{v2(-2, -2), v2(2, 2), {}};
  if (!crossed) {
    c.regions.push_back({"constant", {}, 0.5 * make_mat({{1, s3}, {1, -s3}})});
  } else {
    c.regions = {
        {"A+", {{v2(-1, s3), 0}, {v2(-1, -s3), 0}}, 0.5 * make_mat({{1, s3}, {1, -s3}})},
        {"A-", {{v2(1, s3), 0}, {v2(1, -s3), 0}}, 0.5 * make_mat({{1, -s3}, {1, s3}})},
        {"B+", {{v2(1, -s3), 0}, {v2(-1, -s3), 0}}, make_mat({{1, 0}, {0, 0}})},
        {"B-", {{v2(1, s3), 0}, {v2(-1, s3), 0}}, make_mat({{0, 0}, {1, 0}})},
    };
  }
  s.calibration = c;
  if (!crossed) {
    s.momentum_at = {e1, Vec(-e1)};
    s.landscape_root = Vec(-pm2);
  }
  return s;
}

inline Scenario cycle() {
  const double s3 = std::sqrt(3.0);
  const auto th = hex_bundles();
  Scenario s;
  s.name = "cycle";
  s.description = "two materials whose optimal network contains a transport cycle";
  s.task = "solve";
  s.norm = NormSpec{"linf-hex", {}, 2};
  PointChain0 f(2, 2);
  f.add(v2(0, -1), th[3]);
  f.add(v2(0, 1), -th[3]);
  f.add(v2(1, 0), th[0]);
  f.add(v2(-1, 0), -th[0]);
  s.boundary = f;
  GraphSpec g;
  g.kind = GraphSpec::Kind::complete;
  g.points = {v2(-1 / s3, 0), v2(1 / s3, 0)};
  s.graph = g;
  s.calibration = CalibrationSpec{v2(-2, -2), v2(2, 2), {{"constant", {}, 0.5 * make_mat({{1, s3}, {1, -s3}})}}};
  s.momentum_at = g.points;
  s.landscape_root = v2(-1, 0);
  return s;
}

/// Degree-k junction at the origin: unit directions e_i in the first
/// quadrant, weights a with Σ a_i e_i = 0 (random vector projected onto that
/// null space), bundles θ_i = |a_i| e_i, arm lengths l_i ∈ [0.5, 2].
struct StarData {
  std::vector<Vec> directions;
  Vec a;
  std::vector<double> lengths;
};

inline StarData star_data(int k, std::uint64_t seed) {
  require(k >= 3, "star-junction: degree must be at least 3");
  require(k <= 12, "star-junction: degree above 12 is not supported");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi / 2);
  std::uniform_real_distribution<double> len(0.5, 2.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  StarData d;
  const double min_sep = 0.5 * (std::numbers::pi / 2) / k;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<double> t;
    for (int i = 0; i < k; ++i) t.push_back(angle(rng));
    std::sort(t.begin(), t.end());
    bool ok = true;
    for (int i = 1; i < k; ++i) ok = ok && t[static_cast<std::size_t>(i)] - t[static_cast<std::size_t>(i - 1)] >= min_sep;
    if (!ok) continue;
    d.directions.clear();
    for (double x : t) d.directions.push_back(v2(std::cos(x), std::sin(x)));
    break;
  }
  require(static_cast<int>(d.directions.size()) == k, "star-junction: could not place directions");
  Mat E(2, k);
  for (int i = 0; i < k; ++i) E.col(i) = d.directions[static_cast<std::size_t>(i)];
  const Mat P = Mat::Identity(k, k) - E.transpose() * (E * E.transpose()).inverse() * E;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Vec r(k);
    for (int i = 0; i < k; ++i) r[i] = gauss(rng);
    Vec a = P * r;
    a /= a.cwiseAbs().maxCoeff();
    if (a.cwiseAbs().minCoeff() >= 0.05) {
      d.a = a;
      break;
    }
  }
  require(d.a.size() == k, "star-junction: could not draw weights");
  for (int i = 0; i < k; ++i) d.lengths.push_back(len(rng));
  return d;
}

inline Scenario star_junction(int k, std::uint64_t seed) {
  const auto d = star_data(k, seed);
  Scenario s;
  s.name = "star-junction:" + std::to_string(k) + ":" + std::to_string(seed);
  s.description = "degree-" + std::to_string(k) + " junction at the origin calibrated by the identity field";
  s.task = "solve";
  s.seed = seed;
  std::vector<Vec> primal;
  for (const auto& e : d.directions) {
    primal.push_back(e);
    primal.push_back(-e);
  }
  const auto h = PolyhedralNorm::from_primal_vertices(2, primal, "star");
  s.norm = NormSpec{"star", h.dual_vertices(), 2};
  PointChain0 f(2, 2);
  GraphSpec g;
  g.kind = GraphSpec::Kind::explicit_edges;
  g.nodes.push_back(v2(0, 0));
  for (int i = 0; i < k; ++i) {
    const Vec& e = d.directions[static_cast<std::size_t>(i)];
    const double ai = d.a[i];
    const Vec x = (ai > 0 ? 1.0 : -1.0) * d.lengths[static_cast<std::size_t>(i)] * e;
    f.add(x, (ai > 0 ? 1.0 : -1.0) * std::abs(ai) * e);
    g.nodes.push_back(x);
  }
  for (int i = 1; i <= k; ++i) g.edges.push_back({0, i});
  for (int i = 1; i <= k; ++i)
    for (int j = i + 1; j <= k; ++j) g.edges.push_back({i, j});
  s.boundary = f;
  s.graph = g;
  s.calibration = CalibrationSpec{v2(-2.5, -2.5), v2(2.5, 2.5), {{"identity", {}, Mat::Identity(2, 2)}}};
  s.momentum_at = {v2(0, 0)};
  s.landscape_root = v2(0, 0);
  return s;
}

inline std::vector<RankOneTerm> identity_decomposition() {
  const double s3 = std::sqrt(3.0), c = 1.0 / (2 * std::sqrt(2.0));
  return {{std::sqrt(2.0 / 3.0) * v2(1, 0), c * v2(1 + s3, 1 - s3)},
          {std::sqrt(2.0 / 3.0) * v2(0, 1), c * v2(1 - s3, 1 + s3)},
          {(s3 - 1) / std::sqrt(6.0) * v2(1, 1), v2(1, 1) / std::sqrt(2.0)}};
}

inline Scenario homogenization() {
  Scenario s;
  s.name = "homogenization";
  s.description = "rank-one microstructures converging to the diffuse identity flux";
  s.task = "microstructure";
  s.norm = NormSpec{"linf-hex", {}, 2};
  s.microstructure = MicroSpec{Mat::Identity(2, 2), identity_decomposition(), {4, 8, 16}, v2(0, 0), v2(1, 1)};
  return s;
}

inline Scenario hexnorm_H() {
  Scenario s;
  s.name = "hexnorm-H";
  s.description = "generated matrix norm of the identity for the hexagonal bundle norm";
  s.task = "h-eval";
  s.norm = NormSpec{"linf-hex", {}, 2};
  HEvalSpec he;
  he.matrix = Mat::Identity(2, 2);
  for (const auto& t : identity_decomposition()) he.directions.push_back(t.direction);
  s.h_eval = he;
  return s;
}

}  // namespace builtin

struct ExampleInfo {
  std::string name;
  std::string description;
};

inline std::vector<ExampleInfo> list_examples() {
  return {
      {"two-sources", "two materials, two sources, two sinks; cost 6 with a constant calibration"},
      {"two-sources-crossed", "same terminals with swapped sinks; cost 6 with a four-region calibration"},
      {"cycle", "optimal network containing a cycle; cost 2+2*sqrt(3)"},
      {"star-junction[:k[:seed]]", "junction of degree k (default 5, seed 1) calibrated by the identity"},
      {"homogenization", "microstructures of rank-one flows approximating the identity flux"},
      {"hexnorm-H", "bracket for the generated norm of the identity matrix"},
  };
}

inline Scenario example(const std::string& name) {
  if (name == "two-sources") return builtin::two_sources(false);
  if (name == "two-sources-crossed") return builtin::two_sources(true);
  if (name == "cycle") return builtin::cycle();
  if (name == "homogenization") return builtin::homogenization();
  if (name == "hexnorm-H") return builtin::hexnorm_H();
  if (name.rfind("star-junction", 0) == 0) {
    int k = 5;
    std::uint64_t seed = 1;
    const std::string rest = name.substr(std::string("star-junction").size());
    if (!rest.empty()) {
      unsigned long long sd = 1;
      char tail = 0;
      const int got = std::sscanf(rest.c_str(), ":%d:%llu%c", &k, &sd, &tail);
      if (got < 1 || got > 2) throw InputError("example: expected star-junction[:k[:seed]], got '" + name + "'");
      seed = sd;
    }
    return builtin::star_junction(k, seed);
  }
  throw InputError("unknown example '" + name + "' (see 'mmt list')");
}

// ---------------------------------------------------------------------------
// Running

struct RunOutput {
  io::json result;
  std::map<std::string, std::string> files;  // file name -> contents (CSV)
  bool numerical_failure = false;
};

struct RunRecord {
  std::string hash;
  std::string status;
  std::string task;
  std::vector<std::string> outputs;
  double parse_ms = 0.0, solve_ms = 0.0, write_ms = 0.0;
  io::json to_json() const {
    return io::json{{"scenario_hash", hash},
                    {"artifact_version", kArtifactVersion},
                    {"task", task},
                    {"status", status},
                    {"outputs", outputs},
                    {"timings_ms", {{"parse", parse_ms}, {"solve", solve_ms}, {"write", write_ms}}}};
  }
};

namespace detail {

inline io::json report_to_json(const CalibrationReport& r) {
  io::json j{{"verdict", to_string(r.verdict)},
             {"feasible", r.feasible},
             {"boundary_ok", r.boundary_ok},
             {"primal_value", r.primal_value},
             {"dual_value", r.dual_value},
             {"gap", r.gap},
             {"continuity_residual", r.continuity_residual},
             {"cycle_residual", r.cycle_residual},
             {"min_slack", r.slack.empty() ? 0.0 : *std::min_element(r.slack.begin(), r.slack.end())},
             {"max_tightness_residual", r.tightness.empty() ? 0.0 : *std::max_element(r.tightness.begin(), r.tightness.end())},
             {"message", r.message}};
  if (!r.infeasible_regions.empty()) j["infeasible_regions"] = r.infeasible_regions;
  if (!r.violating_cycle.empty()) j["violating_cycle"] = r.violating_cycle;
  return j;
}

inline GeometricGraph build_graph(const Scenario& s) {
  const auto& spec = *s.graph;
  switch (spec.kind) {
    case GraphSpec::Kind::explicit_edges: {
      GeometricGraph g(s.n);
      for (const auto& x : spec.nodes) g.add_node(x);
      require(g.num_nodes() == static_cast<int>(spec.nodes.size()), "graph: two nodes coincide");
      for (const auto& [u, v] : spec.edges) g.add_edge(u, v);
      return g;
    }
    case GraphSpec::Kind::complete: {
      GeometricGraph g(s.n);
      for (const auto& a : s.boundary->atoms()) g.add_node(a.x);
      for (const auto& x : spec.points) g.add_node(x);
      for (int a = 0; a < g.num_nodes(); ++a)
        for (int b = a + 1; b < g.num_nodes(); ++b) g.add_edge(a, b);
      return g;
    }
    case GraphSpec::Kind::generator: {
      std::vector<Vec> terminals;
      for (const auto& a : s.boundary->atoms()) terminals.push_back(a.x);
      return candidate_graph(terminals, spec.resolution, spec.chords, spec.margin);
    }
  }
  return GeometricGraph(s.n);
}

inline std::string point_str(const Vec& x) {
  std::string out = "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) out += (i ? ", " : "") + io::num(x[i]);
  return out + ")";
}

/// Momentum residuals and landscape of a network, with any potential.
inline void network_analytics(const Scenario& s, const PolyChain1& F, const PolyhedralNorm& h,
                              const std::function<Vec(const Vec&)>& phi, io::json& out) {
  if (!s.momentum_at.empty()) {
    io::json mom = io::json::array();
    for (const auto& x : s.momentum_at) {
      try {
        const Vec r = momentum_residual(F, h, x);
        mom.push_back({{"at", io::to_json(x)}, {"residual", io::to_json(r)}, {"norm", r.norm()}});
      } catch (const InputError& e) {
        mom.push_back({{"at", io::to_json(x)}, {"error", e.what()}});
      }
    }
    out["momentum"] = mom;
  }
  if (s.landscape_root && phi) {
    try {
      const auto L = landscape(F, h, *s.landscape_root, phi);
      double dev = 0.0;
      for (std::size_t k = 0; k < L.increment.size(); ++k) dev = std::max(dev, std::abs(L.increment[k] - L.expected[k]));
      io::json verts = io::json::array();
      for (std::size_t v = 0; v < L.vertices.size(); ++v) verts.push_back({{"x", io::to_json(L.vertices[v])}, {"Z", L.Z[v]}});
      out["landscape"] = {{"vertices", verts}, {"max_slope_deviation", dev}};
    } catch (const InputError& e) {
      out["landscape"] = {{"refused", e.what()}};
    }
  }
}

inline void run_flow(const Scenario& s, RunOutput& out) {
  const auto h = s.make_norm();
  const FlowProblem p{build_graph(s), *s.boundary, h};
  FlowOptions opt;
  opt.formulation = s.formulation == "epigraph" ? FlowFormulation::epigraph : FlowFormulation::gauge;
  const auto sol = solve_flow(p, opt);
  const auto& g = p.graph;
  const int m = h.dim();

  io::json support = io::json::array();
  io::CsvTable edges;
  edges.header = {"edge", "x0", "y0", "x1", "y1", "length", "cost"};
  for (int a = 0; a < m; ++a) edges.header.push_back("theta" + std::to_string(a + 1));
  for (int e : sol.support) {
    const auto [u, v] = g.edge(e);
    support.push_back({{"edge", e},
                       {"from", io::to_json(g.node(u))},
                       {"to", io::to_json(g.node(v))},
                       {"length", g.length(e)},
                       {"theta", io::to_json(sol.theta[static_cast<std::size_t>(e)])}});
    std::vector<std::string> row{std::to_string(e)};
    for (const Vec* x : {&g.node(u), &g.node(v)})
      for (Eigen::Index d = 0; d < std::min<Eigen::Index>(x->size(), 2); ++d) row.push_back(io::num((*x)[d]));
    while (row.size() < 5) row.push_back("0");
    row.push_back(io::num(g.length(e)));
    row.push_back(io::num(h(sol.theta[static_cast<std::size_t>(e)]) * g.length(e)));
    for (int a = 0; a < m; ++a) row.push_back(io::num(sol.theta[static_cast<std::size_t>(e)][a]));
    edges.add(std::move(row));
  }
  const auto cyc = support_cycle(g, sol.support);
  io::json cycle_pts = io::json::array();
  for (int v : cyc) cycle_pts.push_back(io::to_json(g.node(v)));

  out.result["flow"] = {{"status", lp::to_string(sol.status)},
                        {"cost", sol.cost},
                        {"lp_objective", sol.lp_objective},
                        {"dual_value", sol.dual_value},
                        {"duality_gap", sol.duality_gap()},
                        {"primal_residual", sol.primal_residual},
                        {"nodes", g.num_nodes()},
                        {"edges", g.num_edges()},
                        {"support", support},
                        {"support_has_cycle", !cyc.empty()},
                        {"cycle", cycle_pts},
                        {"potentials", io::to_json(sol.potentials)}};
  out.files["edges.csv"] = edges.str();

  const auto graph_cert = verify_calibration_graph(p, sol);
  out.result["graph_certificate"] = report_to_json(graph_cert);

  io::CsvTable slack;
  slack.header = {"edge", "u", "v", "length", "dual_norm", "slack"};
  const auto pc = check_potential(g, sol.potentials, h);
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edge(e);
    slack.add({std::to_string(e), std::to_string(u), std::to_string(v), io::num(g.length(e)),
               io::num(g.length(e) - pc.slack[static_cast<std::size_t>(e)]), io::num(pc.slack[static_cast<std::size_t>(e)])});
  }
  if (s.task == "dual") out.files["slack.csv"] = slack.str();
  out.result["dual"] = {{"min_slack", pc.min_slack}, {"feasible", pc.feasible}};

  const auto F = flow_to_polychain(g, sol);
  std::function<Vec(const Vec&)> phi = [&](const Vec& x) -> Vec {
    const auto k = g.find_node(x);
    if (!k) throw InputError("potential requested off the graph");
    return sol.potentials[static_cast<std::size_t>(*k)];
  };
  std::optional<PiecewiseCalibration> field;
  std::optional<ReconstructedPotential> fphi;
  if (s.calibration) {
    field.emplace(s.calibration->lo, s.calibration->hi, s.calibration->regions);
    const auto rep = verify_calibration_field(*field, F, *s.boundary, h);
    out.result["field_certificate"] = report_to_json(rep);
    fphi = reconstruct_potential(*field);
    if (check_coverage(*field).uncovered == 0) phi = [&](const Vec& x) -> Vec { return (*fphi)(x); };
  }
  network_analytics(s, F, h, phi, out.result);
  if (!sol.optimal()) out.numerical_failure = true;
}

inline void run_calibrate(const Scenario& s, RunOutput& out) {
  const auto h = s.make_norm();
  const PiecewiseCalibration field(s.calibration->lo, s.calibration->hi, s.calibration->regions);
  const PointChain0 F0 = s.boundary ? *s.boundary : boundary(*s.network);
  const auto rep = verify_calibration_field(field, *s.network, F0, h);
  out.result["field_certificate"] = report_to_json(rep);
  out.result["network_mass"] = mass_Mh(h, *s.network);
  io::json facets = io::json::array();
  for (const auto& f : field.facets())
    facets.push_back({{"regions", {f.first, f.second}}, {"point", io::to_json(f.point)}, {"inradius", f.inradius}});
  out.result["facets"] = facets;
  const auto phi = reconstruct_potential(field);
  std::function<Vec(const Vec&)> pot;
  if (check_coverage(field).uncovered == 0) pot = [&](const Vec& x) -> Vec { return phi(x); };
  network_analytics(s, *s.network, h, pot, out.result);
}

inline io::json grid_chain_faces(const GridChain& c) {
  io::json a = io::json::array();
  for (const auto& [f, t] : c.coefficients()) a.push_back({{"face", f}, {"theta", io::to_json(t)}});
  return a;
}

inline GridChain to_grid_chain(const AnyChain& c, const std::optional<GridSpec>& spec) {
  if (const auto* gc = std::get_if<GridChain>(&c)) return *gc;
  const Grid grid = spec->grid();
  if (const auto* pc = std::get_if<PolyChain1>(&c)) return rasterize(*pc, grid);
  const auto& pts = std::get<PointChain0>(c);
  GridChain out(grid, 0, pts.materials());
  for (std::size_t i = 0; i < pts.atoms().size(); ++i) {
    const auto& a = pts.atoms()[i];
    if (!grid.contains(a.x)) throw InputError("flatnorm: atom #" + std::to_string(i) + " lies outside the grid box");
    const auto [gi, gj] = grid.snap(a.x);
    out.add(grid.vertex(gi, gj), a.theta);
  }
  return out;
}

inline void run_flatnorm(const Scenario& s, RunOutput& out) {
  const auto h = s.make_norm();
  const GridChain P = to_grid_chain(*s.chain, s.grid);
  const auto r = grid_flat_norm(P, h);
  out.result["flatnorm"] = {{"value", r.value},
                            {"lp_value", r.lp_value},
                            {"mass", mass_Mh(h, P)},
                            {"remainder_mass", r.remainder_mass},
                            {"filling_mass", r.filling_mass},
                            {"k", P.k()},
                            {"grid", io::grid_to_json(P.grid())},
                            {"remainder", grid_chain_faces(r.remainder)},
                            {"filling", grid_chain_faces(r.filling)}};
  io::CsvTable t;
  t.header = {"part", "dimension", "face"};
  for (int a = 0; a < h.dim(); ++a) t.header.push_back("theta" + std::to_string(a + 1));
  auto rows = [&](const std::string& part, const GridChain& c) {
    for (const auto& [f, th] : c.coefficients()) {
      std::vector<std::string> row{part, std::to_string(c.k()), std::to_string(f)};
      for (int a = 0; a < h.dim(); ++a) row.push_back(io::num(th[a]));
      t.add(std::move(row));
    }
  };
  rows("input", P);
  rows("remainder", r.remainder);
  rows("filling", r.filling);
  out.files["flatnorm.csv"] = t.str();
}

inline void run_microstructure(const Scenario& s, RunOutput& out) {
  const auto h = s.make_norm();
  const auto& ms = *s.microstructure;
  const auto st = relaxation_study(h, ms.matrix, ms.terms, ms.ks, default_form_battery(h.dim()), ms.lo, ms.hi);
  io::json rows = io::json::array();
  io::CsvTable t;
  t.header = {"k", "mass", "max_pairing_error", "segments"};
  for (const auto& r : st.rows) {
    rows.push_back({{"k", r.k}, {"mass", r.mass}, {"max_pairing_error", r.max_pairing_error}, {"segments", r.segments}});
    t.add({std::to_string(r.k), io::num(r.mass), io::num(r.max_pairing_error), std::to_string(r.segments)});
  }
  out.result["study"] = {{"rows", rows},
                         {"expected_mass", st.expected_mass},
                         {"masses_constant", st.masses_constant},
                         {"errors_decreasing", st.errors_decreasing}};
  out.files["study.csv"] = t.str();

  // segment table of the coarsest microstructure, one family per term
  io::CsvTable seg;
  seg.header = {"term", "x0", "y0", "x1", "y1"};
  for (int a = 0; a < h.dim(); ++a) seg.header.push_back("theta" + std::to_string(a + 1));
  const int k = *std::min_element(ms.ks.begin(), ms.ks.end());
  for (std::size_t i = 0; i < ms.terms.size(); ++i) {
    if (ms.terms[i].theta.cwiseAbs().maxCoeff() == 0.0) continue;
    const auto P = microstructure_chain({ms.terms[i]}, k, ms.lo, ms.hi);
    for (const auto& sg : P.segments()) {
      std::vector<std::string> row{std::to_string(i + 1), io::num(sg.a[0]), io::num(sg.a[1]), io::num(sg.b[0]), io::num(sg.b[1])};
      for (int a = 0; a < h.dim(); ++a) row.push_back(io::num(sg.theta[a]));
      seg.add(std::move(row));
    }
  }
  out.files["microstructure.csv"] = seg.str();
}

inline void run_h_eval(const Scenario& s, RunOutput& out) {
  const auto h = s.make_norm();
  const auto& he = *s.h_eval;
  GeneratedNorm G(h, s.n);
  if (!he.directions.empty()) G = G.with_directions(he.directions);
  const auto I = eval_H(G, he.matrix, he.gap_tol);
  io::json terms = io::json::array();
  for (const auto& t : I.decomposition) terms.push_back({{"theta", io::to_json(t.theta)}, {"direction", io::to_json(t.direction)}});
  out.result["h_eval"] = {{"lower", I.lower},
                          {"upper", I.upper},
                          {"gap", I.gap()},
                          {"converged", I.converged},
                          {"rounds", I.rounds},
                          {"directions_used", I.directions_used},
                          {"dual_norm", eval_H_dual(G, he.matrix)},
                          {"decomposition", terms},
                          {"certificate", io::to_json(I.certificate)}};
  if (!I.converged) out.numerical_failure = true;
}

}  // namespace detail

/// Evaluates a scenario in memory. Deterministic: identical scenarios give
/// identical results (timings are kept out of the result).
inline RunOutput evaluate(const Scenario& s) {
  RunOutput out;
  out.result["scenario"] = s.name;
  out.result["task"] = s.task;
  out.result["artifact_version"] = kArtifactVersion;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(scenario_hash(s)));
  out.result["scenario_hash"] = hash;
  if (s.task == "solve" || s.task == "dual") {
    detail::run_flow(s, out);
  } else if (s.task == "calibrate") {
    detail::run_calibrate(s, out);
  } else if (s.task == "flatnorm") {
    detail::run_flatnorm(s, out);
  } else if (s.task == "microstructure") {
    detail::run_microstructure(s, out);
  } else if (s.task == "h-eval") {
    detail::run_h_eval(s, out);
  } else {
    throw InputError("unknown task '" + s.task + "'");
  }
  out.result["status"] = out.numerical_failure ? "numerical-failure" : "ok";
  return out;
}

/// Result JSON with every double printed at 17 significant digits.
inline std::string dump_result(const io::json& j) {
  // nlohmann prints the shortest round-trip form; re-emit numbers at %.17g
  std::string out;
  std::function<void(const io::json&, int)> emit = [&](const io::json& v, int indent) {
    const std::string pad(static_cast<std::size_t>(indent), ' ');
    const std::string pad2(static_cast<std::size_t>(indent + 2), ' ');
    if (v.is_object()) {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad2 + io::json(it.key()).dump() + ": ";
        emit(it.value(), indent + 2);
      }
      out += "\n" + pad + "}";
    } else if (v.is_array()) {
      const bool flat = std::all_of(v.begin(), v.end(), [](const io::json& e) { return e.is_primitive(); });
      if (v.empty()) {
        out += "[]";
      } else if (flat) {
        out += "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) out += ", ";
          emit(v[i], indent);
        }
        out += "]";
      } else {
        out += "[\n";
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) out += ",\n";
          out += pad2;
          emit(v[i], indent + 2);
        }
        out += "\n" + pad + "]";
      }
    } else if (v.is_number_float()) {
      const double d = v.get<double>();
      out += std::isfinite(d) ? io::num(d) : "null";
    } else {
      out += v.dump();
    }
  };
  emit(j, 0);
  return out + "\n";
}

/// Evaluates and writes result.json, run.json and CSV tables into `dir`.
inline RunRecord run(const Scenario& s, const std::filesystem::path& dir, double parse_ms = 0.0) {
  using clock = std::chrono::steady_clock;
  RunRecord rec;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(scenario_hash(s)));
  rec.hash = hash;
  rec.task = s.task;
  rec.parse_ms = parse_ms;
  const auto t0 = clock::now();
  const auto out = evaluate(s);
  const auto t1 = clock::now();
  rec.solve_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  io::write_text(dir / "scenario.json", dump_result(to_json(s)));
  io::write_text(dir / "result.json", dump_result(out.result));
  rec.outputs = {"scenario.json", "result.json"};
  for (const auto& [name, text] : out.files) {
    io::write_text(dir / name, text);
    rec.outputs.push_back(name);
  }
  rec.status = out.numerical_failure ? "numerical-failure" : "ok";
  rec.write_ms = std::chrono::duration<double, std::milli>(clock::now() - t1).count();
  io::write_text(dir / "run.json", rec.to_json().dump(2) + "\n");
  log(LogLevel::info, "wrote " + std::to_string(rec.outputs.size() + 1) + " files to " + dir.string());
  return rec;
}

}  // namespace mmt
