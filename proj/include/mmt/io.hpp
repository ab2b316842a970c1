#pragma once

// JSON codecs for norms and chains, and CSV helpers. Readers collect every
// schema problem with its JSON path before failing, so one run reports all
// of them.

#include "mmt/chains.hpp"
#include "mmt/core.hpp"
#include "mmt/norm.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace mmt::io {

using json = nlohmann::json;

/// 17 significant digits, enough to round-trip any double.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);  // no "-0"
  return buf;
}

inline json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json to_json(const Mat& M) {
  json a = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) a.push_back(to_json(Vec(M.row(r).transpose())));
  return a;
}

inline json to_json(const std::vector<Vec>& vs) {
  json a = json::array();
  for (const auto& v : vs) a.push_back(to_json(v));
  return a;
}

/// Path-aware reader; every accessor records a problem and returns a
/// harmless default instead of throwing.
class Reader {
 public:
  void fail(const std::string& path, const std::string& what) { errors_.push_back((path.empty() ? "/" : path) + ": " + what); }
  bool ok() const { return errors_.empty(); }
  const std::vector<std::string>& errors() const { return errors_; }

  /// Throws one InputError listing every recorded problem.
  void check(const std::string& context) const {
    if (errors_.empty()) return;
    std::string msg = context + ": invalid input";
    for (const auto& e : errors_) msg += "\n  " + e;
    throw InputError(msg);
  }

  const json* field(const json& j, const std::string& path, const std::string& key, bool required = true) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return nullptr;
    }
    const auto it = j.find(key);
    if (it == j.end()) {
      if (required) fail(path + "/" + key, "missing");
      return nullptr;
    }
    return &*it;
  }

  double number(const json& j, const std::string& path) {
    if (!j.is_number()) {
      fail(path, "expected a number");
      return 0.0;
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "not finite");
    return v;
  }

  long long integer(const json& j, const std::string& path) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) {
      fail(path, "expected an integer");
      return 0;
    }
    return j.get<long long>();
  }

  std::string string(const json& j, const std::string& path) {
    if (!j.is_string()) {
      fail(path, "expected a string");
      return {};
    }
    return j.get<std::string>();
  }

  bool boolean(const json& j, const std::string& path) {
    if (!j.is_boolean()) {
      fail(path, "expected true or false");
      return false;
    }
    return j.get<bool>();
  }

  /// Numeric array; `dim` < 0 accepts any non-empty length.
  Vec vec(const json& j, const std::string& path, long dim = -1) {
    if (!j.is_array() || j.empty()) {
      fail(path, "expected a non-empty array of numbers");
      return dim > 0 ? Vec::Zero(dim) : Vec::Zero(1);
    }
    if (dim >= 0 && static_cast<long>(j.size()) != dim) {
      fail(path, "expected " + std::to_string(dim) + " numbers, got " + std::to_string(j.size()));
      return Vec::Zero(std::max(dim, 1L));
    }
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], path + "/" + std::to_string(i));
    return v;
  }

  std::vector<Vec> vecs(const json& j, const std::string& path, long dim = -1, bool allow_empty = false) {
    std::vector<Vec> out;
    if (!j.is_array() || (!allow_empty && j.empty())) {
      fail(path, allow_empty ? "expected an array" : "expected a non-empty array");
      return out;
    }
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(vec(j[i], path + "/" + std::to_string(i), dim));
    return out;
  }

  Mat mat(const json& j, const std::string& path, long rows = -1, long cols = -1) {
    if (!j.is_array() || j.empty()) {
      fail(path, "expected a matrix as an array of rows");
      return Mat::Zero(std::max(rows, 1L), std::max(cols, 1L));
    }
    if (rows >= 0 && static_cast<long>(j.size()) != rows) {
      fail(path, "expected " + std::to_string(rows) + " rows, got " + std::to_string(j.size()));
      return Mat::Zero(rows, std::max(cols, 1L));
    }
    const long c = cols >= 0 ? cols : (j[0].is_array() ? static_cast<long>(j[0].size()) : 1);
    Mat M = Mat::Zero(static_cast<Eigen::Index>(j.size()), std::max(c, 1L));
    for (std::size_t r = 0; r < j.size(); ++r) {
      const Vec row = vec(j[r], path + "/" + std::to_string(r), c);
      if (row.size() == M.cols()) M.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return M;
  }

 private:
  std::vector<std::string> errors_;
};

// ---------------------------------------------------------------------------
// Norms

inline json norm_to_json(const PolyhedralNorm& h) {
  return json{{"m", h.dim()}, {"name", h.name()}, {"dual_vertices", to_json(h.dual_vertices())}};
}

/// A name ("linf-hex", "l1", "euclidean", ...) or {"m": .., "dual_vertices": [[..], ..]}.
inline PolyhedralNorm norm_from_json(const json& j, Reader& rd, const std::string& path, int m_default = 2) {
  if (j.is_string()) {
    try {
      return PolyhedralNorm::named(j.get<std::string>(), m_default);
    } catch (const InputError& e) {
      rd.fail(path, e.what());
      return PolyhedralNorm::l1(std::max(m_default, 1));
    }
  }
  const json* jm = rd.field(j, path, "m");
  const json* jd = rd.field(j, path, "dual_vertices");
  const int m = jm ? static_cast<int>(rd.integer(*jm, path + "/m")) : 0;
  if (m < 1 || !jd) {
    if (jm && m < 1) rd.fail(path + "/m", "must be at least 1");
    return PolyhedralNorm::l1(std::max(m_default, 1));
  }
  const auto dual = rd.vecs(*jd, path + "/dual_vertices", m);
  std::string name = "custom";
  if (const json* jn = rd.field(j, path, "name", false)) name = rd.string(*jn, path + "/name");
  if (!rd.ok()) return PolyhedralNorm::l1(m);
  try {
    return PolyhedralNorm(m, dual, name);
  } catch (const InputError& e) {
    rd.fail(path + "/dual_vertices", e.what());
    return PolyhedralNorm::l1(m);
  }
}

/// Norm argument of the command line: a known name or a JSON file.
inline PolyhedralNorm load_norm(const std::string& name_or_file, int m = 2);

// ---------------------------------------------------------------------------
// Chains

inline json chain_to_json(const PointChain0& P) {
  json atoms = json::array();
  for (const auto& a : P.atoms()) atoms.push_back({{"x", to_json(a.x)}, {"theta", to_json(a.theta)}});
  return json{{"n", P.dim()}, {"m", P.materials()}, {"atoms", atoms}};
}

inline json chain_to_json(const PolyChain1& P) {
  json segs = json::array();
  for (const auto& s : P.segments())
    segs.push_back({{"a", to_json(s.a)}, {"b", to_json(s.b)}, {"theta", to_json(s.theta)}});
  return json{{"n", P.dim()}, {"m", P.materials()}, {"segments", segs}};
}

inline json grid_to_json(const Grid& g) {
  return json{{"box", {g.x0(), g.y0(), g.x1(), g.y1()}}, {"delta", g.delta()}};
}

inline json chain_to_json(const GridChain& P) {
  json j = grid_to_json(P.grid());
  j["k"] = P.k();
  j["m"] = P.materials();
  json faces = json::array();
  for (const auto& [f, t] : P.coefficients()) faces.push_back({{"face", f}, {"theta", to_json(t)}});
  j["faces"] = faces;
  return j;
}

inline std::optional<Grid> grid_from_json(const json& j, Reader& rd, const std::string& path) {
  const json* jb = rd.field(j, path, "box");
  const json* jd = rd.field(j, path, "delta");
  if (!jb || !jd) return std::nullopt;
  const Vec box = rd.vec(*jb, path + "/box", 4);
  const double d = rd.number(*jd, path + "/delta");
  if (!rd.ok()) return std::nullopt;
  try {
    return Grid(box[0], box[1], box[2], box[3], d);
  } catch (const InputError& e) {
    rd.fail(path, e.what());
    return std::nullopt;
  }
}

/// Shape of the two dimensions, read from "n"/"m" when present or inferred
/// from the first entry.
inline std::pair<int, int> chain_dims(const json& j, Reader& rd, const std::string& path, const char* list,
                                      const char* point_key) {
  int n = -1, m = -1;
  if (const json* jn = rd.field(j, path, "n", false)) n = static_cast<int>(rd.integer(*jn, path + "/n"));
  if (const json* jm = rd.field(j, path, "m", false)) m = static_cast<int>(rd.integer(*jm, path + "/m"));
  const json* jl = rd.field(j, path, list, false);
  if (jl && jl->is_array() && !jl->empty() && (*jl)[0].is_object()) {
    const auto& first = (*jl)[0];
    if (n < 0 && first.contains(point_key) && first[point_key].is_array()) n = static_cast<int>(first[point_key].size());
    if (m < 0 && first.contains("theta") && first["theta"].is_array()) m = static_cast<int>(first["theta"].size());
  }
  return {n, m};
}

inline PointChain0 point_chain_from_json(const json& j, Reader& rd, const std::string& path) {
  auto [n, m] = chain_dims(j, rd, path, "atoms", "x");
  if (n < 1 || m < 1) {
    rd.fail(path, "cannot determine point and material dimensions (give n and m)");
    return PointChain0(1, 1);
  }
  PointChain0 out(n, m);
  const json* ja = rd.field(j, path, "atoms");
  if (!ja) return out;
  if (!ja->is_array()) {
    rd.fail(path + "/atoms", "expected an array");
    return out;
  }
  for (std::size_t i = 0; i < ja->size(); ++i) {
    const std::string p = path + "/atoms/" + std::to_string(i);
    const json* jx = rd.field((*ja)[i], p, "x");
    const json* jt = rd.field((*ja)[i], p, "theta");
    if (!jx || !jt) continue;
    const Vec x = rd.vec(*jx, p + "/x", n);
    const Vec t = rd.vec(*jt, p + "/theta", m);
    if (rd.ok()) out.add(x, t);
  }
  return out;
}

inline PolyChain1 poly_chain_from_json(const json& j, Reader& rd, const std::string& path) {
  auto [n, m] = chain_dims(j, rd, path, "segments", "a");
  if (n < 1 || m < 1) {
    rd.fail(path, "cannot determine point and material dimensions (give n and m)");
    return PolyChain1(1, 1);
  }
  PolyChain1 out(n, m);
  const json* js = rd.field(j, path, "segments");
  if (!js) return out;
  if (!js->is_array()) {
    rd.fail(path + "/segments", "expected an array");
    return out;
  }
  for (std::size_t i = 0; i < js->size(); ++i) {
    const std::string p = path + "/segments/" + std::to_string(i);
    const json* ja = rd.field((*js)[i], p, "a");
    const json* jb = rd.field((*js)[i], p, "b");
    const json* jt = rd.field((*js)[i], p, "theta");
    if (!ja || !jb || !jt) continue;
    const Vec a = rd.vec(*ja, p + "/a", n), b = rd.vec(*jb, p + "/b", n);
    const Vec t = rd.vec(*jt, p + "/theta", m);
    if (rd.ok()) out.add(a, b, t);
  }
  return out;
}

inline std::optional<GridChain> grid_chain_from_json(const json& j, Reader& rd, const std::string& path) {
  const auto grid = grid_from_json(j, rd, path);
  const json* jk = rd.field(j, path, "k");
  const json* jm = rd.field(j, path, "m");
  const json* jf = rd.field(j, path, "faces");
  if (!grid || !jk || !jm || !jf) return std::nullopt;
  const int k = static_cast<int>(rd.integer(*jk, path + "/k"));
  const int m = static_cast<int>(rd.integer(*jm, path + "/m"));
  if (k < 0 || k > 2) rd.fail(path + "/k", "must be 0, 1 or 2");
  if (m < 1) rd.fail(path + "/m", "must be at least 1");
  if (!jf->is_array()) rd.fail(path + "/faces", "expected an array");
  if (!rd.ok()) return std::nullopt;
  GridChain out(*grid, k, m);
  for (std::size_t i = 0; i < jf->size(); ++i) {
    const std::string p = path + "/faces/" + std::to_string(i);
    const json* jid = rd.field((*jf)[i], p, "face");
    const json* jt = rd.field((*jf)[i], p, "theta");
    if (!jid || !jt) continue;
    const long long id = rd.integer(*jid, p + "/face");
    const Vec t = rd.vec(*jt, p + "/theta", m);
    if (id < 0 || id >= grid->face_count(k)) {
      rd.fail(p + "/face", "face index out of range");
      continue;
    }
    if (rd.ok()) out.add(static_cast<int>(id), t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

inline json read_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw InputError("cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(file.string() + ": not valid JSON (" + e.what() + ")");
  }
}

inline void write_text(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw InputError("cannot write " + file.string());
  out << text;
}

/// Compact CSV table; numbers at 17 significant digits.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }

  std::string str() const {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return os.str();
  }
};

inline PolyhedralNorm load_norm(const std::string& name_or_file, int m) {
  if (!std::filesystem::exists(name_or_file)) return PolyhedralNorm::named(name_or_file, m);
  Reader rd;
  auto h = norm_from_json(read_json_file(name_or_file), rd, "", m);
  rd.check(name_or_file);
  return h;
}

}  // namespace mmt::io
