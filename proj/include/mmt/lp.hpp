#pragma once

// Dense revised simplex for desk-scale linear programs.
//
//   minimize    cᵀx
//   subject to  A x  = b
//               G x <= d
//               lower <= x <= upper      (default: free)
//
// The program is brought to standard form (x >= 0, equality rows only),
// solved with a two-phase primal revised simplex and mapped back. The basis
// is held as a dense LU factorization with product-form eta updates that is
// rebuilt every `refactor_every` pivots.
//
// Dual convention: y is free (one per equality row), lambda >= 0 (one per
// inequality row), and at optimality
//   c = Aᵀy - Gᵀlambda + r,   cᵀx = bᵀy - dᵀlambda + (bound terms of r).

#include "mmt/core.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

namespace mmt::lp {

enum class Status { optimal, infeasible, unbounded, numerical_failure };

inline std::string to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

struct LinearProgram {
  Vec c;
  SpMat A;
  Vec b;
  SpMat G;
  Vec d;
  Vec lower;  // empty: all variables unbounded below
  Vec upper;  // empty: all variables unbounded above

  Eigen::Index num_vars() const { return c.size(); }
  double lower_bound(Eigen::Index j) const { return lower.size() == 0 ? -kInf : lower[j]; }
  double upper_bound(Eigen::Index j) const { return upper.size() == 0 ? kInf : upper[j]; }

  void validate() const {
    const auto n = num_vars();
    require(A.cols() == n || (A.rows() == 0), "lp: equality block has wrong column count");
    require(G.cols() == n || (G.rows() == 0), "lp: inequality block has wrong column count");
    require(A.rows() == b.size(), "lp: equality rhs size mismatch");
    require(G.rows() == d.size(), "lp: inequality rhs size mismatch");
    require(lower.size() == 0 || lower.size() == n, "lp: lower bound size mismatch");
    require(upper.size() == 0 || upper.size() == n, "lp: upper bound size mismatch");
    require(c.allFinite() && b.allFinite() && d.allFinite(), "lp: non-finite objective or rhs");
    for (const SpMat* m : {&A, &G}) {
      for (int k = 0; k < m->outerSize(); ++k) {
        for (SpMat::InnerIterator it(*m, k); it; ++it) {
          require(std::isfinite(it.value()), "lp: non-finite constraint coefficient");
        }
      }
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      require(!std::isnan(lower_bound(j)) && !std::isnan(upper_bound(j)), "lp: NaN bound");
      require(lower_bound(j) <= upper_bound(j), "lp: empty variable range for x" + std::to_string(j));
      require(lower_bound(j) < kInf && upper_bound(j) > -kInf, "lp: infinite bound on wrong side");
    }
  }
};

/// Incremental row-wise assembly of a LinearProgram.
class LpBuilder {
 public:
  using Terms = std::vector<std::pair<int, double>>;

  int add_variable(double cost, double lo = -kInf, double hi = kInf) {
    cost_.push_back(cost);
    lo_.push_back(lo);
    hi_.push_back(hi);
    return static_cast<int>(cost_.size()) - 1;
  }

  int add_equality(const Terms& terms, double rhs) {
    const int row = static_cast<int>(b_.size());
    for (auto [j, v] : terms) eq_.emplace_back(row, j, v);
    b_.push_back(rhs);
    return row;
  }

  int add_inequality(const Terms& terms, double rhs) {
    const int row = static_cast<int>(d_.size());
    for (auto [j, v] : terms) in_.emplace_back(row, j, v);
    d_.push_back(rhs);
    return row;
  }

  int num_vars() const { return static_cast<int>(cost_.size()); }

  LinearProgram build() const {
    const auto n = static_cast<Eigen::Index>(cost_.size());
    LinearProgram lp;
    lp.c = Eigen::Map<const Vec>(cost_.data(), n);
    lp.b = Eigen::Map<const Vec>(b_.data(), static_cast<Eigen::Index>(b_.size()));
    lp.d = Eigen::Map<const Vec>(d_.data(), static_cast<Eigen::Index>(d_.size()));
    lp.A.resize(lp.b.size(), n);
    lp.A.setFromTriplets(eq_.begin(), eq_.end());
    lp.G.resize(lp.d.size(), n);
    lp.G.setFromTriplets(in_.begin(), in_.end());
    const bool any_lo = std::any_of(lo_.begin(), lo_.end(), [](double v) { return v > -kInf; });
    const bool any_hi = std::any_of(hi_.begin(), hi_.end(), [](double v) { return v < kInf; });
    if (any_lo) lp.lower = Eigen::Map<const Vec>(lo_.data(), n);
    if (any_hi) lp.upper = Eigen::Map<const Vec>(hi_.data(), n);
    return lp;
  }

 private:
  std::vector<double> cost_, lo_, hi_, b_, d_;
  std::vector<Triplet> eq_, in_;
};

struct Options {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_every = 64;
  int bland_after_per_row = 50;  // Dantzig pricing for 50·rows iterations, then Bland
  long max_iterations = 0;       // 0: automatic
};

struct LpSolution {
  Status status = Status::numerical_failure;
  Vec x;
  double objective = 0.0;
  Vec y;              // equality duals
  Vec lambda;         // inequality duals, >= 0
  Vec reduced_costs;  // c - Aᵀy + Gᵀlambda
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity_residual = 0.0;
  long iterations = 0;
  std::vector<std::pair<int, int>> pivot_trace;  // (entering, leaving) standard-form columns
  std::string message;

  bool optimal() const { return status == Status::optimal; }
  double duality_gap() const { return std::abs(objective - dual_objective); }
};

namespace detail {

struct VarMap {
  enum class Kind { shifted, negated, split } kind = Kind::split;
  int col = -1;
  int col2 = -1;
  double offset = 0.0;
};

struct StandardForm {
  SpMat A;
  Vec b;
  Vec c;
  double c0 = 0.0;
  std::vector<VarMap> vars;
  int neq = 0;
  int nin = 0;
  int nub = 0;
};

inline StandardForm to_standard(const LinearProgram& lp) {
  StandardForm sf;
  const auto n = lp.num_vars();
  sf.vars.resize(static_cast<std::size_t>(n));
  std::vector<int> ub_vars;
  int cols = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    auto& vm = sf.vars[static_cast<std::size_t>(j)];
    const double lo = lp.lower_bound(j);
    const double hi = lp.upper_bound(j);
    if (lo > -kInf) {
      vm.kind = VarMap::Kind::shifted;
      vm.col = cols++;
      vm.offset = lo;
      if (hi < kInf) ub_vars.push_back(static_cast<int>(j));
    } else if (hi < kInf) {
      vm.kind = VarMap::Kind::negated;
      vm.col = cols++;
      vm.offset = hi;
    } else {
      vm.kind = VarMap::Kind::split;
      vm.col = cols++;
      vm.col2 = cols++;
    }
  }
  sf.neq = static_cast<int>(lp.A.rows());
  sf.nin = static_cast<int>(lp.G.rows());
  sf.nub = static_cast<int>(ub_vars.size());
  const int rows = sf.neq + sf.nin + sf.nub;
  const int slack0 = cols;
  cols += sf.nin + sf.nub;

  sf.b = Vec::Zero(rows);
  sf.c = Vec::Zero(cols);
  std::vector<Triplet> trip;

  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& vm = sf.vars[static_cast<std::size_t>(j)];
    const double cj = lp.c[j];
    switch (vm.kind) {
      case VarMap::Kind::shifted: sf.c[vm.col] = cj; sf.c0 += cj * vm.offset; break;
      case VarMap::Kind::negated: sf.c[vm.col] = -cj; sf.c0 += cj * vm.offset; break;
      case VarMap::Kind::split: sf.c[vm.col] = cj; sf.c[vm.col2] = -cj; break;
    }
  }

  auto emit = [&](const SpMat& M, const Vec& rhs, int row0) {
    for (Eigen::Index i = 0; i < rhs.size(); ++i) sf.b[row0 + i] = rhs[i];
    for (int k = 0; k < M.outerSize(); ++k) {
      for (SpMat::InnerIterator it(M, k); it; ++it) {
        const int row = row0 + static_cast<int>(it.row());
        const auto& vm = sf.vars[static_cast<std::size_t>(it.col())];
        const double v = it.value();
        switch (vm.kind) {
          case VarMap::Kind::shifted:
            trip.emplace_back(row, vm.col, v);
            sf.b[row] -= v * vm.offset;
            break;
          case VarMap::Kind::negated:
            trip.emplace_back(row, vm.col, -v);
            sf.b[row] -= v * vm.offset;
            break;
          case VarMap::Kind::split:
            trip.emplace_back(row, vm.col, v);
            trip.emplace_back(row, vm.col2, -v);
            break;
        }
      }
    }
  };
  emit(lp.A, lp.b, 0);
  emit(lp.G, lp.d, sf.neq);
  for (int i = 0; i < sf.nin; ++i) trip.emplace_back(sf.neq + i, slack0 + i, 1.0);
  for (int u = 0; u < sf.nub; ++u) {
    const int j = ub_vars[static_cast<std::size_t>(u)];
    const int row = sf.neq + sf.nin + u;
    trip.emplace_back(row, sf.vars[static_cast<std::size_t>(j)].col, 1.0);
    trip.emplace_back(row, slack0 + sf.nin + u, 1.0);
    sf.b[row] = lp.upper_bound(j) - lp.lower_bound(j);
  }
  sf.A.resize(rows, cols);
  sf.A.setFromTriplets(trip.begin(), trip.end());
  sf.A.makeCompressed();
  return sf;
}

struct SimplexOutcome {
  Status status = Status::numerical_failure;
  Vec x;  // standard-form primal
  Vec y;  // standard-form equality duals
  long iterations = 0;
  std::vector<std::pair<int, int>> trace;
  std::string message;
};

/// Two-phase primal revised simplex on  min cᵀx, Ax = b, x >= 0.
class RevisedSimplex {
 public:
  RevisedSimplex(const SpMat& A, const Vec& b, const Vec& c, const Options& opt)
      : A_(A), c_(c), opt_(opt), rows_(static_cast<int>(A.rows())), ncols_(static_cast<int>(A.cols())) {
    sign_ = Vec::Ones(rows_);
    for (int i = 0; i < rows_; ++i) {
      if (b[i] < 0) sign_[i] = -1.0;
    }
    b_ = sign_.cwiseProduct(b);
    position_.assign(static_cast<std::size_t>(ncols_ + rows_), -1);
  }

  SimplexOutcome solve() {
    SimplexOutcome out;
    try {
      run(out);
    } catch (const NumericalError& e) {
      out.status = Status::numerical_failure;
      out.message = e.what();
    }
    out.iterations = iterations_;
    out.trace = std::move(trace_);
    return out;
  }

 private:
  struct Eta {
    int row;
    Vec alpha;
  };

  const SpMat& A_;
  Vec c_;
  Options opt_;
  int rows_;
  int ncols_;
  Vec sign_;
  Vec b_;
  std::vector<int> basis_;
  std::vector<int> position_;
  Vec xb_;
  Eigen::PartialPivLU<Mat> lu_;
  std::vector<Eta> etas_;
  std::vector<std::pair<int, int>> trace_;
  long iterations_ = 0;

  bool artificial(int j) const { return j >= ncols_; }

  Vec column(int j) const {
    Vec col = Vec::Zero(rows_);
    if (artificial(j)) {
      col[j - ncols_] = 1.0;
    } else {
      for (SpMat::InnerIterator it(A_, j); it; ++it) col[it.row()] = sign_[it.row()] * it.value();
    }
    return col;
  }

  void refactor() {
    etas_.clear();
    if (rows_ == 0) return;
    Mat B(rows_, rows_);
    for (int i = 0; i < rows_; ++i) B.col(i) = column(basis_[static_cast<std::size_t>(i)]);
    lu_.compute(B);
    const double rc = lu_.rcond();
    if (!(rc > 1e-14)) throw NumericalError("simplex: basis matrix is numerically singular");
    xb_ = lu_.solve(b_);
  }

  Vec ftran(const Vec& v) const {
    Vec x = lu_.solve(v);
    for (const auto& e : etas_) {
      const double xr = x[e.row] / e.alpha[e.row];
      x -= xr * e.alpha;
      x[e.row] = xr;
    }
    return x;
  }

  Vec btran(Vec w) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      const double ar = it->alpha[it->row];
      const double dot = it->alpha.dot(w) - ar * w[it->row];
      w[it->row] = (w[it->row] - dot) / ar;
    }
    return lu_.transpose().solve(w);
  }

  double cost_of(int j, bool phase_one) const {
    if (artificial(j)) return phase_one ? 1.0 : 0.0;
    return phase_one ? 0.0 : c_[j];
  }

  Vec duals(bool phase_one) const {
    Vec cb(rows_);
    for (int i = 0; i < rows_; ++i) cb[i] = cost_of(basis_[static_cast<std::size_t>(i)], phase_one);
    return btran(cb);
  }

  void pivot(int q, int r, const Vec& alpha, double step) {
    xb_ -= step * alpha;
    xb_[r] = step;
    const int leaving = basis_[static_cast<std::size_t>(r)];
    position_[static_cast<std::size_t>(leaving)] = -1;
    position_[static_cast<std::size_t>(q)] = r;
    basis_[static_cast<std::size_t>(r)] = q;
    trace_.emplace_back(q, leaving);
    etas_.push_back({r, alpha});
    if (static_cast<int>(etas_.size()) >= opt_.refactor_every) refactor();
  }

  Status iterate(bool phase_one, long& budget) {
    const long bland_after = static_cast<long>(opt_.bland_after_per_row) * std::max(rows_, 1);
    long local = 0;
    while (true) {
      if (budget-- <= 0) throw NumericalError("simplex: iteration limit reached");
      const bool bland = local >= bland_after;
      const Vec y = duals(phase_one);
      const Vec sy = sign_.cwiseProduct(y);
      const Vec ay = A_.transpose() * sy;

      int q = -1;
      double best = -opt_.optimality_tol;
      for (int j = 0; j < ncols_; ++j) {
        if (position_[static_cast<std::size_t>(j)] >= 0) continue;
        const double dj = cost_of(j, phase_one) - ay[j];
        if (dj < best) {
          q = j;
          if (bland) break;
          best = dj;
        }
      }
      if (q < 0) return Status::optimal;

      const Vec alpha = ftran(column(q));
      double min_ratio = kInf;
      for (int i = 0; i < rows_; ++i) {
        const double a = alpha[i];
        const bool art = artificial(basis_[static_cast<std::size_t>(i)]);
        double ratio;
        if (art && !phase_one) {
          if (std::abs(a) <= opt_.pivot_tol) continue;
          ratio = 0.0;
        } else {
          if (a <= opt_.pivot_tol) continue;
          ratio = std::max(xb_[i], 0.0) / a;
        }
        min_ratio = std::min(min_ratio, ratio);
      }
      if (min_ratio == kInf) return Status::unbounded;

      const double tie = min_ratio + 1e-12 * (1.0 + min_ratio);
      int r = -1;
      for (int i = 0; i < rows_; ++i) {
        const double a = alpha[i];
        const int bi = basis_[static_cast<std::size_t>(i)];
        const bool art = artificial(bi);
        double ratio;
        if (art && !phase_one) {
          if (std::abs(a) <= opt_.pivot_tol) continue;
          ratio = 0.0;
        } else {
          if (a <= opt_.pivot_tol) continue;
          ratio = std::max(xb_[i], 0.0) / a;
        }
        if (ratio > tie) continue;
        if (r < 0) {
          r = i;
        } else if (bland) {
          if (bi < basis_[static_cast<std::size_t>(r)]) r = i;
        } else if (std::abs(a) > std::abs(alpha[r])) {
          r = i;
        }
      }
      const double step = artificial(basis_[static_cast<std::size_t>(r)]) && !phase_one
                              ? 0.0
                              : std::max(xb_[r], 0.0) / alpha[r];
      pivot(q, r, alpha, step);
      ++iterations_;
      ++local;
    }
  }

  void run(SimplexOutcome& out) {
    long budget = opt_.max_iterations > 0 ? opt_.max_iterations : 20L * (rows_ + ncols_) + 10000;

    // Crash basis: unit structural columns where available, artificials elsewhere.
    std::vector<int> cover(static_cast<std::size_t>(rows_), -1);
    for (int j = 0; j < ncols_; ++j) {
      if (A_.col(j).nonZeros() != 1) continue;
      SpMat::InnerIterator it(A_, j);
      const int row = static_cast<int>(it.row());
      if (sign_[row] * it.value() == 1.0 && cover[static_cast<std::size_t>(row)] < 0) {
        cover[static_cast<std::size_t>(row)] = j;
      }
    }
    basis_.resize(static_cast<std::size_t>(rows_));
    bool need_phase_one = false;
    for (int i = 0; i < rows_; ++i) {
      const int j = cover[static_cast<std::size_t>(i)] >= 0 ? cover[static_cast<std::size_t>(i)] : ncols_ + i;
      need_phase_one |= artificial(j);
      basis_[static_cast<std::size_t>(i)] = j;
      position_[static_cast<std::size_t>(j)] = i;
    }
    refactor();

    if (need_phase_one) {
      const Status s1 = iterate(true, budget);
      if (s1 != Status::optimal) throw NumericalError("simplex: phase one did not terminate optimally");
      refactor();
      double infeas = 0.0;
      for (int i = 0; i < rows_; ++i) {
        if (artificial(basis_[static_cast<std::size_t>(i)])) infeas += std::max(xb_[i], 0.0);
      }
      const double scale = 1.0 + (rows_ > 0 ? b_.cwiseAbs().maxCoeff() : 0.0);
      if (infeas > opt_.feasibility_tol * scale) {
        out.status = Status::infeasible;
        out.message = "phase one optimum " + std::to_string(infeas) + " > 0";
        return;
      }
      drive_out_artificials();
    }

    const Status s2 = iterate(false, budget);
    if (s2 == Status::unbounded) {
      out.status = Status::unbounded;
      out.message = "objective unbounded below";
      return;
    }
    refactor();
    out.status = Status::optimal;
    out.x = Vec::Zero(ncols_);
    for (int i = 0; i < rows_; ++i) {
      const int j = basis_[static_cast<std::size_t>(i)];
      if (!artificial(j)) out.x[j] = std::max(xb_[i], 0.0);
    }
    out.y = rows_ > 0 ? Vec(sign_.cwiseProduct(duals(false))) : Vec();
  }

  void drive_out_artificials() {
    for (int r = 0; r < rows_; ++r) {
      if (!artificial(basis_[static_cast<std::size_t>(r)])) continue;
      Vec er = Vec::Zero(rows_);
      er[r] = 1.0;
      const Vec rho = sign_.cwiseProduct(btran(er));
      const Vec row = A_.transpose() * rho;
      int q = -1;
      double best = 1e-7;
      for (int j = 0; j < ncols_; ++j) {
        if (position_[static_cast<std::size_t>(j)] >= 0) continue;
        if (std::abs(row[j]) > best) {
          best = std::abs(row[j]);
          q = j;
        }
      }
      if (q < 0) continue;  // redundant row: the artificial stays basic at zero
      const Vec alpha = ftran(column(q));
      pivot(q, r, alpha, xb_[r] / alpha[r]);
      ++iterations_;
    }
  }
};

}  // namespace detail

inline LpSolution solve_lp(const LinearProgram& lp, const Options& opt = {}) {
  lp.validate();
  const auto sf = detail::to_standard(lp);
  LpSolution sol;
  detail::SimplexOutcome core;
  if (sf.A.rows() == 0) {
    core.status = Status::optimal;
    core.x = Vec::Zero(sf.A.cols());
    for (Eigen::Index j = 0; j < sf.c.size(); ++j) {
      if (sf.c[j] < 0) core.status = Status::unbounded;
    }
    core.y = Vec();
  } else {
    detail::RevisedSimplex simplex(sf.A, sf.b, sf.c, opt);
    core = simplex.solve();
  }
  sol.status = core.status;
  sol.iterations = core.iterations;
  sol.pivot_trace = std::move(core.trace);
  sol.message = core.message;
  if (sol.status != Status::optimal) return sol;

  const auto n = lp.num_vars();
  sol.x.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& vm = sf.vars[static_cast<std::size_t>(j)];
    switch (vm.kind) {
      case detail::VarMap::Kind::shifted: sol.x[j] = vm.offset + core.x[vm.col]; break;
      case detail::VarMap::Kind::negated: sol.x[j] = vm.offset - core.x[vm.col]; break;
      case detail::VarMap::Kind::split: sol.x[j] = core.x[vm.col] - core.x[vm.col2]; break;
    }
  }
  sol.y = core.y.size() > 0 ? Vec(core.y.head(sf.neq)) : Vec::Zero(sf.neq);
  sol.lambda = core.y.size() > 0 ? Vec(-core.y.segment(sf.neq, sf.nin)) : Vec::Zero(sf.nin);
  sol.objective = lp.c.dot(sol.x);

  Vec r = lp.c;
  if (sf.neq > 0) r -= lp.A.transpose() * sol.y;
  if (sf.nin > 0) r += lp.G.transpose() * sol.lambda;
  sol.reduced_costs = r;

  double dual_obj = 0.0;
  if (sf.neq > 0) dual_obj += lp.b.dot(sol.y);
  if (sf.nin > 0) dual_obj -= lp.d.dot(sol.lambda);
  double dres = sol.lambda.size() > 0 ? std::max(0.0, -sol.lambda.minCoeff()) : 0.0;
  double comp = 0.0;
  double pres = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lo = lp.lower_bound(j);
    const double hi = lp.upper_bound(j);
    const double x = sol.x[j];
    pres = std::max({pres, lo - x, x - hi});
    if (r[j] > 0) {
      if (lo > -kInf) {
        dual_obj += r[j] * lo;
        comp = std::max(comp, r[j] * (x - lo));
      } else {
        dres = std::max(dres, r[j]);
      }
    } else if (r[j] < 0) {
      if (hi < kInf) {
        dual_obj += r[j] * hi;
        comp = std::max(comp, -r[j] * (hi - x));
      } else {
        dres = std::max(dres, -r[j]);
      }
    }
  }
  if (sf.neq > 0) pres = std::max(pres, (lp.A * sol.x - lp.b).cwiseAbs().maxCoeff());
  if (sf.nin > 0) {
    const Vec slack = lp.d - lp.G * sol.x;
    pres = std::max(pres, std::max(0.0, -slack.minCoeff()));
    comp = std::max(comp, sol.lambda.cwiseProduct(slack).cwiseAbs().maxCoeff());
  }
  sol.dual_objective = dual_obj;
  sol.primal_residual = pres;
  sol.dual_residual = dres;
  sol.complementarity_residual = comp;

  const double pscale = 1.0 + std::max(lp.b.size() ? lp.b.cwiseAbs().maxCoeff() : 0.0,
                                       lp.d.size() ? lp.d.cwiseAbs().maxCoeff() : 0.0);
  const double dscale = 1.0 + (n > 0 ? lp.c.cwiseAbs().maxCoeff() : 0.0);
  if (pres > 1e-6 * pscale || dres > 1e-6 * dscale) {
    sol.status = Status::numerical_failure;
    sol.message = "residual check failed after termination (primal " + std::to_string(pres) + ", dual " +
                  std::to_string(dres) + ")";
  }
  return sol;
}

/// Dual program  max bᵀy - dᵀλ  s.t.  Aᵀy - Gᵀλ = c, λ >= 0,  posed as a
/// minimization over (y, λ). Only valid for programs without variable bounds.
inline LinearProgram dual_program(const LinearProgram& lp) {
  require(lp.lower.size() == 0 && lp.upper.size() == 0, "dual_program: variable bounds not supported");
  const auto n = lp.num_vars();
  const auto neq = lp.A.rows();
  const auto nin = lp.G.rows();
  LinearProgram dual;
  dual.c.resize(neq + nin);
  dual.c << -lp.b, lp.d;
  std::vector<Triplet> trip;
  const SpMat At = lp.A.transpose();
  const SpMat Gt = lp.G.transpose();
  for (int k = 0; k < At.outerSize(); ++k) {
    for (SpMat::InnerIterator it(At, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  }
  for (int k = 0; k < Gt.outerSize(); ++k) {
    for (SpMat::InnerIterator it(Gt, k); it; ++it) trip.emplace_back(it.row(), neq + it.col(), -it.value());
  }
  dual.A.resize(n, neq + nin);
  dual.A.setFromTriplets(trip.begin(), trip.end());
  dual.b = lp.c;
  dual.G.resize(0, neq + nin);
  dual.d.resize(0);
  dual.lower = Vec::Constant(neq + nin, -kInf);
  dual.lower.tail(nin).setZero();
  return dual;
}

// Plain-text dump with sections OBJ / EQ / INEQ / BOUNDS for cross-checking
// against external solvers. Row lines are "j:v j:v ... = rhs" (or "<= rhs").

inline void write_lp(std::ostream& os, const LinearProgram& lp) {
  os.precision(17);
  const auto n = lp.num_vars();
  os << "VARS " << n << "\nOBJ\n";
  for (Eigen::Index j = 0; j < n; ++j) os << (j ? " " : "") << lp.c[j];
  os << '\n';
  auto rows = [&](const SpMat& M, const Vec& rhs, const char* tag, const char* rel) {
    const SpMat R = SpMat(M.transpose());
    os << tag << ' ' << rhs.size() << '\n';
    for (Eigen::Index i = 0; i < rhs.size(); ++i) {
      if (R.cols() > i) {
        for (SpMat::InnerIterator it(R, static_cast<int>(i)); it; ++it) os << it.row() << ':' << it.value() << ' ';
      }
      os << rel << ' ' << rhs[i] << '\n';
    }
  };
  rows(lp.A, lp.b, "EQ", "=");
  rows(lp.G, lp.d, "INEQ", "<=");
  os << "BOUNDS\n";
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lo = lp.lower_bound(j);
    const double hi = lp.upper_bound(j);
    if (lo > -kInf || hi < kInf) os << j << ' ' << lo << ' ' << hi << '\n';
  }
  os << "END\n";
}

inline LinearProgram read_lp(std::istream& is) {
  auto expect = [&](const std::string& tok) {
    std::string got;
    is >> got;
    require(got == tok, "read_lp: expected '" + tok + "', got '" + got + "'");
  };
  auto number = [&](const std::string& s) {
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    return std::stod(s);
  };
  long n = 0;
  expect("VARS");
  is >> n;
  require(n >= 0 && is.good(), "read_lp: bad VARS count");
  expect("OBJ");
  std::vector<double> c(static_cast<std::size_t>(n));
  for (auto& v : c) {
    std::string s;
    is >> s;
    v = number(s);
  }
  LpBuilder builder;
  std::vector<double> lo(static_cast<std::size_t>(n), -kInf), hi(static_cast<std::size_t>(n), kInf);
  auto read_rows = [&](const char* tag, bool equality) {
    expect(tag);
    long count = 0;
    is >> count;
    std::string line;
    std::getline(is, line);
    for (long i = 0; i < count; ++i) {
      std::getline(is, line);
      std::istringstream ls(line);
      LpBuilder::Terms terms;
      std::string tok;
      while (ls >> tok) {
        if (tok == "=" || tok == "<=") break;
        const auto colon = tok.find(':');
        require(colon != std::string::npos, "read_lp: malformed term '" + tok + "'");
        terms.emplace_back(std::stoi(tok.substr(0, colon)), std::stod(tok.substr(colon + 1)));
      }
      std::string rhs;
      ls >> rhs;
      if (equality) {
        builder.add_equality(terms, number(rhs));
      } else {
        builder.add_inequality(terms, number(rhs));
      }
    }
  };
  read_rows("EQ", true);
  read_rows("INEQ", false);
  expect("BOUNDS");
  std::string tok;
  while (is >> tok && tok != "END") {
    const auto j = static_cast<std::size_t>(std::stol(tok));
    require(j < lo.size(), "read_lp: bound index out of range");
    std::string a, b;
    is >> a >> b;
    lo[j] = number(a);
    hi[j] = number(b);
  }
  for (long j = 0; j < n; ++j) builder.add_variable(c[static_cast<std::size_t>(j)], lo[static_cast<std::size_t>(j)], hi[static_cast<std::size_t>(j)]);
  LinearProgram lp = builder.build();
  if (lp.A.cols() != n) lp.A.resize(lp.b.size(), n);
  if (lp.G.cols() != n) lp.G.resize(lp.d.size(), n);
  return lp;
}

}  // namespace mmt::lp
