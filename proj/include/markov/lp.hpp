#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "markov/errors.hpp"
#include "markov/kernel.hpp"

// Dense tableau simplex for the small, well-scaled linear programs that the
// probability metrics reduce to (transportation polytopes, Lipschitz and box
// function classes).  Two-phase with artificial variables; Dantzig pricing
// with a Bland fallback for anti-cycling; redundant rows detected and dropped
// after phase 1.

namespace markov::lp {

struct Infeasible : Error {
  using Error::Error;
};
struct Unbounded : Error {
  using Error::Error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();
/// Pivot elements smaller than this are treated as zero.
inline constexpr double kPivotTol = 1e-12;
/// Reduced-cost threshold for optimality.
inline constexpr double kCostTol = 1e-10;
/// Phase-1 objective above this means infeasible.
inline constexpr double kFeasTol = 1e-9;

/// min c.x  subject to  A_eq x = b_eq,  A_ub x <= b_ub,  lo <= x <= hi.
/// Bound entries may be +-infinity.  Empty matrices (0 rows) are allowed.
struct Problem {
  Vec c;
  Mat A_eq;
  Vec b_eq;
  Mat A_ub;
  Vec b_ub;
  Vec lo;
  Vec hi;

  static Problem with_bounds(Vec c_, Vec lo_, Vec hi_) {
    Problem p;
    p.c = std::move(c_);
    p.lo = std::move(lo_);
    p.hi = std::move(hi_);
    const auto n = p.c.size();
    p.A_eq.resize(0, n);
    p.b_eq.resize(0);
    p.A_ub.resize(0, n);
    p.b_ub.resize(0);
    return p;
  }
};

struct Solution {
  Vec x;
  double objective = 0.0;
};

namespace detail {

struct Tableau {
  Mat body;                // m x (cols), last column is rhs
  std::vector<int> basis;  // basic variable per row
  int ncols = 0;           // structural + artificial columns (excl. rhs)

  double& at(int r, int c) { return body(r, c); }
  double rhs(int r) const { return body(r, ncols); }
};

inline int choose_entering(const Eigen::RowVectorXd& reduced, int limit,
                           bool bland) {
  int pick = -1;
  double best = -kCostTol;
  for (int j = 0; j < limit; ++j) {
    if (reduced(j) < best) {
      if (bland) return j;
      best = reduced(j);
      pick = j;
    } else if (bland && reduced(j) < -kCostTol) {
      return j;
    }
  }
  return pick;
}

/// Runs simplex iterations on the tableau given a cost row (already priced
/// out so reduced costs of basic columns are zero).  `eligible` bounds the
/// entering-column search.
inline void iterate(Tableau& t, Eigen::RowVectorXd& reduced, double& objective,
                    int eligible) {
  const int m = static_cast<int>(t.body.rows());
  long iterations = 0;
  const long bland_after = 2000 + 50L * m;
  while (true) {
    const bool bland = iterations > bland_after;
    const int enter = choose_entering(reduced, eligible, bland);
    if (enter < 0) return;  // optimal
    int leave = -1;
    double best_ratio = kInf;
    for (int r = 0; r < m; ++r) {
      const double a = t.at(r, enter);
      if (a > kPivotTol) {
        const double ratio = t.rhs(r) / a;
        if (ratio < best_ratio - 1e-15 ||
            (ratio < best_ratio + 1e-15 &&
             (leave < 0 || t.basis[r] < t.basis[leave]))) {
          best_ratio = ratio;
          leave = r;
        }
      }
    }
    if (leave < 0) throw Unbounded("lp: objective unbounded below");
    // Pivot.
    const double piv = t.at(leave, enter);
    t.body.row(leave) /= piv;
    for (int r = 0; r < m; ++r) {
      if (r == leave) continue;
      const double f = t.at(r, enter);
      if (f != 0.0) t.body.row(r) -= f * t.body.row(leave);
    }
    // The entering variable rises to rhs(leave)/pivot, moving the objective
    // by that times its reduced cost.
    const double rc = reduced(enter);
    objective += rc * t.rhs(leave);
    reduced -= rc * t.body.row(leave);
    reduced(enter) = 0.0;
    t.basis[leave] = enter;
    if (++iterations > 200000) throw Error("lp: iteration limit exceeded");
  }
}

}  // namespace detail

/// Solves the LP.  Throws Infeasible / Unbounded.
inline Solution solve(const Problem& p) {
  const int n0 = static_cast<int>(p.c.size());
  if (p.lo.size() != n0 || p.hi.size() != n0)
    throw ValidationError("lp: bounds length mismatch");

  // Convert to standard form  min c.y, A y = b, y >= 0  via x = S y + t.
  // Modes per variable: shift by finite lo, mirror around finite hi, or
  // split into a difference of two nonnegative parts.
  enum class Mode { Shift, Mirror, Split };
  std::vector<Mode> mode(static_cast<std::size_t>(n0));
  std::vector<int> col(static_cast<std::size_t>(n0));  // first standard column
  int ns = 0;
  int nbound = 0;  // rows for two-sided bounds
  for (int j = 0; j < n0; ++j) {
    const double lo = p.lo(j), hi = p.hi(j);
    if (std::isfinite(lo)) {
      mode[j] = Mode::Shift;
      col[j] = ns++;
      if (std::isfinite(hi)) ++nbound;
    } else if (std::isfinite(hi)) {
      mode[j] = Mode::Mirror;
      col[j] = ns++;
    } else {
      mode[j] = Mode::Split;
      col[j] = ns;
      ns += 2;
    }
  }
  const int m_eq = static_cast<int>(p.A_eq.rows());
  const int m_ub = static_cast<int>(p.A_ub.rows());
  const int m = m_eq + m_ub + nbound;
  const int nslack = m_ub + nbound;
  const int nart = m;
  const int ncols = ns + nslack + nart;

  detail::Tableau t;
  t.ncols = ncols;
  t.body = Mat::Zero(m, ncols + 1);
  t.basis.assign(static_cast<std::size_t>(m), -1);

  // Writes constraint row `arow` (over original variables x = S y + t) into
  // tableau row `out_row` over the standard variables y, accumulating the
  // offset that moves to the right-hand side.
  auto apply_row = [&](const auto& arow, int out_row, double& offset) {
    for (int j = 0; j < n0; ++j) {
      const double a = arow(j);
      if (a == 0.0) continue;
      switch (mode[j]) {
        case Mode::Shift:
          t.body(out_row, col[j]) += a;
          offset += a * p.lo(j);
          break;
        case Mode::Mirror:
          t.body(out_row, col[j]) -= a;
          offset += a * p.hi(j);
          break;
        case Mode::Split:
          t.body(out_row, col[j]) += a;
          t.body(out_row, col[j] + 1) -= a;
          break;
      }
    }
  };

  int row = 0;
  for (int i = 0; i < m_eq; ++i, ++row) {
    double off = 0.0;
    apply_row(p.A_eq.row(i), row, off);
    t.body(row, ncols) = p.b_eq(i) - off;
  }
  for (int i = 0; i < m_ub; ++i, ++row) {
    double off = 0.0;
    apply_row(p.A_ub.row(i), row, off);
    t.body(row, ns + i) = 1.0;  // slack
    t.body(row, ncols) = p.b_ub(i) - off;
  }
  int bslack = m_ub;
  for (int j = 0; j < n0; ++j) {
    if (mode[j] == Mode::Shift && std::isfinite(p.hi(j))) {
      t.body(row, col[j]) = 1.0;
      t.body(row, ns + bslack) = 1.0;
      t.body(row, ncols) = p.hi(j) - p.lo(j);
      ++bslack;
      ++row;
    }
  }
  // Nonnegative right-hand sides, then artificial basis.
  for (int r = 0; r < m; ++r) {
    if (t.body(r, ncols) < 0.0) t.body.row(r) = -t.body.row(r);
    t.body(r, ns + nslack + r) = 1.0;
    t.basis[static_cast<std::size_t>(r)] = ns + nslack + r;
  }

  // Phase 1: minimize the sum of artificials.
  Eigen::RowVectorXd reduced = Eigen::RowVectorXd::Zero(ncols + 1);
  reduced.segment(ns + nslack, nart).setOnes();
  double phase1 = 0.0;
  for (int r = 0; r < m; ++r) {
    phase1 += t.rhs(r);
    reduced -= t.body.row(r);
  }
  reduced.segment(ns + nslack, nart).setZero();
  detail::iterate(t, reduced, phase1, ns + nslack);
  if (phase1 > kFeasTol) throw Infeasible("lp: constraints are infeasible");

  // Drive zero-level artificials out of the basis; rows that cannot be
  // pivoted are redundant and get dropped.
  std::vector<int> keep;
  for (int r = 0; r < m; ++r) {
    if (t.basis[static_cast<std::size_t>(r)] < ns + nslack) {
      keep.push_back(r);
      continue;
    }
    int piv_col = -1;
    for (int j = 0; j < ns + nslack; ++j)
      if (std::abs(t.at(r, j)) > 1e-9) {
        piv_col = j;
        break;
      }
    if (piv_col < 0) continue;  // redundant constraint
    const double piv = t.at(r, piv_col);
    t.body.row(r) /= piv;
    for (int r2 = 0; r2 < m; ++r2) {
      if (r2 == r) continue;
      const double f = t.at(r2, piv_col);
      if (f != 0.0) t.body.row(r2) -= f * t.body.row(r);
    }
    t.basis[static_cast<std::size_t>(r)] = piv_col;
    keep.push_back(r);
  }
  if (static_cast<int>(keep.size()) < m) {
    Mat nb(static_cast<int>(keep.size()), ncols + 1);
    std::vector<int> nbasis;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      nb.row(static_cast<int>(i)) = t.body.row(keep[i]);
      nbasis.push_back(t.basis[static_cast<std::size_t>(keep[i])]);
    }
    t.body = std::move(nb);
    t.basis = std::move(nbasis);
  }

  // Phase 2 with the real objective (cost of y plus constant from t).
  Eigen::RowVectorXd cost = Eigen::RowVectorXd::Zero(ncols + 1);
  double constant = 0.0;
  for (int j = 0; j < n0; ++j) {
    const double cj = p.c(j);
    if (cj == 0.0) continue;
    switch (mode[j]) {
      case Mode::Shift:
        cost(col[j]) += cj;
        constant += cj * p.lo(j);
        break;
      case Mode::Mirror:
        cost(col[j]) -= cj;
        constant += cj * p.hi(j);
        break;
      case Mode::Split:
        cost(col[j]) += cj;
        cost(col[j] + 1) -= cj;
        break;
    }
  }
  double objective = constant;
  reduced = cost;
  for (std::size_t r = 0; r < t.basis.size(); ++r) {
    const double cb = cost(t.basis[r]);
    if (cb != 0.0) {
      objective += cb * t.rhs(static_cast<int>(r));
      reduced -= cb * t.body.row(static_cast<int>(r));
    }
  }
  for (std::size_t r = 0; r < t.basis.size(); ++r) reduced(t.basis[r]) = 0.0;
  detail::iterate(t, reduced, objective, ns + nslack);

  // Recover x.
  Vec y = Vec::Zero(ncols);
  for (std::size_t r = 0; r < t.basis.size(); ++r)
    y(t.basis[r]) = t.rhs(static_cast<int>(r));
  Solution s;
  s.x = Vec::Zero(n0);
  for (int j = 0; j < n0; ++j) {
    switch (mode[j]) {
      case Mode::Shift:
        s.x(j) = p.lo(j) + y(col[j]);
        break;
      case Mode::Mirror:
        s.x(j) = p.hi(j) - y(col[j]);
        break;
      case Mode::Split:
        s.x(j) = y(col[j]) - y(col[j] + 1);
        break;
    }
  }
  s.objective = p.c.dot(s.x);
  return s;
}

/// max c.x over the same constraint set.
inline Solution maximize(Problem p) {
  p.c = -p.c;
  Solution s = solve(p);
  s.objective = -s.objective;
  return s;
}

}  // namespace markov::lp
