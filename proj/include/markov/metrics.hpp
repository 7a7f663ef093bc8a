#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <utility>

#include "markov/errors.hpp"
#include "markov/kernel.hpp"
#include "markov/lp.hpp"

namespace markov {

// ---------------------------------------------------------------------------
// Ground distances

/// A symmetric nonnegative distance matrix with zero diagonal and positive
/// off-diagonal entries.  The triangle inequality is deliberately *not* part
/// of the type invariant: Wasserstein distances are well defined without it,
/// and only the Kantorovich-Rubinstein check insists on a genuine metric.
class DistanceFn {
 public:
  static DistanceFn from_matrix(SpacePtr space, Mat g) {
    return DistanceFn(std::move(space), std::move(g));
  }

  /// The indicator distance: 1 everywhere off the diagonal.
  static DistanceFn discrete(SpacePtr space) {
    const auto n = static_cast<Eigen::Index>(space->size());
    Mat g = Mat::Ones(n, n) - Mat::Identity(n, n);
    return DistanceFn(std::move(space), std::move(g));
  }

  const SpacePtr& space() const { return space_; }
  const Mat& matrix() const { return g_; }
  double operator()(int i, int j) const { return g_(i, j); }

  /// True when g(i,j) <= g(i,k) + g(k,j) + tol for every triple.
  bool satisfies_triangle(double tol = 1e-12) const {
    const auto n = g_.rows();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index j = 0; j < n; ++j)
          if (g_(i, j) > g_(i, k) + g_(k, j) + tol) return false;
    return true;
  }

 private:
  DistanceFn(SpacePtr space, Mat g) : space_(std::move(space)), g_(std::move(g)) {
    const auto n = static_cast<Eigen::Index>(space_->size());
    if (g_.rows() != n || g_.cols() != n)
      throw ValidationError("distance matrix shape does not match state space");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (g_(i, i) != 0.0)
        throw ValidationError("distance diagonal must be exactly zero at state " +
                              std::to_string(i));
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!(g_(i, j) >= 0.0) || !std::isfinite(g_(i, j)))
          throw ValidationError("distance entries must be finite and nonnegative");
        if (std::abs(g_(i, j) - g_(j, i)) > 1e-12)
          throw ValidationError("distance matrix must be symmetric");
        if (i != j && g_(i, j) <= 0.0)
          throw ValidationError("off-diagonal distances must be positive");
      }
    }
  }

  SpacePtr space_;
  Mat g_;
};

// ---------------------------------------------------------------------------
// Couplings

/// A joint distribution gamma on the product space whose marginals are the
/// prescribed pair (left, right).
class Coupling {
 public:
  Coupling(Dist left, Dist right, Mat gamma)
      : left_(std::move(left)), right_(std::move(right)), gamma_(std::move(gamma)) {
    require_same_space(left_.space(), right_.space(), "coupling marginals");
    const auto n = static_cast<Eigen::Index>(left_.space()->size());
    if (gamma_.rows() != n || gamma_.cols() != n)
      throw ValidationError("coupling matrix shape does not match state space");
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (gamma_(i, j) < -1e-12)
          throw ValidationError("coupling has a negative entry");
        if (gamma_(i, j) < 0.0) gamma_(i, j) = 0.0;
      }
    const Vec rows = gamma_.rowwise().sum();
    const Vec cols = gamma_.colwise().sum().transpose();
    if ((rows - left_.p()).cwiseAbs().maxCoeff() > kDerivedTol)
      throw ValidationError("coupling row sums do not match the left marginal");
    if ((cols - right_.p()).cwiseAbs().maxCoeff() > kDerivedTol)
      throw ValidationError("coupling column sums do not match the right marginal");
  }

  const Dist& left() const { return left_; }
  const Dist& right() const { return right_; }
  const Mat& matrix() const { return gamma_; }
  const SpacePtr& space() const { return left_.space(); }

 private:
  Dist left_;
  Dist right_;
  Mat gamma_;
};

// ---------------------------------------------------------------------------
// Function classes for integral probability metrics

/// LP-representable constraint sets of test functions f : X -> R.
class FunctionClass {
 public:
  enum class Kind { Bounded, Lipschitz, VNorm };

  /// All f with lo <= f(x) <= hi pointwise.
  static FunctionClass bounded(SpacePtr space, double lo, double hi) {
    if (!(lo < hi)) throw ValidationError("bounded class requires lo < hi");
    FunctionClass fc(Kind::Bounded, std::move(space));
    fc.lo_ = lo;
    fc.hi_ = hi;
    return fc;
  }
  static FunctionClass bounded_unit(SpacePtr space) {
    return bounded(std::move(space), 0.0, 1.0);
  }
  static FunctionClass bounded_sym(SpacePtr space) {
    return bounded(std::move(space), -1.0, 1.0);
  }

  /// All f with |f(x) - f(y)| <= g(x,y).
  static FunctionClass lipschitz(DistanceFn g) {
    FunctionClass fc(Kind::Lipschitz, g.space());
    fc.g_ = std::move(g);
    return fc;
  }

  /// All f with |f(x)| <= V(x), V >= 1 pointwise.
  static FunctionClass v_norm(SpacePtr space, Vec V) {
    if (V.size() != static_cast<Eigen::Index>(space->size()))
      throw ValidationError("V length does not match state space");
    if (V.minCoeff() < 1.0)
      throw ValidationError("V-norm class requires V >= 1 everywhere");
    FunctionClass fc(Kind::VNorm, std::move(space));
    fc.V_ = std::move(V);
    return fc;
  }

  Kind kind() const { return kind_; }
  const SpacePtr& space() const { return space_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  /// Width of the box for Bounded classes (the scaled-TV normalizer).
  double range() const {
    if (kind_ != Kind::Bounded)
      throw ValidationError("range() is only defined for bounded classes");
    return hi_ - lo_;
  }

  /// Builds the feasible set as an lp::Problem with zero objective; the
  /// caller fills in the objective vector.
  lp::Problem constraints() const {
    const int n = static_cast<int>(space_->size());
    lp::Problem p;
    p.c = Vec::Zero(n);
    switch (kind_) {
      case Kind::Bounded:
        p.lo = Vec::Constant(n, lo_);
        p.hi = Vec::Constant(n, hi_);
        p.A_eq.resize(0, n);
        p.b_eq.resize(0);
        p.A_ub.resize(0, n);
        p.b_ub.resize(0);
        break;
      case Kind::VNorm:
        p.lo = -V_;
        p.hi = V_;
        p.A_eq.resize(0, n);
        p.b_eq.resize(0);
        p.A_ub.resize(0, n);
        p.b_ub.resize(0);
        break;
      case Kind::Lipschitz: {
        // IPM objectives are invariant under constant shifts (mu - nu sums
        // to zero), so pinning f(0) = 0 loses nothing and keeps the LP
        // bounded.
        p.lo = Vec::Constant(n, -lp::kInf);
        p.hi = Vec::Constant(n, lp::kInf);
        p.lo(0) = 0.0;
        p.hi(0) = 0.0;
        const int npairs = n * (n - 1) / 2;
        p.A_ub = Mat::Zero(2 * npairs, n);
        p.b_ub.resize(2 * npairs);
        int r = 0;
        const Mat& g = g_->matrix();
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) {
            p.A_ub(r, i) = 1.0;
            p.A_ub(r, j) = -1.0;
            p.b_ub(r) = g(i, j);
            ++r;
            p.A_ub(r, i) = -1.0;
            p.A_ub(r, j) = 1.0;
            p.b_ub(r) = g(i, j);
            ++r;
          }
        p.A_eq.resize(0, n);
        p.b_eq.resize(0);
        break;
      }
    }
    return p;
  }

 private:
  FunctionClass(Kind kind, SpacePtr space) : kind_(kind), space_(std::move(space)) {}

  Kind kind_;
  SpacePtr space_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::optional<DistanceFn> g_;
  Vec V_;
};

// ---------------------------------------------------------------------------
// Metrics

/// Total variation distance, closed form: (1/2) sum |mu_i - nu_i|.
inline double tv(const Dist& mu, const Dist& nu) {
  require_same_space(mu.space(), nu.space(), "tv");
  return 0.5 * (mu.p() - nu.p()).cwiseAbs().sum();
}

/// Integral probability metric sup_{f in fc} |E_mu[f] - E_nu[f]|, solved as a
/// pair of linear programs (one per objective sign).
inline double ipm(const Dist& mu, const Dist& nu, const FunctionClass& fc) {
  require_same_space(mu.space(), nu.space(), "ipm");
  require_same_space(mu.space(), fc.space(), "ipm function class");
  lp::Problem p = fc.constraints();
  p.c = mu.p() - nu.p();
  try {
    const double up = lp::maximize(p).objective;
    p.c = -p.c;
    const double down = lp::maximize(p).objective;
    return std::max(0.0, std::max(up, down));
  } catch (const lp::Unbounded&) {
    throw UnboundedClass("ipm: function class admits an unbounded objective");
  }
}

struct W1Result {
  double value;
  Coupling plan;
};

/// 1-Wasserstein distance: min_gamma sum gamma_ij g_ij over the
/// transportation polytope, by exact LP.  Returns the optimum and an optimal
/// coupling.
inline W1Result wasserstein1(const Dist& mu, const Dist& nu, const DistanceFn& g) {
  require_same_space(mu.space(), nu.space(), "wasserstein1");
  require_same_space(mu.space(), g.space(), "wasserstein1 distance");
  const int n = static_cast<int>(mu.space()->size());
  const int nv = n * n;  // gamma row-major
  lp::Problem p;
  p.c.resize(nv);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p.c(i * n + j) = g.matrix()(i, j);
  p.lo = Vec::Zero(nv);
  p.hi = Vec::Constant(nv, lp::kInf);
  // Row sums mu_i, column sums nu_j; the final column constraint is implied
  // by the others (both marginals sum to one) and is dropped.
  const int m = 2 * n - 1;
  p.A_eq = Mat::Zero(m, nv);
  p.b_eq.resize(m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) p.A_eq(i, i * n + j) = 1.0;
    p.b_eq(i) = mu.p()(i);
  }
  for (int j = 0; j + 1 < n; ++j) {
    for (int i = 0; i < n; ++i) p.A_eq(n + j, i * n + j) = 1.0;
    p.b_eq(n + j) = nu.p()(j);
  }
  p.A_ub.resize(0, nv);
  p.b_ub.resize(0);

  const lp::Solution sol = lp::solve(p);
  Mat gamma(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gamma(i, j) = sol.x(i * n + j);
  Coupling plan(mu, nu, std::move(gamma));
  const double value = (plan.matrix().array() * g.matrix().array()).sum();
  return {value, std::move(plan)};
}

struct KrResult {
  double primal;  // transport LP optimum
  double dual;    // Lipschitz IPM optimum
};

/// Kantorovich-Rubinstein duality check: the transport optimum must equal the
/// Lipschitz-class IPM.  Only meaningful for genuine metrics, so distances
/// violating the triangle inequality are rejected.
inline KrResult kr_dual_check(const Dist& mu, const Dist& nu, const DistanceFn& g) {
  if (!g.satisfies_triangle())
    throw NonMetricDistance(
        "kr_dual_check: distance violates the triangle inequality");
  const double primal = wasserstein1(mu, nu, g).value;
  const double dual = ipm(mu, nu, FunctionClass::lipschitz(g));
  if (std::abs(primal - dual) > 1e-8) {
    std::ostringstream os;
    os << "kr_dual_check: duality gap " << std::abs(primal - dual)
       << " exceeds 1e-8 (primal " << primal << ", dual " << dual << ")";
    throw DualityGap(os.str());
  }
  return {primal, dual};
}

/// Mass off the diagonal, gamma(D^c) = sum_{i != j} gamma_ij.  Upper-bounds
/// the total variation distance between the marginals.
inline double coupling_tv_bound(const Coupling& c) {
  return std::max(0.0, 1.0 - c.matrix().trace());
}

/// The coupling attaining gamma(D^c) = tv(mu, nu): keep min(mu_i, nu_i) on
/// the diagonal and spread the positive part of mu - nu over the negative
/// part proportionally.
inline Coupling maximal_coupling(const Dist& mu, const Dist& nu) {
  require_same_space(mu.space(), nu.space(), "maximal_coupling");
  const auto n = static_cast<Eigen::Index>(mu.space()->size());
  Mat gamma = Mat::Zero(n, n);
  Vec pos(n), neg(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = mu.p()(i) - nu.p()(i);
    gamma(i, i) = std::min(mu.p()(i), nu.p()(i));
    pos(i) = std::max(d, 0.0);
    neg(i) = std::max(-d, 0.0);
    total += pos(i);
  }
  if (total > 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pos(i) == 0.0) continue;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (neg(j) == 0.0) continue;
        gamma(i, j) = pos(i) * neg(j) / total;
      }
    }
  }
  return Coupling(mu, nu, std::move(gamma));
}

}  // namespace markov
