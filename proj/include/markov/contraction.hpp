#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "markov/errors.hpp"
#include "markov/kernel.hpp"
#include "markov/metrics.hpp"

// Preasymptotic convergence machinery: coarse Ricci curvature with its
// Wasserstein contraction bound, minorization and drift certificates, and the
// empirical geometric-decay fit that feeds the bias bound.

namespace markov {

/// ||tau^N rho - pi|| <= b * r^N.
struct GeometricBound {
  double b = 0.0;
  double r = 0.0;
  bool uniform = true;

  GeometricBound(double b_, double r_, bool uniform_ = true)
      : b(b_), r(r_), uniform(uniform_) {
    if (!(b >= 0.0)) throw ValidationError("GeometricBound: b must be >= 0");
    if (!(r >= 0.0 && r < 1.0))
      throw ValidationError("GeometricBound: r must lie in [0, 1)");
  }
};

/// (tau^M delta_x)(A) >= eps * nu(A) for every x in the small set C.
struct MinorizationCertificate {
  std::vector<int> C;
  int M = 1;
  double eps = 0.0;
  Dist nu;
};

/// E_{tau delta_x}[V] <= lambda * V(x) + b * 1_C(x).
struct DriftCertificate {
  Vec V;
  double lambda = 0.0;
  double b = 0.0;
  std::vector<int> C;
};

/// kappa(x, y) = 1 - W1(tau delta_x, tau delta_y) / g(x, y).
inline double coarse_ricci(const Kernel& k, const DistanceFn& g, int x, int y) {
  require_same_space(k.space(), g.space(), "coarse_ricci");
  if (x == y) throw ValidationError("coarse_ricci requires x != y");
  const double w = wasserstein1(k.row_dist(x), k.row_dist(y), g).value;
  return 1.0 - w / g(x, y);
}

/// Uniform curvature bound: the minimum of kappa over all pairs.
inline double ricci_lower_bound(const Kernel& k, const DistanceFn& g) {
  const int n = k.size();
  if (n < 2) throw ValidationError("ricci_lower_bound needs at least 2 states");
  double kappa = 1.0;
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y)
      kappa = std::min(kappa, coarse_ricci(k, g, x, y));
  return kappa;
}

struct ContractionBound {
  double bound;
  double actual;
};

/// W1(tau^N delta_x, pi) <= (1 - kappa)^N * E_pi[g(x, .)], with the actual
/// Wasserstein distance alongside for comparison.
inline ContractionBound wasserstein_contraction_bound(const Kernel& k,
                                                      const DistanceFn& g, int x,
                                                      long N) {
  if (N < 1) throw ValidationError("wasserstein_contraction_bound: N >= 1");
  const double kappa = ricci_lower_bound(k, g);
  if (kappa <= 0.0)
    throw NoContraction("curvature lower bound is not positive (kappa = " +
                        std::to_string(kappa) + ")");
  const Dist pi = stationary(k);
  double mean_dist = 0.0;
  for (int j = 0; j < k.size(); ++j) mean_dist += pi(j) * g(x, j);
  const double bound = std::pow(1.0 - kappa, static_cast<double>(N)) * mean_dist;
  const double actual =
      wasserstein1(n_step(k, Dist::point(k.space(), x), N), pi, g).value;
  return {bound, actual};
}

/// Extracts the maximal minorization certificate at lag M over the set C:
/// eps is the total mass of the columnwise minimum of (T^M) rows over C and
/// nu is that minimum envelope, normalized.
inline MinorizationCertificate verify_minorization(const Kernel& k,
                                                   std::vector<int> C, int M) {
  if (C.empty()) throw ValidationError("verify_minorization: empty small set");
  if (M < 1) throw ValidationError("verify_minorization: M must be >= 1");
  const int n = k.size();
  for (int x : C)
    if (x < 0 || x >= n)
      throw ValidationError("verify_minorization: state index out of range");
  std::sort(C.begin(), C.end());
  C.erase(std::unique(C.begin(), C.end()), C.end());
  Mat power = k.T();
  for (int s = 1; s < M; ++s) power = Mat(power * k.T());
  Vec m(n);
  for (int j = 0; j < n; ++j) {
    double mn = power(C.front(), j);
    for (int x : C) mn = std::min(mn, power(x, j));
    m(j) = mn;
  }
  const double eps = m.sum();
  if (!(eps > 0.0))
    throw NoOverlap("rows of T^M over C share no common support (eps = 0)");
  MinorizationCertificate cert{std::move(C), M, eps, Dist(k.space(), m / eps)};
  return cert;
}

/// Extracts lambda as the tightest contraction factor outside C, then b as
/// the excess inside C.  By convention lambda = 0.5 when C covers the whole
/// space (any lambda works there).
inline DriftCertificate verify_drift(const Kernel& k, const Vec& V,
                                     std::vector<int> C) {
  const int n = k.size();
  if (V.size() != n) throw ValidationError("verify_drift: V length mismatch");
  if (V.minCoeff() < 1.0)
    throw ValidationError("verify_drift: V must be >= 1 everywhere");
  if (C.empty()) throw ValidationError("verify_drift: empty small set");
  for (int x : C)
    if (x < 0 || x >= n)
      throw ValidationError("verify_drift: state index out of range");
  std::sort(C.begin(), C.end());
  C.erase(std::unique(C.begin(), C.end()), C.end());
  std::vector<bool> in_C(static_cast<std::size_t>(n), false);
  for (int x : C) in_C[static_cast<std::size_t>(x)] = true;

  const Vec TV = k.T() * V;
  double lambda = 0.0;
  bool outside = false;
  for (int x = 0; x < n; ++x) {
    if (in_C[static_cast<std::size_t>(x)]) continue;
    outside = true;
    lambda = std::max(lambda, TV(x) / V(x));
  }
  if (!outside) lambda = 0.5;
  if (lambda >= 1.0)
    throw DriftFailure("no contraction outside the small set (lambda = " +
                       std::to_string(lambda) + ")");
  double minV_C = V(C.front());
  for (int x : C) minV_C = std::min(minV_C, V(x));
  if (minV_C > V.minCoeff())
    throw DriftFailure("minimum of V is attained outside the small set");
  double b = 0.0;
  for (int x : C) b = std::max(b, TV(x) - lambda * V(x));
  return DriftCertificate{V, lambda, b, std::move(C)};
}

inline constexpr int kFitBurnIn = 5;

/// Log-linear least squares on the tail (N >= 5) of a TV decay curve.  Exact
/// zeros terminate the fit window (the chain has hit stationarity); a window
/// with fewer than two points, or a fitted rate >= 1, is degenerate.
inline GeometricBound geometric_fit(const std::vector<std::pair<long, double>>& curve) {
  std::vector<std::pair<long, double>> usable;
  long prev = -1;
  for (const auto& [N, v] : curve) {
    if (N <= prev) throw ValidationError("geometric_fit: N values must ascend");
    prev = N;
    if (!(v >= 0.0)) throw ValidationError("geometric_fit: negative TV value");
    if (v == 0.0) break;
    if (N >= kFitBurnIn) usable.emplace_back(N, v);
  }
  if (usable.size() < 2)
    throw DegenerateCurve(
        "fewer than two usable points in the fit window (curve reached zero "
        "or is too short)");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [N, v] : usable) {
    const double xf = static_cast<double>(N), yf = std::log(v);
    sx += xf;
    sy += yf;
    sxx += xf * xf;
    sxy += xf * yf;
  }
  const double m = static_cast<double>(usable.size());
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / m;
  const double r = std::exp(slope);
  if (!(r < 1.0))
    throw DegenerateCurve("fitted rate is not below 1 (no geometric decay)");
  return GeometricBound(std::exp(intercept), r, true);
}

struct BiasResult {
  double bound;
  double exact_bias;
};

/// Preasymptotic bias of the ergodic average started at x, with the
/// geometric-ergodicity bound
///   |E[f_hat] - E_pi[f]| <= (range(f) * b / (N+1)) * (1 - r^{N+1}) / (1 - r).
inline BiasResult bias_bound(const Kernel& k, const Vec& f, int x, long N,
                             const GeometricBound& gb) {
  if (f.size() != k.size()) throw ValidationError("bias_bound: f length mismatch");
  if (N < 0) throw ValidationError("bias_bound: N must be >= 0");
  const Dist pi = stationary(k);
  const double pif = pi.p().dot(f);
  Vec p = Dist::point(k.space(), x).p();
  double acc = p.dot(f);
  for (long n = 1; n <= N; ++n) {
    p = (p.transpose() * k.T()).transpose();
    p /= p.sum();
    acc += p.dot(f);
  }
  const double exact_bias = std::abs(acc / static_cast<double>(N + 1) - pif);
  const double f_range = f.maxCoeff() - f.minCoeff();
  const double bound = f_range * gb.b / static_cast<double>(N + 1) *
                       (1.0 - std::pow(gb.r, static_cast<double>(N + 1))) /
                       (1.0 - gb.r);
  return {bound, exact_bias};
}

}  // namespace markov
